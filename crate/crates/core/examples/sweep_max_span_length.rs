//! Picks the maximum span length on validation data.
//!
//! ```bash
//! cargo run --release --example sweep_max_span_length
//! ```

use spancrf::synth::{fixture_train_config, separable_fixture};
use spancrf::train::select_max_span_length;

fn main() -> spancrf::Result<()> {
    let (labels, train_docs, val_docs) = separable_fixture();
    let longest = train_docs
        .iter()
        .map(|d| d.gold_segmentation().map(|s| s.max_span_len()))
        .collect::<spancrf::Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    println!("longest gold span in training data: {longest}");

    let cfg = fixture_train_config(1);
    let report = select_max_span_length(&train_docs, &val_docs, &labels, &[1, 2, 4, 8, 12], &cfg)?;
    println!(
        "{:>5}  {:>8}  {:>8}  {:>8}",
        "lmax", "span-F1", "seg-F1", "sent-F1"
    );
    for row in &report.rows {
        println!(
            "{:>5}  {:>8.4}  {:>8.4}  {:>8.4}",
            row.lmax, row.val_span_micro_f1, row.val_span_seg_f1, row.val_sentence_micro_f1
        );
    }
    println!("chosen: {}", report.chosen);
    Ok(())
}
