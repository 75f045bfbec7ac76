//! Trains the span model and the single-sentence baseline on the synthetic fixture
//! and decodes one validation document.
//!
//! ```bash
//! cargo run --release --example train_synthetic
//! ```

use spancrf::corpus::predictions::PredictionRecord;
use spancrf::metrics::EvalOptions;
use spancrf::synth::{fixture_train_config, separable_fixture};
use spancrf::train::{evaluate, predict, train};

fn main() -> spancrf::Result<()> {
    let (labels, train_docs, val_docs) = separable_fixture();
    println!(
        "{} train / {} val documents, labels {}",
        train_docs.len(),
        val_docs.len(),
        labels.names().join(", ")
    );

    let mut models = Vec::new();
    for lmax in [1, 10] {
        let outcome = train(&train_docs, &val_docs, &labels, &fixture_train_config(lmax))?;
        let first = &outcome.log[0];
        let last = outcome.log.last().expect("epochs > 0");
        println!(
            "lmax {lmax:>2}: mean NLL {:.3} -> {:.3}, best epoch {:?}",
            first.mean_nll, last.mean_nll, outcome.best_epoch
        );
        models.push((lmax, outcome.params));
    }

    println!();
    for (lmax, params) in &models {
        let report = evaluate(&val_docs, params, EvalOptions::default())?;
        println!(
            "lmax {lmax:>2}: span micro-F1 {:.4}  segmentation-F1 {:.4}  sentence micro-F1 {:.4}",
            report.span_micro_f1, report.span_seg_f1, report.sentence_micro_f1
        );
    }

    let (_, params) = &models[1];
    let doc = &val_docs[0];
    let pred = &predict(std::slice::from_ref(doc), params)?[0];
    let gold = doc.gold_segmentation()?;
    println!(
        "\n{} gold:      {:?}",
        doc.id,
        PredictionRecord::from_segmentation(&doc.id, &gold, &labels).spans
    );
    println!(
        "{} predicted: {:?}",
        doc.id,
        PredictionRecord::from_segmentation(&doc.id, pred, &labels).spans
    );
    Ok(())
}
