//! Exact inference on a hand-built score lattice: partition function, best labeled
//! segmentation, and span posteriors.
//!
//! ```bash
//! cargo run --example decode_lattice
//! ```

use ndarray::{array, Array1};
use spancrf::semicrf::{log_partition, marginals, viterbi_with_score, ScoreLattice};

fn main() -> spancrf::Result<()> {
    let names = ["Facts", "Argument"];
    // Five sentences, spans of up to three sentences, two labels.
    let (m, lmax) = (5, 3);
    let emission = [[2.0, -1.0], [1.5, -0.5], [0.2, 0.1], [-1.0, 1.8], [-0.8, 2.2]];
    let transitions = array![[0.0, -0.5], [-0.5, 0.0]];
    let start: Array1<f64> = array![0.3, 0.0];

    // A span scores the sum of its per-sentence evidence, with a small bonus for
    // longer spans.
    let lat = ScoreLattice::from_fn(m, lmax, transitions, start, |a, len, y| {
        (a..a + len).map(|i| emission[i][y]).sum::<f64>() + 0.8 * (len - 1) as f64
    })?;

    let log_z = log_partition(&lat);
    let (best, score) = viterbi_with_score(&lat);
    println!("log Z = {log_z:.4}");
    println!(
        "best path (score {score:.4}, probability {:.3}):",
        (score - log_z).exp()
    );
    for span in best.spans() {
        println!("  sentences {}..={}  {}", span.a, span.b, names[span.y]);
    }

    let mu = marginals(&lat);
    println!("\nper-sentence label posteriors:");
    for i in 0..m {
        let p = mu.sentence_posterior(i);
        println!("  s{i}: {}={:.3} {}={:.3}", names[0], p[0], names[1], p[1]);
    }
    println!("\nmost probable spans:");
    let mut spans: Vec<_> = (0..m)
        .flat_map(|a| (1..=lat.max_len_at(a)).flat_map(move |len| (0..2).map(move |y| (a, len, y))))
        .map(|(a, len, y)| (mu.span(a, len, y), a, len, y))
        .collect();
    spans.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (p, a, len, y) in spans.into_iter().take(5) {
        println!("  {:.3}  {}..={} {}", p, a, a + len - 1, names[y]);
    }
    Ok(())
}
