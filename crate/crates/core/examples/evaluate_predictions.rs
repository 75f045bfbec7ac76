//! Span, segmentation and sentence metrics for two systems, plus McNemar's test.
//!
//! ```bash
//! cargo run --example evaluate_predictions
//! ```

use spancrf::corpus::{derive_spans, LabelSet};
use spancrf::metrics::{mcnemar, EvalOptions, Evaluator, MacroAverage};

fn main() -> spancrf::Result<()> {
    let labels = LabelSet::new(["Arg", "Fac", "None", "Rlg"])?;
    let y = |names: &str| -> Vec<usize> {
        names
            .split_whitespace()
            .map(|n| labels.index(n).expect("known label"))
            .collect()
    };
    let gold = [
        y("Fac Fac Fac Arg Arg None Rlg Rlg"),
        y("Fac Fac Arg Arg Arg Arg Rlg"),
    ];
    let system_a = [
        y("Fac Fac Fac Arg Arg Arg Rlg Rlg"),
        y("Fac Fac Arg Arg Arg Arg Rlg"),
    ];
    let system_b = [
        y("Fac Arg Fac Arg Arg None Rlg Arg"),
        y("Fac Fac Fac Arg Arg Rlg Rlg"),
    ];

    let options = EvalOptions {
        macro_average: MacroAverage::PresentOnly,
        exclude: labels.index("None"),
    };
    for (name, pred) in [("A", &system_a), ("B", &system_b)] {
        let mut ev = Evaluator::new(labels.clone(), options);
        for (g, p) in gold.iter().zip(pred.iter()) {
            ev.add(&derive_spans(g)?, &derive_spans(p)?)?;
        }
        println!("system {name}\n{}", ev.report().render_table());
    }

    let flat = |docs: &[Vec<usize>]| docs.concat();
    let test = mcnemar(&flat(&gold), &flat(&system_a), &flat(&system_b))?;
    println!(
        "McNemar A vs B: b = {}, c = {}, statistic = {:.3}, p = {:.3}, exact p = {:?}",
        test.b, test.c, test.statistic, test.p_value, test.exact_p_value
    );
    Ok(())
}
