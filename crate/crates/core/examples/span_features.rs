//! Context enrichment and the two span representations.
//!
//! ```bash
//! cargo run --example span_features
//! ```

use ndarray::array;
use spancrf::spanrep::{context_enrich, span_features, ContextConfig, SpanFeatureVariant};

fn main() -> spancrf::Result<()> {
    let s = array![[1.0, 0.0], [3.0, 1.0], [5.0, 0.0], [7.0, 1.0]];

    for radius in [0, 1] {
        let c = context_enrich(s.view(), ContextConfig::new(radius));
        println!("radius {radius}: rows of width {}", c.ncols());
        for row in c.rows() {
            println!("  {row}");
        }
    }

    // Without enrichment the blocks are easy to read off the raw rows.
    for variant in [SpanFeatureVariant::OursNoBiLSTM, SpanFeatureVariant::Simple] {
        let f = span_features(s.view(), 0, 2, variant)?;
        println!("{variant} span 0..=2 ({} values): {f}", f.len());
    }
    Ok(())
}
