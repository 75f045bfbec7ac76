//! Span feature vectors built from contextualized sentence representations.
//!
//! A span feature vector is a concatenation of *blocks*, each either a single
//! sentence row selected relative to the span boundaries or the mean of all rows
//! in the span. The block layout is fixed per [`SpanFeatureVariant`], which lets
//! the lattice builder score spans from per-row projections instead of
//! materializing every feature vector.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Window-mean context enrichment. Radius 0 is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ContextConfig {
    pub radius: usize,
}

impl ContextConfig {
    pub fn new(radius: usize) -> Self {
        ContextConfig { radius }
    }

    /// Output row dimension for input dimension `d`.
    pub fn output_dim(&self, d: usize) -> usize {
        if self.radius == 0 {
            d
        } else {
            3 * d
        }
    }
}

/// One block of a span feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    First,
    /// Row `min(a + 1, b)`.
    Second,
    /// Row `max(b - 1, a)`.
    Penultimate,
    Last,
    Mean,
}

impl Block {
    /// Row selected by this block for span `a..=b`, or `None` for the mean block.
    pub fn row(self, a: usize, b: usize) -> Option<usize> {
        match self {
            Block::First => Some(a),
            Block::Second => Some((a + 1).min(b)),
            Block::Penultimate => Some(b.saturating_sub(1).max(a)),
            Block::Last => Some(b),
            Block::Mean => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SpanFeatureVariant {
    /// First two rows, last two rows and the mean; short spans repeat rows.
    #[default]
    #[serde(rename = "ours")]
    OursNoBiLSTM,
    /// First and last rows.
    #[serde(rename = "simple")]
    Simple,
}

impl SpanFeatureVariant {
    pub fn blocks(self) -> &'static [Block] {
        match self {
            SpanFeatureVariant::OursNoBiLSTM => &[
                Block::First,
                Block::Second,
                Block::Penultimate,
                Block::Last,
                Block::Mean,
            ],
            SpanFeatureVariant::Simple => &[Block::First, Block::Last],
        }
    }

    /// Span feature dimension for contextualized row dimension `row_dim`.
    pub fn feature_dim(self, row_dim: usize) -> usize {
        self.blocks().len() * row_dim
    }
}

impl fmt::Display for SpanFeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpanFeatureVariant::OursNoBiLSTM => "ours",
            SpanFeatureVariant::Simple => "simple",
        })
    }
}

impl FromStr for SpanFeatureVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ours" => Ok(SpanFeatureVariant::OursNoBiLSTM),
            "simple" => Ok(SpanFeatureVariant::Simple),
            other => Err(Error::InvalidConfig(format!(
                "unknown span variant `{other}` (expected `ours` or `simple`)"
            ))),
        }
    }
}

/// Concatenates, per row, the mean of the `radius` preceding rows, the row itself and
/// the mean of the `radius` following rows. Empty neighborhoods contribute zeros.
pub fn context_enrich(s: ArrayView2<'_, f64>, cfg: ContextConfig) -> Array2<f64> {
    let (m, d) = s.dim();
    if cfg.radius == 0 {
        return s.to_owned();
    }
    let r = cfg.radius;
    let mut out = Array2::zeros((m, 3 * d));
    for i in 0..m {
        let lo = i.saturating_sub(r);
        if lo < i {
            let left = s.slice(s![lo..i, ..]).mean_axis(Axis(0)).expect("non-empty");
            out.slice_mut(s![i, 0..d]).assign(&left);
        }
        out.slice_mut(s![i, d..2 * d]).assign(&s.row(i));
        let hi = (i + r).min(m - 1);
        if hi > i {
            let right = s.slice(s![i + 1..=hi, ..]).mean_axis(Axis(0)).expect("non-empty");
            out.slice_mut(s![i, 2 * d..3 * d]).assign(&right);
        }
    }
    out
}

/// Feature vector for span `a..=b` of the contextualized rows `c`.
pub fn span_features(
    c: ArrayView2<'_, f64>,
    a: usize,
    b: usize,
    variant: SpanFeatureVariant,
) -> Result<Array1<f64>> {
    let (m, d) = c.dim();
    if a > b || b >= m {
        return Err(Error::IndexOutOfRange { a, b, m });
    }
    let blocks = variant.blocks();
    let mut out = Array1::zeros(blocks.len() * d);
    for (k, block) in blocks.iter().enumerate() {
        let mut dst = out.slice_mut(s![k * d..(k + 1) * d]);
        match block.row(a, b) {
            Some(i) => dst.assign(&c.row(i)),
            None => dst.assign(&c.slice(s![a..=b, ..]).mean_axis(Axis(0)).expect("non-empty")),
        }
    }
    Ok(out)
}
