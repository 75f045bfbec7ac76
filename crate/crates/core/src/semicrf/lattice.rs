use ndarray::{Array1, Array2, ArrayView2};

use super::ModelParams;
use crate::corpus::{Segmentation, Span};
use crate::error::{Error, Result};
use crate::spanrep::{context_enrich, Block};

/// Span scores for every `(start, length ≤ lmax, label)` triple plus transition and
/// start scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLattice {
    m: usize,
    num_labels: usize,
    lmax: usize,
    phi: Vec<f64>,
    transitions: Array2<f64>,
    start: Array1<f64>,
}

impl ScoreLattice {
    /// Builds a lattice from an arbitrary span scoring function `phi(a, len, y)`.
    pub fn from_fn(
        m: usize,
        lmax: usize,
        transitions: Array2<f64>,
        start: Array1<f64>,
        mut phi: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let num_labels = start.len();
        if m == 0 {
            return Err(Error::EmptyLabels);
        }
        if lmax == 0 {
            return Err(Error::InvalidConfig("lmax must be positive".into()));
        }
        if num_labels == 0 || transitions.dim() != (num_labels, num_labels) {
            return Err(Error::DimensionMismatch {
                context: "transition matrix".into(),
                expected: num_labels,
                found: transitions.nrows(),
            });
        }
        if !transitions.iter().chain(start.iter()).all(|v| v.is_finite()) {
            return Err(Error::NonFinite("transition or start scores".into()));
        }
        let mut lat = ScoreLattice {
            m,
            num_labels,
            lmax,
            phi: vec![0.0; m * lmax * num_labels],
            transitions,
            start,
        };
        for a in 0..m {
            for len in 1..=lat.max_len_at(a) {
                for y in 0..num_labels {
                    let v = phi(a, len, y);
                    if !v.is_finite() {
                        return Err(Error::NonFinite(format!("span score ({a}, {len}, {y})")));
                    }
                    let idx = lat.index(a, len, y);
                    lat.phi[idx] = v;
                }
            }
        }
        Ok(lat)
    }

    pub fn num_sentences(&self) -> usize {
        self.m
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn lmax(&self) -> usize {
        self.lmax
    }

    /// Longest span that may start at sentence `a`.
    pub fn max_len_at(&self, a: usize) -> usize {
        self.lmax.min(self.m - a)
    }

    #[inline]
    pub(crate) fn index(&self, a: usize, len: usize, y: usize) -> usize {
        debug_assert!(len >= 1 && len <= self.max_len_at(a) && y < self.num_labels);
        (a * self.lmax + len - 1) * self.num_labels + y
    }

    /// Score of span `a..a+len` with label `y`.
    #[inline]
    pub fn phi(&self, a: usize, len: usize, y: usize) -> f64 {
        self.phi[self.index(a, len, y)]
    }

    #[inline]
    pub fn transition(&self, prev: usize, next: usize) -> f64 {
        self.transitions[[prev, next]]
    }

    #[inline]
    pub fn start(&self, y: usize) -> f64 {
        self.start[y]
    }

    pub fn transitions(&self) -> &Array2<f64> {
        &self.transitions
    }

    pub fn starts(&self) -> &Array1<f64> {
        &self.start
    }

    /// Checks that `seg` covers the lattice with spans of admissible length and label.
    pub fn check_path(&self, seg: &Segmentation) -> Result<()> {
        if seg.num_sentences() != self.m {
            return Err(Error::CoverageMismatch {
                gold: seg.num_sentences(),
                pred: self.m,
            });
        }
        for span in seg.spans() {
            if span.len() > self.lmax {
                return Err(Error::SpanTooLong {
                    len: span.len(),
                    lmax: self.lmax,
                });
            }
            if span.y >= self.num_labels {
                return Err(Error::DimensionMismatch {
                    context: "span label".into(),
                    expected: self.num_labels,
                    found: span.y + 1,
                });
            }
        }
        Ok(())
    }

    /// Unnormalized log-score of a labeled segmentation.
    pub fn path_score(&self, seg: &Segmentation) -> Result<f64> {
        self.check_path(seg)?;
        let mut prev: Option<usize> = None;
        let mut total = 0.0;
        for span in seg.spans() {
            let Span { a, y, .. } = *span;
            total += self.phi(a, span.len(), y);
            total += match prev {
                None => self.start(y),
                Some(p) => self.transition(p, y),
            };
            prev = Some(y);
        }
        Ok(total)
    }
}

/// Per-row projections of the contextualized sentence rows onto each weight block.
///
/// A row block `k` contributes `W_{y,k} · c_row(a,b)`; the mean block contributes
/// `(Σ_{i=a..=b} W_{y,mean} · c_i) / len`, read off a prefix sum.
pub(crate) struct Projections {
    pub(crate) contextualized: Array2<f64>,
    blocks: &'static [Block],
    /// For row blocks `m × |Y|`; for the mean block `(m + 1) × |Y|` prefix sums.
    tables: Vec<Array2<f64>>,
}

impl Projections {
    pub(crate) fn new(params: &ModelParams, embeddings: ArrayView2<'_, f32>) -> Result<Self> {
        let (m, d) = embeddings.dim();
        if m == 0 {
            return Err(Error::EmptyLabels);
        }
        if d != params.dim {
            return Err(Error::DimensionMismatch {
                context: "embedding dimension".into(),
                expected: params.dim,
                found: d,
            });
        }
        if params.weights.ncols() != params.span_dim() {
            return Err(Error::DimensionMismatch {
                context: "span feature length".into(),
                expected: params.span_dim(),
                found: params.weights.ncols(),
            });
        }
        if embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embeddings".into()));
        }
        let c = context_enrich(embeddings.mapv(f64::from).view(), params.context);
        let dc = c.ncols();
        let blocks = params.variant.blocks();
        let y = params.num_labels();
        let tables = blocks
            .iter()
            .enumerate()
            .map(|(k, block)| {
                let w_k = params.weights.slice(ndarray::s![.., k * dc..(k + 1) * dc]);
                let proj = c.dot(&w_k.t());
                match block {
                    Block::Mean => {
                        let mut prefix = Array2::zeros((m + 1, y));
                        for i in 0..m {
                            for l in 0..y {
                                prefix[[i + 1, l]] = prefix[[i, l]] + proj[[i, l]];
                            }
                        }
                        prefix
                    }
                    _ => proj,
                }
            })
            .collect();
        Ok(Projections {
            contextualized: c,
            blocks,
            tables,
        })
    }

    pub(crate) fn span_score(&self, a: usize, len: usize, y: usize) -> f64 {
        let b = a + len - 1;
        self.blocks
            .iter()
            .zip(&self.tables)
            .map(|(block, table)| match block.row(a, b) {
                Some(i) => table[[i, y]],
                None => (table[[b + 1, y]] - table[[a, y]]) / len as f64,
            })
            .sum()
    }

    /// Accumulates `Σ_{a,len,y} weight(a,len,y) · f(a,len)` into `grad_w` (`|Y| × D_span`).
    pub(crate) fn accumulate_feature_grad(
        &self,
        lat_shape: (usize, usize, usize),
        weight: impl Fn(usize, usize, usize) -> f64,
        grad_w: &mut Array2<f64>,
    ) {
        let (m, lmax, y) = lat_shape;
        let c = &self.contextualized;
        let dc = c.ncols();
        for (k, block) in self.blocks.iter().enumerate() {
            // Per-row coefficient of c_i in block k, for each label.
            let mut coef = Array2::<f64>::zeros((m + 1, y));
            for a in 0..m {
                for len in 1..=lmax.min(m - a) {
                    let b = a + len - 1;
                    for l in 0..y {
                        let w = weight(a, len, l);
                        if w == 0.0 {
                            continue;
                        }
                        match block.row(a, b) {
                            Some(i) => coef[[i, l]] += w,
                            None => {
                                let share = w / len as f64;
                                coef[[a, l]] += share;
                                coef[[b + 1, l]] -= share;
                            }
                        }
                    }
                }
            }
            if matches!(block, Block::Mean) {
                for i in 1..=m {
                    for l in 0..y {
                        coef[[i, l]] += coef[[i - 1, l]];
                    }
                }
            }
            let coef = coef.slice(ndarray::s![0..m, ..]);
            let contribution = coef.t().dot(c);
            let mut dst = grad_w.slice_mut(ndarray::s![.., k * dc..(k + 1) * dc]);
            dst += &contribution;
        }
    }
}

/// Scores every admissible span of a document under `params`.
pub fn build_lattice(params: &ModelParams, embeddings: ArrayView2<'_, f32>) -> Result<ScoreLattice> {
    let proj = Projections::new(params, embeddings)?;
    lattice_from_projections(params, &proj, embeddings.nrows())
}

pub(crate) fn lattice_from_projections(
    params: &ModelParams,
    proj: &Projections,
    m: usize,
) -> Result<ScoreLattice> {
    ScoreLattice::from_fn(
        m,
        params.lmax,
        params.transitions.clone(),
        params.start.clone(),
        |a, len, y| proj.span_score(a, len, y) + params.bias[y],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::LabelSet;
    use crate::spanrep::{ContextConfig, SpanFeatureVariant};
    use ndarray::array;

    fn params(y: usize, d: usize, variant: SpanFeatureVariant, lmax: usize) -> ModelParams {
        let labels = LabelSet::new((0..y).map(|i| format!("L{i}"))).unwrap();
        ModelParams::zeros(labels, d, variant, lmax, ContextConfig::default())
    }

    #[test]
    fn zero_params_zero_scores() {
        let p = params(3, 2, SpanFeatureVariant::OursNoBiLSTM, 3);
        let emb = array![[1.0f32, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        let lat = build_lattice(&p, emb.view()).unwrap();
        for a in 0..4 {
            for len in 1..=lat.max_len_at(a) {
                for y in 0..3 {
                    assert_eq!(lat.phi(a, len, y), 0.0);
                }
            }
        }
    }

    #[test]
    fn single_active_weight_picks_first_row() {
        let mut p = params(2, 1, SpanFeatureVariant::OursNoBiLSTM, 2);
        p.weights[[1, 0]] = 1.0;
        let emb = array![[2.0f32], [4.0]];
        let lat = build_lattice(&p, emb.view()).unwrap();
        assert_eq!(lat.phi(0, 2, 1), 2.0);
        assert_eq!(lat.phi(1, 1, 1), 4.0);
        assert_eq!(lat.phi(0, 2, 0), 0.0);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let p = params(2, 3, SpanFeatureVariant::Simple, 2);
        let emb = array![[1.0f32, 2.0]];
        assert!(matches!(
            build_lattice(&p, emb.view()),
            Err(Error::DimensionMismatch { .. })
        ));
        let mut bad = params(2, 2, SpanFeatureVariant::Simple, 2);
        bad.weights = Array2::zeros((2, 3));
        assert!(build_lattice(&bad, emb.view()).is_err());
    }

    #[test]
    fn path_score_sums_spans_and_transitions() {
        let lat = ScoreLattice::from_fn(
            3,
            2,
            array![[0.5, -1.0], [2.0, 0.25]],
            array![0.1, 0.2],
            |a, len, y| (a * 10 + len) as f64 + y as f64 * 0.01,
        )
        .unwrap();
        let seg = Segmentation::new(vec![Span::new(0, 1, 1), Span::new(2, 2, 0)]).unwrap();
        let want = 0.2 + (2.0 + 0.01) + 2.0 + 21.0;
        assert!((lat.path_score(&seg).unwrap() - want).abs() < 1e-12);
        let long = Segmentation::new(vec![Span::new(0, 2, 0)]).unwrap();
        assert!(matches!(
            lat.path_score(&long),
            Err(Error::SpanTooLong { len: 3, lmax: 2 })
        ));
    }
}
