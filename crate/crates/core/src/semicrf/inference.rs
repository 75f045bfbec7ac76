use ndarray::{Array1, Array2};

use super::ScoreLattice;
use crate::corpus::Segmentation;
use crate::error::Result;

/// `log Σ exp(x)` with max subtraction. Returns `-inf` for an empty input.
pub fn logsumexp(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = values.into_iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Segmental forward tables.
///
/// `alpha[[i, y]]` sums all labeled segmentations of sentences `0..i` whose last span
/// has label `y`. `incoming[[a, y]]` is the log-score of entering a span that starts
/// at `a` with label `y`: the start score when `a = 0`, otherwise
/// `logsumexp_prev alpha[[a, prev]] + A[prev, y]`.
#[derive(Debug, Clone)]
pub struct Forward {
    pub alpha: Array2<f64>,
    pub incoming: Array2<f64>,
    pub log_z: f64,
}

/// Segmental backward tables.
///
/// `outgoing[[i, y]]` sums all completions of sentences `i..m` whose first span has
/// label `y`, including that span's score; `beta[[i, prev]]` additionally applies the
/// transition from `prev`. `beta[[m, _]] = 0`.
#[derive(Debug, Clone)]
pub struct Backward {
    pub beta: Array2<f64>,
    pub outgoing: Array2<f64>,
    pub log_z: f64,
}

pub fn forward(lat: &ScoreLattice) -> Forward {
    let (m, ny) = (lat.num_sentences(), lat.num_labels());
    let mut alpha = Array2::from_elem((m + 1, ny), f64::NEG_INFINITY);
    let mut incoming = Array2::from_elem((m, ny), f64::NEG_INFINITY);
    for y in 0..ny {
        incoming[[0, y]] = lat.start(y);
    }
    let mut terms = Vec::with_capacity(lat.lmax().max(ny));
    for i in 1..=m {
        for y in 0..ny {
            terms.clear();
            for len in 1..=lat.lmax().min(i) {
                let a = i - len;
                terms.push(incoming[[a, y]] + lat.phi(a, len, y));
            }
            alpha[[i, y]] = logsumexp(terms.iter().copied());
        }
        if i < m {
            for y in 0..ny {
                incoming[[i, y]] = logsumexp((0..ny).map(|p| alpha[[i, p]] + lat.transition(p, y)));
            }
        }
    }
    let log_z = logsumexp(alpha.row(m).iter().copied());
    Forward {
        alpha,
        incoming,
        log_z,
    }
}

pub fn backward(lat: &ScoreLattice) -> Backward {
    let (m, ny) = (lat.num_sentences(), lat.num_labels());
    let mut beta = Array2::from_elem((m + 1, ny), f64::NEG_INFINITY);
    let mut outgoing = Array2::from_elem((m, ny), f64::NEG_INFINITY);
    beta.row_mut(m).fill(0.0);
    let mut terms = Vec::with_capacity(lat.lmax());
    for i in (0..m).rev() {
        for y in 0..ny {
            terms.clear();
            for len in 1..=lat.max_len_at(i) {
                terms.push(lat.phi(i, len, y) + beta[[i + len, y]]);
            }
            outgoing[[i, y]] = logsumexp(terms.iter().copied());
        }
        for p in 0..ny {
            beta[[i, p]] = logsumexp((0..ny).map(|y| lat.transition(p, y) + outgoing[[i, y]]));
        }
    }
    let log_z = logsumexp((0..ny).map(|y| lat.start(y) + outgoing[[0, y]]));
    Backward {
        beta,
        outgoing,
        log_z,
    }
}

/// Log of the sum of exponentiated path scores over every labeled segmentation
/// with spans no longer than `lmax`.
pub fn log_partition(lat: &ScoreLattice) -> f64 {
    forward(lat).log_z
}

/// `score(gold) − log Z`. Gold spans must respect the lattice's `lmax`.
pub fn log_likelihood(lat: &ScoreLattice, gold: &Segmentation) -> Result<f64> {
    let score = lat.path_score(gold)?;
    Ok(score - log_partition(lat))
}

/// Posterior quantities of a lattice.
#[derive(Debug, Clone)]
pub struct Marginals {
    m: usize,
    lmax: usize,
    num_labels: usize,
    span: Vec<f64>,
    /// Expected number of `prev → next` transitions, summed over positions.
    pub transitions: Array2<f64>,
    /// Posterior of the first span's label.
    pub start: Array1<f64>,
    pub log_z: f64,
}

impl Marginals {
    /// Posterior probability that span `a..a+len` with label `y` is part of the segmentation.
    pub fn span(&self, a: usize, len: usize, y: usize) -> f64 {
        debug_assert!(len >= 1 && a + len <= self.m && len <= self.lmax);
        self.span[(a * self.lmax + len - 1) * self.num_labels + y]
    }

    /// Σ of span posteriors over all spans covering sentence `i`.
    pub fn coverage(&self, i: usize) -> f64 {
        let mut total = 0.0;
        for a in i.saturating_sub(self.lmax - 1)..=i {
            for len in (i - a + 1)..=self.lmax.min(self.m - a) {
                for y in 0..self.num_labels {
                    total += self.span(a, len, y);
                }
            }
        }
        total
    }

    /// Posterior label distribution of sentence `i`.
    pub fn sentence_posterior(&self, i: usize) -> Array1<f64> {
        let mut out = Array1::zeros(self.num_labels);
        for a in i.saturating_sub(self.lmax - 1)..=i {
            for len in (i - a + 1)..=self.lmax.min(self.m - a) {
                for y in 0..self.num_labels {
                    out[y] += self.span(a, len, y);
                }
            }
        }
        out
    }
}

/// Forward–backward posteriors of spans, transitions and the first label.
pub fn marginals(lat: &ScoreLattice) -> Marginals {
    let fwd = forward(lat);
    let bwd = backward(lat);
    marginals_from(lat, &fwd, &bwd)
}

pub(crate) fn marginals_from(lat: &ScoreLattice, fwd: &Forward, bwd: &Backward) -> Marginals {
    let (m, ny, lmax) = (lat.num_sentences(), lat.num_labels(), lat.lmax());
    let log_z = fwd.log_z;
    let mut span = vec![0.0; m * lmax * ny];
    for a in 0..m {
        for len in 1..=lat.max_len_at(a) {
            for y in 0..ny {
                let lp = fwd.incoming[[a, y]] + lat.phi(a, len, y) + bwd.beta[[a + len, y]] - log_z;
                span[lat.index(a, len, y)] = lp.exp();
            }
        }
    }
    let mut transitions = Array2::zeros((ny, ny));
    for a in 1..m {
        for p in 0..ny {
            for y in 0..ny {
                let lp = fwd.alpha[[a, p]] + lat.transition(p, y) + bwd.outgoing[[a, y]] - log_z;
                transitions[[p, y]] += lp.exp();
            }
        }
    }
    let start = Array1::from_shape_fn(ny, |y| (lat.start(y) + bwd.outgoing[[0, y]] - log_z).exp());
    Marginals {
        m,
        lmax,
        num_labels: ny,
        span,
        transitions,
        start,
        log_z,
    }
}
