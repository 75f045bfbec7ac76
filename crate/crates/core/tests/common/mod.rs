//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls the dynamic programs under test; lattices are only read through
//! their span/transition/start accessors.

#![allow(dead_code, clippy::needless_range_loop)]

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spancrf::corpus::{LabelSet, Segmentation, Span};
use spancrf::semicrf::{ModelParams, ScoreLattice};
use spancrf::spanrep::{context_enrich, span_features, ContextConfig, SpanFeatureVariant};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Every labeled segmentation of `m` sentences with spans of length ≤ `lmax`.
pub fn enumerate_paths(m: usize, lmax: usize, num_labels: usize) -> Vec<Vec<Span>> {
    fn rec(i: usize, m: usize, lmax: usize, ny: usize, cur: &mut Vec<Span>, out: &mut Vec<Vec<Span>>) {
        if i == m {
            out.push(cur.clone());
            return;
        }
        for len in 1..=lmax.min(m - i) {
            for y in 0..ny {
                cur.push(Span::new(i, i + len - 1, y));
                rec(i + len, m, lmax, ny, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(0, m, lmax, num_labels, &mut Vec::new(), &mut out);
    out
}

pub fn naive_path_score(lat: &ScoreLattice, path: &[Span]) -> f64 {
    let mut score = 0.0;
    for (j, s) in path.iter().enumerate() {
        score += lat.phi(s.a, s.len(), s.y);
        score += if j == 0 {
            lat.start(s.y)
        } else {
            lat.transition(path[j - 1].y, s.y)
        };
    }
    score
}

pub fn brute_log_z(lat: &ScoreLattice) -> f64 {
    let scores: Vec<f64> = enumerate_paths(lat.num_sentences(), lat.lmax(), lat.num_labels())
        .iter()
        .map(|p| naive_path_score(lat, p))
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

/// Tie-break key: reversed sequence of (label ascending, length descending).
fn tie_key(path: &[Span]) -> Vec<(usize, std::cmp::Reverse<usize>)> {
    path.iter()
        .rev()
        .map(|s| (s.y, std::cmp::Reverse(s.len())))
        .collect()
}

/// Highest-scoring path under the documented tie-break, with its score.
pub fn brute_best(lat: &ScoreLattice) -> (Vec<Span>, f64) {
    let mut best: Option<(Vec<Span>, f64)> = None;
    for path in enumerate_paths(lat.num_sentences(), lat.lmax(), lat.num_labels()) {
        let score = naive_path_score(lat, &path);
        let better = match &best {
            None => true,
            Some((bp, bs)) => score > *bs || (score == *bs && tie_key(&path) < tie_key(bp)),
        };
        if better {
            best = Some((path, score));
        }
    }
    best.unwrap()
}

/// Posterior of every span by enumeration, keyed by (a, len, y).
pub fn brute_span_marginals(lat: &ScoreLattice) -> std::collections::HashMap<(usize, usize, usize), f64> {
    let log_z = brute_log_z(lat);
    let mut out = std::collections::HashMap::new();
    for path in enumerate_paths(lat.num_sentences(), lat.lmax(), lat.num_labels()) {
        let p = (naive_path_score(lat, &path) - log_z).exp();
        for s in &path {
            *out.entry((s.a, s.len(), s.y)).or_insert(0.0) += p;
        }
    }
    out
}

pub fn random_lattice(rng: &mut impl Rng, m: usize, ny: usize, lmax: usize, scale: f64) -> ScoreLattice {
    let trans = Array2::from_shape_fn((ny, ny), |_| rng.random_range(-scale..scale));
    let start = Array1::from_shape_fn(ny, |_| rng.random_range(-scale..scale));
    let mut phis = Vec::new();
    for _ in 0..m * lmax * ny {
        phis.push(rng.random_range(-scale..scale));
    }
    ScoreLattice::from_fn(m, lmax, trans, start, |a, len, y| {
        phis[(a * lmax + len - 1) * ny + y]
    })
    .unwrap()
}

/// Plain first-order linear-chain CRF over per-sentence emission scores.
pub struct LinearChainCrf {
    pub emissions: Array2<f64>,
    pub transitions: Array2<f64>,
    pub start: Array1<f64>,
}

impl LinearChainCrf {
    pub fn from_lattice(lat: &ScoreLattice) -> Self {
        let (m, ny) = (lat.num_sentences(), lat.num_labels());
        LinearChainCrf {
            emissions: Array2::from_shape_fn((m, ny), |(i, y)| lat.phi(i, 1, y)),
            transitions: lat.transitions().clone(),
            start: lat.starts().clone(),
        }
    }

    pub fn log_z(&self) -> f64 {
        let (m, ny) = self.emissions.dim();
        let lse = |v: &[f64]| {
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
        };
        let mut alpha: Vec<f64> = (0..ny).map(|y| self.start[y] + self.emissions[[0, y]]).collect();
        for i in 1..m {
            alpha = (0..ny)
                .map(|y| {
                    let terms: Vec<f64> = (0..ny).map(|p| alpha[p] + self.transitions[[p, y]]).collect();
                    lse(&terms) + self.emissions[[i, y]]
                })
                .collect();
        }
        lse(&alpha)
    }

    pub fn viterbi(&self) -> Vec<usize> {
        let (m, ny) = self.emissions.dim();
        let mut delta: Vec<f64> = (0..ny).map(|y| self.start[y] + self.emissions[[0, y]]).collect();
        let mut back = vec![vec![0usize; ny]; m];
        for i in 1..m {
            let mut next = vec![0.0; ny];
            for y in 0..ny {
                let (bp, bs) = (0..ny)
                    .map(|p| (p, delta[p] + self.transitions[[p, y]]))
                    .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                next[y] = bs + self.emissions[[i, y]];
                back[i][y] = bp;
            }
            delta = next;
        }
        let mut y = (0..ny).fold(0, |b, y| if delta[y] > delta[b] { y } else { b });
        let mut out = vec![y; m];
        for i in (1..m).rev() {
            y = back[i][y];
            out[i - 1] = y;
        }
        out
    }
}

pub fn labels(n: usize) -> LabelSet {
    LabelSet::new((0..n).map(|i| format!("L{i}"))).unwrap()
}

pub fn random_params(
    rng: &mut impl Rng,
    ny: usize,
    d: usize,
    variant: SpanFeatureVariant,
    lmax: usize,
    radius: usize,
    scale: f64,
) -> ModelParams {
    let mut p = ModelParams::zeros(labels(ny), d, variant, lmax, ContextConfig::new(radius));
    p.weights.mapv_inplace(|_| rng.random_range(-scale..scale));
    p.bias.mapv_inplace(|_| rng.random_range(-scale..scale));
    p.transitions.mapv_inplace(|_| rng.random_range(-scale..scale));
    p.start.mapv_inplace(|_| rng.random_range(-scale..scale));
    p
}

pub fn random_embeddings(rng: &mut impl Rng, m: usize, d: usize) -> Array2<f32> {
    Array2::from_shape_fn((m, d), |_| rng.random_range(-1.0f32..1.0))
}

/// Span score computed by materializing the feature vector and taking a dot product.
pub fn naive_span_score(params: &ModelParams, emb: &Array2<f32>, a: usize, b: usize, y: usize) -> f64 {
    let c = context_enrich(emb.mapv(f64::from).view(), params.context);
    let f = span_features(c.view(), a, b, params.variant).unwrap();
    params.weights.row(y).dot(&f) + params.bias[y]
}

pub fn random_gold(rng: &mut impl Rng, m: usize, ny: usize, lmax: usize) -> Segmentation {
    let mut spans = Vec::new();
    let mut a = 0;
    while a < m {
        let len = rng.random_range(1..=lmax.min(m - a));
        spans.push(Span::new(a, a + len - 1, rng.random_range(0..ny)));
        a += len;
    }
    Segmentation::new(spans).unwrap()
}

/// Central finite difference of `f` with respect to every scalar parameter, in the
/// block order W, b, A, start.
pub fn finite_difference(
    params: &ModelParams,
    eps: f64,
    f: impl Fn(&ModelParams) -> f64,
) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    let mut probe = params.clone();
    macro_rules! block {
        ($field:ident, $name:literal) => {
            let idx: Vec<_> = probe.$field.indexed_iter().map(|(i, _)| i).collect();
            for i in idx {
                let orig = probe.$field[i.clone()];
                probe.$field[i.clone()] = orig + eps;
                let up = f(&probe);
                probe.$field[i.clone()] = orig - eps;
                let down = f(&probe);
                probe.$field[i.clone()] = orig;
                out.push((format!("{}{:?}", $name, i), (up - down) / (2.0 * eps)));
            }
        };
    }
    block!(weights, "W");
    block!(bias, "b");
    block!(transitions, "A");
    block!(start, "start");
    out
}

/// Relative error with a small floor on the denominator.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6)
}

/// Number of labeled segmentations: N(i) = Σ_{d=1..min(lmax,i)} |Y| N(i − d), N(0) = 1.
pub fn path_count(m: usize, ny: usize, lmax: usize) -> f64 {
    let mut n = vec![0.0f64; m + 1];
    n[0] = 1.0;
    for i in 1..=m {
        n[i] = (1..=lmax.min(i)).map(|d| ny as f64 * n[i - d]).sum();
    }
    n[m]
}
