use ndarray::{Array1, Array2, ArrayView2};

use super::inference::{backward, forward, marginals_from};
use super::lattice::{lattice_from_projections, Projections};
use super::ModelParams;
use crate::corpus::{split_to_max_len, Document, Segmentation};
use crate::error::Result;

/// Gradient blocks with the same shapes as the corresponding [`ModelParams`] fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub transitions: Array2<f64>,
    pub start: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            weights: Array2::zeros(params.weights.raw_dim()),
            bias: Array1::zeros(params.bias.raw_dim()),
            transitions: Array2::zeros(params.transitions.raw_dim()),
            start: Array1::zeros(params.start.raw_dim()),
        }
    }

    pub fn norm(&self) -> f64 {
        self.weights
            .iter()
            .chain(self.bias.iter())
            .chain(self.transitions.iter())
            .chain(self.start.iter())
            .map(|g| g * g)
            .sum::<f64>()
            .sqrt()
    }
}

/// Gold training target: merged label runs split into chunks of at most `lmax`.
pub fn training_target(doc: &Document, lmax: usize) -> Result<Segmentation> {
    Ok(split_to_max_len(&doc.gold_segmentation()?, lmax))
}

/// Negative log-likelihood of `gold` and its gradient with respect to every parameter block.
///
/// Each block of the gradient is the expected feature count under the model's
/// posterior minus the gold feature count.
pub fn nll_and_gradient(
    params: &ModelParams,
    embeddings: ArrayView2<'_, f32>,
    gold: &Segmentation,
) -> Result<(f64, Gradients)> {
    let m = embeddings.nrows();
    let proj = Projections::new(params, embeddings)?;
    let lat = lattice_from_projections(params, &proj, m)?;
    let gold_score = lat.path_score(gold)?;
    let fwd = forward(&lat);
    let bwd = backward(&lat);
    let mu = marginals_from(&lat, &fwd, &bwd);
    let nll = fwd.log_z - gold_score;

    let ny = params.num_labels();
    let lmax = params.lmax;
    let mut gold_ind = vec![0.0; m * lmax * ny];
    let mut grads = Gradients::zeros_like(params);
    let mut prev = None;
    for span in gold.spans() {
        gold_ind[(span.a * lmax + span.len() - 1) * ny + span.y] += 1.0;
        match prev {
            None => grads.start[span.y] -= 1.0,
            Some(p) => grads.transitions[[p, span.y]] -= 1.0,
        }
        prev = Some(span.y);
    }
    grads.start += &mu.start;
    grads.transitions += &mu.transitions;

    let weight =
        |a: usize, len: usize, y: usize| mu.span(a, len, y) - gold_ind[(a * lmax + len - 1) * ny + y];
    for a in 0..m {
        for len in 1..=lat.max_len_at(a) {
            for y in 0..ny {
                grads.bias[y] += weight(a, len, y);
            }
        }
    }
    proj.accumulate_feature_grad((m, lmax, ny), weight, &mut grads.weights);
    Ok((nll, grads))
}

/// Gradient of the negative log-likelihood of `gold`.
pub fn nll_gradient(
    params: &ModelParams,
    embeddings: ArrayView2<'_, f32>,
    gold: &Segmentation,
) -> Result<Gradients> {
    nll_and_gradient(params, embeddings, gold).map(|(_, g)| g)
}

/// Negative log-likelihood of `gold` without the gradient.
pub fn nll(params: &ModelParams, embeddings: ArrayView2<'_, f32>, gold: &Segmentation) -> Result<f64> {
    let lat = super::build_lattice(params, embeddings)?;
    Ok(-super::log_likelihood(&lat, gold)?)
}
