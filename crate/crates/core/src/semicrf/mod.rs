//! Semi-Markov CRF over labeled sentence spans.
//!
//! A path is a labeled segmentation `(a_1, b_1, y_1), …, (a_s, b_s, y_s)` with every
//! span no longer than `lmax`. Its score is
//!
//! ```text
//! start[y_1] + Σ_j phi(a_j, len_j, y_j) + Σ_{j≥2} A[y_{j-1}, y_j]
//! ```
//!
//! where `phi` is a linear function of the span feature vector. Same-label transitions
//! are allowed, so a gold span longer than `lmax` is represented as consecutive
//! same-label chunks. All dynamic programs run in natural-log space in `f64`.

mod gradient;
mod inference;
mod lattice;
mod params;
mod viterbi;

pub use gradient::{nll, nll_and_gradient, nll_gradient, training_target, Gradients};
pub use inference::{
    backward, forward, log_likelihood, log_partition, logsumexp, marginals, Backward, Forward, Marginals,
};
pub use lattice::{build_lattice, ScoreLattice};
pub use params::{ModelParams, MODEL_FORMAT_VERSION};
pub use viterbi::{viterbi, viterbi_with_score};
