pub mod augment;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod semicrf;
pub mod spanrep;
pub mod synth;
pub mod train;

pub use error::{Error, Result};
