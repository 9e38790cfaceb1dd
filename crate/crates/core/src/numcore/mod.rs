//! Dense numerics shared by the conditioners: matrices, a tanh MLP with
//! reverse-mode gradients, Adam, and a seeded normal sampler.

mod adam;
mod matrix;
mod mlp;
mod rng;

use thiserror::Error;

pub use adam::{AdamConfig, AdamState, ParamBlock};
pub use matrix::Matrix;
pub use mlp::{Mlp, MlpCache, MlpGradient};
pub use rng::{gaussian_sample, mix_seed, Rng};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("{what}: expected length {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training diverged: non-finite gradient in block `{block}` (index {index})")]
    Divergence { block: String, index: usize },
}
