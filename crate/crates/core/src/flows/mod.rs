//! Normalizing flows built from scalar normalizers and structured conditioners.
//!
//! A step permutes its input, then maps each component `x_i` through an
//! invertible scalar function whose parameters come from its conditioner:
//! learned constants, a network over the permuted prefix (autoregressive), or
//! a network over the first `k - 1` components (coupling). Every Jacobian is
//! lower triangular in the permuted order, so the log-determinant is the sum
//! of scalar log-derivatives.

mod io;
mod model;
pub mod normalizer;
mod spec;
mod train;

use thiserror::Error;

use crate::numcore::NumError;

pub use io::{
    read_dataset, read_dataset_path, read_spec_path, write_dataset, Checkpoint,
    CHECKPOINT_FORMAT_VERSION,
};
pub use model::{standard_normal_log_density, FlowModel, DEFAULT_HIDDEN};
pub use normalizer::{
    affine_forward, affine_inverse, monotone_forward, monotone_inverse, AffineParams,
    MonotonePwl, NormalizerParams,
};
pub use spec::{
    conditioning_inputs, default_coupling_k, Conditioner, FlowSpec, Normalizer, Permutation,
    StepSpec,
};
pub use train::{train, EpochRecord, LossTrace, TrainConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("invalid flow spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse flow spec: {0}")]
    Parse(String),
    #[error("{what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("non-finite input to {0}")]
    NonFiniteInput(&'static str),
    #[error("non-finite value produced by step {step}")]
    NonFinite { step: usize },
    #[error("inversion failed at step {step}")]
    Inversion { step: usize },
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("dataset: {0}")]
    Csv(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl FlowError {
    /// Numerical failures, as opposed to bad inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            FlowError::NonFinite { .. }
                | FlowError::Inversion { .. }
                | FlowError::Divergence(_)
                | FlowError::Num(NumError::Divergence { .. } | NumError::NonFinite(_))
        )
    }
}
