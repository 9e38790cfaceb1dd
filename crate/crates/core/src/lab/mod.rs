//! Toy targets, statistics, density grids and the depth / universality
//! experiments.

mod experiments;
mod grid;
mod report;
mod stats;
mod targets;

use thiserror::Error;

use crate::flows::FlowError;

pub use experiments::{
    capacity_ladder, chain_second_difference, chain_spec, ladder_label, marginal_normality_check,
    nonuniversality_experiment, normality_experiment, run_parallel, ExperimentConfig,
    MAX_CHAIN_DEPTH, MAX_LADDER_STEPS, MIN_LADDER_SEEDS, NORMALITY_DEEP, NORMALITY_SHALLOW,
    UNIVERSAL_LABEL,
};
pub use grid::{density_grid_model, density_grid_target, Bounds, DensityGrid, Histogram2d, MAX_RESOLUTION};
pub use report::{
    ConfigResult, ExperimentOutput, ExperimentReport, JobTiming, LadderRow, NonUniversalRow,
    NonUniversalSummary, NormalityRecord, Panel, RunMeta, REPORT_SCHEMA_VERSION,
};
pub use stats::{
    excess_kurtosis, mutual_information, normality, skewness, NormalityStats,
    EXCESS_KURTOSIS_LIMIT, SKEW_LIMIT,
};
pub use targets::{ToyTarget, TARGET_NAMES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Flow(FlowError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl LabError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, LabError::Flow(e) if e.is_numerical())
    }
}
