//! Bayesian networks induced by flow structure.

mod compile;
mod discrete;
mod dot;
mod dsep;
mod graph;

use thiserror::Error;

use crate::flows::FlowError;

pub use compile::bn_from_flow;
pub use discrete::{factorizes, is_imap, DiscreteJoint, MAX_CARDINALITY, MAX_VARIABLES, PROB_TOL};
pub use dot::export_dot;
pub use dsep::{
    combinations, d_separated, d_separated_oracle, implied_independencies, CiStatement,
    MAX_CONDITIONING,
};
pub use graph::{Bn, Edge, Node, NodeKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BnError {
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("X, Y and Z must be disjoint")]
    OverlappingSets,
    #[error("X and Y must be non-empty")]
    EmptySet,
    #[error("graph contains a cycle")]
    Cyclic,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("cannot parse graph: {0}")]
    Parse(String),
    #[error("projection onto observed nodes needs a single-step flow, got {steps} steps")]
    ProjectionRefused { steps: usize },
    #[error("conditioning sets larger than {MAX_CONDITIONING} are not enumerated (asked for {0})")]
    ConditioningTooLarge(usize),
    #[error("no nodes in scope")]
    EmptyScope,
    #[error("joint has {variables} variables but graph has {nodes} nodes")]
    CardinalityMismatch { nodes: usize, variables: usize },
    #[error("invalid joint table: {0}")]
    InvalidJoint(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}
