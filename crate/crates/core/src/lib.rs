//! Normalizing flows and the Bayesian networks they induce.
//!
//! - [`numcore`]: matrices, tanh MLPs with backprop, Adam, seeded sampling.
//! - [`flows`]: affine and piecewise-linear normalizers, coupling and
//!   autoregressive conditioners, log-density, sampling, training.
//! - [`bn`]: flow-to-network compiler, d-separation, I-map checks.
//! - [`lab`]: toy targets, statistics and the depth/universality experiments.
//! - [`cli`]: the `flowbn` command line.

pub mod numcore;
pub mod flows;
pub mod bn;
pub mod lab;
pub mod cli;
