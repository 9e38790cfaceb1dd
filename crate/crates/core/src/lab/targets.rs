use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LabError;
use crate::numcore::{Matrix, Rng};

pub const RING_RADIUS: f64 = 2.0;
pub const RING_SD: f64 = 0.2;
pub const MOONS_SD: f64 = 0.1;
pub const CHECKER_HALF_WIDTH: f64 = 4.0;
pub const BIMODAL_SD: f64 = 0.5;

/// Two-dimensional toy densities with exact samplers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyTarget {
    /// Eight isotropic Gaussians evenly spaced on a ring.
    EightGaussians,
    /// Two interleaved half circles with Gaussian noise.
    TwoMoons,
    /// Uniform on two opposite cells of a 2×2 board over `[-4, 4]²`.
    Checkerboard,
    /// Component `component` (1-based) is a symmetric mixture at `±separation`
    /// with sd 0.5; the other component is standard normal and independent.
    IndependentBimodal { component: usize, separation: f64 },
}

pub const TARGET_NAMES: [&str; 4] = [
    "eight_gaussians",
    "two_moons",
    "checkerboard",
    "independent_bimodal",
];

fn log_normal(x: f64, mean: f64, sd: f64) -> f64 {
    let u = (x - mean) / sd;
    -0.5 * u * u - sd.ln() - 0.5 * (2.0 * PI).ln()
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl ToyTarget {
    /// Parses a target name; `independent_bimodal` uses component 1 and
    /// separation 2.
    pub fn from_name(name: &str) -> Result<Self, LabError> {
        match name {
            "eight_gaussians" => Ok(Self::EightGaussians),
            "two_moons" => Ok(Self::TwoMoons),
            "checkerboard" => Ok(Self::Checkerboard),
            "independent_bimodal" => Ok(Self::IndependentBimodal {
                component: 1,
                separation: 2.0,
            }),
            other => Err(LabError::InvalidInput(format!(
                "unknown target {other:?}; expected one of {}",
                TARGET_NAMES.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::EightGaussians => "eight_gaussians",
            Self::TwoMoons => "two_moons",
            Self::Checkerboard => "checkerboard",
            Self::IndependentBimodal { .. } => "independent_bimodal",
        }
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if let Self::IndependentBimodal {
            component,
            separation,
        } = *self
        {
            if !(1..=2).contains(&component) {
                return Err(LabError::InvalidInput(format!(
                    "bimodal component must be 1 or 2, got {component}"
                )));
            }
            if !separation.is_finite() || separation < 0.0 {
                return Err(LabError::InvalidInput(format!(
                    "separation must be finite and non-negative, got {separation}"
                )));
            }
        }
        Ok(())
    }

    pub fn ring_centers() -> Vec<[f64; 2]> {
        (0..8)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / 8.0;
                [RING_RADIUS * a.cos(), RING_RADIUS * a.sin()]
            })
            .collect()
    }

    pub fn sample(&self, rng: &mut Rng, n: usize) -> Result<Matrix, LabError> {
        self.validate()?;
        if n == 0 {
            return Err(LabError::InvalidInput("sample count must be positive".into()));
        }
        let mut out = Matrix::zeros(n, 2);
        let centers = Self::ring_centers();
        for r in 0..n {
            let p = match *self {
                Self::EightGaussians => {
                    let c = centers[rng.below(8)];
                    [c[0] + RING_SD * rng.normal(), c[1] + RING_SD * rng.normal()]
                }
                Self::TwoMoons => {
                    let t = PI * rng.uniform();
                    let upper = rng.below(2) == 0;
                    let (x, y) = if upper {
                        (t.cos(), t.sin())
                    } else {
                        (1.0 - t.cos(), 0.5 - t.sin())
                    };
                    [
                        x - 0.5 + MOONS_SD * rng.normal(),
                        y - 0.25 + MOONS_SD * rng.normal(),
                    ]
                }
                Self::Checkerboard => {
                    let h = CHECKER_HALF_WIDTH;
                    let u = rng.uniform_range(0.0, h);
                    let v = rng.uniform_range(0.0, h);
                    if rng.below(2) == 0 {
                        [u - h, v]
                    } else {
                        [u, v - h]
                    }
                }
                Self::IndependentBimodal {
                    component,
                    separation,
                } => {
                    let sign = if rng.below(2) == 0 { -1.0 } else { 1.0 };
                    let bimodal = sign * separation + BIMODAL_SD * rng.normal();
                    let other = rng.normal();
                    if component == 1 {
                        [bimodal, other]
                    } else {
                        [other, bimodal]
                    }
                }
            };
            out.row_mut(r).copy_from_slice(&p);
        }
        Ok(out)
    }

    /// Exact log-density, where a closed form exists.
    pub fn log_density(&self, x: &[f64]) -> Option<f64> {
        if x.len() != 2 {
            return None;
        }
        match *self {
            Self::EightGaussians => {
                let terms: Vec<f64> = Self::ring_centers()
                    .iter()
                    .map(|c| {
                        log_normal(x[0], c[0], RING_SD) + log_normal(x[1], c[1], RING_SD)
                            - 8f64.ln()
                    })
                    .collect();
                Some(log_sum_exp(&terms))
            }
            Self::TwoMoons => None,
            Self::Checkerboard => {
                let h = CHECKER_HALF_WIDTH;
                let inside = |v: f64, lo: f64| v >= lo && v <= lo + h;
                let on = (inside(x[0], -h) && inside(x[1], 0.0))
                    || (inside(x[0], 0.0) && inside(x[1], -h));
                Some(if on {
                    -(2.0 * h * h).ln()
                } else {
                    f64::NEG_INFINITY
                })
            }
            Self::IndependentBimodal {
                component,
                separation,
            } => {
                let (b, o) = if component == 1 { (x[0], x[1]) } else { (x[1], x[0]) };
                let mix = log_sum_exp(&[
                    log_normal(b, -separation, BIMODAL_SD),
                    log_normal(b, separation, BIMODAL_SD),
                ]) - 2f64.ln();
                Some(mix + log_normal(o, 0.0, 1.0))
            }
        }
    }

    /// NLL of the best single Gaussian fit to the bimodal component:
    /// `½(1 + ln 2π) + ½ ln(μ² + sd²)`.
    pub fn best_gaussian_marginal_nll(separation: f64) -> f64 {
        0.5 * (1.0 + (2.0 * PI).ln()) + 0.5 * (separation * separation + BIMODAL_SD * BIMODAL_SD).ln()
    }
}

impl fmt::Display for ToyTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IndependentBimodal {
                component,
                separation,
            } => write!(f, "independent_bimodal(I={component}, mu={separation})"),
            other => f.write_str(other.name()),
        }
    }
}
