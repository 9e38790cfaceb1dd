use std::f64::consts::PI;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::grid::{density_grid_model, Bounds, DensityGrid};
use super::report::{
    ConfigResult, ExperimentOutput, ExperimentReport, JobTiming, LadderRow, NonUniversalRow,
    NonUniversalSummary, NormalityRecord, Panel, RunMeta, REPORT_SCHEMA_VERSION,
};
use super::stats::{mutual_information, normality, NormalityStats};
use super::targets::ToyTarget;
use super::LabError;
use crate::flows::{
    train, Conditioner, FlowError, FlowModel, FlowSpec, Normalizer, Permutation, StepSpec,
    TrainConfig,
};
use crate::numcore::{mix_seed, Matrix, Rng};

pub const MAX_LADDER_STEPS: usize = 6;
pub const MIN_LADDER_SEEDS: usize = 3;
pub const MAX_CHAIN_DEPTH: usize = 6;

// Stream tags; each seed derives independent streams for data, test data,
// model initialization and training.
const TAG_TRAIN_DATA: u64 = 0xDA7A;
const TAG_TEST_DATA: u64 = 0x7E57;
const TAG_INIT: u64 = 0x1417;
const TAG_TRAIN: u64 = 0x7241;
const TAG_SAMPLE: u64 = 0x5A3E;
const TAG_CONTROL: u64 = 0xC0DE;
const TAG_JITTER: u64 = 0x7177;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub val_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub hidden: Vec<usize>,
    /// Depth and bin count of the monotone autoregressive baseline.
    pub universal_steps: usize,
    pub universal_bins: usize,
    /// Cosine learning-rate annealing over the run.
    #[serde(default = "enabled")]
    pub cosine_decay: bool,
    /// Whether the capacity ladder trains the monotone baseline at all.
    #[serde(default = "enabled")]
    pub universal: bool,
    pub grid_resolution: usize,
    pub grid_half_width: f64,
    pub mi_samples: usize,
    pub mi_bins: usize,
    pub normality_samples: usize,
    /// Uniform noise added to the full flow's initial parameters in the
    /// non-universality experiment. From the exact identity start on an
    /// independent target the conditioner gradients vanish in expectation,
    /// so the full flow would otherwise never leave the Gaussian fit.
    #[serde(default = "default_jitter")]
    pub full_init_jitter: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            epochs: 60,
            batch_size: 256,
            lr: 3e-3,
            val_fraction: 0.1,
            n_train: 10_000,
            n_test: 10_000,
            hidden: vec![64, 64],
            universal_steps: 2,
            universal_bins: 32,
            cosine_decay: true,
            universal: true,
            grid_resolution: 64,
            grid_half_width: 4.0,
            mi_samples: 100_000,
            mi_bins: 32,
            normality_samples: 100_000,
            full_init_jitter: default_jitter(),
        }
    }
}

fn enabled() -> bool {
    true
}

fn default_jitter() -> f64 {
    0.1
}

impl ExperimentConfig {
    fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            lr: self.lr,
            val_fraction: self.val_fraction,
            seed,
            cosine_decay: self.cosine_decay,
        }
    }

    fn validate(&self) -> Result<(), LabError> {
        if self.n_train < 2 || self.n_test == 0 || self.batch_size == 0 {
            return Err(LabError::InvalidConfig(
                "sample counts and batch size must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(LabError::InvalidConfig(format!("learning rate {}", self.lr)));
        }
        if !(self.full_init_jitter >= 0.0 && self.full_init_jitter.is_finite()) {
            return Err(LabError::InvalidConfig(format!("init jitter {}", self.full_init_jitter)));
        }
        if self.universal_steps == 0 || self.universal_bins < 2 {
            return Err(LabError::InvalidConfig("universal baseline needs steps and bins".into()));
        }
        Ok(())
    }
}

/// Runs `f` over `jobs` on up to `threads` workers; results keep job order.
pub fn run_parallel<T: Sync, R: Send>(
    jobs: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= jobs.len() {
                    break;
                }
                let r = f(&jobs[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked")
        .into_iter()
        .map(|r| r.expect("every job ran"))
        .collect()
}

struct Fit {
    model: FlowModel,
    train_nll: f64,
    val_nll: f64,
    test_nll: f64,
}

/// Trains `spec` on `data`. Numerical failures come back as `Ok(Err(message))`.
fn fit(
    spec: FlowSpec,
    data: &Matrix,
    test: &Matrix,
    cfg: &ExperimentConfig,
    seed: u64,
    tag: u64,
    jitter: f64,
) -> Result<Result<Fit, String>, LabError> {
    let root = Rng::new(seed);
    let mut model = FlowModel::new(spec, &cfg.hidden, &mut root.fork(mix_seed(TAG_INIT, tag)))?;
    if jitter > 0.0 {
        model.perturb(&mut root.fork(mix_seed(TAG_JITTER, tag)), jitter);
    }
    let tc = cfg.train_config(mix_seed(mix_seed(seed, TAG_TRAIN), tag));
    let (model, trace) = match train(&model, data, &tc) {
        Ok(r) => r,
        Err(e) if e.is_numerical() => return Ok(Err(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let test_nll = match model.mean_nll(test) {
        Ok(v) if v.is_finite() => v,
        Ok(v) => return Ok(Err(format!("non-finite test NLL {v}"))),
        Err(e) if e.is_numerical() => return Ok(Err(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    Ok(Ok(Fit {
        model,
        train_nll: trace.final_train_nll().unwrap_or(f64::NAN),
        val_nll: trace.final_val_nll(),
        test_nll,
    }))
}

fn datasets(target: &ToyTarget, seed: u64, cfg: &ExperimentConfig) -> Result<(Matrix, Matrix), LabError> {
    let root = Rng::new(seed);
    let train = target.sample(&mut root.fork(TAG_TRAIN_DATA), cfg.n_train)?;
    let test = target.sample(&mut root.fork(TAG_TEST_DATA), cfg.n_test)?;
    Ok((train, test))
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn result_row(seed: u64, label: &str, spec: &FlowSpec, fit: &Result<Fit, String>) -> ConfigResult {
    match fit {
        Ok(f) => ConfigResult {
            seed,
            label: label.to_string(),
            steps: spec.steps.len(),
            spec: spec.summary(),
            train_nll: finite(f.train_nll),
            val_nll: finite(f.val_nll),
            test_nll: Some(f.test_nll),
            status: "ok".into(),
        },
        Err(msg) => ConfigResult {
            seed,
            label: label.to_string(),
            steps: spec.steps.len(),
            spec: spec.summary(),
            train_nll: None,
            val_nll: None,
            test_nll: None,
            status: format!("diverged: {msg}"),
        },
    }
}

fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    });
    (Some(mean), sd)
}

pub fn ladder_label(steps: usize) -> String {
    format!("K={steps}")
}

pub const UNIVERSAL_LABEL: &str = "universal";

/// Affine coupling flows of increasing depth plus a monotone autoregressive
/// baseline, each trained per seed on the same data and scored on a shared
/// held-out test set.
pub fn capacity_ladder(
    target: ToyTarget,
    steps_range: &[usize],
    seeds: &[u64],
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentOutput, LabError> {
    target.validate()?;
    cfg.validate()?;
    if steps_range.is_empty() || steps_range.iter().any(|&k| k == 0 || k > MAX_LADDER_STEPS) {
        return Err(LabError::InvalidConfig(format!(
            "step counts must lie in 1..={MAX_LADDER_STEPS}, got {steps_range:?}"
        )));
    }
    if seeds.len() < MIN_LADDER_SEEDS {
        return Err(LabError::InvalidConfig(format!(
            "capacity ladder needs at least {MIN_LADDER_SEEDS} seeds, got {}",
            seeds.len()
        )));
    }
    let started = Instant::now();
    let mut jobs: Vec<(u64, String, FlowSpec, u64)> = Vec::new();
    for &seed in seeds {
        for &k in steps_range {
            jobs.push((
                seed,
                ladder_label(k),
                FlowSpec::coupling_stack(2, k, Normalizer::Affine),
                k as u64,
            ));
        }
        if !cfg.universal {
            continue;
        }
        jobs.push((
            seed,
            UNIVERSAL_LABEL.to_string(),
            FlowSpec::autoregressive_stack(
                2,
                cfg.universal_steps,
                Normalizer::MonotonePwl {
                    bins: cfg.universal_bins,
                },
            ),
            1000,
        ));
    }
    let bounds = Bounds::square(cfg.grid_half_width);
    let res = cfg.grid_resolution;
    let outputs = run_parallel(&jobs, threads, |(seed, label, spec, tag)| {
        let t0 = Instant::now();
        let out = (|| {
            let (data, test) = datasets(&target, *seed, cfg)?;
            let fit = fit(spec.clone(), &data, &test, cfg, *seed, *tag, 0.0)?;
            let grid = match &fit {
                Ok(f) => Some(density_grid_model(&f.model, bounds, res, res)?),
                Err(_) => None,
            };
            Ok::<_, LabError>((result_row(*seed, label, spec, &fit), grid))
        })();
        (out, t0.elapsed().as_secs_f64())
    });

    let mut configs = Vec::new();
    let mut panels = Vec::new();
    let mut timings = Vec::new();
    for ((seed, label, spec, _), (out, wall)) in jobs.iter().zip(outputs) {
        let (row, grid) = out?;
        if let Some(grid) = grid {
            let name = if label == UNIVERSAL_LABEL {
                format!("capacity_universal_seed{seed}")
            } else {
                format!("capacity_{}steps_seed{seed}", spec.steps.len())
            };
            panels.push(Panel { name, grid });
        }
        timings.push(JobTiming {
            seed: *seed,
            label: label.clone(),
            wall_seconds: wall,
        });
        configs.push(row);
    }
    let mut labels: Vec<(String, usize)> = steps_range.iter().map(|&k| (ladder_label(k), k)).collect();
    if cfg.universal {
        labels.push((UNIVERSAL_LABEL.to_string(), cfg.universal_steps));
    }
    let ladder = labels
        .into_iter()
        .map(|(label, steps)| {
            let vals: Vec<f64> = configs
                .iter()
                .filter(|c| c.label == label)
                .filter_map(|c| c.test_nll)
                .collect();
            let (mean, sd) = mean_sd(&vals);
            LadderRow {
                label,
                steps,
                mean_test_nll: mean,
                sd_test_nll: sd,
                runs: vals.len(),
            }
        })
        .collect();
    Ok(ExperimentOutput {
        report: ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: "capacity".into(),
            target,
            seeds: seeds.to_vec(),
            config: cfg.clone(),
            configs,
            ladder,
            nonuniversal: None,
            normality: vec![],
        },
        meta: RunMeta {
            threads,
            total_wall_seconds: started.elapsed().as_secs_f64(),
            jobs: timings,
        },
        panels,
    })
}

/// Samples `model`, extracts original component `component` (1-based) and
/// runs the moment-based normality check on it. The component must use
/// constant parameters in the first step, i.e. be linear in one latent when
/// the flow has a single affine step.
pub fn marginal_normality_check(
    model: &FlowModel,
    component: usize,
    n: usize,
    rng: &mut Rng,
) -> Result<NormalityStats, LabError> {
    if component == 0 || component > model.dim() {
        return Err(LabError::InvalidInput(format!(
            "component {component} out of range 1..={}",
            model.dim()
        )));
    }
    if !model.is_unconditioned(0, component - 1) {
        return Err(LabError::InvalidInput(format!(
            "component {component} is conditioned in the first step"
        )));
    }
    let (x, _) = model.sample(rng, n)?;
    normality(&x.column(component - 1))
}

/// Affine flow in which the bimodal component keeps constant parameters at
/// every step: it sits first in every step's order and no permutation ever
/// moves it.
pub fn chain_spec(component: usize, depth: usize) -> Result<FlowSpec, LabError> {
    if !(1..=2).contains(&component) || depth == 0 || depth > MAX_CHAIN_DEPTH {
        return Err(LabError::InvalidConfig(format!(
            "chain flow needs component in 1..=2 and depth in 1..={MAX_CHAIN_DEPTH}"
        )));
    }
    let steps = (0..depth)
        .map(|i| StepSpec {
            conditioner: Conditioner::Coupling { k: 2 },
            normalizer: Normalizer::Affine,
            permutation: if i == 0 && component == 2 {
                Permutation::Explicit(vec![2, 1])
            } else {
                Permutation::Identity
            },
        })
        .collect();
    Ok(FlowSpec { dim: 2, steps })
}

/// Second difference of the generated chain component at three equally spaced
/// values of its latent, with the other latent drawn at random. Zero (up to
/// rounding) for an affine map.
pub fn chain_second_difference(model: &FlowModel, rng: &mut Rng) -> Result<f64, LabError> {
    if model.dim() != 2 {
        return Err(LabError::InvalidInput("chain model must be 2D".into()));
    }
    let comp = chain_component(model)?;
    let other = rng.normal();
    let center = rng.normal();
    let h = 0.5 + rng.uniform();
    let mut xs = [0.0; 3];
    for (slot, t) in xs.iter_mut().zip([center - h, center, center + h]) {
        *slot = model.flow_inverse(&[t, other])?[comp];
    }
    Ok((xs[0] - 2.0 * xs[1] + xs[2]).abs())
}

/// Original index of the component fed by the first latent coordinate.
fn chain_component(model: &FlowModel) -> Result<usize, LabError> {
    let mut track = vec![0usize, 1];
    for step in &model.spec().steps {
        let order = step.permutation.order(2);
        track = order.iter().map(|&o| track[o]).collect();
    }
    let comp = track[0];
    if (0..model.num_steps()).all(|s| step_keeps_first_unconditioned(model, s, comp)) {
        Ok(comp)
    } else {
        Err(LabError::InvalidInput("model is not a chain flow".into()))
    }
}

fn step_keeps_first_unconditioned(model: &FlowModel, step: usize, comp: usize) -> bool {
    let mut track = vec![0usize, 1];
    for s in &model.spec().steps[..step] {
        let order = s.permutation.order(2);
        track = order.iter().map(|&o| track[o]).collect();
    }
    let index = track.iter().position(|&v| v == comp).expect("component tracked");
    model.is_unconditioned(step, index)
}

/// Gaussian marginal of the chain component: `x = a z + b`, so `N(b, a²)`.
fn chain_marginal(model: &FlowModel) -> Result<(usize, f64, f64), LabError> {
    let comp = chain_component(model)?;
    let b = model.flow_inverse(&[0.0, 0.0])?[comp];
    let a = model.flow_inverse(&[1.0, 0.0])?[comp] - b;
    Ok((comp, b, a.abs()))
}

fn gaussian_nll(x: &[f64], mean: f64, sd: f64) -> f64 {
    let c = sd.ln() + 0.5 * (2.0 * PI).ln();
    x.iter().map(|v| c + 0.5 * ((v - mean) / sd).powi(2)).sum::<f64>() / x.len() as f64
}

/// Fits a chain flow and a full affine coupling flow to a target whose
/// component `component` is an independent symmetric bimodal mixture.
pub fn nonuniversality_experiment(
    component: usize,
    separation: f64,
    depth: usize,
    seeds: &[u64],
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentOutput, LabError> {
    cfg.validate()?;
    let target = ToyTarget::IndependentBimodal {
        component,
        separation,
    };
    target.validate()?;
    let chain = chain_spec(component, depth)?;
    let full = FlowSpec::coupling_stack(2, depth, Normalizer::Affine);
    if seeds.is_empty() {
        return Err(LabError::InvalidConfig("need at least one seed".into()));
    }
    let started = Instant::now();
    let jobs: Vec<(u64, &'static str, FlowSpec, u64)> = seeds
        .iter()
        .flat_map(|&s| [(s, "chain", chain.clone(), 1), (s, "full", full.clone(), 2)])
        .collect();
    let bounds = Bounds::square(cfg.grid_half_width);
    let res = cfg.grid_resolution;
    let outputs = run_parallel(&jobs, threads, |(seed, label, spec, tag)| {
        let t0 = Instant::now();
        let out = (|| {
            let (data, test) = datasets(&target, *seed, cfg)?;
            let jitter = if *label == "full" { cfg.full_init_jitter } else { 0.0 };
            let fit = fit(spec.clone(), &data, &test, cfg, *seed, *tag, jitter)?;
            let row = result_row(*seed, label, spec, &fit);
            let mut extra = (None, None, None);
            let mut grid: Option<DensityGrid> = None;
            if let Ok(f) = &fit {
                grid = Some(density_grid_model(&f.model, bounds, res, res)?);
                let mut rng = Rng::new(*seed).fork(mix_seed(TAG_SAMPLE, *tag));
                if *label == "chain" {
                    let (comp, mean, sd) = chain_marginal(&f.model)?;
                    let nll = gaussian_nll(&test.column(comp), mean, sd);
                    let mut worst = 0.0f64;
                    for _ in 0..10 {
                        worst = worst.max(chain_second_difference(&f.model, &mut rng)?);
                    }
                    extra.0 = Some(nll);
                    extra.1 = Some(worst);
                } else {
                    let (x, _) = f.model.sample(&mut rng, cfg.mi_samples)?;
                    extra.2 = Some(mutual_information(&x.column(0), &x.column(1), cfg.mi_bins)?);
                }
            }
            Ok::<_, LabError>((row, extra, grid))
        })();
        (out, t0.elapsed().as_secs_f64())
    });

    let mut configs = Vec::new();
    let mut panels = Vec::new();
    let mut timings = Vec::new();
    let mut per_seed: Vec<NonUniversalRow> = Vec::new();
    for ((seed, label, _, _), (out, wall)) in jobs.iter().zip(outputs) {
        let (row, extra, grid) = out?;
        if let Some(grid) = grid {
            panels.push(Panel {
                name: format!("nonuniversal_{label}_{depth}steps_seed{seed}"),
                grid,
            });
        }
        timings.push(JobTiming {
            seed: *seed,
            label: label.to_string(),
            wall_seconds: wall,
        });
        configs.push(row);
        if *label == "chain" {
            let control = target.sample(&mut Rng::new(*seed).fork(TAG_CONTROL), cfg.mi_samples)?;
            per_seed.push(NonUniversalRow {
                seed: *seed,
                marginal_nll: extra.0,
                chain_second_difference: extra.1,
                mi: None,
                mi_floor: mutual_information(&control.column(0), &control.column(1), cfg.mi_bins)?,
            });
        } else {
            per_seed.last_mut().expect("chain job precedes full job").mi = extra.2;
        }
    }
    let all = |f: fn(&NonUniversalRow) -> Option<f64>| -> Option<Vec<f64>> {
        per_seed.iter().map(f).collect()
    };
    let mean = |v: Option<Vec<f64>>| v.and_then(|v| mean_sd(&v).0);
    let summary = NonUniversalSummary {
        component,
        separation,
        depth,
        marginal_nll: mean(all(|r| r.marginal_nll)),
        gaussian_fit_nll: ToyTarget::best_gaussian_marginal_nll(separation),
        mi: mean(all(|r| r.mi)),
        mi_floor: mean(all(|r| Some(r.mi_floor))).unwrap_or(0.0),
        per_seed,
    };
    Ok(ExperimentOutput {
        report: ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: "nonuniversal".into(),
            target,
            seeds: seeds.to_vec(),
            config: cfg.clone(),
            configs,
            ladder: vec![],
            nonuniversal: Some(summary),
            normality: vec![],
        },
        meta: RunMeta {
            threads,
            total_wall_seconds: started.elapsed().as_secs_f64(),
            jobs: timings,
        },
        panels,
    })
}

pub const NORMALITY_SHALLOW: &str = "1-step affine autoregressive";
pub const NORMALITY_DEEP: &str = "3-step affine coupling";

/// Trains a single-step and a three-step affine flow on `target` and checks
/// the marginal normality of component 1 for each.
pub fn normality_experiment(
    target: ToyTarget,
    seeds: &[u64],
    cfg: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentOutput, LabError> {
    target.validate()?;
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(LabError::InvalidConfig("need at least one seed".into()));
    }
    let started = Instant::now();
    let shallow = FlowSpec::autoregressive_stack(2, 1, Normalizer::Affine);
    let deep = FlowSpec::coupling_stack(2, 3, Normalizer::Affine);
    let jobs: Vec<(u64, &'static str, FlowSpec, u64)> = seeds
        .iter()
        .flat_map(|&s| [(s, NORMALITY_SHALLOW, shallow.clone(), 1), (s, NORMALITY_DEEP, deep.clone(), 3)])
        .collect();
    let bounds = Bounds::square(cfg.grid_half_width);
    let res = cfg.grid_resolution;
    let outputs = run_parallel(&jobs, threads, |(seed, label, spec, tag)| {
        let t0 = Instant::now();
        let out = (|| {
            let (data, test) = datasets(&target, *seed, cfg)?;
            let fit = fit(spec.clone(), &data, &test, cfg, *seed, *tag, 0.0)?;
            let row = result_row(*seed, label, spec, &fit);
            let (stats, grid) = match &fit {
                Ok(f) => {
                    let mut rng = Rng::new(*seed).fork(mix_seed(TAG_SAMPLE, *tag));
                    (
                        Some(marginal_normality_check(&f.model, 1, cfg.normality_samples, &mut rng)?),
                        Some(density_grid_model(&f.model, bounds, res, res)?),
                    )
                }
                Err(_) => (None, None),
            };
            Ok::<_, LabError>((row, stats, grid))
        })();
        (out, t0.elapsed().as_secs_f64())
    });
    let mut configs = Vec::new();
    let mut panels = Vec::new();
    let mut timings = Vec::new();
    let mut normality = Vec::new();
    for ((seed, label, spec, _), (out, wall)) in jobs.iter().zip(outputs) {
        let (row, stats, grid) = out?;
        if let Some(grid) = grid {
            panels.push(Panel {
                name: format!("normality_{}steps_seed{seed}", spec.steps.len()),
                grid,
            });
        }
        timings.push(JobTiming {
            seed: *seed,
            label: label.to_string(),
            wall_seconds: wall,
        });
        normality.push(NormalityRecord {
            seed: *seed,
            label: label.to_string(),
            component: 1,
            stats,
        });
        configs.push(row);
    }
    Ok(ExperimentOutput {
        report: ExperimentReport {
            schema_version: REPORT_SCHEMA_VERSION,
            experiment: "normality".into(),
            target,
            seeds: seeds.to_vec(),
            config: cfg.clone(),
            configs,
            ladder: vec![],
            nonuniversal: None,
            normality,
        },
        meta: RunMeta {
            threads,
            total_wall_seconds: started.elapsed().as_secs_f64(),
            jobs: timings,
        },
        panels,
    })
}

impl From<FlowError> for LabError {
    fn from(e: FlowError) -> Self {
        LabError::Flow(e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            epochs: 2,
            batch_size: 128,
            n_train: 600,
            n_test: 300,
            hidden: vec![8],
            grid_resolution: 8,
            mi_samples: 10_000,
            normality_samples: 2_000,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn parallel_runner_keeps_order() {
        let jobs: Vec<u64> = (0..20).collect();
        let one = run_parallel(&jobs, 1, |j| j * j);
        let many = run_parallel(&jobs, 4, |j| j * j);
        assert_eq!(one, many);
        assert_eq!(one[7], 49);
        assert!(run_parallel(&Vec::<u64>::new(), 3, |j| *j).is_empty());
    }

    #[test]
    fn ladder_structure_and_reproducibility() {
        let cfg = tiny();
        let a = capacity_ladder(ToyTarget::EightGaussians, &[1, 2], &[1, 2, 3], &cfg, 1).unwrap();
        assert_eq!(a.report.configs.len(), 3 * 3);
        assert_eq!(a.panels.len(), 9);
        assert_eq!(a.report.ladder.len(), 3);
        assert!(a.report.ladder.iter().all(|r| r.runs == 3));
        let b = capacity_ladder(ToyTarget::EightGaussians, &[1, 2], &[1, 2, 3], &cfg, 2).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.panels, b.panels);
    }

    #[test]
    fn ladder_input_checks() {
        let cfg = tiny();
        assert!(capacity_ladder(ToyTarget::TwoMoons, &[1, 7], &[1, 2, 3], &cfg, 1).is_err());
        assert!(capacity_ladder(ToyTarget::TwoMoons, &[1], &[1, 2], &cfg, 1).is_err());
    }

    #[test]
    fn chain_spec_keeps_component_unconditioned() {
        for component in 1..=2 {
            let spec = chain_spec(component, 4).unwrap();
            let mut rng = Rng::new(component as u64);
            let mut m = FlowModel::new(spec, &[6], &mut rng).unwrap();
            m.perturb(&mut rng, 1.0);
            assert_eq!(chain_component(&m).unwrap(), component - 1);
            assert!(chain_second_difference(&m, &mut rng).unwrap() < 1e-9);
        }
        assert!(chain_spec(3, 2).is_err());
        assert!(chain_spec(1, 7).is_err());
        let full = FlowModel::new(FlowSpec::coupling_stack(2, 2, Normalizer::Affine), &[4], &mut Rng::new(0)).unwrap();
        assert!(chain_component(&full).is_err());
    }

    #[test]
    fn normality_check_rejects_conditioned_component() {
        let m = FlowModel::new(FlowSpec::autoregressive_stack(2, 1, Normalizer::Affine), &[4], &mut Rng::new(0)).unwrap();
        assert!(marginal_normality_check(&m, 2, 1000, &mut Rng::new(1)).is_err());
        assert!(marginal_normality_check(&m, 3, 1000, &mut Rng::new(1)).is_err());
        let s = marginal_normality_check(&m, 1, 100_000, &mut Rng::new(1)).unwrap();
        assert!(s.normal);
    }

    #[test]
    fn nonuniversal_report_fields() {
        let cfg = tiny();
        let out = nonuniversality_experiment(1, 2.0, 2, &[5], &cfg, 1).unwrap();
        let s = out.report.nonuniversal.as_ref().unwrap();
        assert!(s.marginal_nll.is_some() && s.mi.is_some());
        assert!((s.gaussian_fit_nll - 2.142_39).abs() < 1e-5);
        assert!(s.per_seed[0].chain_second_difference.unwrap() < 1e-9);
        assert_eq!(out.report.configs.len(), 2);
    }

    #[test]
    fn normality_experiment_runs() {
        let out = normality_experiment(ToyTarget::EightGaussians, &[3], &tiny(), 1).unwrap();
        assert_eq!(out.report.normality.len(), 2);
        assert!(out.report.normality.iter().all(|r| r.stats.is_some()));
    }
}
