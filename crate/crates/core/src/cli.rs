//! The `flowbn` command line. [`run`] returns the process exit code: 0 on
//! success, 2 for usage or input errors, 3 for numerical failures.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Parser, Subcommand, ValueEnum};

use crate::bn::{bn_from_flow, d_separated, export_dot, Bn, BnError, CiStatement};
use crate::flows::{
    read_dataset_path, read_spec_path, train, FlowError, FlowModel, FlowSpec, TrainConfig,
};
use crate::lab::{
    capacity_ladder, nonuniversality_experiment, normality_experiment, ExperimentConfig,
    ExperimentOutput, LabError, ToyTarget,
};
use crate::numcore::Rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const EXPERIMENT_NAMES: [&str; 3] = ["capacity", "nonuniversal", "normality"];

const TAG_INIT: u64 = 1;

#[derive(Debug, Parser)]
#[command(name = "flowbn", version, about = "Normalizing flows and their Bayesian networks")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output directory, created if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for experiment fan-out.
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Dot,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a flow to a CSV dataset by maximum likelihood.
    Train {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 300)]
        epochs: usize,
        #[arg(long, default_value_t = 256)]
        batch: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        /// Hidden widths of every conditioner network, comma separated.
        #[arg(long, default_value = "64,64")]
        hidden: String,
        #[arg(long, default_value_t = 0.1)]
        val_fraction: f64,
    },
    /// Write the Bayesian network a flow spec induces.
    ExtractBn {
        #[arg(long)]
        spec: PathBuf,
        /// Include latent and intermediate layers.
        #[arg(long, action = ArgAction::Set, num_args = 0..=1, default_value_t = false, default_missing_value = "true")]
        latents: bool,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
    },
    /// Decide whether X and Y are d-separated given Z.
    Dsep {
        #[arg(long)]
        bn: PathBuf,
        /// Comma-separated node labels or ids.
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long, default_value = "")]
        z: String,
    },
    /// Run one of the experiments: capacity, nonuniversal, normality.
    Experiment {
        #[arg(long)]
        name: String,
        #[arg(long)]
        target: Option<String>,
        /// Number of seeds, counting up from --seed.
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        /// Step counts for the capacity ladder.
        #[arg(long, default_value = "1,2,3,4,5")]
        steps: String,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        n_train: Option<usize>,
        #[arg(long)]
        n_test: Option<usize>,
        #[arg(long)]
        hidden: Option<String>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        /// Mixture separation for the nonuniversal experiment.
        #[arg(long, default_value_t = 2.0)]
        separation: f64,
        /// Flow depth for the nonuniversal experiment.
        #[arg(long, default_value_t = 5)]
        depth: usize,
        /// Bimodal component (1-based) for the nonuniversal experiment.
        #[arg(long, default_value_t = 1)]
        component: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Input(String),
    Numerical(String),
}

impl From<FlowError> for CliError {
    fn from(e: FlowError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

impl From<BnError> for CliError {
    fn from(e: BnError) -> Self {
        match e {
            BnError::Flow(f) => f.into(),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn out_dir(cli_out: &Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
    match cli_out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

pub fn parse_hidden(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match s.parse::<usize>() {
            Ok(0) | Err(_) => Err(format!("invalid hidden width {s:?}")),
            Ok(v) => Ok(v),
        })
        .collect()
}

/// The model `train` starts from for a given spec, hidden widths and seed.
pub fn init_model(spec: FlowSpec, hidden: &[usize], seed: u64) -> Result<FlowModel, FlowError> {
    FlowModel::new(spec, hidden, &mut Rng::new(seed).fork(TAG_INIT))
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(code) => code,
        Err(CliError::Input(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_INPUT
        }
        Err(CliError::Numerical(m)) => {
            let _ = writeln!(stderr, "numerical failure: {m}");
            EXIT_NUMERICAL
        }
    }
}

fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<i32, CliError> {
    if cli.threads == 0 {
        return Err(CliError::Input("--threads must be at least 1".into()));
    }
    match &cli.command {
        Command::Train {
            spec,
            data,
            epochs,
            batch,
            lr,
            hidden,
            val_fraction,
        } => {
            let hidden = parse_hidden(hidden).map_err(CliError::Input)?;
            if !(0.0..1.0).contains(val_fraction) {
                return Err(CliError::Input("--val-fraction must lie in [0, 1)".into()));
            }
            let spec = read_spec_path(spec)?;
            let data = read_dataset_path(data)?;
            let model = init_model(spec, &hidden, cli.seed)?;
            let cfg = TrainConfig {
                epochs: *epochs,
                batch_size: *batch,
                lr: *lr,
                val_fraction: *val_fraction,
                seed: cli.seed,
                cosine_decay: false,
            };
            let (model, trace) = train(&model, &data, &cfg)?;
            let dir = out_dir(&cli.out)?.unwrap_or_else(|| PathBuf::from("."));
            let ck = dir.join("checkpoint.json");
            write_file(&ck, model.to_checkpoint_json().as_bytes())?;
            let mut csv = String::from("epoch,train_nll,val_nll\n");
            csv.push_str(&format!("0,,{}\n", trace.initial_val_nll));
            for e in &trace.epochs {
                csv.push_str(&format!("{},{},{}\n", e.epoch, e.train_nll, e.val_nll));
            }
            let tr = dir.join("trace.csv");
            write_file(&tr, csv.as_bytes())?;
            let _ = writeln!(stdout, "nll={}", trace.final_val_nll());
            let _ = writeln!(stdout, "checkpoint={}", ck.display());
            let _ = writeln!(stdout, "trace={}", tr.display());
            Ok(EXIT_OK)
        }
        Command::ExtractBn {
            spec,
            latents,
            format,
        } => {
            let spec = read_spec_path(spec)?;
            let bn = bn_from_flow(&spec, *latents)?;
            let (text, ext) = match format {
                GraphFormat::Dot => (export_dot(&bn), "dot"),
                GraphFormat::Json => (bn.to_json() + "\n", "json"),
            };
            match out_dir(&cli.out)? {
                Some(dir) => {
                    let p = dir.join(format!("bn.{ext}"));
                    write_file(&p, text.as_bytes())?;
                    let _ = writeln!(stdout, "nodes={}", bn.node_count());
                    let _ = writeln!(stdout, "edges={}", bn.edges().len());
                    let _ = writeln!(stdout, "bn={}", p.display());
                }
                None => {
                    let _ = write!(stdout, "{text}");
                }
            }
            Ok(EXIT_OK)
        }
        Command::Dsep { bn, x, y, z } => {
            let text = fs::read_to_string(bn).map_err(|e| io_error(bn, e))?;
            let bn = Bn::from_json(&text)?;
            let ids = |list: &str| -> Result<Vec<usize>, CliError> {
                list.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| bn.resolve(s).map_err(CliError::from))
                    .collect()
            };
            let q = CiStatement::new(&ids(x)?, &ids(y)?, &ids(z)?)?;
            let verdict = if d_separated(&bn, &q)? {
                "d-separated"
            } else {
                "d-connected"
            };
            let _ = writeln!(stdout, "{verdict}");
            Ok(EXIT_OK)
        }
        Command::Experiment {
            name,
            target,
            seeds,
            steps,
            epochs,
            n_train,
            n_test,
            hidden,
            lr,
            batch,
            grid,
            separation,
            depth,
            component,
        } => {
            if !EXPERIMENT_NAMES.contains(&name.as_str()) {
                return Err(CliError::Input(format!(
                    "unknown experiment {name:?}; valid names: {}",
                    EXPERIMENT_NAMES.join(", ")
                )));
            }
            let mut cfg = ExperimentConfig::default();
            if let Some(v) = epochs {
                cfg.epochs = *v;
            }
            if let Some(v) = n_train {
                cfg.n_train = *v;
            }
            if let Some(v) = n_test {
                cfg.n_test = *v;
            }
            if let Some(v) = hidden {
                cfg.hidden = parse_hidden(v).map_err(CliError::Input)?;
            }
            if let Some(v) = lr {
                cfg.lr = *v;
            }
            if let Some(v) = batch {
                cfg.batch_size = *v;
            }
            if let Some(v) = grid {
                cfg.grid_resolution = *v;
            }
            let seed_list: Vec<u64> = (0..*seeds as u64).map(|i| cli.seed.wrapping_add(i)).collect();
            let target = match target {
                Some(t) => ToyTarget::from_name(t)?,
                None => ToyTarget::EightGaussians,
            };
            let output = match name.as_str() {
                "capacity" => {
                    let ks = parse_hidden(steps).map_err(CliError::Input)?;
                    capacity_ladder(target, &ks, &seed_list, &cfg, cli.threads)?
                }
                "nonuniversal" => nonuniversality_experiment(
                    *component,
                    *separation,
                    *depth,
                    &seed_list,
                    &cfg,
                    cli.threads,
                )?,
                _ => normality_experiment(target, &seed_list, &cfg, cli.threads)?,
            };
            let dir = out_dir(&cli.out)?.unwrap_or_else(|| PathBuf::from("."));
            let written = output.write_to(&dir)?;
            print_summary(&output, stdout);
            let _ = writeln!(stdout, "files={}", written.len());
            let diverged = output.report.diverged();
            if diverged.is_empty() {
                Ok(EXIT_OK)
            } else {
                let names: Vec<String> = diverged
                    .iter()
                    .map(|c| format!("seed {} {}", c.seed, c.label))
                    .collect();
                Err(CliError::Numerical(format!("diverged: {}", names.join("; "))))
            }
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

fn print_summary(out: &ExperimentOutput, stdout: &mut dyn Write) {
    let r = &out.report;
    let _ = writeln!(stdout, "experiment={}", r.experiment);
    for row in &r.ladder {
        let _ = writeln!(stdout, "mean_test_nll[{}]={}", row.label, opt(row.mean_test_nll));
    }
    if let Some(s) = &r.nonuniversal {
        let _ = writeln!(stdout, "marginal_nll={}", opt(s.marginal_nll));
        let _ = writeln!(stdout, "gaussian_fit_nll={}", s.gaussian_fit_nll);
        let _ = writeln!(stdout, "mi={}", opt(s.mi));
        let _ = writeln!(stdout, "mi_floor={}", s.mi_floor);
    }
    for rec in &r.normality {
        if let Some(st) = &rec.stats {
            let _ = writeln!(
                stdout,
                "normal[seed={},{}]={}",
                rec.seed, rec.label, st.normal
            );
        }
    }
}
