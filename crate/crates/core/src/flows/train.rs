use serde::{Deserialize, Serialize};

use super::model::FlowModel;
use super::FlowError;
use crate::numcore::{AdamConfig, AdamState, Matrix, NumError, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Fraction of rows held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
    /// Anneal the learning rate from `lr` to zero along a half cosine, one
    /// value per epoch.
    pub cosine_decay: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 300,
            batch_size: 256,
            lr: 1e-3,
            val_fraction: 0.1,
            seed: 0,
            cosine_decay: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_nll: f64,
    pub val_nll: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    /// Validation NLL of the model before any update.
    pub initial_val_nll: f64,
    pub epochs: Vec<EpochRecord>,
}

impl LossTrace {
    pub fn final_val_nll(&self) -> f64 {
        self.epochs.last().map_or(self.initial_val_nll, |e| e.val_nll)
    }

    pub fn final_train_nll(&self) -> Option<f64> {
        self.epochs.last().map(|e| e.train_nll)
    }
}

/// Splits row indices into `(train, validation)` with a seeded shuffle.
fn split_rows(n: usize, val_fraction: f64, rng: &mut Rng) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut idx);
    let mut n_val = (n as f64 * val_fraction).round() as usize;
    if val_fraction > 0.0 && n >= 2 {
        n_val = n_val.clamp(1, n - 1);
    } else {
        n_val = 0;
    }
    let train = idx.split_off(n_val);
    (train, idx)
}

/// Maximum-likelihood training with Adam on shuffled minibatches.
///
/// Validation NLL is measured on a held-out split after every epoch; when
/// the split is empty the training rows stand in for it.
pub fn train(
    model: &FlowModel,
    data: &Matrix,
    cfg: &TrainConfig,
) -> Result<(FlowModel, LossTrace), FlowError> {
    if data.cols() != model.dim() {
        return Err(FlowError::DimensionMismatch {
            what: "dataset columns",
            expected: model.dim(),
            actual: data.cols(),
        });
    }
    if data.rows() == 0 {
        return Err(FlowError::EmptyBatch);
    }
    if cfg.batch_size == 0 {
        return Err(FlowError::InvalidSpec("batch size must be positive".into()));
    }
    let root = Rng::new(cfg.seed);
    let (mut train_idx, val_idx) = split_rows(data.rows(), cfg.val_fraction, &mut root.fork(1));
    let val = if val_idx.is_empty() {
        data.select_rows(&train_idx)
    } else {
        data.select_rows(&val_idx)
    };
    let mut model = model.clone();
    let initial_val_nll = model.mean_nll(&val)?;
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        model.param_count(),
    )
    .with_blocks(model.param_layout());
    let mut order_rng = root.fork(2);
    let mut params = model.params();
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        if cfg.cosine_decay {
            let t = (epoch - 1) as f64 / cfg.epochs as f64;
            adam.set_lr(cfg.lr * 0.5 * (1.0 + (std::f64::consts::PI * t).cos()));
        }
        order_rng.shuffle(&mut train_idx);
        let mut total = 0.0;
        for chunk in train_idx.chunks(cfg.batch_size) {
            let batch = data.select_rows(chunk);
            let (loss, grad) = model.nll_and_gradient(&batch)?;
            adam.step(&mut params, &grad).map_err(|e| match e {
                NumError::Divergence { block, index } => {
                    FlowError::Divergence(format!("non-finite gradient in {block} (index {index})"))
                }
                other => FlowError::Num(other),
            })?;
            model.set_params(&params)?;
            total += loss * chunk.len() as f64;
        }
        let train_nll = total / train_idx.len() as f64;
        let val_nll = model.mean_nll(&val).map_err(|e| match e {
            FlowError::NonFinite { step } => {
                FlowError::Divergence(format!("validation pass non-finite at step {step}"))
            }
            other => other,
        })?;
        if !val_nll.is_finite() {
            return Err(FlowError::Divergence(format!("validation NLL {val_nll} at epoch {epoch}")));
        }
        epochs.push(EpochRecord {
            epoch,
            train_nll,
            val_nll,
        });
    }
    Ok((
        model,
        LossTrace {
            initial_val_nll,
            epochs,
        },
    ))
}
