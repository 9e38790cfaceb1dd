use std::ops::Range;

use super::NumError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// A named contiguous slice of a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBlock {
    pub name: String,
    pub range: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct AdamState {
    config: AdamConfig,
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
    blocks: Vec<ParamBlock>,
}

impl AdamState {
    pub fn new(config: AdamConfig, len: usize) -> Self {
        Self {
            config,
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            blocks: Vec::new(),
        }
    }

    /// Attaches block names used to report which parameters diverged.
    pub fn with_blocks(mut self, blocks: Vec<ParamBlock>) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }

    fn block_name(&self, index: usize) -> String {
        self.blocks
            .iter()
            .find(|b| b.range.contains(&index))
            .map_or_else(|| "params".to_string(), |b| b.name.clone())
    }

    /// One bias-corrected Adam update. Parameters are left untouched when any
    /// gradient entry is non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NumError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NumError::DimensionMismatch {
                what: "adam parameters",
                expected: self.m.len(),
                actual: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NumError::Divergence {
                block: self.block_name(index),
                index,
            });
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
        Ok(())
    }
}
