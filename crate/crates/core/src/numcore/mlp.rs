//! Fixed-shape feed-forward network with hand-rolled reverse mode.
//!
//! Hidden layers use `tanh`, the output layer is the identity. Parameters
//! live in one flat buffer laid out layer by layer as `W_l` (row-major,
//! `out x in`) followed by `b_l`; gradients use the same layout so a flow
//! can concatenate networks into one parameter vector.

use super::matrix::{gemm, Matrix};
use super::{NumError, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
    offsets: Vec<usize>,
}

/// Activations retained by [`Mlp::forward_batch`] for the backward pass.
#[derive(Debug, Clone)]
pub struct MlpCache {
    /// `acts[0]` is the input, `acts[l]` the post-activation output of layer `l`.
    acts: Vec<Matrix>,
}

impl MlpCache {
    pub fn output(&self) -> &Matrix {
        self.acts.last().expect("cache holds at least the input")
    }
}

/// Result of [`Mlp::backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradient {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn layer_offsets(widths: &[usize]) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(widths.len());
    let mut acc = 0;
    offsets.push(0);
    for w in widths.windows(2) {
        acc += w[0] * w[1] + w[1];
        offsets.push(acc);
    }
    offsets
}

impl Mlp {
    /// All-zero network of the given layer widths (input first, output last).
    pub fn zeros(widths: &[usize]) -> Result<Self, NumError> {
        if widths.len() < 2 || widths.contains(&0) {
            return Err(NumError::InvalidShape(format!(
                "mlp widths must have at least two non-zero entries, got {widths:?}"
            )));
        }
        let offsets = layer_offsets(widths);
        let total = *offsets.last().unwrap();
        Ok(Self {
            widths: widths.to_vec(),
            params: vec![0.0; total],
            offsets,
        })
    }

    /// Hidden layers get scaled-uniform weights in `±sqrt(6 / (fan_in + fan_out))`,
    /// biases start at zero and the final layer is all zeros.
    pub fn new(widths: &[usize], rng: &mut Rng) -> Result<Self, NumError> {
        let mut net = Self::zeros(widths)?;
        for l in 0..net.num_layers() - 1 {
            let (fan_in, fan_out) = (net.widths[l], net.widths[l + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let off = net.offsets[l];
            for w in &mut net.params[off..off + fan_in * fan_out] {
                *w = rng.uniform_range(-bound, bound);
            }
        }
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NumError> {
        if params.len() != self.params.len() {
            return Err(NumError::DimensionMismatch {
                what: "mlp parameters",
                expected: self.params.len(),
                actual: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (i, o) = (self.widths[l], self.widths[l + 1]);
        let off = self.offsets[l];
        (
            &self.params[off..off + i * o],
            &self.params[off + i * o..off + i * o + o],
        )
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>, NumError> {
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        Ok(self.forward_batch(&x)?.output().data().to_vec())
    }

    pub fn forward_batch(&self, input: &Matrix) -> Result<MlpCache, NumError> {
        if input.cols() != self.input_dim() {
            return Err(NumError::DimensionMismatch {
                what: "mlp input",
                expected: self.input_dim(),
                actual: input.cols(),
            });
        }
        let n = input.rows();
        let mut acts = Vec::with_capacity(self.widths.len());
        acts.push(input.clone());
        for l in 0..self.num_layers() {
            let (i, o) = (self.widths[l], self.widths[l + 1]);
            let (w, b) = self.layer(l);
            let mut z = Matrix::zeros(n, o);
            for r in 0..n {
                z.row_mut(r).copy_from_slice(b);
            }
            gemm(n, i, o, 1.0, acts[l].data(), false, w, true, 1.0, z.data_mut());
            if l + 1 < self.num_layers() {
                z.data_mut().iter_mut().for_each(|v| *v = v.tanh());
            }
            acts.push(z);
        }
        if !acts.last().unwrap().all_finite() {
            return Err(NumError::NonFinite("mlp output"));
        }
        Ok(MlpCache { acts })
    }

    /// Accumulates parameter gradients into `grad` (same layout as
    /// [`Mlp::params`]) and returns the gradient with respect to the input.
    pub fn backward_batch(
        &self,
        cache: &MlpCache,
        output_grad: &Matrix,
        grad: &mut [f64],
    ) -> Result<Matrix, NumError> {
        let n = cache.acts[0].rows();
        if output_grad.rows() != n || output_grad.cols() != self.output_dim() {
            return Err(NumError::DimensionMismatch {
                what: "mlp output gradient",
                expected: n * self.output_dim(),
                actual: output_grad.rows() * output_grad.cols(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(NumError::DimensionMismatch {
                what: "mlp gradient buffer",
                expected: self.params.len(),
                actual: grad.len(),
            });
        }
        let mut delta = output_grad.clone();
        for l in (0..self.num_layers()).rev() {
            let (i, o) = (self.widths[l], self.widths[l + 1]);
            if l + 1 < self.num_layers() {
                let h = cache.acts[l + 1].data();
                for (d, &t) in delta.data_mut().iter_mut().zip(h) {
                    *d *= 1.0 - t * t;
                }
            }
            let off = self.offsets[l];
            let (gw, rest) = grad[off..].split_at_mut(i * o);
            gemm(o, n, i, 1.0, delta.data(), true, cache.acts[l].data(), false, 1.0, gw);
            let gb = &mut rest[..o];
            for r in 0..n {
                for (g, d) in gb.iter_mut().zip(delta.row(r)) {
                    *g += d;
                }
            }
            let (w, _) = self.layer(l);
            let mut prev = Matrix::zeros(n, i);
            gemm(n, o, i, 1.0, delta.data(), false, w, false, 0.0, prev.data_mut());
            delta = prev;
        }
        Ok(delta)
    }

    pub fn backward(&self, input: &[f64], output_grad: &[f64]) -> Result<MlpGradient, NumError> {
        if output_grad.len() != self.output_dim() {
            return Err(NumError::DimensionMismatch {
                what: "mlp output gradient",
                expected: self.output_dim(),
                actual: output_grad.len(),
            });
        }
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        let cache = self.forward_batch(&x)?;
        let dout = Matrix::from_vec(1, output_grad.len(), output_grad.to_vec())?;
        let mut params = vec![0.0; self.params.len()];
        let input_grad = self.backward_batch(&cache, &dout, &mut params)?;
        Ok(MlpGradient {
            params,
            input: input_grad.into_vec(),
        })
    }
}
