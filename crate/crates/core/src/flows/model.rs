use std::f64::consts::PI;

use super::normalizer;
use super::spec::{conditioning_inputs, FlowSpec, Normalizer};
use super::FlowError;
use crate::numcore::{Matrix, Mlp, MlpCache, ParamBlock, Rng};

/// Default conditioner hidden layers.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

/// Rows per chunk when evaluating large batches without gradients.
const EVAL_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
enum Slot {
    /// Learned raw normalizer parameters, independent of the input.
    Constant(Vec<f64>),
    /// Network reading the first `inputs` permuted components.
    Net { inputs: usize, net: Mlp },
}

impl Slot {
    fn param_count(&self) -> usize {
        match self {
            Slot::Constant(c) => c.len(),
            Slot::Net { net, .. } => net.param_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StepParams {
    order: Vec<usize>,
    normalizer: Normalizer,
    slots: Vec<Slot>,
}

impl StepParams {
    fn param_count(&self) -> usize {
        self.slots.iter().map(Slot::param_count).sum()
    }

    /// Raw normalizer parameters for every row at `pos`, given the permuted
    /// input whose columns `< pos` are already valid.
    fn raw_params(&self, pos: usize, xp: &Matrix) -> Result<(Matrix, Option<MlpCache>), FlowError> {
        match &self.slots[pos] {
            Slot::Constant(c) => {
                let mut raw = Matrix::zeros(xp.rows(), c.len());
                for r in 0..xp.rows() {
                    raw.row_mut(r).copy_from_slice(c);
                }
                Ok((raw, None))
            }
            Slot::Net { inputs, net } => {
                let cache = net.forward_batch(&xp.prefix_columns(*inputs))?;
                Ok((cache.output().clone(), Some(cache)))
            }
        }
    }
}

struct StepCache {
    xp: Matrix,
    raws: Vec<Matrix>,
    nets: Vec<Option<MlpCache>>,
}

/// A flow architecture together with all of its learnable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowModel {
    spec: FlowSpec,
    hidden: Vec<usize>,
    steps: Vec<StepParams>,
}

/// `ln N(z; 0, I)`.
pub fn standard_normal_log_density(z: &[f64]) -> f64 {
    -0.5 * z.len() as f64 * (2.0 * PI).ln() - 0.5 * z.iter().map(|v| v * v).sum::<f64>()
}

impl FlowModel {
    /// Fresh model. Every network's final layer and every constant is zero,
    /// so the flow starts as a pure permutation of its input.
    pub fn new(spec: FlowSpec, hidden: &[usize], rng: &mut Rng) -> Result<Self, FlowError> {
        spec.validate()?;
        let d = spec.dim;
        let mut steps = Vec::with_capacity(spec.steps.len());
        for step in &spec.steps {
            let l = step.normalizer.param_count();
            let slots = (0..d)
                .map(|pos| match conditioning_inputs(step.conditioner, pos) {
                    None => Ok(Slot::Constant(vec![0.0; l])),
                    Some(inputs) => {
                        let mut widths = Vec::with_capacity(hidden.len() + 2);
                        widths.push(inputs);
                        widths.extend_from_slice(hidden);
                        widths.push(l);
                        Ok(Slot::Net {
                            inputs,
                            net: Mlp::new(&widths, rng)?,
                        })
                    }
                })
                .collect::<Result<Vec<_>, FlowError>>()?;
            steps.push(StepParams {
                order: step.permutation.order(d),
                normalizer: step.normalizer,
                slots,
            });
        }
        Ok(Self {
            spec,
            hidden: hidden.to_vec(),
            steps,
        })
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn hidden(&self) -> &[usize] {
        &self.hidden
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn num_steps(&self) -> usize {
        self.steps.len()
    }

    pub fn param_count(&self) -> usize {
        self.steps.iter().map(StepParams::param_count).sum()
    }

    /// All parameters, step by step and position by position.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for step in &self.steps {
            for slot in &step.slots {
                match slot {
                    Slot::Constant(c) => out.extend_from_slice(c),
                    Slot::Net { net, .. } => out.extend_from_slice(net.params()),
                }
            }
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), FlowError> {
        if params.len() != self.param_count() {
            return Err(FlowError::DimensionMismatch {
                what: "flow parameters",
                expected: self.param_count(),
                actual: params.len(),
            });
        }
        let mut off = 0;
        for step in &mut self.steps {
            for slot in &mut step.slots {
                let n = slot.param_count();
                match slot {
                    Slot::Constant(c) => c.copy_from_slice(&params[off..off + n]),
                    Slot::Net { net, .. } => net.set_params(&params[off..off + n])?,
                }
                off += n;
            }
        }
        Ok(())
    }

    /// Named ranges of [`FlowModel::params`], e.g. `step2.net[3]`.
    pub fn param_layout(&self) -> Vec<ParamBlock> {
        let mut blocks = Vec::new();
        let mut off = 0;
        for (s, step) in self.steps.iter().enumerate() {
            for (pos, slot) in step.slots.iter().enumerate() {
                let n = slot.param_count();
                let kind = match slot {
                    Slot::Constant(_) => "const",
                    Slot::Net { .. } => "net",
                };
                blocks.push(ParamBlock {
                    name: format!("step{}.{kind}[{}]", s + 1, pos + 1),
                    range: off..off + n,
                });
                off += n;
            }
        }
        blocks
    }

    /// Adds `U(-scale, scale)` noise to every parameter.
    pub fn perturb(&mut self, rng: &mut Rng, scale: f64) {
        let mut p = self.params();
        for v in &mut p {
            *v += rng.uniform_range(-scale, scale);
        }
        self.set_params(&p).expect("same length");
    }

    fn check_dim(&self, cols: usize) -> Result<(), FlowError> {
        if cols != self.dim() {
            return Err(FlowError::DimensionMismatch {
                what: "flow input",
                expected: self.dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    fn step_forward_batch(
        &self,
        s: usize,
        x: &Matrix,
        keep: bool,
    ) -> Result<(Matrix, Vec<f64>, Option<StepCache>), FlowError> {
        let step = &self.steps[s];
        let n = x.rows();
        let xp = x.gather_columns(&step.order);
        let mut z = Matrix::zeros(n, self.dim());
        let mut logdet = vec![0.0; n];
        let mut raws = Vec::new();
        let mut nets = Vec::new();
        for pos in 0..self.dim() {
            let (raw, cache) = step.raw_params(pos, &xp)?;
            for r in 0..n {
                let (v, ld) = normalizer::eval(step.normalizer, raw.row(r), xp.get(r, pos));
                z.set(r, pos, v);
                logdet[r] += ld;
            }
            if keep {
                raws.push(raw);
                nets.push(cache);
            }
        }
        if !z.all_finite() || !logdet.iter().all(|v| v.is_finite()) {
            return Err(FlowError::NonFinite { step: s + 1 });
        }
        let cache = keep.then_some(StepCache { xp, raws, nets });
        Ok((z, logdet, cache))
    }

    /// Propagates `dz` (permuted order) and `dld` back through step `s`,
    /// accumulating parameter gradients into `grad` (this step's slice).
    fn step_backward(
        &self,
        s: usize,
        cache: &StepCache,
        dz: &Matrix,
        dld: &[f64],
        grad: &mut [f64],
    ) -> Result<Matrix, FlowError> {
        let step = &self.steps[s];
        let n = dz.rows();
        let l = step.normalizer.param_count();
        let mut dxp = Matrix::zeros(n, self.dim());
        let mut off = 0;
        for (pos, slot) in step.slots.iter().enumerate() {
            let raw = &cache.raws[pos];
            let mut draw = Matrix::zeros(n, l);
            for r in 0..n {
                let dx = normalizer::backward(
                    step.normalizer,
                    raw.row(r),
                    cache.xp.get(r, pos),
                    dz.get(r, pos),
                    dld[r],
                    draw.row_mut(r),
                );
                dxp.row_mut(r)[pos] += dx;
            }
            let count = slot.param_count();
            match slot {
                Slot::Constant(_) => {
                    let g = &mut grad[off..off + count];
                    for r in 0..n {
                        for (gi, d) in g.iter_mut().zip(draw.row(r)) {
                            *gi += d;
                        }
                    }
                }
                Slot::Net { inputs, net } => {
                    let net_cache = cache.nets[pos].as_ref().expect("net slot keeps cache");
                    let dinp = net.backward_batch(net_cache, &draw, &mut grad[off..off + count])?;
                    for r in 0..n {
                        let row = dxp.row_mut(r);
                        for (a, b) in row[..*inputs].iter_mut().zip(dinp.row(r)) {
                            *a += b;
                        }
                    }
                }
            }
            off += count;
        }
        Ok(dxp.scatter_columns(&step.order))
    }

    fn step_inverse_batch(&self, s: usize, z: &Matrix) -> Result<(Matrix, Vec<f64>), FlowError> {
        let step = &self.steps[s];
        let n = z.rows();
        let mut xp = Matrix::zeros(n, self.dim());
        let mut logdet = vec![0.0; n];
        // Every conditioner only reads earlier positions, so a single pass in
        // position order inverts autoregressive, coupling and constant steps.
        for pos in 0..self.dim() {
            let (raw, _) = step.raw_params(pos, &xp)?;
            for r in 0..n {
                let row = raw.row(r);
                let x = normalizer::invert(step.normalizer, row, z.get(r, pos));
                logdet[r] += normalizer::eval(step.normalizer, row, x).1;
                xp.set(r, pos, x);
            }
        }
        if !xp.all_finite() {
            return Err(FlowError::Inversion { step: s + 1 });
        }
        Ok((xp.scatter_columns(&step.order), logdet))
    }

    /// Applies step `s` (0-based) to one vector: returns the step output in
    /// the step's permuted order and its log-determinant.
    pub fn step_forward(&self, s: usize, x: &[f64]) -> Result<(Vec<f64>, f64), FlowError> {
        self.check_dim(x.len())?;
        if s >= self.num_steps() {
            return Err(FlowError::InvalidSpec(format!("no step {}", s + 1)));
        }
        let m = Matrix::from_vec(1, x.len(), x.to_vec())?;
        let (z, ld, _) = self.step_forward_batch(s, &m, false)?;
        Ok((z.into_vec(), ld[0]))
    }

    /// Density direction `x -> z` for every row, with the total log-determinant.
    pub fn forward_batch(&self, x: &Matrix) -> Result<(Matrix, Vec<f64>), FlowError> {
        self.check_dim(x.cols())?;
        let mut z = Matrix::zeros(0, self.dim());
        let mut logdet = Vec::with_capacity(x.rows());
        for start in (0..x.rows()).step_by(EVAL_CHUNK) {
            let end = (start + EVAL_CHUNK).min(x.rows());
            let idx: Vec<usize> = (start..end).collect();
            let mut h = x.select_rows(&idx);
            let mut ld = vec![0.0; h.rows()];
            for s in 0..self.num_steps() {
                let (next, sld, _) = self.step_forward_batch(s, &h, false)?;
                ld.iter_mut().zip(&sld).for_each(|(a, b)| *a += b);
                h = next;
            }
            z = append_rows(z, h);
            logdet.extend(ld);
        }
        Ok((z, logdet))
    }

    pub fn flow_forward(&self, x: &[f64]) -> Result<(Vec<f64>, f64), FlowError> {
        self.check_dim(x.len())?;
        let (z, ld) = self.forward_batch(&Matrix::from_vec(1, x.len(), x.to_vec())?)?;
        Ok((z.into_vec(), ld[0]))
    }

    /// Sampling direction `z -> x`; also returns `ln |det dz/dx|` at the result.
    pub fn inverse_batch(&self, z: &Matrix) -> Result<(Matrix, Vec<f64>), FlowError> {
        self.check_dim(z.cols())?;
        let mut h = z.clone();
        let mut logdet = vec![0.0; z.rows()];
        for s in (0..self.num_steps()).rev() {
            let (prev, sld) = self.step_inverse_batch(s, &h)?;
            logdet.iter_mut().zip(&sld).for_each(|(a, b)| *a += b);
            h = prev;
        }
        Ok((h, logdet))
    }

    pub fn flow_inverse(&self, z: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.check_dim(z.len())?;
        let (x, _) = self.inverse_batch(&Matrix::from_vec(1, z.len(), z.to_vec())?)?;
        Ok(x.into_vec())
    }

    pub fn log_prob_batch(&self, x: &Matrix) -> Result<Vec<f64>, FlowError> {
        let (z, ld) = self.forward_batch(x)?;
        Ok((0..z.rows())
            .map(|r| standard_normal_log_density(z.row(r)) + ld[r])
            .collect())
    }

    pub fn log_prob(&self, x: &[f64]) -> Result<f64, FlowError> {
        let (z, ld) = self.flow_forward(x)?;
        Ok(standard_normal_log_density(&z) + ld)
    }

    /// Mean negative log-likelihood over the rows of `x`.
    pub fn mean_nll(&self, x: &Matrix) -> Result<f64, FlowError> {
        if x.rows() == 0 {
            return Err(FlowError::EmptyBatch);
        }
        let lp = self.log_prob_batch(x)?;
        Ok(-lp.iter().sum::<f64>() / lp.len() as f64)
    }

    /// Draws `n` samples; returns them with their log-densities.
    pub fn sample(&self, rng: &mut Rng, n: usize) -> Result<(Matrix, Vec<f64>), FlowError> {
        let d = self.dim();
        let z = Matrix::from_vec(n, d, crate::numcore::gaussian_sample(rng, n * d))?;
        let (x, ld) = self.inverse_batch(&z)?;
        let lp = (0..n)
            .map(|r| standard_normal_log_density(z.row(r)) + ld[r])
            .collect();
        Ok((x, lp))
    }

    /// Mean NLL of `batch` and its gradient with respect to [`FlowModel::params`].
    pub fn nll_and_gradient(&self, batch: &Matrix) -> Result<(f64, Vec<f64>), FlowError> {
        self.check_dim(batch.cols())?;
        let n = batch.rows();
        if n == 0 {
            return Err(FlowError::EmptyBatch);
        }
        let mut caches = Vec::with_capacity(self.num_steps());
        let mut h = batch.clone();
        let mut logdet = vec![0.0; n];
        for s in 0..self.num_steps() {
            let (next, sld, cache) = self.step_forward_batch(s, &h, true)?;
            logdet.iter_mut().zip(&sld).for_each(|(a, b)| *a += b);
            caches.push(cache.expect("kept"));
            h = next;
        }
        let loss = -(0..n)
            .map(|r| standard_normal_log_density(h.row(r)) + logdet[r])
            .sum::<f64>()
            / n as f64;
        if !loss.is_finite() {
            return Err(FlowError::Divergence(format!("non-finite loss {loss}")));
        }
        let inv_n = 1.0 / n as f64;
        let mut dz = h;
        dz.data_mut().iter_mut().for_each(|v| *v *= inv_n);
        let dld = vec![-inv_n; n];
        let mut grad = vec![0.0; self.param_count()];
        let mut offsets = Vec::with_capacity(self.num_steps() + 1);
        offsets.push(0);
        for step in &self.steps {
            offsets.push(offsets.last().unwrap() + step.param_count());
        }
        for s in (0..self.num_steps()).rev() {
            let g = &mut grad[offsets[s]..offsets[s + 1]];
            dz = self.step_backward(s, &caches[s], &dz, &dld, g)?;
        }
        if let Some(i) = grad.iter().position(|g| !g.is_finite()) {
            let block = self
                .param_layout()
                .into_iter()
                .find(|b| b.range.contains(&i))
                .map_or_else(String::new, |b| b.name);
            return Err(FlowError::Divergence(format!("non-finite gradient in {block}")));
        }
        Ok((loss, grad))
    }

    pub fn nll_gradient(&self, batch: &Matrix) -> Result<Vec<f64>, FlowError> {
        Ok(self.nll_and_gradient(batch)?.1)
    }

    /// For a single-step flow, whether original component `index` (0-based)
    /// is transformed with constants only.
    pub fn is_unconditioned(&self, step: usize, index: usize) -> bool {
        let st = &self.steps[step];
        st.order
            .iter()
            .position(|&o| o == index)
            .is_some_and(|pos| matches!(st.slots[pos], Slot::Constant(_)))
    }
}

fn append_rows(acc: Matrix, more: Matrix) -> Matrix {
    if acc.rows() == 0 {
        return more;
    }
    let cols = acc.cols();
    let rows = acc.rows() + more.rows();
    let mut data = acc.into_vec();
    data.extend_from_slice(more.data());
    Matrix::from_vec(rows, cols, data).expect("consistent shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::spec::{Conditioner, Permutation, StepSpec};

    fn step(c: Conditioner, n: Normalizer, p: Permutation) -> StepSpec {
        StepSpec {
            conditioner: c,
            normalizer: n,
            permutation: p,
        }
    }

    fn random_model(spec: FlowSpec, seed: u64) -> FlowModel {
        let mut rng = Rng::new(seed);
        let mut m = FlowModel::new(spec, &[8, 8], &mut rng).unwrap();
        m.perturb(&mut rng, 0.4);
        m
    }

    #[test]
    fn identity_start_is_a_permutation() {
        let spec = FlowSpec {
            dim: 3,
            steps: vec![
                step(Conditioner::Autoregressive, Normalizer::Affine, Permutation::Identity),
                step(
                    Conditioner::Coupling { k: 2 },
                    Normalizer::MonotonePwl { bins: 32 },
                    Permutation::Explicit(vec![3, 1, 2]),
                ),
                step(Conditioner::Constant, Normalizer::Affine, Permutation::Reverse),
            ],
        };
        let m = FlowModel::new(spec, &DEFAULT_HIDDEN, &mut Rng::new(1)).unwrap();
        let x = [0.3, -1.2, 2.5];
        let (z, ld) = m.step_forward(1, &x).unwrap();
        assert_eq!(z, vec![2.5, 0.3, -1.2]);
        assert_eq!(ld, 0.0);
        let (z, ld) = m.flow_forward(&x).unwrap();
        // explicit [3,1,2] then reverse
        assert_eq!(z, vec![-1.2, 0.3, 2.5]);
        assert_eq!(ld, 0.0);
        assert_eq!(m.flow_inverse(&z).unwrap(), x.to_vec());
    }

    #[test]
    fn identity_start_log_prob_is_standard_normal() {
        let m = FlowModel::new(
            FlowSpec::coupling_stack(2, 3, Normalizer::Affine),
            &DEFAULT_HIDDEN,
            &mut Rng::new(0),
        )
        .unwrap();
        let lp = m.log_prob(&[0.0, 0.0]).unwrap();
        assert!((lp + (2.0 * PI).ln()).abs() < 1e-15);
        assert!((lp - -1.837_877_066_409_345_3).abs() < 1e-12);
        let x = [1.5, -0.25];
        let expected = -(2.0 * PI).ln() - 0.5 * (1.5f64.powi(2) + 0.25f64.powi(2));
        assert_eq!(m.log_prob(&x).unwrap(), expected);
    }

    #[test]
    fn two_dim_coupling_step_matches_its_factorization() {
        let spec = FlowSpec {
            dim: 2,
            steps: vec![step(Conditioner::Coupling { k: 2 }, Normalizer::Affine, Permutation::Identity)],
        };
        let m = random_model(spec, 4);
        let (const_raw, net) = match (&m.steps[0].slots[0], &m.steps[0].slots[1]) {
            (Slot::Constant(c), Slot::Net { net, .. }) => (c.clone(), net.clone()),
            _ => panic!("unexpected slots"),
        };
        let (a, b) = (0.7, -1.3);
        let (m_bar, s_bar) = (const_raw[0], normalizer::squash_log_scale(const_raw[1]));
        let out = net.forward(&[a]).unwrap();
        let (m_a, s_a) = (out[0], normalizer::squash_log_scale(out[1]));
        let (z, ld) = m.step_forward(0, &[a, b]).unwrap();
        assert!((z[0] - (a * s_bar.exp() + m_bar)).abs() < 1e-14);
        assert!((z[1] - (b * s_a.exp() + m_a)).abs() < 1e-14);
        assert!((ld - (s_bar + s_a)).abs() < 1e-14);
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        let m = FlowModel::new(
            FlowSpec::coupling_stack(2, 1, Normalizer::Affine),
            &[4],
            &mut Rng::new(0),
        )
        .unwrap();
        assert!(matches!(
            m.flow_forward(&[1.0]),
            Err(FlowError::DimensionMismatch { .. })
        ));
        assert!(m.flow_inverse(&[1.0, 2.0, 3.0]).is_err());
        assert!(matches!(
            m.nll_gradient(&Matrix::zeros(0, 2)),
            Err(FlowError::EmptyBatch)
        ));
    }

    #[test]
    fn round_trip_affine_and_monotone() {
        let mut rng = Rng::new(77);
        for (seed, normalizer, tol) in [
            (1, Normalizer::Affine, 1e-9),
            (2, Normalizer::MonotonePwl { bins: 16 }, 1e-7),
        ] {
            let m = random_model(FlowSpec::autoregressive_stack(4, 4, normalizer), seed);
            let z = Matrix::from_vec(1000, 4, crate::numcore::gaussian_sample(&mut rng, 4000)).unwrap();
            let (x, _) = m.inverse_batch(&z).unwrap();
            let (back, _) = m.forward_batch(&x).unwrap();
            let worst = back
                .data()
                .iter()
                .zip(z.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(worst < tol, "{normalizer:?}: {worst}");
        }
    }

    #[test]
    fn sample_log_density_matches_log_prob() {
        let m = random_model(FlowSpec::coupling_stack(3, 3, Normalizer::Affine), 8);
        let (x, lp) = m.sample(&mut Rng::new(1), 1000).unwrap();
        let recomputed = m.log_prob_batch(&x).unwrap();
        for (a, b) in lp.iter().zip(&recomputed) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_start_samples_are_permuted_gaussians() {
        let spec = FlowSpec {
            dim: 2,
            steps: vec![step(Conditioner::Coupling { k: 2 }, Normalizer::Affine, Permutation::Reverse)],
        };
        let m = FlowModel::new(spec, &[4], &mut Rng::new(0)).unwrap();
        let (x, _) = m.sample(&mut Rng::new(9), 5).unwrap();
        let z = crate::numcore::gaussian_sample(&mut Rng::new(9), 10);
        for r in 0..5 {
            assert_eq!(x.row(r), &[z[2 * r + 1], z[2 * r]]);
        }
    }

    #[test]
    fn symmetric_batch_cancels_offset_gradients_at_identity() {
        let spec = FlowSpec {
            dim: 2,
            steps: vec![step(Conditioner::Constant, Normalizer::Affine, Permutation::Identity)],
        };
        let m = FlowModel::new(spec, &[4], &mut Rng::new(0)).unwrap();
        let batch = Matrix::from_rows(&[vec![0.8, -1.1], vec![-0.8, 1.1]]).unwrap();
        let g = m.nll_gradient(&batch).unwrap();
        // layout: [m1, s1, m2, s2]
        assert_eq!(g[0], 0.0);
        assert_eq!(g[2], 0.0);
        assert!(g[1] != 0.0);
    }

    #[test]
    fn param_layout_covers_all_params() {
        let m = random_model(FlowSpec::autoregressive_stack(3, 2, Normalizer::Affine), 1);
        let layout = m.param_layout();
        assert_eq!(layout.first().unwrap().range.start, 0);
        assert_eq!(layout.last().unwrap().range.end, m.param_count());
        for w in layout.windows(2) {
            assert_eq!(w[0].range.end, w[1].range.start);
        }
        assert_eq!(layout[0].name, "step1.const[1]");
        assert_eq!(layout[2].name, "step1.net[3]");
        let p = m.params();
        let mut other = FlowModel::new(m.spec().clone(), &[8, 8], &mut Rng::new(99)).unwrap();
        other.set_params(&p).unwrap();
        assert_eq!(other, m);
    }

    #[test]
    fn unconditioned_components() {
        let spec = FlowSpec {
            dim: 3,
            steps: vec![step(Conditioner::Coupling { k: 3 }, Normalizer::Affine, Permutation::Reverse)],
        };
        let m = FlowModel::new(spec, &[4], &mut Rng::new(0)).unwrap();
        assert!(m.is_unconditioned(0, 2));
        assert!(m.is_unconditioned(0, 1));
        assert!(!m.is_unconditioned(0, 0));
    }
}
