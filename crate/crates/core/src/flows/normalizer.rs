//! Scalar invertible maps applied per component.

use super::spec::Normalizer;
use super::FlowError;

/// Bound on the affine log-scale after the `tanh` squashing.
pub const LOG_SCALE_BOUND: f64 = 7.0;
/// The piecewise-linear normalizer maps `[-T, T]` onto itself.
pub const PWL_HALF_WIDTH: f64 = 6.0;
/// Lower bound on every bin slope of the piecewise-linear normalizer.
pub const PWL_MIN_SLOPE: f64 = 1e-4;

/// `s = 7 tanh(raw / 7)`.
#[inline]
pub fn squash_log_scale(raw: f64) -> f64 {
    LOG_SCALE_BOUND * (raw / LOG_SCALE_BOUND).tanh()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineParams {
    pub m: f64,
    pub s: f64,
}

impl AffineParams {
    pub fn from_raw(raw: &[f64]) -> Self {
        Self {
            m: raw[0],
            s: squash_log_scale(raw[1]),
        }
    }
}

/// Strictly increasing piecewise-linear map of `[-T, T]` onto itself with
/// equal-width bins and linear tails continuing the boundary slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonePwl {
    softmax: Vec<f64>,
    heights: Vec<f64>,
    knots: Vec<f64>,
    width: f64,
}

impl MonotonePwl {
    /// Builds the map from unnormalized bin heights.
    pub fn from_raw(raw: &[f64]) -> Self {
        let bins = raw.len();
        let t = PWL_HALF_WIDTH;
        let floor = PWL_MIN_SLOPE / bins as f64;
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut softmax: Vec<f64> = raw.iter().map(|r| (r - max).exp()).collect();
        let total: f64 = softmax.iter().sum();
        softmax.iter_mut().for_each(|v| *v /= total);
        let scale = 2.0 * t * (1.0 - bins as f64 * floor);
        let heights: Vec<f64> = softmax.iter().map(|p| 2.0 * t * floor + scale * p).collect();
        let mut knots = Vec::with_capacity(bins + 1);
        let mut acc = -t;
        knots.push(acc);
        for h in &heights {
            acc += h;
            knots.push(acc);
        }
        Self {
            softmax,
            heights,
            knots,
            width: 2.0 * t / bins as f64,
        }
    }

    pub fn bins(&self) -> usize {
        self.heights.len()
    }

    #[inline]
    fn bin_of(&self, x: f64) -> usize {
        let b = ((x + PWL_HALF_WIDTH) / self.width).floor();
        if b <= 0.0 {
            0
        } else {
            (b as usize).min(self.bins() - 1)
        }
    }

    #[inline]
    fn left(&self, b: usize) -> f64 {
        -PWL_HALF_WIDTH + b as f64 * self.width
    }

    pub fn slope(&self, bin: usize) -> f64 {
        self.heights[bin] / self.width
    }

    pub fn forward(&self, x: f64) -> f64 {
        let b = self.bin_of(x);
        self.knots[b] + self.slope(b) * (x - self.left(b))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.slope(self.bin_of(x))
    }

    pub fn inverse(&self, y: f64) -> f64 {
        // Largest b with knots[b] <= y, clamped into the bin range.
        let b = self.knots[1..self.bins()].partition_point(|&k| k <= y);
        self.left(b) + (y - self.knots[b]) / self.slope(b)
    }

    /// Accumulates the gradient of `dz * z + dld * ln z'` into `draw`
    /// (with respect to the raw heights) and returns the `x` gradient.
    fn backward(&self, x: f64, dz: f64, dld: f64, draw: &mut [f64]) -> f64 {
        let b = self.bin_of(x);
        let frac = (x - self.left(b)) / self.width;
        let dh = |j: usize| -> f64 {
            if j < b {
                dz
            } else if j == b {
                dz * frac + dld / self.heights[b]
            } else {
                0.0
            }
        };
        let bins = self.bins();
        let scale = 2.0 * PWL_HALF_WIDTH * (1.0 - PWL_MIN_SLOPE);
        let mean: f64 = (0..=b).map(|j| self.softmax[j] * dh(j)).sum();
        for (i, d) in draw.iter_mut().enumerate().take(bins) {
            *d += scale * self.softmax[i] * (dh(i) - mean);
        }
        dz * self.slope(b)
    }
}

/// Parameters of one scalar normalizer after squashing/normalization.
#[derive(Debug, Clone, PartialEq)]
pub enum NormalizerParams {
    Affine(AffineParams),
    MonotonePwl(MonotonePwl),
}

impl NormalizerParams {
    pub fn from_raw(kind: Normalizer, raw: &[f64]) -> Self {
        match kind {
            Normalizer::Affine => NormalizerParams::Affine(AffineParams::from_raw(raw)),
            Normalizer::MonotonePwl { .. } => {
                NormalizerParams::MonotonePwl(MonotonePwl::from_raw(raw))
            }
        }
    }

    /// Returns `(g(x), ln g'(x))`.
    pub fn forward(&self, x: f64) -> (f64, f64) {
        match self {
            NormalizerParams::Affine(p) => (x * p.s.exp() + p.m, p.s),
            NormalizerParams::MonotonePwl(p) => (p.forward(x), p.derivative(x).ln()),
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        match self {
            NormalizerParams::Affine(p) => (y - p.m) * (-p.s).exp(),
            NormalizerParams::MonotonePwl(p) => p.inverse(y),
        }
    }
}

pub fn affine_forward(x: f64, p: &AffineParams) -> Result<f64, FlowError> {
    if !(x.is_finite() && p.m.is_finite() && p.s.is_finite()) {
        return Err(FlowError::NonFiniteInput("affine normalizer"));
    }
    Ok(x * p.s.exp() + p.m)
}

pub fn affine_inverse(y: f64, p: &AffineParams) -> Result<f64, FlowError> {
    if !(y.is_finite() && p.m.is_finite() && p.s.is_finite()) {
        return Err(FlowError::NonFiniteInput("affine normalizer"));
    }
    Ok((y - p.m) * (-p.s).exp())
}

pub fn monotone_forward(x: f64, p: &MonotonePwl) -> Result<f64, FlowError> {
    if !x.is_finite() {
        return Err(FlowError::NonFiniteInput("monotone normalizer"));
    }
    Ok(p.forward(x))
}

pub fn monotone_inverse(y: f64, p: &MonotonePwl) -> Result<f64, FlowError> {
    if !y.is_finite() {
        return Err(FlowError::NonFiniteInput("monotone normalizer"));
    }
    Ok(p.inverse(y))
}

/// `(z, ln dz/dx)` for one component given its raw conditioner output.
#[inline]
pub(crate) fn eval(kind: Normalizer, raw: &[f64], x: f64) -> (f64, f64) {
    match kind {
        Normalizer::Affine => {
            let s = squash_log_scale(raw[1]);
            (x * s.exp() + raw[0], s)
        }
        Normalizer::MonotonePwl { .. } => {
            let p = MonotonePwl::from_raw(raw);
            (p.forward(x), p.derivative(x).ln())
        }
    }
}

#[inline]
pub(crate) fn invert(kind: Normalizer, raw: &[f64], z: f64) -> f64 {
    match kind {
        Normalizer::Affine => (z - raw[0]) * (-squash_log_scale(raw[1])).exp(),
        Normalizer::MonotonePwl { .. } => MonotonePwl::from_raw(raw).inverse(z),
    }
}

/// Reverse mode for one component: accumulates into `draw` and returns the
/// gradient with respect to `x`, given upstream gradients of `z` and `ln z'`.
#[inline]
pub(crate) fn backward(kind: Normalizer, raw: &[f64], x: f64, dz: f64, dld: f64, draw: &mut [f64]) -> f64 {
    match kind {
        Normalizer::Affine => {
            let t = (raw[1] / LOG_SCALE_BOUND).tanh();
            let s = LOG_SCALE_BOUND * t;
            let es = s.exp();
            let ds = dz * x * es + dld;
            draw[0] += dz;
            draw[1] += ds * (1.0 - t * t);
            dz * es
        }
        Normalizer::MonotonePwl { .. } => MonotonePwl::from_raw(raw).backward(x, dz, dld, draw),
    }
}
