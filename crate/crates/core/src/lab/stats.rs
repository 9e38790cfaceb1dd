use serde::{Deserialize, Serialize};

use super::LabError;

pub const SKEW_LIMIT: f64 = 0.05;
pub const EXCESS_KURTOSIS_LIMIT: f64 = 0.1;
pub const MI_MIN_SAMPLES: usize = 10_000;
pub const MI_BINS: std::ops::RangeInclusive<usize> = 8..=64;
/// Tail mass trimmed from each side when placing histogram edges.
const MI_TAIL: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityStats {
    pub n: usize,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub normal: bool,
}

fn central_moments(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

pub fn skewness(x: &[f64]) -> f64 {
    let (m2, m3, _) = central_moments(x);
    m3 / m2.powf(1.5)
}

pub fn excess_kurtosis(x: &[f64]) -> f64 {
    let (m2, _, m4) = central_moments(x);
    m4 / (m2 * m2) - 3.0
}

/// Moment-based normality verdict: `|skew| < 0.05` and `|excess kurtosis| < 0.1`.
pub fn normality(x: &[f64]) -> Result<NormalityStats, LabError> {
    if x.len() < 4 {
        return Err(LabError::InvalidInput("normality check needs at least 4 samples".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LabError::InvalidInput("non-finite sample".into()));
    }
    let (m2, _, _) = central_moments(x);
    if m2 == 0.0 {
        return Err(LabError::Degenerate("constant sample".into()));
    }
    let skew = skewness(x);
    let kurt = excess_kurtosis(x);
    Ok(NormalityStats {
        n: x.len(),
        skewness: skew,
        excess_kurtosis: kurt,
        normal: skew.abs() < SKEW_LIMIT && kurt.abs() < EXCESS_KURTOSIS_LIMIT,
    })
}

/// Equal-width bin edges over the central `[0.1%, 99.9%]` range; values
/// outside fall into the edge bins.
fn bin_indices(x: &[f64], bins: usize) -> Result<Vec<usize>, LabError> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    if min == max {
        return Err(LabError::Degenerate("component is constant".into()));
    }
    let q = |p: f64| sorted[((n - 1) as f64 * p).round() as usize];
    let (mut lo, mut hi) = (q(MI_TAIL), q(1.0 - MI_TAIL));
    if hi <= lo {
        (lo, hi) = (min, max);
    }
    let w = (hi - lo) / bins as f64;
    Ok(x
        .iter()
        .map(|&v| (((v - lo) / w).floor().max(0.0) as usize).min(bins - 1))
        .collect())
}

fn entropy_mm(counts: &[u64], n: f64) -> f64 {
    let mut h = 0.0;
    let mut occupied = 0usize;
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        h -= p * p.ln();
        occupied += 1;
    }
    h + (occupied as f64 - 1.0) / (2.0 * n)
}

/// Histogram plug-in mutual information (nats) with Miller–Madow correction
/// on each entropy term, clamped at zero.
pub fn mutual_information(x: &[f64], y: &[f64], bins: usize) -> Result<f64, LabError> {
    if x.len() != y.len() {
        return Err(LabError::InvalidInput(format!(
            "paired samples differ in length: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MI_MIN_SAMPLES {
        return Err(LabError::InvalidInput(format!(
            "mutual information needs at least {MI_MIN_SAMPLES} samples, got {}",
            x.len()
        )));
    }
    if !MI_BINS.contains(&bins) {
        return Err(LabError::InvalidInput(format!("bins must lie in 8..=64, got {bins}")));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(LabError::InvalidInput("non-finite sample".into()));
    }
    let bx = bin_indices(x, bins)?;
    let by = bin_indices(y, bins)?;
    let mut cx = vec![0u64; bins];
    let mut cy = vec![0u64; bins];
    let mut cxy = vec![0u64; bins * bins];
    for (&i, &j) in bx.iter().zip(&by) {
        cx[i] += 1;
        cy[j] += 1;
        cxy[i * bins + j] += 1;
    }
    let n = x.len() as f64;
    let mi = entropy_mm(&cx, n) + entropy_mm(&cy, n) - entropy_mm(&cxy, n);
    Ok(mi.max(0.0))
}
