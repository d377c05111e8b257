//! Shared numerical primitives: standard normal distribution functions,
//! chi-square tail probabilities, compensated summation, sample moments,
//! the empirical quantile convention and autocovariances.

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_74; // ln(sqrt(2*pi))

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// Standard normal distribution function, accurate to a few ulps.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Upper tail probability `1 - Phi(x)` without cancellation for large `x`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Rational initial guess for the normal quantile (relative error about
/// 1e-9), refined below by Newton steps against the full-precision CDF.
fn norm_quantile_guess(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Standard normal quantile, absolute error well below 1e-12.
pub fn norm_quantile(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::invalid(format!("quantile level {p} outside [0, 1]")));
    }
    if p == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if p == 1.0 {
        return Ok(f64::INFINITY);
    }
    let mut x = norm_quantile_guess(p);
    for _ in 0..3 {
        // Work on the smaller tail to avoid cancellation in the residual.
        let (err, sign) = if x <= 0.0 {
            (norm_cdf(x) - p, 1.0)
        } else {
            (norm_sf(x) - (1.0 - p), -1.0)
        };
        let d = norm_pdf(x);
        if d > 0.0 && err != 0.0 {
            x -= sign * err / d;
        } else {
            break;
        }
    }
    Ok(x)
}

/// Survival function of a chi-square distribution with 1 or 2 degrees of
/// freedom. These are the only cases the crate's tests need and both have
/// exact closed forms.
pub fn chi_square_sf(x: f64, df: u32) -> f64 {
    debug_assert!(x >= 0.0);
    match df {
        1 => libm::erfc((x / 2.0).sqrt()),
        2 => (-x / 2.0).exp(),
        _ => unreachable!("only df = 1 and df = 2 are supported"),
    }
}

/// Neumaier-compensated accumulator. Keeps averages of up to 1e6 terms
/// accurate to the last few ulps regardless of cancellation in the input.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice.
pub fn compensated_sum(values: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for &v in values {
        acc.add(v);
    }
    acc.value()
}

/// Compensated arithmetic mean.
pub fn mean(values: &[f64]) -> f64 {
    compensated_sum(values) / values.len() as f64
}

/// Sample variance with denominator `n - 1`.
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    let mut acc = CompensatedSum::new();
    for &v in values {
        let d = v - m;
        acc.add(d * d);
    }
    acc.value() / (values.len() as f64 - 1.0)
}

pub fn sample_std(values: &[f64]) -> f64 {
    sample_variance(values).max(0.0).sqrt()
}

/// Empirical `alpha`-quantile: the `ceil(alpha * n)`-th order statistic
/// (left-continuous empirical inverse). `sample` must be nonempty.
pub fn empirical_quantile(sample: &[f64], alpha: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::invalid("empirical quantile of an empty sample"));
    }
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::invalid(format!("quantile level {alpha} outside (0, 1)")));
    }
    let n = sample.len();
    let rank = (alpha * n as f64).ceil() as usize;
    let k = rank.clamp(1, n) - 1;
    let mut copy = sample.to_vec();
    let (_, kth, _) = copy.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
    Ok(*kth)
}

/// Sample autocovariance at lag `k`, normalized by `n`. When `center` is
/// set the sample mean is subtracted first; otherwise raw second moments
/// are used.
pub fn autocovariance(values: &[f64], k: usize, center: bool) -> f64 {
    let n = values.len();
    debug_assert!(k < n);
    let m = if center { mean(values) } else { 0.0 };
    let mut acc = CompensatedSum::new();
    for t in k..n {
        acc.add((values[t] - m) * (values[t - k] - m));
    }
    acc.value() / n as f64
}
