//! Exceedance-indicator diagnostics for quantile forecasts: unconditional
//! coverage, first-order Markov independence, and the identity linking the
//! mean quantile score of ideal forecasts to the expected shortfall.
//!
//! Two indicator orientations are supported. `UpperTail` marks
//! `realization > forecast` (expected rate `1 - alpha`), `LowerTail` marks
//! `realization < forecast` (the risk-management convention for small
//! `alpha`, expected rate `alpha`). The series records which orientation
//! produced it so downstream tests use the matching nominal rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{mean_score, normal_tail_expectation, QuantileScorer};
use crate::stats::{chi_square_sf, norm_sf};

/// Indicator orientation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `1` when the realization falls below the forecast.
    LowerTail,
    /// `1` when the realization exceeds the forecast (strict inequality).
    UpperTail,
}

/// Binary exceedance series with its nominal level and horizon.
#[derive(Debug, Clone)]
pub struct ExceedanceSeries {
    indicators: Vec<bool>,
    alpha: f64,
    h: usize,
    orientation: Orientation,
}

impl ExceedanceSeries {
    pub fn new(indicators: Vec<bool>, alpha: f64, h: usize, orientation: Orientation) -> Result<Self> {
        if indicators.is_empty() {
            return Err(Error::invalid("exceedance series must be nonempty"));
        }
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::invalid(format!("level alpha={alpha} outside (0, 1)")));
        }
        if h < 1 {
            return Err(Error::invalid("horizon must be >= 1"));
        }
        Ok(Self {
            indicators,
            alpha,
            h,
            orientation,
        })
    }

    pub fn indicators(&self) -> &[bool] {
        &self.indicators
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn horizon(&self) -> usize {
        self.h
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    /// Expected indicator rate under correct calibration.
    pub fn nominal_rate(&self) -> f64 {
        match self.orientation {
            Orientation::LowerTail => self.alpha,
            Orientation::UpperTail => 1.0 - self.alpha,
        }
    }

    pub fn empirical_rate(&self) -> f64 {
        self.indicators.iter().filter(|&&i| i).count() as f64 / self.indicators.len() as f64
    }
}

/// Builds the indicator series from aligned forecasts and realizations.
pub fn exceedance_indicators(
    forecasts: &[f64],
    realizations: &[f64],
    alpha: f64,
    h: usize,
    orientation: Orientation,
) -> Result<ExceedanceSeries> {
    if forecasts.len() != realizations.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} forecasts vs {} realizations",
            forecasts.len(),
            realizations.len()
        )));
    }
    let indicators = forecasts
        .iter()
        .zip(realizations)
        .map(|(&f, &y)| match orientation {
            Orientation::LowerTail => y < f,
            Orientation::UpperTail => y > f,
        })
        .collect();
    ExceedanceSeries::new(indicators, alpha, h, orientation)
}

/// Unconditional coverage z-test result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CoverageTest {
    pub z: f64,
    /// Two-sided p-value from the normal approximation.
    pub p_value: f64,
    pub empirical_rate: f64,
    pub nominal_rate: f64,
    pub n: usize,
}

/// Central-limit z-test of the empirical exceedance rate against the
/// nominal rate: `z = sqrt(N) (rate - pi0) / sqrt(pi0 (1 - pi0))`.
pub fn coverage_test(series: &ExceedanceSeries) -> Result<CoverageTest> {
    let n = series.len();
    if n < 30 {
        return Err(Error::InsufficientSample(format!(
            "coverage test needs n >= 30, got {n}"
        )));
    }
    let pi0 = series.nominal_rate();
    let rate = series.empirical_rate();
    let z = (n as f64).sqrt() * (rate - pi0) / (pi0 * (1.0 - pi0)).sqrt();
    Ok(CoverageTest {
        z,
        p_value: 2.0 * norm_sf(z.abs()),
        empirical_rate: rate,
        nominal_rate: pi0,
        n,
    })
}

/// First-order Markov independence LR test result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct IndependenceTest {
    pub lr: f64,
    /// p-value from chi-square with one degree of freedom.
    pub p_value: f64,
    /// Transition counts (previous state, next state).
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
    /// Single-state input: the statistic is undefined and p = 1.
    pub degenerate: bool,
}

/// Likelihood-ratio test of i.i.d. indicators against a two-state Markov
/// chain, with the `0 * ln 0 = 0` convention for empty transition cells.
pub fn independence_test(series: &ExceedanceSeries) -> Result<IndependenceTest> {
    let n = series.len();
    if n < 100 {
        return Err(Error::InsufficientSample(format!(
            "independence test needs n >= 100, got {n}"
        )));
    }
    let ind = series.indicators();
    let (mut n00, mut n01, mut n10, mut n11) = (0usize, 0usize, 0usize, 0usize);
    for w in ind.windows(2) {
        match (w[0], w[1]) {
            (false, false) => n00 += 1,
            (false, true) => n01 += 1,
            (true, false) => n10 += 1,
            (true, true) => n11 += 1,
        }
    }

    let ones = ind.iter().filter(|&&i| i).count();
    if ones == 0 || ones == n {
        return Ok(IndependenceTest {
            lr: 0.0,
            p_value: 1.0,
            n00,
            n01,
            n10,
            n11,
            degenerate: true,
        });
    }

    let xlnp = |count: usize, p: f64| if count == 0 { 0.0 } else { count as f64 * p.ln() };
    let total = (n - 1) as f64;
    let pi = (n01 + n11) as f64 / total;
    let p01 = if n00 + n01 > 0 { n01 as f64 / (n00 + n01) as f64 } else { 0.0 };
    let p11 = if n10 + n11 > 0 { n11 as f64 / (n10 + n11) as f64 } else { 0.0 };

    let ll_null = xlnp(n00 + n10, 1.0 - pi) + xlnp(n01 + n11, pi);
    let ll_markov = xlnp(n00, 1.0 - p01) + xlnp(n01, p01) + xlnp(n10, 1.0 - p11) + xlnp(n11, p11);
    let lr = (2.0 * (ll_markov - ll_null)).max(0.0);

    Ok(IndependenceTest {
        lr,
        p_value: chi_square_sf(lr, 1),
        n00,
        n01,
        n10,
        n11,
        degenerate: false,
    })
}

/// Combined coverage and independence diagnostics.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BacktestReport {
    pub empirical_rate: f64,
    pub nominal_rate: f64,
    pub coverage_z: f64,
    pub coverage_p: f64,
    pub independence_lr: f64,
    pub independence_p: f64,
    pub n: usize,
    /// The independence statistic was undefined (single-state series).
    pub degenerate: bool,
}

/// Runs both exceedance tests on one series.
pub fn backtest_report(series: &ExceedanceSeries) -> Result<BacktestReport> {
    let cov = coverage_test(series)?;
    let ind = independence_test(series)?;
    Ok(BacktestReport {
        empirical_rate: cov.empirical_rate,
        nominal_rate: cov.nominal_rate,
        coverage_z: cov.z,
        coverage_p: cov.p_value,
        independence_lr: ind.lr,
        independence_p: ind.p_value,
        n: cov.n,
        degenerate: ind.degenerate,
    })
}

/// Comparison of the empirical mean quantile score against the average
/// closed-form expected shortfall of the true conditional normals.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EsIdentityCheck {
    /// Empirical mean of `S*` over the forecast/realization pairs.
    pub mean_score: f64,
    /// Average closed-form lower-tail expectation
    /// `-(1/alpha)(mu Phi(z) - sigma phi(z))`, `z = (forecast - mu)/sigma`.
    pub mean_es: f64,
    pub rel_error: f64,
}

/// Checks the score/expected-shortfall identity for ideal forecasts of
/// per-step normal conditional distributions given by `(mu, sigma)` pairs.
pub fn es_identity_check(
    forecasts: &[f64],
    realizations: &[f64],
    conditional_normals: &[(f64, f64)],
    alpha: f64,
) -> Result<EsIdentityCheck> {
    if forecasts.len() != conditional_normals.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} forecasts vs {} conditional distributions",
            forecasts.len(),
            conditional_normals.len()
        )));
    }
    let scorer = QuantileScorer::sstar(alpha)?;
    let ms = mean_score(forecasts, realizations, &scorer)?;

    let mut acc = crate::stats::CompensatedSum::new();
    for (&x, &(mu, sigma)) in forecasts.iter().zip(conditional_normals) {
        acc.add(normal_tail_expectation(mu, sigma, x, alpha)?);
    }
    let mean_es = acc.value() / forecasts.len() as f64;
    Ok(EsIdentityCheck {
        mean_score: ms.mean,
        mean_es,
        rel_error: (ms.mean - mean_es).abs() / mean_es.abs(),
    })
}
