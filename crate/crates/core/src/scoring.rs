//! Strictly consistent scoring functions for quantiles, expectiles and the
//! mean, a Gaussian log score, mean-score aggregation and the empirical
//! expectile.
//!
//! Two quantile scores are provided. The nonnegative family
//! `S(x, y) = (1_{x >= y} - alpha) * (g(x) - g(y))` for a strictly
//! increasing `g`, and the compact variant
//! `S*(x, y) = x * (1_{x >= y} / alpha - 1) - y * 1_{x >= y} / alpha`,
//! which is the `g(x) = x / alpha` member with the forecast-independent
//! term `y` removed. `S*` may be negative but its conditional expectation
//! at the ideal quantile forecast equals the lower-tail expected shortfall,
//! which is what makes it the natural choice for VaR evaluation. The two
//! forms satisfy `S_general - S* = y` pointwise.
//!
//! The indicator convention is `1_{x >= y}` (weak inequality on the
//! forecast side) everywhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, CompensatedSum};

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be finite, got {v}")))
    }
}

fn check_level(alpha: f64) -> Result<()> {
    if alpha.is_finite() && 0.0 < alpha && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("level alpha={alpha} outside (0, 1)")))
    }
}

/// Strictly increasing transform used by the general quantile score.
///
/// Named families cover the cases used in the experiments; arbitrary
/// monotone transforms can be passed as a table of knots with linear
/// interpolation in between. Monotonicity of a table is checked on 1001
/// equispaced points over its support at scorer construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneG {
    Identity,
    /// `g(x) = x / alpha`; turns the general score into `S* + y`.
    XOverAlpha,
    Exp,
    Tabulated { xs: Vec<f64>, ys: Vec<f64> },
}

impl MonotoneG {
    pub fn eval(&self, x: f64, alpha: f64) -> f64 {
        match self {
            MonotoneG::Identity => x,
            MonotoneG::XOverAlpha => x / alpha,
            MonotoneG::Exp => x.exp(),
            MonotoneG::Tabulated { xs, ys } => interp_linear(xs, ys, x),
        }
    }

    fn validate(&self, alpha: f64) -> Result<()> {
        let (lo, hi) = match self {
            MonotoneG::Identity | MonotoneG::XOverAlpha => return Ok(()),
            MonotoneG::Exp => (-30.0, 30.0),
            MonotoneG::Tabulated { xs, ys } => {
                if xs.len() < 2 || xs.len() != ys.len() {
                    return Err(Error::invalid(
                        "tabulated g needs at least two knots and equal-length tables",
                    ));
                }
                if xs.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("tabulated g knots must be strictly increasing"));
                }
                (xs[0], xs[xs.len() - 1])
            }
        };
        let mut prev = self.eval(lo, alpha);
        for i in 1..=1000 {
            let x = lo + (hi - lo) * i as f64 / 1000.0;
            let v = self.eval(x, alpha);
            if !v.is_finite() || v <= prev {
                return Err(Error::invalid(format!(
                    "g is not strictly increasing near x={x}"
                )));
            }
            prev = v;
        }
        Ok(())
    }
}

fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    // Constant extrapolation outside the knot range would break strict
    // monotonicity, so extend with the boundary slope instead.
    let n = xs.len();
    if x <= xs[0] {
        let slope = (ys[1] - ys[0]) / (xs[1] - xs[0]);
        return ys[0] + slope * (x - xs[0]);
    }
    if x >= xs[n - 1] {
        let slope = (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2]);
        return ys[n - 1] + slope * (x - xs[n - 1]);
    }
    let i = xs.partition_point(|&k| k <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Form of the quantile score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileForm {
    /// The expected-shortfall-linked variant `S*`.
    SStar,
    /// `(1_{x >= y} - alpha)(g(x) - g(y))` for a strictly increasing `g`.
    GeneralG(MonotoneG),
}

/// A quantile scoring function at level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileScorer {
    alpha: f64,
    form: QuantileForm,
}

impl QuantileScorer {
    pub fn sstar(alpha: f64) -> Result<Self> {
        check_level(alpha)?;
        Ok(Self {
            alpha,
            form: QuantileForm::SStar,
        })
    }

    pub fn general(alpha: f64, g: MonotoneG) -> Result<Self> {
        check_level(alpha)?;
        g.validate(alpha)?;
        Ok(Self {
            alpha,
            form: QuantileForm::GeneralG(g),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn form(&self) -> &QuantileForm {
        &self.form
    }
}

/// An expectile scoring function (asymmetric squared loss) at level `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectileScorer {
    alpha: f64,
}

impl ExpectileScorer {
    pub fn new(alpha: f64) -> Result<Self> {
        check_level(alpha)?;
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Per-observation scores for one forecast stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    values: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("score series must be nonempty"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("score series contains non-finite value {v}")));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Anything that scores a point forecast against a realization.
pub trait PointScorer {
    fn score(&self, forecast: f64, realization: f64) -> Result<f64>;
}

impl PointScorer for QuantileScorer {
    fn score(&self, forecast: f64, realization: f64) -> Result<f64> {
        match &self.form {
            QuantileForm::SStar => quantile_score_sstar(forecast, realization, self.alpha),
            QuantileForm::GeneralG(g) => {
                quantile_score_general(forecast, realization, self.alpha, g)
            }
        }
    }
}

impl PointScorer for ExpectileScorer {
    fn score(&self, forecast: f64, realization: f64) -> Result<f64> {
        expectile_score(forecast, realization, self.alpha)
    }
}

/// Serializable scorer description used in experiment configs, e.g.
/// `{"type":"quantile_sstar","alpha":0.01}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScorerSpec {
    QuantileSstar { alpha: f64 },
    QuantileGeneral { alpha: f64, g: MonotoneG },
    Expectile { alpha: f64 },
}

impl ScorerSpec {
    pub fn alpha(&self) -> f64 {
        match self {
            ScorerSpec::QuantileSstar { alpha }
            | ScorerSpec::QuantileGeneral { alpha, .. }
            | ScorerSpec::Expectile { alpha } => *alpha,
        }
    }

    /// Validates the description (level range, monotonicity of `g`).
    pub fn validate(&self) -> Result<()> {
        match self {
            ScorerSpec::QuantileSstar { alpha } => QuantileScorer::sstar(*alpha).map(|_| ()),
            ScorerSpec::QuantileGeneral { alpha, g } => {
                QuantileScorer::general(*alpha, g.clone()).map(|_| ())
            }
            ScorerSpec::Expectile { alpha } => ExpectileScorer::new(*alpha).map(|_| ()),
        }
    }
}

impl PointScorer for ScorerSpec {
    fn score(&self, forecast: f64, realization: f64) -> Result<f64> {
        match self {
            ScorerSpec::QuantileSstar { alpha } => {
                quantile_score_sstar(forecast, realization, *alpha)
            }
            ScorerSpec::QuantileGeneral { alpha, g } => {
                quantile_score_general(forecast, realization, *alpha, g)
            }
            ScorerSpec::Expectile { alpha } => expectile_score(forecast, realization, *alpha),
        }
    }
}

/// `S*(x, y) = x (1_{x >= y} / alpha - 1) - y 1_{x >= y} / alpha`.
///
/// Possibly negative; strictly consistent for the `alpha`-quantile. Its
/// conditional expectation at the ideal forecast is the lower-tail
/// expected shortfall at level `alpha`.
pub fn quantile_score_sstar(x: f64, y: f64, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    check_finite("forecast", x)?;
    check_finite("realization", y)?;
    let ind = if x >= y { 1.0 } else { 0.0 };
    Ok(x * (ind / alpha - 1.0) - y * ind / alpha)
}

/// `S(x, y) = (1_{x >= y} - alpha)(g(x) - g(y))` for strictly increasing `g`.
///
/// Nonnegative, zero iff `x == y`.
pub fn quantile_score_general(x: f64, y: f64, alpha: f64, g: &MonotoneG) -> Result<f64> {
    check_level(alpha)?;
    check_finite("forecast", x)?;
    check_finite("realization", y)?;
    let ind = if x >= y { 1.0 } else { 0.0 };
    Ok((ind - alpha) * (g.eval(x, alpha) - g.eval(y, alpha)))
}

/// Asymmetric squared loss `|1_{tau >= y} - alpha| (y - tau)^2`, strictly
/// consistent for the `alpha`-expectile. At `alpha = 1/2` this is half the
/// squared error.
pub fn expectile_score(tau: f64, y: f64, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    check_finite("forecast", tau)?;
    check_finite("realization", y)?;
    let ind = if tau >= y { 1.0 } else { 0.0 };
    Ok((ind - alpha).abs() * (y - tau) * (y - tau))
}

/// Negative log predictive density of `N(mu, var)` at `y`.
pub fn log_score_gaussian(mu: f64, var: f64, y: f64) -> Result<f64> {
    check_finite("predictive mean", mu)?;
    check_finite("realization", y)?;
    if !var.is_finite() || var <= 0.0 {
        return Err(Error::invalid(format!("predictive variance must be > 0, got {var}")));
    }
    let z2 = (y - mu) * (y - mu) / var;
    Ok(0.5 * ((2.0 * std::f64::consts::PI).ln() + var.ln() + z2))
}

/// Empirical `alpha`-expectile: the unique root of
/// `alpha * sum((y_i - tau)+) = (1 - alpha) * sum((tau - y_i)+)`,
/// found by bisection on `[min, max]` to absolute tolerance 1e-10.
pub fn compute_expectile(sample: &[f64], alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    if sample.is_empty() {
        return Err(Error::invalid("expectile of an empty sample"));
    }
    if let Some(v) = sample.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("sample contains non-finite value {v}")));
    }

    // Strictly decreasing in tau, positive below the expectile,
    // negative above; the root is bracketed by the sample range.
    let imbalance = |tau: f64| {
        let mut up = CompensatedSum::new();
        let mut down = CompensatedSum::new();
        for &y in sample {
            if y > tau {
                up.add(y - tau);
            } else {
                down.add(tau - y);
            }
        }
        alpha * up.value() - (1.0 - alpha) * down.value()
    };

    let mut lo = sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(lo);
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval no longer representable; cannot tighten further.
            break;
        }
        if imbalance(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean score plus the per-observation series.
#[derive(Debug, Clone)]
pub struct MeanScore {
    pub mean: f64,
    pub series: ScoreSeries,
}

/// Averages `scorer` over aligned forecast/realization pairs using
/// compensated summation, and keeps the per-observation scores for
/// downstream score-differential testing.
pub fn mean_score<S: PointScorer>(
    forecasts: &[f64],
    realizations: &[f64],
    scorer: &S,
) -> Result<MeanScore> {
    if forecasts.len() != realizations.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} forecasts vs {} realizations",
            forecasts.len(),
            realizations.len()
        )));
    }
    if forecasts.is_empty() {
        return Err(Error::invalid("mean score of empty series"));
    }
    let mut values = Vec::with_capacity(forecasts.len());
    let mut acc = CompensatedSum::new();
    for (&x, &y) in forecasts.iter().zip(realizations) {
        let s = scorer.score(x, y)?;
        acc.add(s);
        values.push(s);
    }
    Ok(MeanScore {
        mean: acc.value() / values.len() as f64,
        series: ScoreSeries::new(values)?,
    })
}

/// Closed-form lower-tail expected shortfall of `N(mu, sigma^2)` at the
/// forecast point `x`: `-(1/alpha) * (mu * Phi(z) - sigma * phi(z))` with
/// `z = (x - mu) / sigma`. At the ideal forecast `x = mu + sigma q_alpha`
/// this is the conditional expectation of `S*`.
pub fn normal_tail_expectation(mu: f64, sigma: f64, x: f64, alpha: f64) -> Result<f64> {
    check_level(alpha)?;
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let z = (x - mu) / sigma;
    Ok(-(mu * stats::norm_cdf(z) - sigma * stats::norm_pdf(z)) / alpha)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn sstar_hand_values() {
        assert_abs_diff_eq!(quantile_score_sstar(1.0, 0.0, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(quantile_score_sstar(0.0, 0.0, 0.1).unwrap(), 0.0);
        // x < y branch evaluates to -x.
        assert_abs_diff_eq!(
            quantile_score_sstar(-2.3263, 0.0, 0.01).unwrap(),
            2.3263,
            epsilon = 1e-12
        );
        assert!(quantile_score_sstar(f64::NAN, 0.0, 0.5).is_err());
        assert!(quantile_score_sstar(0.0, f64::INFINITY, 0.5).is_err());
        assert!(quantile_score_sstar(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn general_score_hand_values() {
        let g = MonotoneG::Identity;
        assert_abs_diff_eq!(quantile_score_general(3.0, 3.0, 0.3, &g).unwrap(), 0.0);
        assert_abs_diff_eq!(
            quantile_score_general(2.0, 1.0, 0.05, &g).unwrap(),
            0.95,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            quantile_score_general(0.0, 1.0, 0.05, &g).unwrap(),
            0.05,
            epsilon = 1e-15
        );
    }

    #[test]
    fn expectile_score_hand_values() {
        assert_abs_diff_eq!(expectile_score(3.0, 3.0, 0.9).unwrap(), 0.0);
        assert_abs_diff_eq!(expectile_score(0.0, 1.0, 0.5).unwrap(), 0.5);
        assert_abs_diff_eq!(expectile_score(1.0, 0.0, 0.25).unwrap(), 0.75);
    }

    #[test]
    fn gaussian_log_score_closed_forms() {
        let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        assert_abs_diff_eq!(log_score_gaussian(0.0, 1.0, 0.0).unwrap(), half_log_2pi);
        // Translation invariance.
        assert_abs_diff_eq!(log_score_gaussian(5.0, 1.0, 5.0).unwrap(), half_log_2pi);
        assert_abs_diff_eq!(
            log_score_gaussian(0.0, 4.0, 0.0).unwrap(),
            half_log_2pi + 2.0_f64.ln(),
            epsilon = 1e-15
        );
        assert!(log_score_gaussian(0.0, 0.0, 1.0).is_err());
        assert!(log_score_gaussian(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn expectile_of_simple_samples() {
        assert_abs_diff_eq!(compute_expectile(&[-1.0, 1.0], 0.5).unwrap(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(compute_expectile(&[0.0, 0.0, 0.0], 0.3).unwrap(), 0.0);
        assert!(compute_expectile(&[], 0.5).is_err());
        // Asymmetric level shifts the expectile towards the weighted side.
        let e_high = compute_expectile(&[-1.0, 1.0], 0.9).unwrap();
        assert!(e_high > 0.0 && e_high < 1.0);
    }

    #[test]
    fn mean_score_basics() {
        let scorer = QuantileScorer::general(0.1, MonotoneG::Identity).unwrap();
        let xs = [1.0, -0.5, 2.0];
        let ms = mean_score(&xs, &xs, &scorer).unwrap();
        assert_abs_diff_eq!(ms.mean, 0.0);
        assert_eq!(ms.series.len(), 3);

        let one = mean_score(&[2.0], &[1.0], &scorer).unwrap();
        assert_abs_diff_eq!(one.mean, one.series.values()[0]);

        assert!(mean_score(&[1.0], &[1.0, 2.0], &scorer).is_err());
        assert!(mean_score::<QuantileScorer>(&[], &[], &scorer).is_err());
    }

    #[test]
    fn tabulated_g_validation() {
        let good = MonotoneG::Tabulated {
            xs: vec![-1.0, 0.0, 1.0],
            ys: vec![-2.0, 0.0, 3.0],
        };
        assert!(QuantileScorer::general(0.1, good).is_ok());

        let flat = MonotoneG::Tabulated {
            xs: vec![-1.0, 0.0, 1.0],
            ys: vec![0.0, 0.0, 1.0],
        };
        assert!(QuantileScorer::general(0.1, flat).is_err());

        let decreasing = MonotoneG::Tabulated {
            xs: vec![0.0, 1.0],
            ys: vec![1.0, 0.0],
        };
        assert!(QuantileScorer::general(0.1, decreasing).is_err());
    }

    #[test]
    fn scorer_spec_roundtrips_through_json() {
        let spec = ScorerSpec::QuantileSstar { alpha: 0.01 };
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"type":"quantile_sstar","alpha":0.01}"#);
        let back: ScorerSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);

        let gen = ScorerSpec::QuantileGeneral {
            alpha: 0.05,
            g: MonotoneG::Identity,
        };
        let back: ScorerSpec = serde_json::from_str(&serde_json::to_string(&gen).unwrap()).unwrap();
        assert_eq!(back, gen);
    }

    #[test]
    fn normal_tail_expectation_standard_case() {
        // phi(q_{0.01}) / 0.01 at the ideal standard-normal forecast.
        let q = crate::stats::norm_quantile(0.01).unwrap();
        let es = normal_tail_expectation(0.0, 1.0, q, 0.01).unwrap();
        assert_abs_diff_eq!(es, 2.665_214_22, epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn general_score_nonnegative_zero_iff_equal(
            x in -50.0..50.0f64,
            y in -50.0..50.0f64,
            alpha in 0.001..0.999f64,
        ) {
            let s = quantile_score_general(x, y, alpha, &MonotoneG::Identity).unwrap();
            prop_assert!(s >= 0.0);
            if x != y {
                prop_assert!(s > 0.0);
            } else {
                prop_assert!(s == 0.0);
            }
        }

        #[test]
        fn expectile_score_nonnegative_zero_iff_equal(
            tau in -50.0..50.0f64,
            y in -50.0..50.0f64,
            alpha in 0.001..0.999f64,
        ) {
            let s = expectile_score(tau, y, alpha).unwrap();
            prop_assert!(s >= 0.0);
            prop_assert_eq!(s == 0.0, tau == y);
        }

        #[test]
        fn sstar_differs_from_general_by_realization(
            x in -100.0..100.0f64,
            y in -100.0..100.0f64,
            alpha in 0.001..0.999f64,
        ) {
            let general = quantile_score_general(x, y, alpha, &MonotoneG::XOverAlpha).unwrap();
            let sstar = quantile_score_sstar(x, y, alpha).unwrap();
            prop_assert!((general - sstar - y).abs() <= 1e-9 * (1.0 + y.abs() / alpha));
        }

        #[test]
        fn half_expectile_is_half_squared_error(
            tau in -10.0..10.0f64,
            y in -10.0..10.0f64,
        ) {
            let s = expectile_score(tau, y, 0.5).unwrap();
            prop_assert!((s - 0.5 * (y - tau) * (y - tau)).abs() < 1e-12);
        }
    }
}
