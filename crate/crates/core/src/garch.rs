//! GARCH(1,1) simulation, Gaussian quasi-maximum-likelihood estimation and
//! the univariate VaR forecasters: exact one-step, Monte Carlo multi-step,
//! unconditional empirical quantile and the square-root-of-time rule.
//!
//! The model is `R_t = sigma_t eps_t` with i.i.d. standard normal
//! innovations and `sigma_t^2 = kappa + phi R_{t-1}^2 + beta sigma_{t-1}^2`.
//! Simulation starts the recursion at the stationary variance
//! `kappa / (1 - phi - beta)` and discards a burn-in prefix; estimation
//! initializes at the sample variance. Both are deterministic per seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::NelderMead;
use crate::stats::{self, empirical_quantile, norm_quantile, sample_variance};

/// Default number of presample draws discarded by the simulators.
pub const DEFAULT_BURN_IN: usize = 500;

/// GARCH(1,1) parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    /// Variance intercept, > 0.
    pub kappa: f64,
    /// ARCH (news) coefficient, >= 0.
    pub phi: f64,
    /// GARCH (persistence) coefficient, >= 0.
    pub beta: f64,
}

impl GarchParams {
    pub fn new(kappa: f64, phi: f64, beta: f64) -> Result<Self> {
        let p = Self { kappa, phi, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::invalid(format!("kappa must be > 0, got {}", self.kappa)));
        }
        if !(self.phi.is_finite() && self.phi >= 0.0) {
            return Err(Error::invalid(format!("phi must be >= 0, got {}", self.phi)));
        }
        if !(self.beta.is_finite() && self.beta >= 0.0) {
            return Err(Error::invalid(format!("beta must be >= 0, got {}", self.beta)));
        }
        if self.phi + self.beta >= 1.0 {
            return Err(Error::invalid(format!(
                "phi + beta = {} violates covariance stationarity",
                self.phi + self.beta
            )));
        }
        Ok(())
    }

    /// `kappa / (1 - phi - beta)`.
    pub fn unconditional_variance(&self) -> f64 {
        self.kappa / (1.0 - self.phi - self.beta)
    }

    /// Variance recursion step.
    #[inline]
    pub fn next_var(&self, prev_return: f64, prev_var: f64) -> f64 {
        self.kappa + self.phi * prev_return * prev_return + self.beta * prev_var
    }
}

/// A simulated return path with its conditional variances.
#[derive(Debug, Clone)]
pub struct GarchPath {
    /// Returns `R_t`.
    pub returns: Vec<f64>,
    /// Conditional variances `sigma_t^2` aligned with `returns`.
    pub cond_var: Vec<f64>,
    pub seed: u64,
    pub burn_in: usize,
}

impl GarchPath {
    /// One-step-ahead conditional variance after the end of the path.
    pub fn next_var(&self, params: &GarchParams) -> f64 {
        let n = self.returns.len();
        params.next_var(self.returns[n - 1], self.cond_var[n - 1])
    }
}

/// Simulates a GARCH(1,1) path of length `n` after discarding `burn_in`
/// presample steps. Deterministic for a fixed seed.
pub fn simulate_garch(params: &GarchParams, n: usize, seed: u64, burn_in: usize) -> Result<GarchPath> {
    params.validate()?;
    if n < 1 {
        return Err(Error::invalid("path length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut var = params.unconditional_variance();
    let mut prev_return = 0.0;
    let mut started = false;

    let mut returns = Vec::with_capacity(n);
    let mut cond_var = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        if started {
            var = params.next_var(prev_return, var);
        }
        started = true;
        let eps: f64 = StandardNormal.sample(&mut rng);
        let r = var.sqrt() * eps;
        prev_return = r;
        if t >= burn_in {
            returns.push(r);
            cond_var.push(var);
        }
    }
    Ok(GarchPath {
        returns,
        cond_var,
        seed,
        burn_in,
    })
}

/// Result of a quasi-maximum-likelihood fit.
#[derive(Debug, Clone)]
pub struct GarchFit {
    pub params: GarchParams,
    /// Fitted conditional variances; `cond_var[i]` belongs to `returns[i]`
    /// and the final extra element is the one-step-ahead forecast variance.
    pub cond_var: Vec<f64>,
    /// Maximized Gaussian log-likelihood (full, not per observation).
    pub loglik: f64,
    /// The optimizer ended at `phi + beta >= 1 - 1e-6`.
    pub boundary: bool,
    pub converged: bool,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x.clamp(-40.0, 40.0)).exp())
}

fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

/// Unconstrained parameterization used by the optimizer:
/// `theta = (ln kappa, logit(phi + beta), logit(phi / (phi + beta)))`.
/// Every point of R^3 maps into the stationarity region.
fn theta_to_params(theta: &[f64]) -> GarchParams {
    let kappa = theta[0].clamp(-700.0, 700.0).exp();
    let persistence = sigmoid(theta[1]);
    let ratio = sigmoid(theta[2]);
    GarchParams {
        kappa,
        phi: persistence * ratio,
        beta: persistence * (1.0 - ratio),
    }
}

fn params_to_theta(p: &GarchParams) -> [f64; 3] {
    let s = (p.phi + p.beta).max(1e-8);
    [p.kappa.max(1e-300).ln(), logit(s), logit(p.phi / s)]
}

/// Mean negative Gaussian log-likelihood of `returns` under `p`, with the
/// variance recursion started at `init_var`. The `ln sigma_t^2` terms are
/// accumulated as a running product flushed before it can leave the
/// representable range, which trims the dominant cost of the fit.
fn mean_neg_loglik(p: &GarchParams, returns: &[f64], init_var: f64) -> f64 {
    const LN_2PI: f64 = 1.837_877_066_409_345_5;
    let floor = 1e-12 * init_var;
    let mut var = init_var;
    let mut quad = 0.0;
    let mut log_acc = 0.0;
    let mut prod = 1.0f64;
    let mut prev = 0.0;
    for (t, &r) in returns.iter().enumerate() {
        if t > 0 {
            var = (p.kappa + p.phi * prev * prev + p.beta * var).max(floor);
        }
        prod *= var;
        if !(1e-120..=1e120).contains(&prod) {
            log_acc += prod.ln();
            prod = 1.0;
        }
        quad += r * r / var;
        prev = r;
    }
    log_acc += prod.ln();
    0.5 * (returns.len() as f64 * LN_2PI + log_acc + quad) / returns.len() as f64
}

/// Fits GARCH(1,1) by Gaussian QML from the fixed start
/// `(kappa, phi, beta) = (0.05 * var, 0.1, 0.8)`.
///
/// The optimizer runs in an unconstrained reparameterization so iterates
/// cannot leave the stationarity region; estimates with
/// `phi + beta >= 1 - 1e-6` are returned with the boundary flag set rather
/// than as an error. Deterministic: identical inputs give identical fits.
pub fn fit_garch_qmle(returns: &[f64]) -> Result<GarchFit> {
    let var = presample_variance(returns)?;
    let start = GarchParams {
        kappa: 0.05 * var,
        phi: 0.1,
        beta: 0.8,
    };
    fit_from(returns, var, &start, &NelderMead::default())
}

/// Same fit started from `start`, with a tighter iteration budget. Used by
/// rolling-window loops where the previous window's estimate is an
/// excellent initial point.
pub fn fit_garch_qmle_warm(returns: &[f64], start: &GarchParams) -> Result<GarchFit> {
    let var = presample_variance(returns)?;
    let nm = NelderMead {
        initial_step: 0.08,
        max_iter: 400,
        ..NelderMead::default()
    };
    fit_from(returns, var, start, &nm)
}

fn presample_variance(returns: &[f64]) -> Result<f64> {
    if returns.len() < 100 {
        return Err(Error::InsufficientSample(format!(
            "QML fit needs at least 100 observations, got {}",
            returns.len()
        )));
    }
    if let Some(v) = returns.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("returns contain non-finite value {v}")));
    }
    let var = sample_variance(returns);
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::DegenerateVariance(format!(
            "sample variance of returns is {var}; cannot fit a volatility model"
        )));
    }
    Ok(var)
}

fn fit_from(
    returns: &[f64],
    init_var: f64,
    start: &GarchParams,
    nm: &NelderMead,
) -> Result<GarchFit> {
    let theta0 = params_to_theta(start);
    let res = nm.minimize(&theta0, |theta| {
        mean_neg_loglik(&theta_to_params(theta), returns, init_var)
    });
    let params = theta_to_params(&res.x);
    if !res.f.is_finite() {
        return Err(Error::Numerical(
            "GARCH quasi-likelihood did not evaluate to a finite value".into(),
        ));
    }

    let mut cond_var = Vec::with_capacity(returns.len() + 1);
    let mut var = init_var;
    cond_var.push(var);
    for t in 1..=returns.len() {
        var = params.next_var(returns[t - 1], var);
        cond_var.push(var);
    }

    Ok(GarchFit {
        params,
        cond_var,
        loglik: -res.f * returns.len() as f64,
        boundary: params.phi + params.beta >= 1.0 - 1e-6,
        converged: res.converged,
    })
}

/// How a quantile forecast was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMethod {
    /// Exact `N(0, sigma^2_{t+1})` one-step quantile.
    ExactNormal,
    /// Empirical quantile of a Monte Carlo sample of the given size.
    MonteCarlo(usize),
    /// Empirical quantile of an h-step return sample.
    UnconditionalEmpirical,
    /// `sqrt(h) * s * q_alpha + h * m` from one-step moments.
    SqrtTimeRule,
}

/// A single quantile (VaR) forecast.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileForecast {
    /// Target time index; assigned by the caller assembling forecast
    /// records, zero when produced in isolation.
    pub t: usize,
    /// Forecast horizon in steps.
    pub h: usize,
    /// Quantile level.
    pub alpha: f64,
    /// Forecast value.
    pub value: f64,
    pub method: ForecastMethod,
}

/// Exact one-step quantile forecast from the next conditional variance:
/// `sigma_{t+1} * q_alpha`.
pub fn forecast_quantile_h1(next_var: f64, alpha: f64) -> Result<QuantileForecast> {
    if !(next_var.is_finite() && next_var > 0.0) {
        return Err(Error::invalid(format!(
            "next-step variance must be > 0, got {next_var}"
        )));
    }
    let q = norm_quantile(alpha)?;
    Ok(QuantileForecast {
        t: 0,
        h: 1,
        alpha,
        value: next_var.sqrt() * q,
        method: ForecastMethod::ExactNormal,
    })
}

/// Simulation state at a forecast origin: the current conditional variance
/// and return.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GarchState {
    pub var: f64,
    pub ret: f64,
}

/// Simulates `m` independent cumulative h-step returns
/// `R_{t+1} + ... + R_{t+h}` from the recursion started at `state`.
/// Deterministic per seed. Shared by the Monte Carlo forecaster and by
/// experiment code that extracts several quantile levels from one sample.
pub fn mc_h_step_sums(
    params: &GarchParams,
    state: GarchState,
    h: usize,
    m: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    params.validate()?;
    if h < 2 {
        return Err(Error::invalid("Monte Carlo forecasting is for h >= 2; use the exact one-step forecast"));
    }
    if m < 100 {
        return Err(Error::invalid(format!("Monte Carlo sample size {m} too small; need >= 100")));
    }
    if !(state.var.is_finite() && state.var > 0.0) || !state.ret.is_finite() {
        return Err(Error::invalid(format!(
            "invalid forecast-origin state (var={}, ret={})",
            state.var, state.ret
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first_var = params.next_var(state.ret, state.var);
    let mut sums = Vec::with_capacity(m);
    for _ in 0..m {
        let mut var = first_var;
        let mut cum = 0.0;
        for _ in 0..h {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let r = var.sqrt() * eps;
            cum += r;
            var = params.next_var(r, var);
        }
        sums.push(cum);
    }
    Ok(sums)
}

/// Monte Carlo forecast of the `alpha`-quantile of the cumulative h-step
/// return, the empirical `ceil(alpha m)`-th order statistic of
/// [`mc_h_step_sums`].
pub fn forecast_quantile_mc(
    params: &GarchParams,
    state: GarchState,
    h: usize,
    alpha: f64,
    m: usize,
    seed: u64,
) -> Result<QuantileForecast> {
    let sums = mc_h_step_sums(params, state, h, m, seed)?;
    let value = empirical_quantile(&sums, alpha)?;
    Ok(QuantileForecast {
        t: 0,
        h,
        alpha,
        value,
        method: ForecastMethod::MonteCarlo(m),
    })
}

/// Unconditional forecast: the `ceil(alpha n)`-th order statistic of a
/// supplied sample of h-step returns.
pub fn unconditional_quantile(h_step_returns: &[f64], alpha: f64) -> Result<QuantileForecast> {
    let value = empirical_quantile(h_step_returns, alpha)?;
    Ok(QuantileForecast {
        t: 0,
        h: 1,
        alpha,
        value,
        method: ForecastMethod::UnconditionalEmpirical,
    })
}

/// Square-root-of-time quantile forecast
/// `sqrt(h) * sd * q_alpha + h * mean` from one-step moments.
pub fn sqrt_time_rule(mean_1step: f64, sd_1step: f64, h: usize, alpha: f64) -> Result<QuantileForecast> {
    if !(sd_1step.is_finite() && sd_1step > 0.0) {
        return Err(Error::invalid(format!(
            "one-step standard deviation must be > 0, got {sd_1step}"
        )));
    }
    if !mean_1step.is_finite() {
        return Err(Error::invalid("one-step mean must be finite"));
    }
    if h < 1 {
        return Err(Error::invalid("horizon must be >= 1"));
    }
    let q = norm_quantile(alpha)?;
    Ok(QuantileForecast {
        t: 0,
        h,
        alpha,
        value: (h as f64).sqrt() * sd_1step * q + h as f64 * mean_1step,
        method: ForecastMethod::SqrtTimeRule,
    })
}

/// Window mode for h-step return aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Rolling sums; maximizes sample size (default).
    Overlapping,
    /// Non-overlapping block sums.
    Disjoint,
}

/// Sums of `h` consecutive one-step returns.
pub fn aggregate_h_step(returns: &[f64], h: usize, mode: Aggregation) -> Result<Vec<f64>> {
    if h < 1 {
        return Err(Error::invalid("aggregation horizon must be >= 1"));
    }
    if h > returns.len() {
        return Err(Error::invalid(format!(
            "horizon {h} exceeds series length {}",
            returns.len()
        )));
    }
    let out = match mode {
        Aggregation::Overlapping => returns.windows(h).map(|w| w.iter().sum()).collect(),
        Aggregation::Disjoint => returns.chunks_exact(h).map(|w| w.iter().sum()).collect(),
    };
    Ok(out)
}

/// Rolling mean and standard deviation of the trailing `window` returns,
/// for the square-root-of-time forecaster.
pub fn trailing_moments(window_returns: &[f64]) -> Result<(f64, f64)> {
    if window_returns.len() < 2 {
        return Err(Error::InsufficientSample("need >= 2 returns for moments".into()));
    }
    let m = stats::mean(window_returns);
    let s = stats::sample_std(window_returns);
    if s <= 0.0 {
        return Err(Error::DegenerateVariance("trailing window has zero variance".into()));
    }
    Ok((m, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn config1() -> GarchParams {
        GarchParams::new(0.01, 0.088, 0.902).unwrap()
    }

    #[test]
    fn rejects_nonstationary_parameters() {
        assert!(GarchParams::new(0.01, 0.5, 0.5).is_err());
        assert!(GarchParams::new(0.0, 0.1, 0.8).is_err());
        assert!(GarchParams::new(0.01, -0.1, 0.8).is_err());
        assert!(GarchParams::new(0.01, 0.1, 0.89).is_ok());
    }

    #[test]
    fn simulated_variance_matches_stationary_value() {
        let path = simulate_garch(&config1(), 1_000_000, 1, DEFAULT_BURN_IN).unwrap();
        let v = sample_variance(&path.returns);
        // kappa / (1 - phi - beta) = 1.0 for this configuration.
        assert_abs_diff_eq!(v, 1.0, epsilon = 0.02);
    }

    #[test]
    fn degenerate_garch_is_gaussian_white_noise() {
        let p = GarchParams::new(1.0, 0.0, 0.0).unwrap();
        let path = simulate_garch(&p, 1_000_000, 11, DEFAULT_BURN_IN).unwrap();
        let n = path.returns.len() as f64;
        let var = sample_variance(&path.returns);
        let m = stats::mean(&path.returns);
        let kurt: f64 =
            path.returns.iter().map(|r| (r - m).powi(4)).sum::<f64>() / (n * var * var);
        assert_abs_diff_eq!(kurt, 3.0, epsilon = 0.05);
        assert!(path.cond_var.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn same_seed_gives_bit_identical_paths() {
        let a = simulate_garch(&config1(), 5000, 42, DEFAULT_BURN_IN).unwrap();
        let b = simulate_garch(&config1(), 5000, 42, DEFAULT_BURN_IN).unwrap();
        assert_eq!(a.returns, b.returns);
        assert_eq!(a.cond_var, b.cond_var);
        let c = simulate_garch(&config1(), 5000, 43, DEFAULT_BURN_IN).unwrap();
        assert_ne!(a.returns, c.returns);
    }

    #[test]
    fn recursion_holds_exactly_along_the_path() {
        let p = config1();
        let path = simulate_garch(&p, 2000, 3, DEFAULT_BURN_IN).unwrap();
        for t in 1..path.returns.len() {
            let expect = p.next_var(path.returns[t - 1], path.cond_var[t - 1]);
            assert_eq!(path.cond_var[t], expect);
            assert!(path.cond_var[t] >= p.kappa);
        }
    }

    #[test]
    fn one_step_forecast_examples() {
        assert_abs_diff_eq!(
            forecast_quantile_h1(1.0, 0.01).unwrap().value,
            -2.326_35,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(
            forecast_quantile_h1(4.0, 0.01).unwrap().value,
            -4.652_70,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(forecast_quantile_h1(1.0, 0.5).unwrap().value, 0.0);
        assert!(forecast_quantile_h1(0.0, 0.01).is_err());
        assert!(forecast_quantile_h1(-1.0, 0.01).is_err());
    }

    #[test]
    fn mc_forecast_iid_case_matches_closed_form() {
        let p = GarchParams::new(1.0, 0.0, 0.0).unwrap();
        let state = GarchState { var: 1.0, ret: 0.0 };
        let f = forecast_quantile_mc(&p, state, 4, 0.01, 1_000_000, 99).unwrap();
        // h-step return is N(0, h): quantile 2 * q_{0.01}.
        assert_abs_diff_eq!(f.value, -4.652_70, epsilon = 0.02);

        let median = forecast_quantile_mc(&p, state, 4, 0.5, 1_000_000, 99).unwrap();
        assert_abs_diff_eq!(median.value, 0.0, epsilon = 0.01);
    }

    #[test]
    fn mc_forecast_preconditions() {
        let p = config1();
        let state = GarchState { var: 1.0, ret: 0.0 };
        assert!(forecast_quantile_mc(&p, state, 1, 0.01, 1000, 1).is_err());
        assert!(forecast_quantile_mc(&p, state, 2, 0.01, 50, 1).is_err());
        let bad = GarchState { var: 0.0, ret: 0.0 };
        assert!(forecast_quantile_mc(&p, bad, 2, 0.01, 1000, 1).is_err());
    }

    #[test]
    fn unconditional_quantile_order_statistics() {
        let sample: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(unconditional_quantile(&sample, 0.01).unwrap().value, 1.0);
        assert_eq!(unconditional_quantile(&sample, 0.5).unwrap().value, 50.0);
        assert!(unconditional_quantile(&[], 0.5).is_err());
    }

    #[test]
    fn sqrt_time_rule_examples() {
        assert_abs_diff_eq!(
            sqrt_time_rule(0.0, 1.0, 4, 0.01).unwrap().value,
            -4.652_70,
            epsilon = 1e-5
        );
        // h = 1 coincides with the exact normal one-step forecast.
        let a = sqrt_time_rule(0.0, 1.0, 1, 0.025).unwrap().value;
        let b = forecast_quantile_h1(1.0, 0.025).unwrap().value;
        assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        // Median forecast keeps only the drift term.
        assert_abs_diff_eq!(sqrt_time_rule(0.1, 1.0, 4, 0.5).unwrap().value, 0.4, epsilon = 1e-12);
        assert!(sqrt_time_rule(0.0, 0.0, 4, 0.01).is_err());
    }

    #[test]
    fn h_step_aggregation_modes() {
        let r = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(
            aggregate_h_step(&r, 2, Aggregation::Overlapping).unwrap(),
            vec![3.0, 5.0, 7.0]
        );
        assert_eq!(aggregate_h_step(&r, 2, Aggregation::Disjoint).unwrap(), vec![3.0, 7.0]);
        assert_eq!(aggregate_h_step(&r, 1, Aggregation::Overlapping).unwrap(), r.to_vec());
        assert!(aggregate_h_step(&r, 5, Aggregation::Overlapping).is_err());
    }

    #[test]
    fn qmle_is_deterministic() {
        let path = simulate_garch(&config1(), 3000, 17, DEFAULT_BURN_IN).unwrap();
        let a = fit_garch_qmle(&path.returns).unwrap();
        let b = fit_garch_qmle(&path.returns).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loglik, b.loglik);
        assert_eq!(a.cond_var.len(), path.returns.len() + 1);
    }

    #[test]
    fn qmle_rejects_degenerate_input() {
        assert!(matches!(
            fit_garch_qmle(&vec![0.5; 500]),
            Err(Error::DegenerateVariance(_))
        ));
        assert!(matches!(
            fit_garch_qmle(&[0.1, -0.2, 0.3]),
            Err(Error::InsufficientSample(_))
        ));
    }
}
