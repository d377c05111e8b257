//! Bivariate DCC-GARCH: simulation, two-step quasi-likelihood estimation,
//! portfolio-return construction with per-step rebalancing, and the exact
//! one-step portfolio quantile forecast.
//!
//! The model couples two univariate GARCH(1,1) margins through a dynamic
//! correlation:
//!
//! ```text
//! R_t = H_t^{1/2} eps_t,            eps_t i.i.d. N(0, I_2)
//! H_t = D_t C_t D_t,                D_t = diag(sigma_{t,1}, sigma_{t,2})
//! Q_t = (1 - gamma - eta) Qbar + gamma u_{t-1} u_{t-1}' + eta Q_{t-1}
//! C_t = diag(Q_t)^{-1/2} Q_t diag(Q_t)^{-1/2}
//! u_t = (R_{t,1}/sigma_{t,1}, R_{t,2}/sigma_{t,2})'
//! ```
//!
//! `H_t^{1/2}` is the symmetric positive-definite square root, which for
//! 2x2 matrices has the closed form `(H + sqrt(det H) I) / sqrt(tr H + 2
//! sqrt(det H))`. The Q recursion starts at `Qbar` and simulation discards
//! a burn-in prefix.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::garch::{fit_garch_qmle, GarchFit, GarchParams, QuantileForecast, ForecastMethod};
use crate::optim::NelderMead;
use crate::stats::{mean, norm_quantile};

/// Symmetric 2x2 matrix stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sym2 {
    /// (1,1) entry.
    pub v11: f64,
    /// (1,2) = (2,1) entry.
    pub v12: f64,
    /// (2,2) entry.
    pub v22: f64,
}

impl Sym2 {
    pub fn new(v11: f64, v12: f64, v22: f64) -> Self {
        Self { v11, v12, v22 }
    }

    pub fn identity() -> Self {
        Self::new(1.0, 0.0, 1.0)
    }

    pub fn det(&self) -> f64 {
        self.v11 * self.v22 - self.v12 * self.v12
    }

    pub fn trace(&self) -> f64 {
        self.v11 + self.v22
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let half_tr = 0.5 * self.trace();
        let disc = (half_tr * half_tr - self.det()).max(0.0).sqrt();
        half_tr - disc
    }

    pub fn quad_form(&self, w: [f64; 2]) -> f64 {
        w[0] * w[0] * self.v11 + 2.0 * w[0] * w[1] * self.v12 + w[1] * w[1] * self.v22
    }

    /// Correlation implied by treating `self` as a covariance.
    pub fn correlation(&self) -> f64 {
        self.v12 / (self.v11 * self.v22).sqrt()
    }

    /// Unit-diagonal normalization `diag^{-1/2} M diag^{-1/2}`.
    pub fn normalized(&self) -> Sym2 {
        let s1 = self.v11.sqrt();
        let s2 = self.v22.sqrt();
        Sym2::new(self.v11 / (s1 * s1), self.v12 / (s1 * s2), self.v22 / (s2 * s2))
    }

    /// Symmetric positive-definite square root (closed form for 2x2).
    pub fn sym_sqrt(&self) -> Result<Sym2> {
        let det = self.det();
        if det <= 0.0 || self.v11 <= 0.0 {
            return Err(Error::Numerical(format!(
                "matrix not positive definite (det = {det}); no real square root"
            )));
        }
        let s = det.sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        Ok(Sym2::new((self.v11 + s) / t, self.v12 / t, (self.v22 + s) / t))
    }

    /// `self * [x, y]` for a vector.
    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [
            self.v11 * v[0] + self.v12 * v[1],
            self.v12 * v[0] + self.v22 * v[1],
        ]
    }
}

/// Parameters of the bivariate DCC-GARCH data-generating process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DccParams {
    pub garch_1: GarchParams,
    pub garch_2: GarchParams,
    /// Off-diagonal entry of the unit-diagonal long-run matrix `Qbar`.
    pub q_bar_offdiag: f64,
    /// News coefficient of the Q recursion, >= 0.
    pub gamma: f64,
    /// Persistence coefficient of the Q recursion, >= 0.
    pub eta: f64,
}

impl DccParams {
    pub fn new(
        garch_1: GarchParams,
        garch_2: GarchParams,
        q_bar_offdiag: f64,
        gamma: f64,
        eta: f64,
    ) -> Result<Self> {
        let p = Self {
            garch_1,
            garch_2,
            q_bar_offdiag,
            gamma,
            eta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.garch_1.validate()?;
        self.garch_2.validate()?;
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::invalid(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !(self.eta.is_finite() && self.eta >= 0.0) {
            return Err(Error::invalid(format!("eta must be >= 0, got {}", self.eta)));
        }
        if self.gamma + self.eta >= 1.0 {
            return Err(Error::invalid(format!(
                "gamma + eta = {} must be < 1",
                self.gamma + self.eta
            )));
        }
        if !(self.q_bar_offdiag.is_finite() && self.q_bar_offdiag.abs() < 1.0) {
            return Err(Error::invalid(format!(
                "q_bar offdiagonal {} leaves the positive-definite region",
                self.q_bar_offdiag
            )));
        }
        Ok(())
    }

    pub fn q_bar(&self) -> Sym2 {
        Sym2::new(1.0, self.q_bar_offdiag, 1.0)
    }
}

/// A simulated bivariate path with its conditional covariance sequence.
#[derive(Debug, Clone)]
pub struct DccPath {
    pub returns: Vec<[f64; 2]>,
    /// Conditional covariance `H_t` of `returns[t]` given the past.
    pub h_path: Vec<Sym2>,
    /// The driving `Q_t` sequence, aligned with `h_path`.
    pub q_path: Vec<Sym2>,
    pub seed: u64,
    pub burn_in: usize,
}

/// Simulates the DCC-GARCH process. Deterministic per seed.
pub fn simulate_dcc(params: &DccParams, n: usize, seed: u64, burn_in: usize) -> Result<DccPath> {
    params.validate()?;
    if n < 1 {
        return Err(Error::invalid("path length must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_bar = params.q_bar();

    let mut var1 = params.garch_1.unconditional_variance();
    let mut var2 = params.garch_2.unconditional_variance();
    let mut q = q_bar;
    let mut prev: Option<([f64; 2], [f64; 2])> = None; // (returns, standardized)

    let mut returns = Vec::with_capacity(n);
    let mut h_path = Vec::with_capacity(n);
    let mut q_path = Vec::with_capacity(n);

    for t in 0..burn_in + n {
        if let Some((r_prev, u_prev)) = prev {
            var1 = params.garch_1.next_var(r_prev[0], var1);
            var2 = params.garch_2.next_var(r_prev[1], var2);
            q = Sym2::new(
                (1.0 - params.gamma - params.eta) * q_bar.v11
                    + params.gamma * u_prev[0] * u_prev[0]
                    + params.eta * q.v11,
                (1.0 - params.gamma - params.eta) * q_bar.v12
                    + params.gamma * u_prev[0] * u_prev[1]
                    + params.eta * q.v12,
                (1.0 - params.gamma - params.eta) * q_bar.v22
                    + params.gamma * u_prev[1] * u_prev[1]
                    + params.eta * q.v22,
            );
        }
        let c = q.normalized();
        let (s1, s2) = (var1.sqrt(), var2.sqrt());
        let h = Sym2::new(var1, s1 * c.v12 * s2, var2);
        let root = h.sym_sqrt()?;
        let eps = [
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        ];
        let r = root.mul_vec(eps);
        let u = [r[0] / s1, r[1] / s2];
        prev = Some((r, u));

        if t >= burn_in {
            returns.push(r);
            h_path.push(h);
            q_path.push(q);
        }
    }

    Ok(DccPath {
        returns,
        h_path,
        q_path,
        seed,
        burn_in,
    })
}

/// Result of the two-step DCC fit.
#[derive(Debug, Clone)]
pub struct DccFit {
    pub params: DccParams,
    /// Filtered conditional covariances; `h_path[t]` belongs to
    /// `returns[t]` and the final extra element is the one-step-ahead
    /// forecast covariance.
    pub h_path: Vec<Sym2>,
    /// Maximized second-step (correlation) log-likelihood contribution.
    pub corr_loglik: f64,
    /// Either margin or the correlation step ended at its boundary.
    pub boundary: bool,
}

/// Two-step quasi-likelihood estimation: per-margin GARCH(1,1) QML fits,
/// then `Qbar` fixed at the sample correlation of standardized residuals
/// and `(gamma, eta)` estimated by maximizing the correlation
/// quasi-likelihood over `gamma + eta < 1`.
pub fn fit_dcc_two_step(returns: &[[f64; 2]]) -> Result<DccFit> {
    fit_dcc_impl(returns, None)
}

/// Same fit warm-started from `start`, for rolling-window loops.
pub fn fit_dcc_two_step_warm(returns: &[[f64; 2]], start: &DccParams) -> Result<DccFit> {
    fit_dcc_impl(returns, Some(start))
}

fn fit_dcc_impl(returns: &[[f64; 2]], start: Option<&DccParams>) -> Result<DccFit> {
    let n = returns.len();
    if n < 200 {
        return Err(Error::InsufficientSample(format!(
            "two-step DCC fit needs >= 200 observations, got {n}"
        )));
    }
    let col1: Vec<f64> = returns.iter().map(|r| r[0]).collect();
    let col2: Vec<f64> = returns.iter().map(|r| r[1]).collect();
    let (fit1, fit2) = match start {
        Some(p) => (
            crate::garch::fit_garch_qmle_warm(&col1, &p.garch_1)?,
            crate::garch::fit_garch_qmle_warm(&col2, &p.garch_2)?,
        ),
        None => (fit_garch_qmle(&col1)?, fit_garch_qmle(&col2)?),
    };

    let u: Vec<[f64; 2]> = returns
        .iter()
        .enumerate()
        .map(|(t, r)| [r[0] / fit1.cond_var[t].sqrt(), r[1] / fit2.cond_var[t].sqrt()])
        .collect();

    // Correlation targeting: Qbar is the normalized covariance of u.
    let m1 = mean(&u.iter().map(|v| v[0]).collect::<Vec<_>>());
    let m2 = mean(&u.iter().map(|v| v[1]).collect::<Vec<_>>());
    let (mut c11, mut c12, mut c22) = (0.0, 0.0, 0.0);
    for v in &u {
        c11 += (v[0] - m1) * (v[0] - m1);
        c12 += (v[0] - m1) * (v[1] - m2);
        c22 += (v[1] - m2) * (v[1] - m2);
    }
    let q_bar_offdiag = c12 / (c11 * c22).sqrt();
    if !q_bar_offdiag.is_finite() || q_bar_offdiag.abs() >= 1.0 {
        return Err(Error::DegenerateVariance(
            "standardized residuals have degenerate correlation".into(),
        ));
    }
    let q_bar = Sym2::new(1.0, q_bar_offdiag, 1.0);

    // Step 2: minimize the mean correlation quasi-likelihood in an
    // unconstrained (gamma + eta, gamma share) parameterization.
    let neg_loglik = |theta: &[f64]| {
        let s = 1.0 / (1.0 + (-theta[0].clamp(-40.0, 40.0)).exp());
        let ratio = 1.0 / (1.0 + (-theta[1].clamp(-40.0, 40.0)).exp());
        let (gamma, eta) = (s * ratio, s * (1.0 - ratio));
        correlation_neg_loglik(&u, &q_bar, gamma, eta)
    };
    let (theta0, nm) = match start {
        Some(p) => {
            let s = (p.gamma + p.eta).clamp(1e-6, 1.0 - 1e-6);
            (
                [logit_pair(s), logit_pair(p.gamma / s)],
                NelderMead {
                    initial_step: 0.08,
                    max_iter: 400,
                    ..NelderMead::default()
                },
            )
        }
        None => (
            [logit_pair(0.95), logit_pair(0.05 / 0.95)],
            NelderMead::default(),
        ),
    };
    let res = nm.minimize(&theta0, neg_loglik);
    let s = 1.0 / (1.0 + (-res.x[0].clamp(-40.0, 40.0)).exp());
    let ratio = 1.0 / (1.0 + (-res.x[1].clamp(-40.0, 40.0)).exp());
    let (gamma, eta) = (s * ratio, s * (1.0 - ratio));

    let params = DccParams {
        garch_1: fit1.params,
        garch_2: fit2.params,
        q_bar_offdiag,
        gamma,
        eta,
    };
    let h_path = filter_covariances(&params, returns, &fit1, &fit2);
    Ok(DccFit {
        params,
        h_path,
        corr_loglik: -res.f * n as f64,
        boundary: fit1.boundary || fit2.boundary || gamma + eta >= 1.0 - 1e-6,
    })
}

fn logit_pair(p: f64) -> f64 {
    let p = p.clamp(1e-9, 1.0 - 1e-9);
    (p / (1.0 - p)).ln()
}

/// Mean of `log(1 - rho_t^2) + (u1^2 + u2^2 - 2 rho_t u1 u2)/(1 - rho_t^2)`
/// along the Q recursion; the `(gamma, eta)`-relevant part of the Gaussian
/// log-likelihood.
fn correlation_neg_loglik(u: &[[f64; 2]], q_bar: &Sym2, gamma: f64, eta: f64) -> f64 {
    let mut q = *q_bar;
    let mut acc = 0.0;
    let a = 1.0 - gamma - eta;
    for (t, ut) in u.iter().enumerate() {
        if t > 0 {
            let up = u[t - 1];
            q = Sym2::new(
                a * q_bar.v11 + gamma * up[0] * up[0] + eta * q.v11,
                a * q_bar.v12 + gamma * up[0] * up[1] + eta * q.v12,
                a * q_bar.v22 + gamma * up[1] * up[1] + eta * q.v22,
            );
        }
        let rho = (q.v12 / (q.v11 * q.v22).sqrt()).clamp(-0.999_999, 0.999_999);
        let one_minus = 1.0 - rho * rho;
        acc += one_minus.ln()
            + (ut[0] * ut[0] + ut[1] * ut[1] - 2.0 * rho * ut[0] * ut[1]) / one_minus;
    }
    acc / u.len() as f64
}

/// Filtered conditional covariances under `params`, using the margins'
/// fitted variance paths. Output has length `n + 1`; the last element is
/// the one-step-ahead forecast.
fn filter_covariances(
    params: &DccParams,
    returns: &[[f64; 2]],
    fit1: &GarchFit,
    fit2: &GarchFit,
) -> Vec<Sym2> {
    let n = returns.len();
    let q_bar = params.q_bar();
    let a = 1.0 - params.gamma - params.eta;
    let mut q = q_bar;
    let mut out = Vec::with_capacity(n + 1);
    for t in 0..=n {
        if t > 0 {
            let up = [
                returns[t - 1][0] / fit1.cond_var[t - 1].sqrt(),
                returns[t - 1][1] / fit2.cond_var[t - 1].sqrt(),
            ];
            q = Sym2::new(
                a * q_bar.v11 + params.gamma * up[0] * up[0] + params.eta * q.v11,
                a * q_bar.v12 + params.gamma * up[0] * up[1] + params.eta * q.v12,
                a * q_bar.v22 + params.gamma * up[1] * up[1] + params.eta * q.v22,
            );
        }
        let c = q.normalized();
        let (v1, v2) = (fit1.cond_var[t], fit2.cond_var[t]);
        out.push(Sym2::new(v1, (v1 * v2).sqrt() * c.v12, v2));
    }
    out
}

/// Fixed-weight portfolio description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioSpec {
    /// Asset weights, entries in [0, 1] summing to one.
    pub w: [f64; 2],
    /// Initial portfolio value.
    pub v0: f64,
}

impl PortfolioSpec {
    pub fn new(w: [f64; 2], v0: f64) -> Result<Self> {
        if w.iter().any(|&x| !(0.0..=1.0).contains(&x) || !x.is_finite()) {
            return Err(Error::invalid(format!("weights {w:?} must lie in [0, 1]")));
        }
        if ((w[0] + w[1]) - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "weights {w:?} must sum to one (off by {})",
                (w[0] + w[1]) - 1.0
            )));
        }
        if !(v0.is_finite() && v0 > 0.0) {
            return Err(Error::invalid(format!("initial value must be > 0, got {v0}")));
        }
        Ok(Self { w, v0 })
    }

    pub fn equal_weight() -> Self {
        Self { w: [0.5, 0.5], v0: 1.0 }
    }
}

/// Portfolio returns under per-step rebalancing to constant weights.
///
/// Implements the holdings recursion `lambda_{t,i} = w_i V_t / S_{t,i}`
/// on synthetic prices grown from the relative returns, and checks the
/// resulting returns against the algebraically equal weighted mean
/// `w_1 R_{t,1} + w_2 R_{t,2}` to 1e-12.
pub fn portfolio_returns(asset_returns: &[[f64; 2]], spec: &PortfolioSpec) -> Result<Vec<f64>> {
    if let Some(r) = asset_returns
        .iter()
        .flat_map(|r| r.iter())
        .find(|&&r| !(r.is_finite() && r > -1.0))
    {
        return Err(Error::invalid(format!(
            "relative return {r} would make a price nonpositive"
        )));
    }
    let mut prices = [1.0_f64, 1.0];
    let mut value = spec.v0;
    let mut out = Vec::with_capacity(asset_returns.len());
    for r in asset_returns {
        let holdings = [spec.w[0] * value / prices[0], spec.w[1] * value / prices[1]];
        let y = (r[0] * holdings[0] * prices[0] + r[1] * holdings[1] * prices[1]) / value;
        let direct = spec.w[0] * r[0] + spec.w[1] * r[1];
        if (y - direct).abs() > 1e-12 {
            return Err(Error::Numerical(format!(
                "rebalancing recursion drifted from the weighted mean by {}",
                (y - direct).abs()
            )));
        }
        prices = [prices[0] * (1.0 + r[0]), prices[1] * (1.0 + r[1])];
        value = holdings[0] * prices[0] + holdings[1] * prices[1];
        out.push(y);
    }
    Ok(out)
}

/// Exact one-step portfolio quantile forecast
/// `sqrt(w' H_{t+1} w) * q_alpha`.
pub fn forecast_portfolio_quantile_h1(
    h_next: &Sym2,
    w: [f64; 2],
    alpha: f64,
) -> Result<QuantileForecast> {
    let var = h_next.quad_form(w);
    if !(var.is_finite() && var > 0.0) {
        return Err(Error::invalid(format!(
            "portfolio variance w'Hw = {var} must be > 0"
        )));
    }
    let q = norm_quantile(alpha)?;
    Ok(QuantileForecast {
        t: 0,
        h: 1,
        alpha,
        value: var.sqrt() * q,
        method: ForecastMethod::ExactNormal,
    })
}
