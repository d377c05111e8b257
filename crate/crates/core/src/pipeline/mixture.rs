//! Demonstration that a strictly consistent quantile score cannot tell two
//! information sets apart when both imply the same conditional quantile,
//! while a strictly proper rule on the full predictive distribution can.
//!
//! The construction: `Y = B X1 + (1 - B) X2` with `B ~ Ber(1/2)`,
//! `X1 ~ N(0, 1)` and `X2 ~ N(q_alpha (1 - sigma), sigma^2)`. Both the
//! mixture (trivial information) and the realized component (knowing `B`)
//! have conditional `alpha`-quantile exactly `q_alpha`, so the mean
//! quantile scores coincide. The conditional distributions differ, so the
//! Gaussian log score separates them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::{log_score_gaussian, mean_score, QuantileScorer};
use crate::stats::{norm_quantile, sample_variance};

use super::config::MixtureSpec;
use super::seed::{derive_seed, SeedPurpose};

/// Output of the mixture demonstration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixtureReport {
    pub alpha: f64,
    pub sigma: f64,
    pub n: usize,
    /// Conditional quantile shared by both information sets.
    pub q_alpha: f64,
    /// Second component's quantile computed from its own parameters;
    /// equals `q_alpha` up to rounding.
    pub component_quantile: f64,
    pub quantile_mean_f: f64,
    pub quantile_mean_g: f64,
    pub quantile_diff: f64,
    /// Monte Carlo standard error of the quantile-score differential mean.
    pub quantile_diff_se: f64,
    pub log_mean_f: f64,
    pub log_mean_g: f64,
    pub log_diff: f64,
    /// Monte Carlo standard error of the log-score differential mean.
    pub log_diff_se: f64,
}

impl MixtureReport {
    /// The quantile score cannot separate the information sets: zero
    /// differential, or one within three standard errors of zero.
    pub fn quantile_scores_indistinguishable(&self) -> bool {
        self.quantile_diff == 0.0 || self.quantile_diff.abs() < 3.0 * self.quantile_diff_se
    }

    /// The log score strictly separates them.
    pub fn log_scores_separated(&self) -> bool {
        self.log_diff > 3.0 * self.log_diff_se
    }
}

/// Runs the demonstration on `n` simulated draws.
pub fn run_mixture_demo(spec: &MixtureSpec, n: usize, seed: u64) -> Result<MixtureReport> {
    spec.validate()?;
    if n < 10_000 {
        return Err(Error::invalid(format!(
            "mixture demo needs n >= 10000 draws for stable comparisons, got {n}"
        )));
    }
    let alpha = spec.alpha;
    let sigma = spec.sigma;
    let q_alpha = norm_quantile(alpha)?;
    let mu2 = q_alpha * (1.0 - sigma);
    // The second component's own alpha-quantile: mu2 + sigma q_alpha.
    let component_quantile = mu2 + sigma * q_alpha;

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, SeedPurpose::Mixture, 0));
    let mut ys = Vec::with_capacity(n);
    let mut components = Vec::with_capacity(n);
    for _ in 0..n {
        let b: bool = rng.gen_bool(0.5);
        let z: f64 = StandardNormal.sample(&mut rng);
        let y = if b { z } else { mu2 + sigma * z };
        ys.push(y);
        components.push(b);
    }

    // Quantile forecasts: the trivial information set forecasts the
    // mixture quantile, the component information set forecasts the
    // realized component's quantile. Both equal q_alpha analytically.
    let forecasts_f = vec![q_alpha; n];
    let forecasts_g: Vec<f64> = components
        .iter()
        .map(|&b| if b { q_alpha } else { component_quantile })
        .collect();

    let scorer = QuantileScorer::sstar(alpha)?;
    let ms_f = mean_score(&forecasts_f, &ys, &scorer)?;
    let ms_g = mean_score(&forecasts_g, &ys, &scorer)?;
    let quantile_diff_se = differential_se(ms_f.series.values(), ms_g.series.values());

    // Log scores: mixture density under F, realized component under G.
    let var2 = sigma * sigma;
    let log_f: Vec<f64> = ys
        .iter()
        .map(|&y| {
            let d1 = crate::stats::norm_pdf(y);
            let d2 = crate::stats::norm_pdf((y - mu2) / sigma) / sigma;
            -(0.5 * d1 + 0.5 * d2).ln()
        })
        .collect();
    let log_g: Vec<f64> = ys
        .iter()
        .zip(&components)
        .map(|(&y, &b)| {
            if b {
                log_score_gaussian(0.0, 1.0, y)
            } else {
                log_score_gaussian(mu2, var2, y)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let log_mean_f = crate::stats::mean(&log_f);
    let log_mean_g = crate::stats::mean(&log_g);
    let log_diff_se = differential_se(&log_f, &log_g);

    Ok(MixtureReport {
        alpha,
        sigma,
        n,
        q_alpha,
        component_quantile,
        quantile_mean_f: ms_f.mean,
        quantile_mean_g: ms_g.mean,
        quantile_diff: ms_f.mean - ms_g.mean,
        quantile_diff_se,
        log_mean_f,
        log_mean_g,
        log_diff: log_mean_f - log_mean_g,
        log_diff_se,
    })
}

fn differential_se(a: &[f64], b: &[f64]) -> f64 {
    let z: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if z.iter().all(|&v| v == 0.0) {
        return 0.0;
    }
    (sample_variance(&z) / z.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn component_quantile_identity() {
        // q_alpha (1 - sigma) + sigma q_alpha = q_alpha for any sigma.
        for &(alpha, sigma) in &[(0.05, 2.0), (0.01, 1.5), (0.2, 4.0)] {
            let spec = MixtureSpec { alpha, sigma };
            let rep = run_mixture_demo(&spec, 10_000, 3).unwrap();
            assert_abs_diff_eq!(rep.component_quantile, rep.q_alpha, epsilon = 1e-12);
        }
    }

    #[test]
    fn quantile_level_is_attained_by_the_mixture() {
        let spec = MixtureSpec { alpha: 0.05, sigma: 2.0 };
        let rep = run_mixture_demo(&spec, 200_000, 9).unwrap();
        assert_abs_diff_eq!(rep.q_alpha, -1.644_85, epsilon = 1e-5);
        // Empirical check that P(Y <= q_alpha) is alpha.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(9, SeedPurpose::Mixture, 0));
        let mut below = 0usize;
        let n = 200_000;
        let mu2 = rep.q_alpha * (1.0 - 2.0);
        for _ in 0..n {
            let b: bool = rng.gen_bool(0.5);
            let z: f64 = StandardNormal.sample(&mut rng);
            let y = if b { z } else { mu2 + 2.0 * z };
            if y <= rep.q_alpha {
                below += 1;
            }
        }
        assert_abs_diff_eq!(below as f64 / n as f64, 0.05, epsilon = 0.003);
    }

    #[test]
    fn scores_separate_only_under_the_proper_rule() {
        let spec = MixtureSpec { alpha: 0.05, sigma: 2.0 };
        let rep = run_mixture_demo(&spec, 100_000, 17).unwrap();
        assert!(rep.quantile_scores_indistinguishable());
        assert!(rep.log_scores_separated());
        assert!(rep.log_mean_g < rep.log_mean_f);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(run_mixture_demo(&MixtureSpec { alpha: 0.05, sigma: 1.0 }, 20_000, 1).is_err());
        assert!(run_mixture_demo(&MixtureSpec { alpha: 0.05, sigma: 0.5 }, 20_000, 1).is_err());
        assert!(run_mixture_demo(&MixtureSpec { alpha: 1.5, sigma: 2.0 }, 20_000, 1).is_err());
        assert!(run_mixture_demo(&MixtureSpec { alpha: 0.05, sigma: 2.0 }, 100, 1).is_err());
    }
}
