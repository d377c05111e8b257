//! Simulation experiments: huge-sample mean-score comparisons and
//! rolling-window power studies, for both the univariate GARCH and the
//! bivariate DCC data-generating processes.

use crate::backtest::{backtest_report, exceedance_indicators, Orientation};
use crate::dcc::{
    fit_dcc_two_step, fit_dcc_two_step_warm, forecast_portfolio_quantile_h1, simulate_dcc,
    DccParams,
};
use crate::dmtest::{dm_test, DmTestResult};
use crate::error::{Error, Result};
use crate::garch::{
    fit_garch_qmle_warm, mc_h_step_sums, simulate_garch, trailing_moments,
    Aggregation, GarchParams, GarchState, DEFAULT_BURN_IN,
};
use crate::scoring::{mean_score, MeanScore, QuantileScorer};
use crate::stats::{empirical_quantile, norm_quantile};

use super::config::{DgpConfig, ExperimentConfig, MethodId};
use super::report::{ExperimentReport, LabeledBacktest, MeanScoreRow, PowerRow, Provenance};
use super::seed::{derive_seed, SeedPurpose};

/// Length of the independent return sample behind the huge-sample
/// unconditional quantile.
const UNCONDITIONAL_SAMPLE: usize = 300_000;

fn method_label(m: MethodId) -> &'static str {
    match m {
        MethodId::IdealConditional => "ideal_conditional",
        MethodId::FittedConditional => "fitted_conditional",
        MethodId::UnconditionalEmpirical => "unconditional_empirical",
        MethodId::SqrtTimeRule => "sqrt_time_rule",
        MethodId::FittedUnivariate => "fitted_univariate",
        MethodId::ExactMultivariate => "exact_multivariate",
        MethodId::FittedMultivariate => "fitted_multivariate",
    }
}

fn row_from_dm(h: usize, alpha: f64, m_f: f64, m_g: f64, dm: &DmTestResult) -> MeanScoreRow {
    let diff = m_f - m_g;
    MeanScoreRow {
        h,
        alpha,
        n: dm.n,
        m_f,
        m_g,
        diff,
        rel_diff: if m_f != 0.0 { Some(diff / m_f) } else { None },
        sigma_hat: dm.sigma_hat,
        t_stat: dm.t_stat,
        p_value: dm.p_value,
        fallback_flag: dm.fallback_flag,
        degenerate: dm.degenerate,
        corr: None,
    }
}

/// Huge-sample comparison of two forecast methods on one simulated path
/// per horizon, shared across all quantile levels.
pub fn run_mean_score_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport::new(Provenance::new(config.digest(), config.seed));
    report
        .provenance
        .notes
        .push("one simulated path per horizon, shared across quantile levels".to_string());

    match &config.dgp {
        DgpConfig::Garch(params) => run_garch_mean_scores(config, params, &mut report)?,
        DgpConfig::Dcc(table) => {
            let params = table.to_params()?;
            run_dcc_mean_scores(config, &params, &mut report)?;
        }
        DgpConfig::Mixture(_) => {
            return Err(Error::Config(
                "mean-score experiments need a GARCH or DCC process; use the mixture demo instead"
                    .into(),
            ))
        }
    }
    Ok(report)
}

fn run_garch_mean_scores(
    config: &ExperimentConfig,
    params: &GarchParams,
    report: &mut ExperimentReport,
) -> Result<()> {
    let [method_f, method_g] = config
        .methods
        .unwrap_or([MethodId::UnconditionalEmpirical, MethodId::IdealConditional]);
    for m in [method_f, method_g] {
        if !matches!(m, MethodId::UnconditionalEmpirical | MethodId::IdealConditional) {
            return Err(Error::Config(format!(
                "mean-score experiments compare ideal_conditional and unconditional_empirical; got {}",
                method_label(m)
            )));
        }
    }
    let n = config.n;

    for &h in &config.horizons {
        let path = simulate_garch(
            params,
            n + h,
            derive_seed(config.seed, SeedPurpose::MainPath, h as u64),
            DEFAULT_BURN_IN,
        )?;
        // Realized h-step returns for origins t = 0..n-1.
        let realizations: Vec<f64> = (0..n)
            .map(|t| path.returns[t + 1..=t + h].iter().sum())
            .collect();

        // Per-origin Monte Carlo samples are shared across levels.
        let mc_sums: Option<Vec<Vec<f64>>> = if h >= 2
            && [method_f, method_g].contains(&MethodId::IdealConditional)
        {
            let sums = (0..n)
                .map(|t| {
                    mc_h_step_sums(
                        params,
                        GarchState {
                            var: path.cond_var[t],
                            ret: path.returns[t],
                        },
                        h,
                        config.mc_size,
                        derive_seed(config.seed, SeedPurpose::McForecast, ((h as u64) << 40) | t as u64),
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            Some(sums)
        } else {
            None
        };

        // Independent sample behind the unconditional empirical quantile.
        let uncond_sample: Option<Vec<f64>> =
            if [method_f, method_g].contains(&MethodId::UnconditionalEmpirical) {
                let aux = simulate_garch(
                    params,
                    UNCONDITIONAL_SAMPLE + h - 1,
                    derive_seed(config.seed, SeedPurpose::AuxiliaryPath, h as u64),
                    DEFAULT_BURN_IN,
                )?;
                Some(aggregate_h_step(&aux.returns, h, Aggregation::Overlapping)?)
            } else {
                None
            };

        for &alpha in &config.alphas {
            let forecast_for = |m: MethodId| -> Result<Vec<f64>> {
                match m {
                    MethodId::IdealConditional => {
                        if h == 1 {
                            let q = norm_quantile(alpha)?;
                            Ok((0..n).map(|t| path.cond_var[t + 1].sqrt() * q).collect())
                        } else {
                            let sums = mc_sums.as_ref().expect("mc sample prepared above");
                            sums.iter().map(|s| empirical_quantile(s, alpha)).collect()
                        }
                    }
                    MethodId::UnconditionalEmpirical => {
                        let sample = uncond_sample.as_ref().expect("sample prepared above");
                        let q = empirical_quantile(sample, alpha)?;
                        Ok(vec![q; n])
                    }
                    _ => unreachable!(),
                }
            };
            let forecasts_f = forecast_for(method_f)?;
            let forecasts_g = forecast_for(method_g)?;

            let scorer = QuantileScorer::sstar(alpha)?;
            let ms_f: MeanScore = mean_score(&forecasts_f, &realizations, &scorer)?;
            let ms_g: MeanScore = mean_score(&forecasts_g, &realizations, &scorer)?;
            let dm = dm_test(&ms_f.series, &ms_g.series, h)?;
            report.mean_scores.push(row_from_dm(h, alpha, ms_f.mean, ms_g.mean, &dm));

            let series =
                exceedance_indicators(&forecasts_g, &realizations, alpha, h, Orientation::LowerTail)?;
            report.backtests.push(LabeledBacktest {
                label: method_label(method_g).to_string(),
                h,
                alpha,
                report: backtest_report(&series)?,
            });
        }
    }
    Ok(())
}

fn run_dcc_mean_scores(
    config: &ExperimentConfig,
    params: &DccParams,
    report: &mut ExperimentReport,
) -> Result<()> {
    if config.horizons != [1] {
        return Err(Error::Config(
            "bivariate mean-score experiments are one-step only (horizons = [1])".into(),
        ));
    }
    let [method_f, method_g] = config
        .methods
        .unwrap_or([MethodId::FittedUnivariate, MethodId::ExactMultivariate]);
    for m in [method_f, method_g] {
        if !matches!(m, MethodId::FittedUnivariate | MethodId::ExactMultivariate) {
            return Err(Error::Config(format!(
                "bivariate mean-score experiments compare fitted_univariate and exact_multivariate; got {}",
                method_label(m)
            )));
        }
    }
    let n = config.n;
    let w = config.portfolio_weights();

    let path = simulate_dcc(
        params,
        n + 1,
        derive_seed(config.seed, SeedPurpose::MainPath, 0),
        DEFAULT_BURN_IN,
    )?;
    // Portfolio returns under per-step rebalancing reduce to the weighted
    // mean of the asset returns.
    let y: Vec<f64> = path.returns.iter().map(|r| w[0] * r[0] + w[1] * r[1]).collect();
    let realizations: Vec<f64> = y[1..].to_vec();

    let corr = {
        let c1: Vec<f64> = path.returns.iter().map(|r| r[0]).collect();
        let c2: Vec<f64> = path.returns.iter().map(|r| r[1]).collect();
        sample_correlation(&c1, &c2)
    };

    // Univariate route: in-sample GARCH(1,1) QML fit on the portfolio
    // series, one-step conditional variances from the fitted recursion.
    let uni_fit = crate::garch::fit_garch_qmle(&y)?;
    if uni_fit.boundary {
        report
            .provenance
            .notes
            .push("portfolio GARCH fit ended at the stationarity boundary".to_string());
    }

    for &alpha in &config.alphas {
        let q = norm_quantile(alpha)?;
        let forecast_for = |m: MethodId| -> Result<Vec<f64>> {
            match m {
                MethodId::FittedUnivariate => {
                    Ok((0..n).map(|t| uni_fit.cond_var[t + 1].sqrt() * q).collect())
                }
                MethodId::ExactMultivariate => (0..n)
                    .map(|t| forecast_portfolio_quantile_h1(&path.h_path[t + 1], w, alpha).map(|f| f.value))
                    .collect(),
                _ => unreachable!(),
            }
        };
        let forecasts_f = forecast_for(method_f)?;
        let forecasts_g = forecast_for(method_g)?;

        let scorer = QuantileScorer::sstar(alpha)?;
        let ms_f = mean_score(&forecasts_f, &realizations, &scorer)?;
        let ms_g = mean_score(&forecasts_g, &realizations, &scorer)?;
        let dm = dm_test(&ms_f.series, &ms_g.series, 1)?;
        let mut row = row_from_dm(1, alpha, ms_f.mean, ms_g.mean, &dm);
        row.corr = Some(corr);
        report.mean_scores.push(row);

        let series =
            exceedance_indicators(&forecasts_g, &realizations, alpha, 1, Orientation::LowerTail)?;
        report.backtests.push(LabeledBacktest {
            label: method_label(method_g).to_string(),
            h: 1,
            alpha,
            report: backtest_report(&series)?,
        });
    }
    Ok(())
}

fn sample_correlation(a: &[f64], b: &[f64]) -> f64 {
    let ma = crate::stats::mean(a);
    let mb = crate::stats::mean(b);
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
        sab += (x - ma) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

fn aggregate_h_step(returns: &[f64], h: usize, mode: Aggregation) -> Result<Vec<f64>> {
    crate::garch::aggregate_h_step(returns, h, mode)
}

/// Per-method forecast streams from one rolling pass over a univariate
/// return series.
pub struct RollingForecasts {
    /// Realized h-step returns, one per forecast origin.
    pub realizations: Vec<f64>,
    /// `forecasts[m][a][t]`: method `m`, level `alphas[a]`, origin `t`.
    pub forecasts: [Vec<Vec<f64>>; 2],
    pub boundary_fits: usize,
    pub total_fits: usize,
}

/// Rolls a fixed estimation window over `returns`, producing aligned
/// forecast streams for the two methods at every requested level.
///
/// `truth` supplies the data-generating parameters and conditional
/// variances when a method needs ideal forecasts.
#[allow(clippy::too_many_arguments)]
pub fn rolling_univariate(
    returns: &[f64],
    truth: Option<(&GarchParams, &[f64])>,
    window: usize,
    h: usize,
    alphas: &[f64],
    mc_size: usize,
    methods: [MethodId; 2],
    master_seed: u64,
) -> Result<RollingForecasts> {
    if returns.len() < window + h {
        return Err(Error::InsufficientSample(format!(
            "rolling comparison needs at least window + h = {} observations, got {}",
            window + h,
            returns.len()
        )));
    }
    let origins: Vec<usize> = (window - 1..returns.len() - h).collect();
    let n = origins.len();
    let mut out = RollingForecasts {
        realizations: Vec::with_capacity(n),
        forecasts: [
            vec![Vec::with_capacity(n); alphas.len()],
            vec![Vec::with_capacity(n); alphas.len()],
        ],
        boundary_fits: 0,
        total_fits: 0,
    };
    let q_alphas: Vec<f64> = alphas
        .iter()
        .map(|&a| norm_quantile(a))
        .collect::<Result<Vec<_>>>()?;

    let mut warm: Option<GarchParams> = None;
    for (idx, &t) in origins.iter().enumerate() {
        out.realizations.push(returns[t + 1..=t + h].iter().sum());
        let win = &returns[t + 1 - window..=t];

        // The fitted route is shared when both methods ask for it.
        let mut fitted: Option<crate::garch::GarchFit> = None;
        for (mi, &m) in methods.iter().enumerate() {
            let values: Vec<f64> = match m {
                MethodId::SqrtTimeRule => {
                    let (mean1, sd1) = trailing_moments(win)?;
                    q_alphas
                        .iter()
                        .map(|&q| (h as f64).sqrt() * sd1 * q + h as f64 * mean1)
                        .collect()
                }
                MethodId::UnconditionalEmpirical => {
                    let sums = aggregate_h_step(win, h, Aggregation::Overlapping)?;
                    alphas
                        .iter()
                        .map(|&a| empirical_quantile(&sums, a))
                        .collect::<Result<Vec<_>>>()?
                }
                MethodId::FittedConditional => {
                    if fitted.is_none() {
                        let start = warm.unwrap_or(GarchParams {
                            kappa: 0.05 * crate::stats::sample_variance(win),
                            phi: 0.1,
                            beta: 0.8,
                        });
                        let fit = fit_garch_qmle_warm(win, &start)?;
                        out.total_fits += 1;
                        if fit.boundary {
                            out.boundary_fits += 1;
                        }
                        warm = Some(fit.params);
                        fitted = Some(fit);
                    }
                    let fit = fitted.as_ref().unwrap();
                    if h == 1 {
                        let next_sd = fit.cond_var[window].sqrt();
                        q_alphas.iter().map(|&q| next_sd * q).collect()
                    } else {
                        let sums = mc_h_step_sums(
                            &fit.params,
                            GarchState {
                                var: fit.cond_var[window - 1],
                                ret: win[window - 1],
                            },
                            h,
                            mc_size,
                            derive_seed(
                                master_seed,
                                SeedPurpose::McForecast,
                                (idx as u64) * 2 + mi as u64,
                            ),
                        )?;
                        alphas
                            .iter()
                            .map(|&a| empirical_quantile(&sums, a))
                            .collect::<Result<Vec<_>>>()?
                    }
                }
                MethodId::IdealConditional => {
                    let (params, cond_var) = truth.ok_or_else(|| {
                        Error::Config("ideal_conditional requires the true process parameters".into())
                    })?;
                    if h == 1 {
                        let next_sd = params.next_var(returns[t], cond_var[t]).sqrt();
                        q_alphas.iter().map(|&q| next_sd * q).collect()
                    } else {
                        let sums = mc_h_step_sums(
                            params,
                            GarchState {
                                var: cond_var[t],
                                ret: returns[t],
                            },
                            h,
                            mc_size,
                            derive_seed(
                                master_seed,
                                SeedPurpose::McForecast,
                                (idx as u64) * 2 + mi as u64,
                            ),
                        )?;
                        alphas
                            .iter()
                            .map(|&a| empirical_quantile(&sums, a))
                            .collect::<Result<Vec<_>>>()?
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "method {} is not a univariate rolling forecaster",
                        method_label(other)
                    )))
                }
            };
            for (a, v) in values.into_iter().enumerate() {
                out.forecasts[mi][a].push(v);
            }
        }
    }
    Ok(out)
}

/// One rolling pass over a bivariate series: univariate fit on the
/// portfolio returns against the two-step multivariate fit.
pub fn rolling_bivariate(
    returns: &[[f64; 2]],
    window: usize,
    alphas: &[f64],
    w: [f64; 2],
) -> Result<RollingForecasts> {
    if returns.len() < window + 1 {
        return Err(Error::InsufficientSample(format!(
            "rolling comparison needs at least window + 1 = {} observations, got {}",
            window + 1,
            returns.len()
        )));
    }
    let y: Vec<f64> = returns.iter().map(|r| w[0] * r[0] + w[1] * r[1]).collect();
    let origins: Vec<usize> = (window - 1..returns.len() - 1).collect();
    let n = origins.len();
    let mut out = RollingForecasts {
        realizations: Vec::with_capacity(n),
        forecasts: [
            vec![Vec::with_capacity(n); alphas.len()],
            vec![Vec::with_capacity(n); alphas.len()],
        ],
        boundary_fits: 0,
        total_fits: 0,
    };
    let q_alphas: Vec<f64> = alphas
        .iter()
        .map(|&a| norm_quantile(a))
        .collect::<Result<Vec<_>>>()?;

    let mut warm_uni: Option<GarchParams> = None;
    let mut warm_mv: Option<DccParams> = None;
    for &t in &origins {
        out.realizations.push(y[t + 1]);
        let win_y = &y[t + 1 - window..=t];
        let win_r = &returns[t + 1 - window..=t];

        let start = warm_uni.unwrap_or(GarchParams {
            kappa: 0.05 * crate::stats::sample_variance(win_y),
            phi: 0.1,
            beta: 0.8,
        });
        let uni = fit_garch_qmle_warm(win_y, &start)?;
        out.total_fits += 1;
        if uni.boundary {
            out.boundary_fits += 1;
        }
        warm_uni = Some(uni.params);
        let next_sd = uni.cond_var[window].sqrt();
        for (a, &q) in q_alphas.iter().enumerate() {
            out.forecasts[0][a].push(next_sd * q);
        }

        let mv = match &warm_mv {
            Some(p) => fit_dcc_two_step_warm(win_r, p)?,
            None => fit_dcc_two_step(win_r)?,
        };
        out.total_fits += 1;
        if mv.boundary {
            out.boundary_fits += 1;
        }
        warm_mv = Some(mv.params);
        let h_next = mv.h_path[window];
        for (a, &alpha) in alphas.iter().enumerate() {
            out.forecasts[1][a].push(forecast_portfolio_quantile_h1(&h_next, w, alpha)?.value);
        }
    }
    Ok(out)
}

/// Rolling-window power study: the fraction of replications in which the
/// one-sided test rejects at the configured level.
pub fn run_power_study(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    if config.replications < 50 {
        return Err(Error::Config(format!(
            "power studies need >= 50 replications, got {}",
            config.replications
        )));
    }
    let mut report = ExperimentReport::new(Provenance::new(config.digest(), config.seed));
    let sizes = config
        .power_sample_sizes
        .clone()
        .unwrap_or_else(|| vec![config.n]);
    let alpha = config.alphas[0];
    report.provenance.notes.push(format!(
        "power cells use the first configured quantile level ({alpha})"
    ));

    match &config.dgp {
        DgpConfig::Garch(params) => {
            let methods = config
                .methods
                .unwrap_or([MethodId::SqrtTimeRule, MethodId::FittedConditional]);
            for &h in &config.horizons {
                for (cell, &n_eval) in sizes.iter().enumerate() {
                    let mut rejections = 0usize;
                    let mut failures = 0usize;
                    let mut boundary = 0usize;
                    let mut fits = 0usize;
                    for rep in 0..config.replications {
                        let counter =
                            ((h as u64) << 48) | ((cell as u64) << 32) | rep as u64;
                        let seed = derive_seed(config.seed, SeedPurpose::Replication, counter);
                        let outcome = power_replication_garch(
                            params,
                            config.window,
                            h,
                            n_eval,
                            alpha,
                            config.mc_size,
                            methods,
                            seed,
                        );
                        match outcome {
                            Ok((dm, rep_boundary, rep_fits)) => {
                                boundary += rep_boundary;
                                fits += rep_fits;
                                if dm.rejects_at(config.level) {
                                    rejections += 1;
                                }
                            }
                            Err(_) => failures += 1,
                        }
                    }
                    report.power.push(power_row(
                        h,
                        n_eval,
                        config.level,
                        config.replications,
                        rejections,
                        failures,
                        boundary,
                        fits,
                    ));
                }
            }
        }
        DgpConfig::Dcc(table) => {
            let params = table.to_params()?;
            if config.horizons != [1] {
                return Err(Error::Config(
                    "bivariate power studies are one-step only (horizons = [1])".into(),
                ));
            }
            let w = config.portfolio_weights();
            for (cell, &n_eval) in sizes.iter().enumerate() {
                let mut rejections = 0usize;
                let mut failures = 0usize;
                let mut boundary = 0usize;
                let mut fits = 0usize;
                for rep in 0..config.replications {
                    let counter = ((cell as u64) << 32) | rep as u64;
                    let seed = derive_seed(config.seed, SeedPurpose::Replication, counter);
                    match power_replication_dcc(&params, config.window, n_eval, alpha, w, seed) {
                        Ok((dm, rep_boundary, rep_fits)) => {
                            boundary += rep_boundary;
                            fits += rep_fits;
                            if dm.rejects_at(config.level) {
                                rejections += 1;
                            }
                        }
                        Err(_) => failures += 1,
                    }
                }
                report.power.push(power_row(
                    1,
                    n_eval,
                    config.level,
                    config.replications,
                    rejections,
                    failures,
                    boundary,
                    fits,
                ));
            }
        }
        DgpConfig::Mixture(_) => {
            return Err(Error::Config("power studies need a GARCH or DCC process".into()))
        }
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn power_row(
    h: usize,
    n: usize,
    level: f64,
    replications: usize,
    rejections: usize,
    failures: usize,
    boundary: usize,
    fits: usize,
) -> PowerRow {
    let completed = replications - failures;
    PowerRow {
        h,
        n,
        level,
        replications,
        rejections,
        power: if completed > 0 {
            rejections as f64 / completed as f64
        } else {
            0.0
        },
        failures,
        flagged: failures as f64 > 0.05 * replications as f64,
        boundary_rate: if fits > 0 { boundary as f64 / fits as f64 } else { 0.0 },
    }
}

#[allow(clippy::too_many_arguments)]
fn power_replication_garch(
    params: &GarchParams,
    window: usize,
    h: usize,
    n_eval: usize,
    alpha: f64,
    mc_size: usize,
    methods: [MethodId; 2],
    seed: u64,
) -> Result<(DmTestResult, usize, usize)> {
    let path = simulate_garch(params, window + n_eval + h - 1, seed, DEFAULT_BURN_IN)?;
    let rolled = rolling_univariate(
        &path.returns,
        Some((params, &path.cond_var)),
        window,
        h,
        &[alpha],
        mc_size,
        methods,
        seed,
    )?;
    let scorer = QuantileScorer::sstar(alpha)?;
    let ms_f = mean_score(&rolled.forecasts[0][0], &rolled.realizations, &scorer)?;
    let ms_g = mean_score(&rolled.forecasts[1][0], &rolled.realizations, &scorer)?;
    let dm = dm_test(&ms_f.series, &ms_g.series, h)?;
    Ok((dm, rolled.boundary_fits, rolled.total_fits))
}

fn power_replication_dcc(
    params: &DccParams,
    window: usize,
    n_eval: usize,
    alpha: f64,
    w: [f64; 2],
    seed: u64,
) -> Result<(DmTestResult, usize, usize)> {
    let path = simulate_dcc(params, window + n_eval, seed, DEFAULT_BURN_IN)?;
    let rolled = rolling_bivariate(&path.returns, window, &[alpha], w)?;
    let scorer = QuantileScorer::sstar(alpha)?;
    let ms_f = mean_score(&rolled.forecasts[0][0], &rolled.realizations, &scorer)?;
    let ms_g = mean_score(&rolled.forecasts[1][0], &rolled.realizations, &scorer)?;
    let dm = dm_test(&ms_f.series, &ms_g.series, 1)?;
    Ok((dm, rolled.boundary_fits, rolled.total_fits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::garch_preset;
    use approx::assert_abs_diff_eq;

    fn small_garch_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(DgpConfig::Garch(garch_preset(1).unwrap()));
        cfg.n = 4000;
        cfg.alphas = vec![0.05];
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn mean_score_experiment_emits_table_shaped_rows() {
        let cfg = small_garch_config();
        let report = run_mean_score_experiment(&cfg).unwrap();
        assert_eq!(report.mean_scores.len(), 1);
        let row = &report.mean_scores[0];
        assert_eq!(row.h, 1);
        assert_eq!(row.n, 4000);
        assert!(row.m_f > row.m_g, "conditional method should score lower");
        let rel = row.rel_diff.unwrap();
        assert_abs_diff_eq!(rel, row.diff / row.m_f, epsilon = 1e-12);
        assert_eq!(report.backtests.len(), 1);
    }

    #[test]
    fn identical_methods_exercise_the_degenerate_path() {
        let mut cfg = small_garch_config();
        cfg.n = 500;
        cfg.methods = Some([MethodId::IdealConditional, MethodId::IdealConditional]);
        let report = run_mean_score_experiment(&cfg).unwrap();
        let row = &report.mean_scores[0];
        assert_eq!(row.diff, 0.0);
        assert!(row.degenerate);
        assert_eq!(row.p_value, 1.0);
    }

    #[test]
    fn reports_are_deterministic_for_fixed_seed() {
        let cfg = small_garch_config();
        let a = run_mean_score_experiment(&cfg).unwrap();
        let b = run_mean_score_experiment(&cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.mean_scores_csv(), b.mean_scores_csv());
    }

    #[test]
    fn mixture_dgp_is_rejected_for_these_experiments() {
        let cfg = ExperimentConfig::new(DgpConfig::Mixture(
            crate::pipeline::config::MixtureSpec { alpha: 0.05, sigma: 2.0 },
        ));
        assert!(run_mean_score_experiment(&cfg).is_err());
        assert!(run_power_study(&cfg).is_err());
    }

    #[test]
    fn power_study_level_one_always_rejects() {
        let mut cfg = small_garch_config();
        cfg.n = 120;
        cfg.window = 100;
        cfg.replications = 50;
        cfg.level = 1.0;
        cfg.methods = Some([MethodId::SqrtTimeRule, MethodId::UnconditionalEmpirical]);
        let report = run_power_study(&cfg).unwrap();
        assert_eq!(report.power.len(), 1);
        let row = &report.power[0];
        assert_eq!(row.failures, 0);
        assert_abs_diff_eq!(row.power, 1.0);
    }
}
