//! Forecast evaluation with strictly consistent scoring functions,
//! applied to value-at-risk: quantile and expectile scores, the one-sided
//! information-set comparison test, exceedance backtests, GARCH(1,1) and
//! bivariate DCC-GARCH simulation and estimation, and reproducible
//! rolling-window experiments.
//!
//! The central objects are scoring functions `S(x, y)` that are strictly
//! consistent for a functional of the predictive distribution: the true
//! conditional functional minimizes the expected score, so mean scores
//! order forecast methods by the information they use. For the
//! `alpha`-quantile the score `S*` ties the mean score of ideal forecasts
//! to the lower-tail expected shortfall, which makes score comparisons
//! directly interpretable for risk management.

pub mod backtest;
pub mod dcc;
pub mod dmtest;
pub mod error;
pub mod garch;
pub mod optim;
pub mod pipeline;
pub mod scoring;
pub mod stats;

pub use backtest::{
    backtest_report, coverage_test, es_identity_check, exceedance_indicators, independence_test,
    BacktestReport, CoverageTest, EsIdentityCheck, ExceedanceSeries, IndependenceTest, Orientation,
};
pub use dcc::{
    fit_dcc_two_step, fit_dcc_two_step_warm, forecast_portfolio_quantile_h1, portfolio_returns,
    simulate_dcc, DccFit, DccParams, DccPath, PortfolioSpec, Sym2,
};
pub use dmtest::{
    dm_test, dm_test_differentials, dm_test_differentials_with, dm_test_with, long_run_variance,
    long_run_variance_bartlett, score_differentials, DmTestResult, LongRunVariance,
    ScoreDifferentialSeries, VarianceEstimator,
};
pub use error::{Error, Result};
pub use garch::{
    aggregate_h_step, fit_garch_qmle, fit_garch_qmle_warm, forecast_quantile_h1,
    forecast_quantile_mc, mc_h_step_sums, simulate_garch, sqrt_time_rule, trailing_moments,
    unconditional_quantile, Aggregation, ForecastMethod, GarchFit, GarchParams, GarchPath,
    GarchState, QuantileForecast, DEFAULT_BURN_IN,
};
pub use scoring::{
    compute_expectile, expectile_score, log_score_gaussian, mean_score, normal_tail_expectation,
    quantile_score_general, quantile_score_sstar, ExpectileScorer, MeanScore, MonotoneG,
    PointScorer, QuantileForm, QuantileScorer, ScoreSeries, ScorerSpec,
};

/// Aligned (time, forecast, realization) triplet for one method.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ForecastRecord {
    pub t: usize,
    pub forecast: f64,
    pub realization: f64,
}
