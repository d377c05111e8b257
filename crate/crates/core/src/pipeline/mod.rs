//! Experiment orchestration: config-driven simulation studies, power
//! studies, rolling-window applications on CSV price data, the mixture
//! demonstration, and deterministic report emission.

pub mod application;
pub mod config;
pub mod experiments;
pub mod mixture;
pub mod report;
pub mod seed;

pub use application::{
    align_price_tables, load_prices_csv, run_application, run_application_on_returns,
    to_log_returns, to_relative_returns, Frequency, PriceTable, ReturnSeries, ReturnValues,
};
pub use config::{
    dcc_preset, garch_preset, DccTable, DgpConfig, ExperimentConfig, MethodId, MixtureSpec,
    PortfolioConfig,
};
pub use experiments::{
    rolling_bivariate, rolling_univariate, run_mean_score_experiment, run_power_study,
    RollingForecasts,
};
pub use mixture::{run_mixture_demo, MixtureReport};
pub use report::{ExperimentReport, LabeledBacktest, MeanScoreRow, PowerRow, Provenance};
pub use seed::{derive_seed, SeedPurpose};
