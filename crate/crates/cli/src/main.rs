//! Command-line driver. Every experiment is described by a TOML config
//! (see the repository README for the format); subcommands select what to
//! run. Reports go to `--out <dir>` as CSV + JSON, or to stdout as JSON
//! when no directory is given.
//!
//! Exit codes: 0 success, 2 config or input error, 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use scorecast::error::{Error, Result};
use scorecast::garch::DEFAULT_BURN_IN;
use scorecast::pipeline::{
    self, DgpConfig, ExperimentConfig, ExperimentReport, MixtureSpec,
};

#[derive(Parser)]
#[command(
    name = "scorecast",
    version,
    about = "Forecast evaluation via strictly consistent scoring functions: VaR scoring, information-set tests, exceedance backtests and GARCH/DCC experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment config file (TOML).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write reports into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Override the config's replication count.
    #[arg(long, global = true)]
    replications: Option<usize>,

    /// Restore paper-scale sample sizes (1000 replications, huge samples).
    #[arg(long, global = true)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the configured process and export the path as CSV.
    Simulate {
        /// Path length override (default: the config's n).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Huge-sample mean-score comparison of two forecast methods.
    MeanScores,
    /// Rolling-window power study of the information-set test.
    Power,
    /// Exceedance backtest of ideal one-step forecasts under the
    /// configured process.
    Backtest,
    /// Rolling-window comparison on a CSV price history
    /// (header: date,price[,price2]).
    Apply {
        /// Price file; univariate study on log-returns, or the first
        /// asset of a bivariate study.
        prices: PathBuf,
        /// Second price file; enables the bivariate portfolio study via
        /// date intersection.
        #[arg(long)]
        prices2: Option<PathBuf>,
    },
    /// Gaussian-mixture demonstration: identical quantile scores,
    /// separated log scores.
    MixtureDemo {
        /// Quantile level (overrides the config's mixture section).
        #[arg(long)]
        alpha: Option<f64>,
        /// Mixture scale > 1 (overrides the config's mixture section).
        #[arg(long)]
        sigma: Option<f64>,
        /// Sample size.
        #[arg(long, default_value_t = 1_000_000)]
        n: usize,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs --config <FILE>".into()))?;
    let mut cfg = ExperimentConfig::from_toml_file(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(reps) = cli.replications {
        cfg.replications = reps;
    }
    if cli.paper_scale {
        cfg.apply_paper_scale();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit_report(report: &ExperimentReport, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            report.write_to_dir(dir)?;
            eprintln!("wrote report to {}", dir.display());
            Ok(())
        }
        None => {
            println!("{}", report.to_json()?);
            Ok(())
        }
    }
}

fn emit_text(name: &str, content: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            let mut f = std::fs::File::create(&path)?;
            f.write_all(content.as_bytes())?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { n } => {
            let cfg = load_config(&cli)?;
            let n = n.unwrap_or(cfg.n);
            let csv = simulate_csv(&cfg, n)?;
            emit_text("path.csv", &csv, cli.out.as_deref())
        }
        Command::MeanScores => {
            let cfg = load_config(&cli)?;
            let report = pipeline::run_mean_score_experiment(&cfg)?;
            emit_report(&report, cli.out.as_deref())
        }
        Command::Power => {
            let cfg = load_config(&cli)?;
            let report = pipeline::run_power_study(&cfg)?;
            emit_report(&report, cli.out.as_deref())
        }
        Command::Backtest => {
            let cfg = load_config(&cli)?;
            let report = run_backtest(&cfg)?;
            emit_report(&report, cli.out.as_deref())
        }
        Command::Apply { prices, prices2 } => {
            let cfg = load_config(&cli)?;
            let report = pipeline::run_application(prices, prices2.as_deref(), &cfg)?;
            emit_report(&report, cli.out.as_deref())
        }
        Command::MixtureDemo { alpha, sigma, n } => {
            let spec = mixture_spec(&cli, *alpha, *sigma)?;
            let seed = cli.seed.unwrap_or(1);
            let report = pipeline::run_mixture_demo(&spec, *n, seed)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::Numerical(e.to_string()))?;
            emit_text("mixture.json", &format!("{json}\n"), cli.out.as_deref())
        }
    }
}

fn mixture_spec(cli: &Cli, alpha: Option<f64>, sigma: Option<f64>) -> Result<MixtureSpec> {
    let from_config = cli
        .config
        .as_ref()
        .map(|p| ExperimentConfig::from_toml_file(p))
        .transpose()?
        .and_then(|cfg| match cfg.dgp {
            DgpConfig::Mixture(m) => Some(m),
            _ => None,
        });
    let base = from_config.unwrap_or(MixtureSpec { alpha: 0.05, sigma: 2.0 });
    let spec = MixtureSpec {
        alpha: alpha.unwrap_or(base.alpha),
        sigma: sigma.unwrap_or(base.sigma),
    };
    spec.validate()?;
    Ok(spec)
}

fn simulate_csv(cfg: &ExperimentConfig, n: usize) -> Result<String> {
    match &cfg.dgp {
        DgpConfig::Garch(params) => {
            let path = scorecast::garch::simulate_garch(params, n, cfg.seed, DEFAULT_BURN_IN)?;
            let mut out = String::from("t,return,cond_var\n");
            for (t, (r, v)) in path.returns.iter().zip(&path.cond_var).enumerate() {
                out.push_str(&format!("{t},{r},{v}\n"));
            }
            Ok(out)
        }
        DgpConfig::Dcc(table) => {
            let params = table.to_params()?;
            let path = scorecast::dcc::simulate_dcc(&params, n, cfg.seed, DEFAULT_BURN_IN)?;
            let mut out = String::from("t,return_1,return_2,h_11,h_12,h_22\n");
            for (t, (r, h)) in path.returns.iter().zip(&path.h_path).enumerate() {
                out.push_str(&format!(
                    "{t},{},{},{},{},{}\n",
                    r[0], r[1], h.v11, h.v12, h.v22
                ));
            }
            Ok(out)
        }
        DgpConfig::Mixture(_) => Err(Error::Config(
            "simulate exports GARCH or DCC paths; the mixture has no path to export".into(),
        )),
    }
}

/// Ideal one-step forecasts under the configured process, backtested at
/// every configured level.
fn run_backtest(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    use scorecast::backtest::{backtest_report, exceedance_indicators, Orientation};
    use scorecast::pipeline::{derive_seed, LabeledBacktest, Provenance, SeedPurpose};
    use scorecast::stats::norm_quantile;

    let mut report = ExperimentReport::new(Provenance::new(cfg.digest(), cfg.seed));
    let seed = derive_seed(cfg.seed, SeedPurpose::MainPath, 0);
    match &cfg.dgp {
        DgpConfig::Garch(params) => {
            let path = scorecast::garch::simulate_garch(params, cfg.n + 1, seed, DEFAULT_BURN_IN)?;
            for &alpha in &cfg.alphas {
                let q = norm_quantile(alpha)?;
                let forecasts: Vec<f64> =
                    (0..cfg.n).map(|t| path.cond_var[t + 1].sqrt() * q).collect();
                let realizations: Vec<f64> = path.returns[1..].to_vec();
                let series = exceedance_indicators(
                    &forecasts,
                    &realizations,
                    alpha,
                    1,
                    Orientation::LowerTail,
                )?;
                report.backtests.push(LabeledBacktest {
                    label: "ideal_conditional".to_string(),
                    h: 1,
                    alpha,
                    report: backtest_report(&series)?,
                });
            }
        }
        DgpConfig::Dcc(table) => {
            let params = table.to_params()?;
            let w = cfg.portfolio_weights();
            let path = scorecast::dcc::simulate_dcc(&params, cfg.n + 1, seed, DEFAULT_BURN_IN)?;
            let y: Vec<f64> = path.returns.iter().map(|r| w[0] * r[0] + w[1] * r[1]).collect();
            for &alpha in &cfg.alphas {
                let forecasts: Vec<f64> = (0..cfg.n)
                    .map(|t| {
                        scorecast::dcc::forecast_portfolio_quantile_h1(&path.h_path[t + 1], w, alpha)
                            .map(|f| f.value)
                    })
                    .collect::<Result<_>>()?;
                let series = exceedance_indicators(
                    &forecasts,
                    &y[1..],
                    alpha,
                    1,
                    Orientation::LowerTail,
                )?;
                report.backtests.push(LabeledBacktest {
                    label: "exact_multivariate".to_string(),
                    h: 1,
                    alpha,
                    report: backtest_report(&series)?,
                });
            }
        }
        DgpConfig::Mixture(_) => {
            return Err(Error::Config("backtest needs a GARCH or DCC process".into()))
        }
    }
    Ok(report)
}
