//! CSV price ingestion, return construction and the rolling-window
//! application study on real (or synthetic) price histories.
//!
//! Input files carry a header `date,price` or `date,price,price2` with
//! ISO-8601 dates. Rows with missing fields or non-finite prices are
//! skipped and counted; malformed dates or unparseable numbers are hard
//! errors carrying the file name and line number. Multi-asset analyses
//! built from two files align on the intersection of their dates.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backtest::{backtest_report, exceedance_indicators, Orientation};
use crate::dmtest::dm_test;
use crate::error::{Error, Result};
use crate::scoring::{mean_score, QuantileScorer};

use super::config::{ExperimentConfig, MethodId};
use super::experiments::{rolling_bivariate, rolling_univariate};
use super::report::{ExperimentReport, LabeledBacktest, MeanScoreRow, Provenance};

/// Observation frequency metadata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    Daily,
    Unknown,
}

/// Aligned date/price rows for one or two assets.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub dates: Vec<String>,
    /// One column per asset.
    pub prices: Vec<Vec<f64>>,
    /// Rows dropped for missing or non-finite fields.
    pub skipped_rows: usize,
}

impl PriceTable {
    pub fn n_assets(&self) -> usize {
        self.prices.len()
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }
}

/// Time-indexed return observations with frequency metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    /// Date of each return (the date of the later price).
    pub dates: Vec<String>,
    pub values: ReturnValues,
    pub frequency: Frequency,
}

/// Univariate or bivariate return payload.
#[derive(Debug, Clone, PartialEq)]
pub enum ReturnValues {
    Univariate(Vec<f64>),
    Bivariate(Vec<[f64; 2]>),
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        match &self.values {
            ReturnValues::Univariate(v) => v.len(),
            ReturnValues::Bivariate(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn valid_iso_date(s: &str) -> bool {
    let bytes = s.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return false;
    }
    let digits = |r: std::ops::Range<usize>| s[r].chars().all(|c| c.is_ascii_digit());
    if !(digits(0..4) && digits(5..7) && digits(8..10)) {
        return false;
    }
    let month: u32 = s[5..7].parse().unwrap_or(0);
    let day: u32 = s[8..10].parse().unwrap_or(0);
    (1..=12).contains(&month) && (1..=31).contains(&day)
}

/// Loads a price CSV with header `date,price[,price2]`.
pub fn load_prices_csv(path: &Path) -> Result<PriceTable> {
    let display = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{display}: {e}")))?;

    let headers = reader
        .headers()
        .map_err(|e| Error::Config(format!("{display}: {e}")))?
        .clone();
    if headers.len() < 2 || headers.len() > 3 || !headers[0].eq_ignore_ascii_case("date") {
        return Err(Error::Config(format!(
            "{display}: expected header date,price[,price2], got {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let n_assets = headers.len() - 1;

    let mut dates = Vec::new();
    let mut prices = vec![Vec::new(); n_assets];
    let mut skipped = 0usize;
    for (i, record) in reader.records().enumerate() {
        let line = i + 2; // header is line 1
        let record = record.map_err(|e| Error::CsvParse {
            path: display.clone(),
            line,
            msg: e.to_string(),
        })?;
        let date = record.get(0).unwrap_or("").trim().to_string();
        if date.is_empty() {
            skipped += 1;
            continue;
        }
        if !valid_iso_date(&date) {
            return Err(Error::CsvParse {
                path: display.clone(),
                line,
                msg: format!("date '{date}' is not ISO-8601 (YYYY-MM-DD)"),
            });
        }
        let mut row = Vec::with_capacity(n_assets);
        let mut missing = false;
        for a in 0..n_assets {
            let field = record.get(a + 1).unwrap_or("").trim();
            if field.is_empty() || field.eq_ignore_ascii_case("nan") {
                missing = true;
                break;
            }
            let value: f64 = field.parse().map_err(|_| Error::CsvParse {
                path: display.clone(),
                line,
                msg: format!("price '{field}' is not a number"),
            })?;
            if !value.is_finite() {
                missing = true;
                break;
            }
            row.push(value);
        }
        if missing {
            skipped += 1;
            continue;
        }
        dates.push(date);
        for (a, v) in row.into_iter().enumerate() {
            prices[a].push(v);
        }
    }
    if dates.len() < 2 {
        return Err(Error::Config(format!(
            "{display}: fewer than two usable price rows"
        )));
    }
    Ok(PriceTable {
        dates,
        prices,
        skipped_rows: skipped,
    })
}

/// Inner-joins two single-asset tables on their dates.
pub fn align_price_tables(a: &PriceTable, b: &PriceTable) -> Result<PriceTable> {
    if a.n_assets() != 1 || b.n_assets() != 1 {
        return Err(Error::Config("alignment expects two single-asset tables".into()));
    }
    let index: std::collections::HashMap<&str, usize> = b
        .dates
        .iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i))
        .collect();
    let mut dates = Vec::new();
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    for (i, d) in a.dates.iter().enumerate() {
        if let Some(&j) = index.get(d.as_str()) {
            dates.push(d.clone());
            p1.push(a.prices[0][i]);
            p2.push(b.prices[0][j]);
        }
    }
    if dates.len() < 2 {
        return Err(Error::Config(
            "date intersection of the two price files is empty or has fewer than two rows".into(),
        ));
    }
    Ok(PriceTable {
        dates,
        prices: vec![p1, p2],
        skipped_rows: a.skipped_rows + b.skipped_rows,
    })
}

/// Log-returns `ln S_t - ln S_{t-1}` for a univariate table.
pub fn to_log_returns(table: &PriceTable) -> Result<ReturnSeries> {
    if table.n_assets() != 1 {
        return Err(Error::Config("log-return construction expects one price column".into()));
    }
    let p = &table.prices[0];
    if let Some(bad) = p.iter().find(|&&v| v <= 0.0) {
        return Err(Error::invalid(format!(
            "nonpositive price {bad} cannot produce log-returns"
        )));
    }
    let values = p.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    Ok(ReturnSeries {
        dates: table.dates[1..].to_vec(),
        values: ReturnValues::Univariate(values),
        frequency: Frequency::Daily,
    })
}

/// Relative returns `(S_t - S_{t-1}) / S_{t-1}` for each asset column.
pub fn to_relative_returns(table: &PriceTable) -> Result<ReturnSeries> {
    for col in &table.prices {
        if let Some(bad) = col.iter().find(|&&v| v <= 0.0) {
            return Err(Error::invalid(format!(
                "nonpositive price {bad} cannot produce relative returns"
            )));
        }
    }
    let values = match table.n_assets() {
        1 => ReturnValues::Univariate(
            table.prices[0].windows(2).map(|w| w[1] / w[0] - 1.0).collect(),
        ),
        2 => {
            let a = &table.prices[0];
            let b = &table.prices[1];
            ReturnValues::Bivariate(
                (1..table.len())
                    .map(|t| [a[t] / a[t - 1] - 1.0, b[t] / b[t - 1] - 1.0])
                    .collect(),
            )
        }
        n => return Err(Error::Config(format!("unsupported asset count {n}"))),
    };
    Ok(ReturnSeries {
        dates: table.dates[1..].to_vec(),
        values,
        frequency: Frequency::Daily,
    })
}

/// Rolling-window forecast comparison on a price history.
///
/// Univariate inputs run the fitted-conditional versus
/// square-root-of-time comparison on log-returns for every configured
/// `(h, alpha)`; bivariate inputs run the one-step portfolio comparison of
/// the univariate fit against the multivariate fit on relative returns.
pub fn run_application(
    prices: &Path,
    prices2: Option<&Path>,
    config: &ExperimentConfig,
) -> Result<ExperimentReport> {
    config.validate()?;
    let table = {
        let first = load_prices_csv(prices)?;
        match prices2 {
            Some(second) => align_price_tables(&first, &load_prices_csv(second)?)?,
            None => first,
        }
    };
    let returns = match table.n_assets() {
        1 => to_log_returns(&table)?,
        _ => to_relative_returns(&table)?,
    };
    run_application_on_returns(&returns, config, Some(prices.display().to_string()))
}

/// The application study on already-constructed returns; exposed so that
/// synthetic round-trip checks can compare CSV-ingested and in-memory
/// runs.
pub fn run_application_on_returns(
    returns: &ReturnSeries,
    config: &ExperimentConfig,
    source: Option<String>,
) -> Result<ExperimentReport> {
    let max_h = *config.horizons.iter().max().expect("validated nonempty");
    let needed = config.window + max_h + 1;
    if returns.len() < needed {
        return Err(Error::InsufficientSample(format!(
            "application needs at least window + max(h) + 1 = {needed} usable returns, got {}",
            returns.len()
        )));
    }

    let mut report = ExperimentReport::new(Provenance::new(config.digest(), config.seed));
    if let Some(src) = source {
        report.provenance.notes.push(format!("prices from {src}"));
    }

    let attach_context = |e: Error| match e {
        Error::DegenerateVariance(msg) => {
            Error::DegenerateVariance(format!("{msg} (while fitting the rolling window)"))
        }
        other => other,
    };

    match &returns.values {
        ReturnValues::Univariate(r) => {
            let methods = config
                .methods
                .unwrap_or([MethodId::SqrtTimeRule, MethodId::FittedConditional]);
            for &h in &config.horizons {
                let rolled = rolling_univariate(
                    r,
                    None,
                    config.window,
                    h,
                    &config.alphas,
                    config.mc_size,
                    methods,
                    config.seed,
                )
                .map_err(attach_context)?;
                push_rows(&mut report, &rolled.realizations, &rolled.forecasts, h, config, None)?;
            }
        }
        ReturnValues::Bivariate(r) => {
            if config.horizons != [1] {
                return Err(Error::Config(
                    "bivariate applications are one-step only (horizons = [1])".into(),
                ));
            }
            let w = config.portfolio_weights();
            let rolled =
                rolling_bivariate(r, config.window, &config.alphas, w).map_err(attach_context)?;
            let c1: Vec<f64> = r.iter().map(|x| x[0]).collect();
            let c2: Vec<f64> = r.iter().map(|x| x[1]).collect();
            let corr = correlation(&c1, &c2);
            push_rows(
                &mut report,
                &rolled.realizations,
                &rolled.forecasts,
                1,
                config,
                Some(corr),
            )?;
        }
    }
    Ok(report)
}

fn push_rows(
    report: &mut ExperimentReport,
    realizations: &[f64],
    forecasts: &[Vec<Vec<f64>>; 2],
    h: usize,
    config: &ExperimentConfig,
    corr: Option<f64>,
) -> Result<()> {
    for (a, &alpha) in config.alphas.iter().enumerate() {
        let scorer = QuantileScorer::sstar(alpha)?;
        let ms_f = mean_score(&forecasts[0][a], realizations, &scorer)?;
        let ms_g = mean_score(&forecasts[1][a], realizations, &scorer)?;
        let dm = dm_test(&ms_f.series, &ms_g.series, h)?;
        let diff = ms_f.mean - ms_g.mean;
        report.mean_scores.push(MeanScoreRow {
            h,
            alpha,
            n: dm.n,
            m_f: ms_f.mean,
            m_g: ms_g.mean,
            diff,
            rel_diff: if ms_f.mean != 0.0 { Some(diff / ms_f.mean) } else { None },
            sigma_hat: dm.sigma_hat,
            t_stat: dm.t_stat,
            p_value: dm.p_value,
            fallback_flag: dm.fallback_flag,
            degenerate: dm.degenerate,
            corr,
        });
        let series =
            exceedance_indicators(&forecasts[1][a], realizations, alpha, h, Orientation::LowerTail)?;
        report.backtests.push(LabeledBacktest {
            label: "conditional".to_string(),
            h,
            alpha,
            report: backtest_report(&series)?,
        });
    }
    Ok(())
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
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

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn write_csv(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn loads_and_transforms_prices() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "p.csv",
            "date,price\n2020-01-01,100\n2020-01-02,110\n2020-01-03,110\n",
        );
        let table = load_prices_csv(&path).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.skipped_rows, 0);

        let lr = to_log_returns(&table).unwrap();
        match &lr.values {
            ReturnValues::Univariate(v) => {
                assert_abs_diff_eq!(v[0], 1.1f64.ln(), epsilon = 1e-12);
                assert_abs_diff_eq!(v[0], 0.09531, epsilon = 1e-5);
                assert_eq!(v[1], 0.0);
            }
            _ => panic!("expected univariate returns"),
        }

        let rr = to_relative_returns(&table).unwrap();
        match &rr.values {
            ReturnValues::Univariate(v) => {
                assert_abs_diff_eq!(v[0], 0.1, epsilon = 1e-12);
            }
            _ => panic!("expected univariate returns"),
        }
    }

    #[test]
    fn skips_missing_rows_and_reports_bad_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_csv(
            dir.path(),
            "gaps.csv",
            "date,price\n2020-01-01,100\n2020-01-02,\n2020-01-03,NaN\n2020-01-06,104\n",
        );
        let table = load_prices_csv(&path).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.skipped_rows, 2);

        let bad_date = write_csv(dir.path(), "bad_date.csv", "date,price\n01/02/2020,100\n");
        match load_prices_csv(&bad_date) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected CSV parse error, got {other:?}"),
        }

        let bad_price = write_csv(
            dir.path(),
            "bad_price.csv",
            "date,price\n2020-01-01,100\n2020-01-02,abc\n",
        );
        match load_prices_csv(&bad_price) {
            Err(Error::CsvParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected CSV parse error, got {other:?}"),
        }
    }

    #[test]
    fn disjoint_dates_fail_alignment() {
        let dir = tempfile::tempdir().unwrap();
        let a = load_prices_csv(&write_csv(
            dir.path(),
            "a.csv",
            "date,price\n2020-01-01,1\n2020-01-02,2\n",
        ))
        .unwrap();
        let b = load_prices_csv(&write_csv(
            dir.path(),
            "b.csv",
            "date,price\n2021-01-01,1\n2021-01-02,2\n",
        ))
        .unwrap();
        assert!(align_price_tables(&a, &b).is_err());

        let c = load_prices_csv(&write_csv(
            dir.path(),
            "c.csv",
            "date,price\n2020-01-02,5\n2020-01-01,4\n2020-01-03,6\n",
        ))
        .unwrap();
        let joined = align_price_tables(&a, &c).unwrap();
        assert_eq!(joined.len(), 2);
        assert_eq!(joined.prices[0], vec![1.0, 2.0]);
        assert_eq!(joined.prices[1], vec![4.0, 5.0]);
    }

    #[test]
    fn nonpositive_prices_rejected_for_log_returns() {
        let table = PriceTable {
            dates: vec!["2020-01-01".into(), "2020-01-02".into()],
            prices: vec![vec![100.0, -1.0]],
            skipped_rows: 0,
        };
        assert!(to_log_returns(&table).is_err());
        assert!(to_relative_returns(&table).is_err());
    }
}
