//! Report assembly and emission. Tables go to CSV with fixed columns,
//! the full report (including provenance) to JSON. Output is
//! deterministic: identical config and seed give byte-identical files.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backtest::BacktestReport;
use crate::error::Result;

/// Where the numbers came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical config rendering.
    pub config_digest: String,
    pub seed: u64,
    pub package_version: String,
    /// Free-form notes, e.g. path-sharing conventions.
    pub notes: Vec<String>,
}

impl Provenance {
    pub fn new(config_digest: String, seed: u64) -> Self {
        Self {
            config_digest,
            seed,
            package_version: env!("CARGO_PKG_VERSION").to_string(),
            notes: Vec::new(),
        }
    }
}

/// One `(h, alpha)` cell of a mean-score comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanScoreRow {
    pub h: usize,
    pub alpha: f64,
    pub n: usize,
    /// Mean score of the smaller-information method.
    pub m_f: f64,
    /// Mean score of the larger-information method.
    pub m_g: f64,
    /// `m_f - m_g`.
    pub diff: f64,
    /// `diff / m_f`; absent when `m_f` is zero.
    pub rel_diff: Option<f64>,
    pub sigma_hat: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub fallback_flag: bool,
    pub degenerate: bool,
    /// Sample correlation of the two asset series (bivariate runs only).
    pub corr: Option<f64>,
}

/// One power-study cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub h: usize,
    pub n: usize,
    pub level: f64,
    pub replications: usize,
    pub rejections: usize,
    pub power: f64,
    /// Replications dropped because a fit or test failed outright.
    pub failures: usize,
    /// More than 5% of replications failed.
    pub flagged: bool,
    /// Fraction of window fits that ended at the stationarity boundary.
    pub boundary_rate: f64,
}

/// A backtest attached to a labeled forecast stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledBacktest {
    pub label: String,
    pub h: usize,
    pub alpha: f64,
    pub report: BacktestReport,
}

/// Full experiment output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub mean_scores: Vec<MeanScoreRow>,
    pub power: Vec<PowerRow>,
    pub backtests: Vec<LabeledBacktest>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(provenance: Provenance) -> Self {
        Self {
            mean_scores: Vec::new(),
            power: Vec::new(),
            backtests: Vec::new(),
            provenance,
        }
    }

    /// CSV rendering of the mean-score table. Columns are fixed:
    /// `h,alpha,n,m_f,m_g,diff,rel_diff,sigma_hat,t_stat,p_value,corr`.
    pub fn mean_scores_csv(&self) -> String {
        let mut out = String::from("h,alpha,n,m_f,m_g,diff,rel_diff,sigma_hat,t_stat,p_value,corr\n");
        for r in &self.mean_scores {
            let rel = r.rel_diff.map(|v| v.to_string()).unwrap_or_default();
            let corr = r.corr.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.h,
                r.alpha,
                r.n,
                r.m_f,
                r.m_g,
                r.diff,
                rel,
                r.sigma_hat,
                r.t_stat,
                r.p_value,
                corr
            ));
        }
        out
    }

    /// CSV rendering of the power table. Columns:
    /// `h,n,level,replications,rejections,power,failures,flagged,boundary_rate`.
    pub fn power_csv(&self) -> String {
        let mut out = String::from("h,n,level,replications,rejections,power,failures,flagged,boundary_rate\n");
        for r in &self.power {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.h,
                r.n,
                r.level,
                r.replications,
                r.rejections,
                r.power,
                r.failures,
                r.flagged,
                r.boundary_rate
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| crate::error::Error::Numerical(format!("report serialization: {e}")))
    }

    /// Writes `mean_scores.csv`, `power.csv` (when present) and
    /// `report.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        if !self.mean_scores.is_empty() {
            let mut f = std::fs::File::create(dir.join("mean_scores.csv"))?;
            f.write_all(self.mean_scores_csv().as_bytes())?;
        }
        if !self.power.is_empty() {
            let mut f = std::fs::File::create(dir.join("power.csv"))?;
            f.write_all(self.power_csv().as_bytes())?;
        }
        let mut f = std::fs::File::create(dir.join("report.json"))?;
        f.write_all(self.to_json()?.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        let mut rep = ExperimentReport::new(Provenance::new("abc".into(), 7));
        rep.mean_scores.push(MeanScoreRow {
            h: 1,
            alpha: 0.01,
            n: 100,
            m_f: 3.5,
            m_g: 2.5,
            diff: 1.0,
            rel_diff: Some(1.0 / 3.5),
            sigma_hat: 15.0,
            t_stat: 38.0,
            p_value: 0.0,
            fallback_flag: false,
            degenerate: false,
            corr: None,
        });
        rep
    }

    #[test]
    fn csv_has_fixed_header_and_roundtrippable_floats() {
        let rep = sample_report();
        let csv = rep.mean_scores_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "h,alpha,n,m_f,m_g,diff,rel_diff,sigma_hat,t_stat,p_value,corr"
        );
        let row = lines.next().unwrap();
        assert!(row.starts_with("1,0.01,100,3.5,2.5,1,"));
        // rel_diff must reproduce diff / m_f when parsed back.
        let rel: f64 = row.split(',').nth(6).unwrap().parse().unwrap();
        assert!((rel - 1.0 / 3.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic_serialization() {
        let a = sample_report();
        let b = sample_report();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.mean_scores_csv(), b.mean_scores_csv());
    }

    #[test]
    fn writes_files_to_directory() {
        let dir = tempfile::tempdir().unwrap();
        let rep = sample_report();
        rep.write_to_dir(dir.path()).unwrap();
        assert!(dir.path().join("mean_scores.csv").exists());
        assert!(dir.path().join("report.json").exists());
        assert!(!dir.path().join("power.csv").exists());
    }
}
