//! Experiment reports: per-replication rows, a summary recomputable from
//! them, side tables and PASS/FAIL checks.

use super::config::ExperimentConfig;
use super::stats::{ks_normal, median};
use crate::error::Result;
use crate::infer::{write_estimates_csv, EstimateRecord};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRow {
    pub index: u64,
    pub seed: u64,
    pub estimate: Option<EstimateRecord>,
    /// The statistic summarized: α̂ for estimator suites, η_T for Girsanov.
    pub value: Option<f64>,
    pub standardized: Option<f64>,
    /// ξ_T in Girsanov suites.
    pub aux: Option<f64>,
    pub error: Option<String>,
}

impl ReplicationRow {
    pub fn failed(index: u64, seed: u64, err: impl ToString) -> Self {
        ReplicationRow {
            index,
            seed,
            estimate: None,
            value: None,
            standardized: None,
            aux: None,
            error: Some(err.to_string()),
        }
    }

    pub fn from_estimate(index: u64, seed: u64, rec: EstimateRecord) -> Self {
        ReplicationRow {
            index,
            seed,
            value: Some(rec.alpha_hat),
            standardized: rec.standardized,
            estimate: Some(rec),
            aux: None,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub target: f64,
    pub count: usize,
    pub failures: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub se: f64,
    pub mse: f64,
    pub median_abs_error: f64,
    pub ks_statistic: Option<f64>,
    pub ks_p: Option<f64>,
    pub hit_fraction: Option<f64>,
}

impl Summary {
    /// Order-free: values are sorted before any sum.
    pub fn from_rows(rows: &[ReplicationRow], target: f64) -> Summary {
        let mut v: Vec<f64> = rows.iter().filter_map(|r| r.value).filter(|x| x.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let nf = n as f64;
        let mean = if n > 0 { v.iter().sum::<f64>() / nf } else { f64::NAN };
        let variance = if n > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0) } else { f64::NAN };
        let mut sq: Vec<f64> = v.iter().map(|x| (x - target).powi(2)).collect();
        sq.sort_by(f64::total_cmp);
        let mse = if n > 0 { sq.iter().sum::<f64>() / nf } else { f64::NAN };
        let abs: Vec<f64> = v.iter().map(|x| (x - target).abs()).collect();
        let z: Vec<f64> = rows.iter().filter_map(|r| r.standardized).filter(|x| x.is_finite()).collect();
        let (ks_statistic, ks_p) = if z.is_empty() {
            (None, None)
        } else {
            let (d, p) = ks_normal(&z);
            (Some(d), Some(p))
        };
        let seq: Vec<bool> = rows.iter().filter_map(|r| r.estimate.as_ref()).map(|e| e.hit).collect();
        let hit_fraction =
            (!seq.is_empty()).then(|| seq.iter().filter(|&&h| h).count() as f64 / seq.len() as f64);
        Summary {
            target,
            count: n,
            failures: rows.iter().filter(|r| r.error.is_some()).count(),
            mean,
            bias: mean - target,
            variance,
            se: (variance / nf).sqrt(),
            mse,
            median_abs_error: median(&abs),
            ks_statistic,
            ks_p,
            hit_fraction,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.into(), pass, detail }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub notes: Vec<String>,
    pub records: Vec<ReplicationRow>,
    pub summary: Summary,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    /// Summary recomputed from the rows equals the stored one.
    pub fn audit(&self) -> bool {
        let s = Summary::from_rows(&self.records, self.summary.target);
        // NaN fields compare unequal, so compare serialized forms
        serde_json::to_string(&s).ok() == serde_json::to_string(&self.summary).ok()
    }

    /// JSON with the wall-clock field zeroed, for reproducibility checks.
    pub fn payload(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_secs = 0.0;
        serde_json::to_string(&r).expect("report serializes")
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| crate::Error::Io(e.to_string()))?;
        writeln!(out, "{s}")?;
        Ok(())
    }

    /// Estimate rows when the suite produced estimates, else every table.
    /// Notes and the PASS/FAIL list go in `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        for c in &self.checks {
            writeln!(out, "# {} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        let est: Vec<EstimateRecord> = self.records.iter().filter_map(|r| r.estimate.clone()).collect();
        if !est.is_empty() {
            return write_estimates_csv(&est, out);
        }
        if self.records.iter().any(|r| r.value.is_some()) {
            writeln!(out, "index,seed,value,aux")?;
            for r in &self.records {
                let f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
                writeln!(out, "{},{},{},{}", r.index, r.seed, f(r.value), f(r.aux))?;
            }
        }
        for t in &self.tables {
            writeln!(out, "# table {}", t.name)?;
            t.write_csv(&mut out)?;
        }
        Ok(())
    }
}
