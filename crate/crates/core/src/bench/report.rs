//! Benchmark report: per-cell records, aggregate accuracy tables and their
//! JSON / CSV renderings.
//!
//! `report.json` holds only quantities that are a pure function of the
//! configuration, so repeated runs produce identical bytes. Wall-clock
//! timings go to a separate `timings.json`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::runner::BenchConfig;
use crate::error::{Error, Result};

pub const REPORT_VERSION: &str = "1";

/// One (dataset, pattern, replicate, method) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub dataset: String,
    pub pattern: String,
    pub replicate: usize,
    pub method: String,
    /// `None` when the method failed on this group.
    pub rmse: Option<f64>,
    /// `None` when the method failed or the group was dropped.
    pub accuracy: Option<f64>,
    /// Blend weight on the first base, for ensemble methods.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Digest of the mask and observed matrix the method consumed.
    pub input_digest: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedGroup {
    pub dataset: String,
    pub pattern: String,
    pub replicate: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodStat {
    pub method: String,
    pub mean: f64,
    pub std: f64,
    /// Number of groups contributing.
    pub groups: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    /// Pattern tag, or "Overall".
    pub pattern: String,
    pub methods: Vec<MethodStat>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    /// What the ± spans: population std over (dataset, replicate) groups.
    pub std_over: String,
    pub rows: Vec<PatternRow>,
}

impl Aggregates {
    pub fn row(&self, pattern: &str) -> Option<&PatternRow> {
        self.rows.iter().find(|r| r.pattern == pattern)
    }

    pub fn overall(&self) -> Option<&PatternRow> {
        self.row(OVERALL)
    }
}

impl PatternRow {
    pub fn stat(&self, method: &str) -> Option<&MethodStat> {
        self.methods.iter().find(|s| s.method == method)
    }
}

pub const OVERALL: &str = "Overall";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub step: usize,
    pub proportions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionTrajectory {
    pub patterns: Vec<String>,
    /// Loss per pattern: mean RMSE of this method over the groups seen so far.
    pub probe_method: String,
    pub points: Vec<TrajectoryPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub dataset: String,
    pub pattern: String,
    pub replicate: usize,
    pub method: String,
    pub seconds: f64,
    /// Seconds divided by the number of table entries m·n.
    pub seconds_per_entry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: String,
    pub config: BenchConfig,
    pub cells: Vec<Cell>,
    pub aggregates: Aggregates,
    pub dropped: Vec<DroppedGroup>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proportions: Option<ProportionTrajectory>,
    #[serde(skip)]
    pub timings: Vec<Timing>,
}

/// Formats `mean ± std` with four decimals.
pub fn format_stat(s: &MethodStat) -> String {
    format!("{:.4} ± {:.4}", s.mean, s.std)
}

fn method_names(report: &BenchReport) -> Vec<String> {
    report.config.methods.iter().map(|m| m.label()).collect()
}

/// Table rows: header, then one row per pattern plus "Overall".
pub fn table_rows(report: &BenchReport) -> Vec<Vec<String>> {
    let methods = method_names(report);
    let mut rows = vec![std::iter::once("pattern".to_string()).chain(methods.iter().cloned()).collect()];
    for row in &report.aggregates.rows {
        let mut line = vec![row.pattern.clone()];
        for m in &methods {
            line.push(row.stat(m).map(format_stat).unwrap_or_else(|| "n/a".to_string()));
        }
        rows.push(line);
    }
    rows
}

/// Plain-text table of Imputation Accuracy mean ± std.
pub fn render_table(report: &BenchReport) -> String {
    let rows = table_rows(report);
    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::from("Imputation Accuracy ± Standard Deviation by Missingness Pattern\n");
    for (k, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&widths)
            .map(|(s, w)| format!("{s:<w$}", w = *w))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
        if k == 0 {
            out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
            out.push('\n');
        }
    }
    out
}

/// Writes `report.json`, `report.csv` and `timings.json` into `dir`.
pub fn emit_report(report: &BenchReport, dir: &Path) -> Result<Vec<PathBuf>> {
    if report.aggregates.rows.is_empty() || report.cells.is_empty() {
        return Err(Error::EmptyReport);
    }
    fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;

    let csv_path = dir.join("report.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for row in table_rows(report) {
        w.write_record(&row)?;
    }
    w.flush()?;

    let timings = dir.join("timings.json");
    fs::write(&timings, serde_json::to_string_pretty(&report.timings)? + "\n")?;
    Ok(vec![json, csv_path, timings])
}

pub fn load_report(path: &Path) -> Result<BenchReport> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}
