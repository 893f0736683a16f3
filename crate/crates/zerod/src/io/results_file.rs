//! Results CSV, run manifests, cap maps, and comparison reports.
//!
//! The CSV layout is `time,<wire>:pressure,<wire>:flow,…` with values in CGS
//! and 17-significant-digit decimals, so reading a file back reproduces every
//! f64 bit-for-bit.

use super::{format_g17, read_to_string, write_string, IoError};
use crate::integrator::{PeriodicityReport, ResultSet};
use crate::metrics::{CapSeries, ErrorReport};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Writes the sample range `[first, last]` (inclusive indices into the
/// stored samples) of a result set.
pub fn write_results_csv(path: &Path, results: &ResultSet, first: usize, last: usize) -> Result<(), IoError> {
    let mut out = String::new();
    out.push_str("time");
    for label in &results.wire_labels {
        let clean = label.replace(',', "_");
        out.push_str(&format!(",{clean}:pressure,{clean}:flow"));
    }
    out.push('\n');
    for i in first..=last {
        out.push_str(&format_g17(results.times[i]));
        for w in 0..results.wire_labels.len() {
            out.push(',');
            out.push_str(&format_g17(results.pressures[w][i]));
            out.push(',');
            out.push_str(&format_g17(results.flows[w][i]));
        }
        out.push('\n');
    }
    write_string(path, &out)
}

/// A parsed results table: named columns of equal length.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultsTable {
    pub columns: Vec<String>,
    /// Column-major values.
    pub values: Vec<Vec<f64>>,
}

impl ResultsTable {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().position(|c| c == name).map(|i| self.values[i].as_slice())
    }

    pub fn n_rows(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Builds one cap's series from `<wire>:pressure` / `<wire>:flow` columns.
    pub fn cap_series(&self, cap_id: &str, wire: &str, is_inlet: bool) -> Result<CapSeries, String> {
        let pressure = self
            .column(&format!("{wire}:pressure"))
            .ok_or_else(|| format!("missing column '{wire}:pressure'"))?
            .to_vec();
        let flow = self
            .column(&format!("{wire}:flow"))
            .ok_or_else(|| format!("missing column '{wire}:flow'"))?
            .to_vec();
        Ok(CapSeries { cap_id: cap_id.to_string(), is_inlet, pressure, flow })
    }
}

pub fn read_results_csv(path: &Path) -> Result<ResultsTable, IoError> {
    let text = read_to_string(path)?;
    let path_str = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| IoError::Csv { path: path_str.clone(), line: 1, message: "empty file".into() })?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); columns.len()];
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(IoError::Csv {
                path: path_str,
                line: idx + 1,
                message: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| IoError::Csv {
                path: path_str.clone(),
                line: idx + 1,
                message: format!("invalid number '{field}' in column '{}'", columns[col]),
            })?;
            values[col].push(v);
        }
    }
    Ok(ResultsTable { columns, values })
}

/// Newton iteration statistics over one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonStats {
    pub total_iterations: usize,
    pub max_per_step: usize,
    pub mean_per_step: f64,
}

impl NewtonStats {
    pub fn from_counts(counts: &[usize]) -> Self {
        let total: usize = counts.iter().sum();
        Self {
            total_iterations: total,
            max_per_step: counts.iter().copied().max().unwrap_or(0),
            mean_per_step: if counts.is_empty() { 0.0 } else { total as f64 / counts.len() as f64 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicitySummary {
    pub tolerance: f64,
    pub converged: bool,
    pub outlets: Vec<OutletDeltaSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletDeltaSummary {
    pub wire: String,
    pub mean_previous: f64,
    pub mean_last: f64,
    pub delta: f64,
}

impl From<&PeriodicityReport> for PeriodicitySummary {
    fn from(report: &PeriodicityReport) -> Self {
        Self {
            tolerance: report.tolerance,
            converged: report.converged,
            outlets: report
                .outlets
                .iter()
                .map(|o| OutletDeltaSummary {
                    wire: o.label.clone(),
                    mean_previous: o.mean_previous,
                    mean_last: o.mean_last,
                    delta: o.delta,
                })
                .collect(),
        }
    }
}

/// Run provenance and diagnostics written next to the results CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub model: String,
    pub units: String,
    pub cycles: usize,
    pub steps_per_cycle: usize,
    pub dt: f64,
    pub spectral_radius: f64,
    /// Newton converged at every step.
    pub converged: bool,
    pub newton: NewtonStats,
    pub wall_clock_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periodicity: Option<PeriodicitySummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureInfo {
    pub step: usize,
    pub time: f64,
    pub message: String,
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_string(path, &text)
}

pub fn read_manifest(path: &Path) -> Result<RunManifest, IoError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

/// Associates cap names with wire columns in the result and reference files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapMapFile {
    pub caps: Vec<CapMapEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapMapEntry {
    pub id: String,
    #[serde(default)]
    pub inlet: bool,
    /// Wire label in the results file.
    pub result: String,
    /// Wire label in the reference file.
    pub reference: String,
}

pub fn read_cap_map(path: &Path) -> Result<CapMapFile, IoError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricBlock {
    pub avg: f64,
    pub max: f64,
    pub systolic: f64,
    pub diastolic: f64,
}

/// On-disk form of an [`ErrorReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_caps: usize,
    pub n_time_samples: usize,
    pub t_sys: usize,
    pub t_dia: usize,
    pub pressure: MetricBlock,
    pub flow: MetricBlock,
}

impl ComparisonReport {
    pub fn new(report: &ErrorReport, n_caps: usize, n_time_samples: usize) -> Self {
        Self {
            n_caps,
            n_time_samples,
            t_sys: report.t_sys,
            t_dia: report.t_dia,
            pressure: MetricBlock {
                avg: report.pressure_avg,
                max: report.pressure_max,
                systolic: report.pressure_sys,
                diastolic: report.pressure_dia,
            },
            flow: MetricBlock {
                avg: report.flow_avg,
                max: report.flow_max,
                systolic: report.flow_sys,
                diastolic: report.flow_dia,
            },
        }
    }
}

pub fn write_comparison_report(path: &Path, report: &ComparisonReport) -> Result<(), IoError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_string(path, &text)
}
