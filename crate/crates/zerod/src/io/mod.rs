//! File formats and unit conversion.
//!
//! Everything on disk follows the formats described in the README: model
//! files and centerline trees are JSON, results are CSV with one pressure
//! and one flow column per wire, manifests and comparison reports are JSON.
//! Files carry CGS values; pressure-valued fields in centerline trees accept
//! an explicit `{"value": …, "units": "mmHg" | "kPa" | "cgs"}` override.

pub mod model_file;
pub mod results_file;
pub mod tree_file;

pub use model_file::{read_model, write_model, LoadedModel, ModelFile, SimulationParameters};
pub use results_file::{
    read_cap_map, read_manifest, read_results_csv, write_comparison_report, write_manifest,
    write_results_csv, CapMapFile, ComparisonReport, FailureInfo, NewtonStats,
    PeriodicitySummary, ResultsTable, RunManifest,
};
pub use tree_file::{assemble_tree, read_overlay, read_tree, OverlayFile, TreeFile};

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

/// 1 mmHg in dyn/cm².
pub const MMHG: f64 = 1333.22;
/// 1 kPa in dyn/cm².
pub const KPA: f64 = 1e4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum PressureUnit {
    #[default]
    #[serde(rename = "cgs")]
    Cgs,
    #[serde(rename = "mmHg")]
    MmHg,
    #[serde(rename = "kPa")]
    KPa,
}

impl PressureUnit {
    pub fn to_cgs(self, value: f64) -> f64 {
        match self {
            PressureUnit::Cgs => value,
            PressureUnit::MmHg => value * MMHG,
            PressureUnit::KPa => value * KPA,
        }
    }

    pub fn from_cgs(self, value: f64) -> f64 {
        match self {
            PressureUnit::Cgs => value,
            PressureUnit::MmHg => value / MMHG,
            PressureUnit::KPa => value / KPA,
        }
    }
}

/// A pressure-valued field: either a bare CGS number or a value with an
/// explicit unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PressureValue {
    Plain(f64),
    WithUnits { value: f64, units: PressureUnit },
}

impl PressureValue {
    pub fn to_cgs(self) -> f64 {
        match self {
            PressureValue::Plain(v) => v,
            PressureValue::WithUnits { value, units } => units.to_cgs(value),
        }
    }
}

impl Default for PressureValue {
    fn default() -> Self {
        PressureValue::Plain(0.0)
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("{path}: invalid JSON: {source}")]
    Json { path: String, source: serde_json::Error },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{path}:{line}: {message}")]
    Csv { path: String, line: usize, message: String },
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path)
        .map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

pub(crate) fn write_string(path: &Path, contents: &str) -> Result<(), IoError> {
    std::fs::write(path, contents)
        .map_err(|source| IoError::Write { path: path.display().to_string(), source })
}

/// 17-significant-digit decimal form; round-trips any finite f64 exactly.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}
