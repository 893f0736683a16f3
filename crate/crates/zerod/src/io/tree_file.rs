//! Centerline-tree file: branch area profiles, junction connectivity, the
//! inlet flow, and outlet boundary-condition assignments.
//!
//! Boundary conditions may live in the tree file itself or in a separate
//! overlay file whose sections override the tree's. Pressure-valued fields
//! accept mmHg/kPa unit overrides.

use super::{read_to_string, IoError, PressureValue};
use crate::elements::{
    ArterialCapReference, CoronaryParams, PressureBcParams, ResistanceBcParams, WindkesselParams,
};
use crate::model::{FluidProperties, TimeSeries};
use crate::rom::{BranchProfile, CenterlineTree, OutletAssignment, OutletBc, TreeJunction, WallModel};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallSection>,
    pub branches: Vec<BranchEntry>,
    #[serde(default)]
    pub junctions: Vec<TreeJunctionEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inlet: Option<InletSection>,
    #[serde(default)]
    pub outlets: Vec<OutletEntry>,
}

/// Boundary-condition overlay: same sections as the tree file minus the
/// geometry; present sections replace the tree's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct OverlayFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fluid: Option<FluidSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall: Option<WallSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inlet: Option<InletSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub outlets: Vec<OutletEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidSection {
    pub density: f64,
    pub viscosity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSection {
    /// Stiffness k₀ = Eh/r; accepts unit overrides (e.g. kPa).
    pub stiffness: PressureValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchEntry {
    pub id: usize,
    /// `[path length cm, area cm²]` pairs.
    pub points: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeJunctionEntry {
    pub id: usize,
    pub inlet_branches: Vec<usize>,
    pub outlet_branches: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InletSection {
    pub branch: usize,
    pub flow: FlowSeries,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSeries {
    pub time: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutletEntry {
    pub branch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub bc: OutletBcEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum OutletBcEntry {
    #[serde(rename = "PRESSURE")]
    Pressure {
        #[serde(rename = "P")]
        p: PressureValue,
    },
    #[serde(rename = "RESISTANCE")]
    Resistance {
        #[serde(rename = "R")]
        r: f64,
        #[serde(rename = "Pd", default)]
        pd: PressureValue,
    },
    #[serde(rename = "RCR")]
    Rcr {
        #[serde(rename = "Rp")]
        rp: f64,
        #[serde(rename = "C")]
        c: f64,
        #[serde(rename = "Rd")]
        rd: f64,
        #[serde(rename = "Pd", default)]
        pd: PressureValue,
    },
    #[serde(rename = "CORONARY")]
    Coronary {
        #[serde(rename = "Ra")]
        ra: f64,
        #[serde(rename = "Ram")]
        ram: f64,
        #[serde(rename = "Rv")]
        rv: f64,
        #[serde(rename = "Ca")]
        ca: f64,
        #[serde(rename = "Cim")]
        cim: f64,
        #[serde(rename = "Pv", default)]
        pv: PressureValue,
        t: Vec<f64>,
        #[serde(rename = "Pim")]
        pim: Vec<f64>,
    },
}

pub fn read_tree(path: &Path) -> Result<TreeFile, IoError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

pub fn read_overlay(path: &Path) -> Result<OverlayFile, IoError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

/// Merges an optional overlay into the tree and produces the in-memory tree
/// plus fluid and wall models. Schema-level problems come back as messages
/// for the caller to wrap with the path.
pub fn assemble_tree(
    tree: &TreeFile,
    overlay: Option<&OverlayFile>,
) -> Result<(CenterlineTree, FluidProperties, WallModel), String> {
    let fluid = overlay
        .and_then(|o| o.fluid)
        .or(tree.fluid)
        .map(|f| FluidProperties::new(f.density, f.viscosity))
        .transpose()
        .map_err(|e| e.to_string())?
        .unwrap_or_default();
    let wall = overlay
        .and_then(|o| o.wall)
        .or(tree.wall)
        .map(|w| WallModel::new(w.stiffness.to_cgs()))
        .transpose()
        .map_err(|e| e.to_string())?
        .unwrap_or_default();

    let inlet = overlay
        .and_then(|o| o.inlet.clone())
        .or_else(|| tree.inlet.clone())
        .ok_or("no inlet section: an inlet branch and flow series are required")?;
    let inflow = TimeSeries::new(inlet.flow.time.clone(), inlet.flow.values.clone())
        .map_err(|e| format!("inlet flow series: {e}"))?;

    let outlet_entries = match overlay {
        Some(o) if !o.outlets.is_empty() => &o.outlets,
        _ => &tree.outlets,
    };

    let branches = tree
        .branches
        .iter()
        .map(|b| BranchProfile::new(b.id, b.points.iter().map(|p| (p[0], p[1])).collect()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let junctions = tree
        .junctions
        .iter()
        .map(|j| TreeJunction {
            id: j.id,
            inlet_branches: j.inlet_branches.clone(),
            outlet_branches: j.outlet_branches.clone(),
        })
        .collect();
    let outlets = outlet_entries
        .iter()
        .map(|o| {
            Ok(OutletAssignment {
                branch: o.branch,
                name: o.name.clone(),
                bc: outlet_bc(&o.bc).map_err(|e| format!("outlet for branch {}: {e}", o.branch))?,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;

    Ok((
        CenterlineTree {
            branches,
            junctions,
            inlet_branch: inlet.branch,
            inflow,
            outlets,
        },
        fluid,
        wall,
    ))
}

fn outlet_bc(entry: &OutletBcEntry) -> Result<OutletBc, String> {
    Ok(match entry {
        OutletBcEntry::Pressure { p } => OutletBc::Pressure(PressureBcParams { pressure: p.to_cgs() }),
        OutletBcEntry::Resistance { r, pd } => {
            OutletBc::Resistance(ResistanceBcParams { resistance: *r, pressure_distal: pd.to_cgs() })
        }
        OutletBcEntry::Rcr { rp, c, rd, pd } => OutletBc::Windkessel(WindkesselParams {
            resistance_proximal: *rp,
            capacitance: *c,
            resistance_distal: *rd,
            pressure_distal: pd.to_cgs(),
        }),
        OutletBcEntry::Coronary { ra, ram, rv, ca, cim, pv, t, pim } => {
            OutletBc::Coronary(CoronaryParams {
                resistance_arterial: *ra,
                resistance_micro: *ram,
                resistance_venous: *rv,
                capacitance_arterial: *ca,
                capacitance_intramyocardial: *cim,
                pressure_venous: pv.to_cgs(),
                intramyocardial_pressure: TimeSeries::new(t.clone(), pim.clone())
                    .map_err(|e| format!("intramyocardial pressure series: {e}"))?,
                arterial_cap_reference: ArterialCapReference::Ground,
            })
        }
    })
}
