//! Model file: the on-disk form of a [`NetworkModel`] plus simulation
//! parameters.
//!
//! Four top-level sections: `simulation_parameters`, `boundary_conditions`,
//! `vessels`, `junctions`. Boundary conditions attach to vessels by name;
//! vessels connect to each other through junction entries. A junction entry
//! with one inlet and one outlet vessel is a plain chain connection and
//! produces no junction element. All values are CGS.

use super::{read_to_string, write_string, IoError};
use crate::elements::{
    ArterialCapReference, CoronaryParams, FlowBcParams, PressureBcParams, ResistanceBcParams,
    VesselParams, WindkesselParams,
};
use crate::model::{ElementKind, FluidProperties, NetworkBuilder, NetworkModel, TimeSeries};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub simulation_parameters: SimulationParameters,
    pub boundary_conditions: Vec<BcEntry>,
    pub vessels: Vec<VesselEntry>,
    #[serde(default)]
    pub junctions: Vec<JunctionEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationParameters {
    #[serde(default = "default_density")]
    pub density: f64,
    #[serde(default = "default_viscosity")]
    pub viscosity: f64,
    pub number_of_cardiac_cycles: usize,
    pub number_of_time_pts_per_cardiac_cycle: usize,
    #[serde(default)]
    pub spectral_radius: f64,
    #[serde(default = "default_abs_tol")]
    pub newton_abs_tol: f64,
    #[serde(default = "default_rel_tol")]
    pub newton_rel_tol: f64,
    #[serde(default = "default_max_newton")]
    pub max_newton_iterations: usize,
    /// Name of the flow boundary condition serving as the model inlet;
    /// defaults to the first FLOW entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inlet_bc: Option<String>,
}

fn default_density() -> f64 {
    1.06
}
fn default_viscosity() -> f64 {
    0.04
}
fn default_abs_tol() -> f64 {
    1e-8
}
fn default_rel_tol() -> f64 {
    1e-5
}
fn default_max_newton() -> usize {
    30
}

impl Default for SimulationParameters {
    fn default() -> Self {
        Self {
            density: default_density(),
            viscosity: default_viscosity(),
            number_of_cardiac_cycles: 5,
            number_of_time_pts_per_cardiac_cycle: 1000,
            spectral_radius: 0.0,
            newton_abs_tol: default_abs_tol(),
            newton_rel_tol: default_rel_tol(),
            max_newton_iterations: default_max_newton(),
            inlet_bc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BcEntry {
    pub bc_name: String,
    pub bc_type: String,
    pub bc_values: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselEntry {
    pub vessel_id: usize,
    pub vessel_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vessel_length: Option<f64>,
    pub zero_d_element_type: String,
    pub zero_d_element_values: VesselValues,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_conditions: Option<VesselBcAttachment>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselValues {
    #[serde(rename = "R_poiseuille")]
    pub r_poiseuille: f64,
    #[serde(rename = "C", default)]
    pub c: f64,
    #[serde(rename = "L", default)]
    pub l: f64,
    #[serde(default)]
    pub stenosis_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VesselBcAttachment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inlet: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlet: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionEntry {
    pub junction_name: String,
    #[serde(default = "default_junction_type")]
    pub junction_type: String,
    pub inlet_vessels: Vec<usize>,
    pub outlet_vessels: Vec<usize>,
}

fn default_junction_type() -> String {
    "NORMAL_JUNCTION".into()
}

// Typed views of `bc_values` per bc_type.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FlowValues {
    t: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RcrValues {
    #[serde(rename = "Rp")]
    rp: f64,
    #[serde(rename = "C")]
    c: f64,
    #[serde(rename = "Rd")]
    rd: f64,
    #[serde(rename = "Pd", default)]
    pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ResistanceValues {
    #[serde(rename = "R")]
    r: f64,
    #[serde(rename = "Pd", default)]
    pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PressureValues {
    #[serde(rename = "P")]
    p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CoronaryValues {
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
    pv: f64,
    t: Vec<f64>,
    #[serde(rename = "Pim")]
    pim: Vec<f64>,
    #[serde(rename = "Ca_reference", default)]
    ca_reference: CaReference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
enum CaReference {
    #[default]
    #[serde(rename = "ground")]
    Ground,
    #[serde(rename = "intramyocardial")]
    Intramyocardial,
}

/// A parsed model file: the network plus its embedded simulation defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedModel {
    pub network: NetworkModel,
    pub simulation: SimulationParameters,
}

pub fn read_model(path: &Path) -> Result<LoadedModel, IoError> {
    let text = read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|source| IoError::Json { path: path.display().to_string(), source })?;
    parse_model(&file).map_err(|message| IoError::Schema { path: path.display().to_string(), message })
}

pub fn write_model(path: &Path, network: &NetworkModel, simulation: &SimulationParameters) -> Result<(), IoError> {
    let file = model_to_file(network, simulation)
        .map_err(|message| IoError::Schema { path: path.display().to_string(), message })?;
    let mut text = serde_json::to_string_pretty(&file).expect("model file serializes");
    text.push('\n');
    write_string(path, &text)
}

/// Converts the schema form into a network, materializing wires in the
/// canonical order so identical files always yield identical models.
pub fn parse_model(file: &ModelFile) -> Result<LoadedModel, String> {
    let sim = &file.simulation_parameters;
    let fluid = FluidProperties::new(sim.density, sim.viscosity).map_err(|e| e.to_string())?;
    let mut builder = NetworkBuilder::new(fluid);

    let mut bc_elems: HashMap<&str, usize> = HashMap::new();
    let mut first_flow_bc: Option<usize> = None;
    for bc in &file.boundary_conditions {
        let ctx = |e: serde_json::Error| format!("boundary condition '{}' ({}): {e}", bc.bc_name, bc.bc_type);
        let kind = match bc.bc_type.as_str() {
            "FLOW" => {
                let v: FlowValues = serde_json::from_value(bc.bc_values.clone()).map_err(ctx)?;
                let flow = TimeSeries::new(v.t, v.q)
                    .map_err(|e| format!("boundary condition '{}': {e}", bc.bc_name))?;
                ElementKind::FlowBc(FlowBcParams { flow })
            }
            "RCR" => {
                let v: RcrValues = serde_json::from_value(bc.bc_values.clone()).map_err(ctx)?;
                ElementKind::WindkesselBc(WindkesselParams {
                    resistance_proximal: v.rp,
                    capacitance: v.c,
                    resistance_distal: v.rd,
                    pressure_distal: v.pd,
                })
            }
            "RESISTANCE" => {
                let v: ResistanceValues = serde_json::from_value(bc.bc_values.clone()).map_err(ctx)?;
                ElementKind::ResistanceBc(ResistanceBcParams { resistance: v.r, pressure_distal: v.pd })
            }
            "PRESSURE" => {
                let v: PressureValues = serde_json::from_value(bc.bc_values.clone()).map_err(ctx)?;
                ElementKind::PressureBc(PressureBcParams { pressure: v.p })
            }
            "CORONARY" => {
                let v: CoronaryValues = serde_json::from_value(bc.bc_values.clone()).map_err(ctx)?;
                let pim = TimeSeries::new(v.t, v.pim)
                    .map_err(|e| format!("boundary condition '{}': {e}", bc.bc_name))?;
                ElementKind::CoronaryBc(CoronaryParams {
                    resistance_arterial: v.ra,
                    resistance_micro: v.ram,
                    resistance_venous: v.rv,
                    capacitance_arterial: v.ca,
                    capacitance_intramyocardial: v.cim,
                    pressure_venous: v.pv,
                    intramyocardial_pressure: pim,
                    arterial_cap_reference: match v.ca_reference {
                        CaReference::Ground => ArterialCapReference::Ground,
                        CaReference::Intramyocardial => ArterialCapReference::Intramyocardial,
                    },
                })
            }
            other => return Err(format!("boundary condition '{}' has unknown type '{other}'", bc.bc_name)),
        };
        let is_flow = matches!(kind, ElementKind::FlowBc(_));
        let elem = builder.add_element(bc.bc_name.clone(), kind);
        if bc_elems.insert(bc.bc_name.as_str(), elem).is_some() {
            return Err(format!("duplicate boundary condition name '{}'", bc.bc_name));
        }
        if is_flow && first_flow_bc.is_none() {
            first_flow_bc = Some(elem);
        }
    }

    let mut vessel_elems: HashMap<usize, usize> = HashMap::new();
    let mut vessel_ports: Vec<[usize; 2]> = Vec::new();
    for vessel in &file.vessels {
        if vessel.zero_d_element_type != "BloodVessel" {
            return Err(format!(
                "vessel '{}' has unsupported element type '{}'",
                vessel.vessel_name, vessel.zero_d_element_type
            ));
        }
        let vals = &vessel.zero_d_element_values;
        let elem = builder.add_element(
            vessel.vessel_name.clone(),
            ElementKind::Vessel(VesselParams {
                resistance: vals.r_poiseuille,
                capacitance: vals.c,
                inductance: vals.l,
                stenosis_coefficient: vals.stenosis_coefficient,
            }),
        );
        if vessel_elems.insert(vessel.vessel_id, elem).is_some() {
            return Err(format!("duplicate vessel id {}", vessel.vessel_id));
        }
        vessel_ports.push([0, 0]);
    }

    // BC attachments.
    let vessel_elem_pos: HashMap<usize, usize> =
        file.vessels.iter().enumerate().map(|(i, v)| (v.vessel_id, i)).collect();
    let attach = |vessel_idx: usize, side: usize, bc_name: &str, builder: &mut NetworkBuilder,
                      ports: &mut Vec<[usize; 2]>|
     -> Result<(), String> {
        let &bc = bc_elems
            .get(bc_name)
            .ok_or_else(|| format!("vessel references unknown boundary condition '{bc_name}'"))?;
        let vessel_elem = vessel_elems[&file.vessels[vessel_idx].vessel_id];
        if side == 0 {
            builder.connect(bc, 0, vessel_elem, 0);
        } else {
            builder.connect(vessel_elem, 0, bc, 0);
        }
        ports[vessel_idx][side] += 1;
        Ok(())
    };
    for (i, vessel) in file.vessels.iter().enumerate() {
        if let Some(bcs) = &vessel.boundary_conditions {
            if let Some(name) = &bcs.inlet {
                attach(i, 0, name, &mut builder, &mut vessel_ports)?;
            }
            if let Some(name) = &bcs.outlet {
                attach(i, 1, name, &mut builder, &mut vessel_ports)?;
            }
        }
    }

    // Junction entries: 1-in/1-out is a chain connection, anything larger a
    // junction element.
    for junction in &file.junctions {
        let resolve = |ids: &[usize]| -> Result<Vec<usize>, String> {
            ids.iter()
                .map(|id| {
                    vessel_elems
                        .get(id)
                        .copied()
                        .ok_or_else(|| format!("junction '{}' references unknown vessel {id}", junction.junction_name))
                })
                .collect()
        };
        let inlet_elems = resolve(&junction.inlet_vessels)?;
        let outlet_elems = resolve(&junction.outlet_vessels)?;
        if inlet_elems.is_empty() || outlet_elems.is_empty() {
            return Err(format!(
                "junction '{}' needs at least one inlet and one outlet vessel",
                junction.junction_name
            ));
        }
        let mark = |ids: &[usize], side: usize, ports: &mut Vec<[usize; 2]>| {
            for id in ids {
                ports[vessel_elem_pos[id]][side] += 1;
            }
        };
        mark(&junction.inlet_vessels, 1, &mut vessel_ports);
        mark(&junction.outlet_vessels, 0, &mut vessel_ports);
        if inlet_elems.len() == 1 && outlet_elems.len() == 1 {
            builder.connect(inlet_elems[0], 0, outlet_elems[0], 0);
        } else {
            let j = builder.add_element(junction.junction_name.clone(), ElementKind::Junction);
            for (slot, &v) in inlet_elems.iter().enumerate() {
                builder.connect(v, 0, j, slot);
            }
            for (slot, &v) in outlet_elems.iter().enumerate() {
                builder.connect(j, slot, v, 0);
            }
        }
    }

    for (i, ports) in vessel_ports.iter().enumerate() {
        let name = &file.vessels[i].vessel_name;
        if ports[0] != 1 {
            return Err(format!("vessel '{name}' inlet has {} attachments (expected 1)", ports[0]));
        }
        if ports[1] != 1 {
            return Err(format!("vessel '{name}' outlet has {} attachments (expected 1)", ports[1]));
        }
    }

    let inlet = match &sim.inlet_bc {
        Some(name) => Some(
            *bc_elems
                .get(name.as_str())
                .ok_or_else(|| format!("inlet_bc names unknown boundary condition '{name}'"))?,
        ),
        None => first_flow_bc,
    };
    if let Some(e) = inlet {
        builder.designate_inlet(e);
    }
    Ok(LoadedModel { network: builder.build(), simulation: sim.clone() })
}

/// Converts a network back into the schema form. Chain connections between
/// vessels become one-inlet/one-outlet junction entries.
pub fn model_to_file(network: &NetworkModel, simulation: &SimulationParameters) -> Result<ModelFile, String> {
    // Wire endpoints: (upstream element, downstream element).
    let n_wires = network.wires.len();
    let mut upstream = vec![usize::MAX; n_wires];
    let mut downstream = vec![usize::MAX; n_wires];
    for e in &network.elements {
        for w in &e.outlets {
            upstream[w.0] = e.id.0;
        }
        for w in &e.inlets {
            downstream[w.0] = e.id.0;
        }
    }
    if upstream.iter().chain(downstream.iter()).any(|&x| x == usize::MAX) {
        return Err("network has dangling wires; run validation first".into());
    }

    // Vessel ids are positions among vessel elements.
    let mut vessel_ids: HashMap<usize, usize> = HashMap::new();
    for e in &network.elements {
        if matches!(e.kind, ElementKind::Vessel(_)) {
            let id = vessel_ids.len();
            vessel_ids.insert(e.id.0, id);
        }
    }

    let mut boundary_conditions = Vec::new();
    let mut vessels = Vec::new();
    let mut junctions = Vec::new();
    let mut inlet_bc_name = None;

    for e in &network.elements {
        match &e.kind {
            ElementKind::Vessel(v) => {
                let my_id = vessel_ids[&e.id.0];
                let inlet_peer = upstream[e.inlets[0].0];
                let outlet_peer = downstream[e.outlets[0].0];
                let as_bc = |peer: usize| -> Option<String> {
                    let peer = &network.elements[peer];
                    peer.kind.is_bc().then(|| peer.label.clone())
                };
                let attachment = VesselBcAttachment { inlet: as_bc(inlet_peer), outlet: as_bc(outlet_peer) };
                let attachment = (attachment.inlet.is_some() || attachment.outlet.is_some()).then_some(attachment);
                vessels.push(VesselEntry {
                    vessel_id: my_id,
                    vessel_name: e.label.clone(),
                    vessel_length: None,
                    zero_d_element_type: "BloodVessel".into(),
                    zero_d_element_values: VesselValues {
                        r_poiseuille: v.resistance,
                        c: v.capacitance,
                        l: v.inductance,
                        stenosis_coefficient: v.stenosis_coefficient,
                    },
                    boundary_conditions: attachment,
                });
                // Chain entry for a direct vessel-to-vessel connection,
                // emitted by the upstream partner.
                let peer = &network.elements[outlet_peer];
                if matches!(peer.kind, ElementKind::Vessel(_)) {
                    junctions.push(JunctionEntry {
                        junction_name: format!("chain_{}_{}", my_id, vessel_ids[&peer.id.0]),
                        junction_type: "NORMAL_JUNCTION".into(),
                        inlet_vessels: vec![my_id],
                        outlet_vessels: vec![vessel_ids[&peer.id.0]],
                    });
                }
            }
            ElementKind::Junction => {
                let to_vessel = |w: &crate::model::WireId, peer: usize| -> Result<usize, String> {
                    let peer = &network.elements[peer];
                    vessel_ids
                        .get(&peer.id.0)
                        .copied()
                        .ok_or_else(|| format!("junction '{}' connects to non-vessel '{}' via wire {}", e.label, peer.label, w.0))
                };
                junctions.push(JunctionEntry {
                    junction_name: e.label.clone(),
                    junction_type: "NORMAL_JUNCTION".into(),
                    inlet_vessels: e
                        .inlets
                        .iter()
                        .map(|w| to_vessel(w, upstream[w.0]))
                        .collect::<Result<_, _>>()?,
                    outlet_vessels: e
                        .outlets
                        .iter()
                        .map(|w| to_vessel(w, downstream[w.0]))
                        .collect::<Result<_, _>>()?,
                });
            }
            kind => {
                let (bc_type, bc_values) = bc_entry_values(kind)?;
                if Some(e.id) == network.inlet_bc {
                    inlet_bc_name = Some(e.label.clone());
                }
                boundary_conditions.push(BcEntry {
                    bc_name: e.label.clone(),
                    bc_type: bc_type.into(),
                    bc_values,
                });
            }
        }
    }

    // Keep chain entries after real junctions, ordered by vessel pair.
    junctions.sort_by_key(|j| {
        let chain = j.junction_name.starts_with("chain_");
        (chain, if chain { (j.inlet_vessels[0], j.outlet_vessels[0]) } else { (0, 0) })
    });

    let mut simulation = simulation.clone();
    simulation.inlet_bc = inlet_bc_name;
    simulation.density = network.fluid.density;
    simulation.viscosity = network.fluid.viscosity;
    Ok(ModelFile {
        description: None,
        simulation_parameters: simulation,
        boundary_conditions,
        vessels,
        junctions,
    })
}

fn bc_entry_values(kind: &ElementKind) -> Result<(&'static str, serde_json::Value), String> {
    let value = |v: serde_json::Result<serde_json::Value>| v.map_err(|e| e.to_string());
    match kind {
        ElementKind::FlowBc(p) => Ok((
            "FLOW",
            value(serde_json::to_value(FlowValues {
                t: p.flow.times().to_vec(),
                q: p.flow.values().to_vec(),
            }))?,
        )),
        ElementKind::WindkesselBc(p) => Ok((
            "RCR",
            value(serde_json::to_value(RcrValues {
                rp: p.resistance_proximal,
                c: p.capacitance,
                rd: p.resistance_distal,
                pd: p.pressure_distal,
            }))?,
        )),
        ElementKind::ResistanceBc(p) => Ok((
            "RESISTANCE",
            value(serde_json::to_value(ResistanceValues { r: p.resistance, pd: p.pressure_distal }))?,
        )),
        ElementKind::PressureBc(p) => {
            Ok(("PRESSURE", value(serde_json::to_value(PressureValues { p: p.pressure }))?))
        }
        ElementKind::CoronaryBc(p) => Ok((
            "CORONARY",
            value(serde_json::to_value(CoronaryValues {
                ra: p.resistance_arterial,
                ram: p.resistance_micro,
                rv: p.resistance_venous,
                ca: p.capacitance_arterial,
                cim: p.capacitance_intramyocardial,
                pv: p.pressure_venous,
                t: p.intramyocardial_pressure.times().to_vec(),
                pim: p.intramyocardial_pressure.values().to_vec(),
                ca_reference: match p.arterial_cap_reference {
                    ArterialCapReference::Ground => CaReference::Ground,
                    ArterialCapReference::Intramyocardial => CaReference::Intramyocardial,
                },
            }))?,
        )),
        _ => Err("not a boundary condition".into()),
    }
}
