//! Builders for small synthetic networks: single-element closures, flow
//! splits, branching trees, and randomized valid topologies. Handy for tests,
//! benchmarks, and the runnable examples.

use crate::elements::{
    FlowBcParams, PressureBcParams, ResistanceBcParams, VesselParams, WindkesselParams,
};
use crate::model::{ElementKind, FluidProperties, NetworkModel, TimeSeries, WireId};

/// A smooth pulsatile inflow over one cycle: a half-sine systolic pulse on a
/// low diastolic base.
pub fn pulsatile_inflow(period: f64, peak: f64, base: f64, samples: usize) -> TimeSeries {
    let systole = 0.35 * period;
    let mut times = Vec::with_capacity(samples + 1);
    let mut values = Vec::with_capacity(samples + 1);
    for i in 0..=samples {
        let t = period * i as f64 / samples as f64;
        let v = if t < systole {
            base + (peak - base) * (std::f64::consts::PI * t / systole).sin().max(0.0)
        } else {
            base
        };
        times.push(t);
        values.push(v);
    }
    TimeSeries::new(times, values).expect("valid inflow series")
}

/// Prescribed inflow feeding a single boundary-condition element directly
/// (no vessel in between).
pub fn inflow_into_bc(inflow: TimeSeries, bc: ElementKind) -> NetworkModel {
    let mut net = NetworkModel::new(FluidProperties::default());
    let w = net.add_wire("cap");
    let inlet = net.add_element("inflow", ElementKind::FlowBc(FlowBcParams { flow: inflow }), vec![], vec![w]);
    net.add_element("outlet", bc, vec![w], vec![]);
    net.inlet_bc = Some(inlet);
    net
}

/// Prescribed inflow through one vessel into an outlet boundary condition.
pub fn single_vessel(inflow: TimeSeries, vessel: VesselParams, outlet: ElementKind) -> NetworkModel {
    let mut net = NetworkModel::new(FluidProperties::default());
    let w1 = net.add_wire("inlet");
    let w2 = net.add_wire("outlet");
    let inlet = net.add_element("inflow", ElementKind::FlowBc(FlowBcParams { flow: inflow }), vec![], vec![w1]);
    net.add_element("vessel", ElementKind::Vessel(vessel), vec![w1], vec![w2]);
    net.add_element("outlet_bc", outlet, vec![w2], vec![]);
    net.inlet_bc = Some(inlet);
    net
}

/// Inflow into a junction feeding two resistive branches that end at
/// zero-pressure caps.
pub fn flow_split(inflow: TimeSeries, r1: f64, r2: f64) -> NetworkModel {
    let mut net = NetworkModel::new(FluidProperties::default());
    let w_in = net.add_wire("junction_in");
    let w1 = net.add_wire("branch1_in");
    let w2 = net.add_wire("branch2_in");
    let w1o = net.add_wire("branch1_out");
    let w2o = net.add_wire("branch2_out");
    let inlet = net.add_element("inflow", ElementKind::FlowBc(FlowBcParams { flow: inflow }), vec![], vec![w_in]);
    net.add_element("junction", ElementKind::Junction, vec![w_in], vec![w1, w2]);
    net.add_element(
        "branch1",
        ElementKind::Vessel(VesselParams { resistance: r1, ..VesselParams::default() }),
        vec![w1],
        vec![w1o],
    );
    net.add_element(
        "branch2",
        ElementKind::Vessel(VesselParams { resistance: r2, ..VesselParams::default() }),
        vec![w2],
        vec![w2o],
    );
    net.add_element("cap1", ElementKind::PressureBc(PressureBcParams { pressure: 0.0 }), vec![w1o], vec![]);
    net.add_element("cap2", ElementKind::PressureBc(PressureBcParams { pressure: 0.0 }), vec![w2o], vec![]);
    net.inlet_bc = Some(inlet);
    net
}

/// A binary tree with `levels` junction levels (so `levels` ≥ 1 gives
/// `2^levels − 1` junctions) whose branches are chains of `segments_per_branch`
/// vessels, terminated by Windkessel outlets.
///
/// `stenosis_coefficient` is applied to the middle segment of every branch.
pub fn branching_tree(
    inflow: TimeSeries,
    levels: usize,
    segments_per_branch: usize,
    stenosis_coefficient: f64,
) -> NetworkModel {
    assert!(levels >= 1 && segments_per_branch >= 1);
    let mut net = NetworkModel::new(FluidProperties::default());
    let root = net.add_wire("root");
    let inlet =
        net.add_element("inflow", ElementKind::FlowBc(FlowBcParams { flow: inflow }), vec![], vec![root]);
    net.inlet_bc = Some(inlet);

    // Queue of (upstream wire, remaining junction levels, path label).
    let mut queue = vec![(root, levels, String::from("b"))];
    while let Some((wire, depth, label)) = queue.pop() {
        let end = vessel_chain(&mut net, wire, segments_per_branch, &label, stenosis_coefficient);
        if depth == 0 {
            net.add_element(
                format!("wk_{label}"),
                ElementKind::WindkesselBc(WindkesselParams {
                    resistance_proximal: 120.0,
                    capacitance: 5e-5,
                    resistance_distal: 1100.0,
                    pressure_distal: 10.0 * 1333.22,
                }),
                vec![end],
                vec![],
            );
        } else {
            let left = net.add_wire(format!("{label}0_in"));
            let right = net.add_wire(format!("{label}1_in"));
            net.add_element(format!("junction_{label}"), ElementKind::Junction, vec![end], vec![left, right]);
            queue.push((right, depth - 1, format!("{label}1")));
            queue.push((left, depth - 1, format!("{label}0")));
        }
    }
    net
}

/// Appends a chain of vessels starting at `from`, returns the final wire.
fn vessel_chain(
    net: &mut NetworkModel,
    from: WireId,
    segments: usize,
    label: &str,
    stenosis_coefficient: f64,
) -> WireId {
    let mut upstream = from;
    for k in 0..segments {
        let next = net.add_wire(format!("{label}_w{k}"));
        let ks = if k == segments / 2 { stenosis_coefficient } else { 0.0 };
        net.add_element(
            format!("{label}_seg{k}"),
            ElementKind::Vessel(VesselParams {
                resistance: 80.0,
                capacitance: 2e-5,
                inductance: 2.0,
                stenosis_coefficient: ks,
            }),
            vec![upstream],
            vec![next],
        );
        upstream = next;
    }
    upstream
}

/// Number of elements produced by [`branching_tree`]: useful for sizing.
pub fn branching_tree_element_count(levels: usize, segments_per_branch: usize) -> usize {
    let junctions = (1 << levels) - 1;
    let branches = (1 << (levels + 1)) - 1;
    let terminals = 1 << levels;
    1 + junctions + branches * segments_per_branch + terminals
}

/// Deterministic pseudo-random valid tree network for property tests.
///
/// Uses a splitmix-style generator so callers need no RNG dependency.
pub fn random_tree(seed: u64) -> NetworkModel {
    let mut rng = SplitMix::new(seed);
    let mut net = NetworkModel::new(FluidProperties::default());
    let root = net.add_wire("root");
    let inflow = pulsatile_inflow(1.0, 80.0, 10.0, 16);
    let inlet =
        net.add_element("inflow", ElementKind::FlowBc(FlowBcParams { flow: inflow }), vec![], vec![root]);
    net.inlet_bc = Some(inlet);
    let mut counter = 0usize;
    grow_branch(&mut net, root, 3, &mut rng, &mut counter);
    net
}

fn grow_branch(net: &mut NetworkModel, from: WireId, depth: usize, rng: &mut SplitMix, counter: &mut usize) {
    let mut upstream = from;
    let n_segments = 1 + (rng.next() % 3) as usize;
    for _ in 0..n_segments {
        let id = *counter;
        *counter += 1;
        let next = net.add_wire(format!("w{id}"));
        net.add_element(
            format!("v{id}"),
            ElementKind::Vessel(VesselParams {
                resistance: 20.0 + rng.uniform() * 400.0,
                capacitance: if rng.next() % 2 == 0 { 0.0 } else { 1e-6 + rng.uniform() * 1e-4 },
                inductance: if rng.next() % 2 == 0 { 0.0 } else { rng.uniform() * 10.0 },
                stenosis_coefficient: if rng.next() % 3 == 0 { rng.uniform() } else { 0.0 },
            }),
            vec![upstream],
            vec![next],
        );
        upstream = next;
    }
    let id = *counter;
    *counter += 1;
    let branch_out = depth > 0 && rng.next() % 2 == 0;
    if branch_out {
        let n_children = 2 + (rng.next() % 2) as usize;
        let children: Vec<WireId> =
            (0..n_children).map(|k| net.add_wire(format!("w{id}_{k}"))).collect();
        net.add_element(format!("j{id}"), ElementKind::Junction, vec![upstream], children.clone());
        for child in children {
            grow_branch(net, child, depth - 1, rng, counter);
        }
    } else {
        let kind = match rng.next() % 3 {
            0 => ElementKind::PressureBc(PressureBcParams { pressure: rng.uniform() * 1e4 }),
            1 => ElementKind::ResistanceBc(ResistanceBcParams {
                resistance: 100.0 + rng.uniform() * 1000.0,
                pressure_distal: rng.uniform() * 1e4,
            }),
            _ => ElementKind::WindkesselBc(WindkesselParams {
                resistance_proximal: 50.0 + rng.uniform() * 200.0,
                capacitance: 1e-5 + rng.uniform() * 1e-4,
                resistance_distal: 500.0 + rng.uniform() * 2000.0,
                pressure_distal: rng.uniform() * 1e4,
            }),
        };
        net.add_element(format!("cap{id}"), kind, vec![upstream], vec![]);
    }
}

/// Splitmix64; deterministic and dependency-free.
pub struct SplitMix {
    state: u64,
}

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        Self { state: seed.wrapping_add(0x9e3779b97f4a7c15) }
    }

    pub fn next(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }
}
