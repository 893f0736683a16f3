//! Network data model: wires, elements, boundary conditions, degree-of-freedom
//! numbering, structural validation, and periodic time series.
//!
//! A [`NetworkModel`] is a directed graph of lumped elements joined by wires.
//! Every wire carries one pressure and one flow unknown and connects exactly
//! two element ports: the upstream element's outlet and the downstream
//! element's inlet. Branching is expressed only through [`ElementKind::Junction`]
//! elements, so element equations assemble without special cases.
//!
//! All quantities are in CGS units: lengths in cm, pressure in dyn/cm²,
//! flow in cm³/s. Unit conversion happens only at I/O boundaries.

use crate::elements::{
    CoronaryParams, FlowBcParams, PressureBcParams, ResistanceBcParams, VesselParams,
    WindkesselParams,
};
use thiserror::Error;

/// Blood properties entering vessel parameter formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluidProperties {
    /// Density in g/cm³.
    pub density: f64,
    /// Dynamic viscosity in g/(cm·s) (poise).
    pub viscosity: f64,
}

impl FluidProperties {
    pub fn new(density: f64, viscosity: f64) -> Result<Self, ModelError> {
        if !(density > 0.0) || !density.is_finite() {
            return Err(ModelError::InvalidFluid("density must be positive"));
        }
        if !(viscosity > 0.0) || !viscosity.is_finite() {
            return Err(ModelError::InvalidFluid("viscosity must be positive"));
        }
        Ok(Self { density, viscosity })
    }
}

impl Default for FluidProperties {
    /// Typical blood: ρ = 1.06 g/cm³, μ = 0.04 P.
    fn default() -> Self {
        Self { density: 1.06, viscosity: 0.04 }
    }
}

/// Index of a wire within a network. Wires are stored densely; the id is the
/// position in [`NetworkModel::wires`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WireId(pub usize);

/// Index of an element within a network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElementId(pub usize);

/// A connection point carrying one pressure and one flow unknown.
#[derive(Debug, Clone, PartialEq)]
pub struct Wire {
    pub id: WireId,
    pub label: String,
}

/// The lumped block an element represents, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind {
    /// Vessel segment: Poiseuille + expansion resistance, compliance, inertance.
    Vessel(VesselParams),
    /// Static-pressure continuity and mass conservation between ≥ 3 ports.
    Junction,
    /// Prescribed periodic flow on one wire.
    FlowBc(FlowBcParams),
    /// Prescribed constant pressure on one wire.
    PressureBc(PressureBcParams),
    /// Resistance to a constant distal pressure.
    ResistanceBc(ResistanceBcParams),
    /// Three-element Windkessel (proximal R, compliance, distal R).
    WindkesselBc(WindkesselParams),
    /// Coronary outlet chain with two compliances, one referenced to a
    /// prescribed intramyocardial pressure.
    CoronaryBc(CoronaryParams),
}

impl ElementKind {
    pub fn name(&self) -> &'static str {
        match self {
            ElementKind::Vessel(_) => "vessel",
            ElementKind::Junction => "junction",
            ElementKind::FlowBc(_) => "flow bc",
            ElementKind::PressureBc(_) => "pressure bc",
            ElementKind::ResistanceBc(_) => "resistance bc",
            ElementKind::WindkesselBc(_) => "windkessel bc",
            ElementKind::CoronaryBc(_) => "coronary bc",
        }
    }

    /// True for single-wire boundary-condition kinds.
    pub fn is_bc(&self) -> bool {
        !matches!(self, ElementKind::Vessel(_) | ElementKind::Junction)
    }

    /// Internal (non-wire) unknowns introduced by this element.
    pub fn internal_dof_count(&self) -> usize {
        match self {
            ElementKind::Vessel(v) => {
                if v.capacitance > 0.0 {
                    1
                } else {
                    0
                }
            }
            ElementKind::WindkesselBc(_) => 1,
            ElementKind::CoronaryBc(_) => 3,
            _ => 0,
        }
    }
}

/// One lumped element and its port wiring. `inlets` are wires whose flow
/// enters the element, `outlets` wires whose flow leaves it.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementSpec {
    pub id: ElementId,
    pub label: String,
    pub kind: ElementKind,
    pub inlets: Vec<WireId>,
    pub outlets: Vec<WireId>,
}

impl ElementSpec {
    /// All port wires, inlets first.
    pub fn ports(&self) -> impl Iterator<Item = WireId> + '_ {
        self.inlets.iter().chain(self.outlets.iter()).copied()
    }

    pub fn port_count(&self) -> usize {
        self.inlets.len() + self.outlets.len()
    }

    /// Number of local equations contributed to the global system.
    pub fn equation_count(&self) -> usize {
        match &self.kind {
            ElementKind::Vessel(v) => {
                if v.capacitance > 0.0 {
                    3
                } else {
                    2
                }
            }
            ElementKind::Junction => self.port_count(),
            ElementKind::FlowBc(_) | ElementKind::PressureBc(_) | ElementKind::ResistanceBc(_) => 1,
            ElementKind::WindkesselBc(_) => 2,
            ElementKind::CoronaryBc(_) => 4,
        }
    }
}

/// A complete 0D problem statement.
///
/// Immutable after construction by convention; all solver entry points take
/// `&NetworkModel` and the type is `Send + Sync`, so one model may back many
/// concurrent simulations.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkModel {
    pub fluid: FluidProperties,
    pub wires: Vec<Wire>,
    pub elements: Vec<ElementSpec>,
    /// The flow boundary condition designated as the model inlet. Additional
    /// inflows are permitted; the designation drives metrics and reporting.
    pub inlet_bc: Option<ElementId>,
}

impl NetworkModel {
    pub fn new(fluid: FluidProperties) -> Self {
        Self { fluid, wires: Vec::new(), elements: Vec::new(), inlet_bc: None }
    }

    pub fn add_wire(&mut self, label: impl Into<String>) -> WireId {
        let id = WireId(self.wires.len());
        self.wires.push(Wire { id, label: label.into() });
        id
    }

    pub fn add_element(
        &mut self,
        label: impl Into<String>,
        kind: ElementKind,
        inlets: Vec<WireId>,
        outlets: Vec<WireId>,
    ) -> ElementId {
        let id = ElementId(self.elements.len());
        self.elements.push(ElementSpec { id, label: label.into(), kind, inlets, outlets });
        id
    }

    pub fn wire(&self, id: WireId) -> &Wire {
        &self.wires[id.0]
    }

    pub fn element(&self, id: ElementId) -> &ElementSpec {
        &self.elements[id.0]
    }

    /// Wires attached to boundary-condition elements other than the
    /// designated inlet, in element order. These are the model's outlet caps.
    pub fn outlet_wires(&self) -> Vec<WireId> {
        self.elements
            .iter()
            .filter(|e| e.kind.is_bc() && Some(e.id) != self.inlet_bc)
            .flat_map(|e| e.ports())
            .collect()
    }

    /// The wire attached to the designated inlet, if any.
    pub fn inlet_wire(&self) -> Option<WireId> {
        self.inlet_bc.and_then(|id| self.elements.get(id.0)).and_then(|e| e.ports().next())
    }

    /// Checks all structural invariants. Returns an empty list exactly when
    /// the model is well-formed and [`DofMap::build`] will succeed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();

        // Port wiring per kind.
        for e in &self.elements {
            let ok = match &e.kind {
                ElementKind::Vessel(_) => e.inlets.len() == 1 && e.outlets.len() == 1,
                ElementKind::Junction => {
                    !e.inlets.is_empty() && !e.outlets.is_empty() && e.port_count() >= 3
                }
                _ => e.port_count() == 1,
            };
            if !ok {
                diags.push(Diagnostic::WrongPortCount {
                    element: e.id,
                    label: e.label.clone(),
                    kind: e.kind.name(),
                    inlets: e.inlets.len(),
                    outlets: e.outlets.len(),
                });
            }
            for w in e.ports() {
                if w.0 >= self.wires.len() {
                    diags.push(Diagnostic::UnknownWire { element: e.id, wire: w });
                }
            }
            self.check_parameters(e, &mut diags);
        }

        // Each wire must appear exactly once as an outlet (upstream end) and
        // once as an inlet (downstream end).
        let mut upstream = vec![0usize; self.wires.len()];
        let mut downstream = vec![0usize; self.wires.len()];
        for e in &self.elements {
            for w in &e.outlets {
                if w.0 < upstream.len() {
                    upstream[w.0] += 1;
                }
            }
            for w in &e.inlets {
                if w.0 < downstream.len() {
                    downstream[w.0] += 1;
                }
            }
        }
        for (i, (&up, &down)) in upstream.iter().zip(&downstream).enumerate() {
            if up + down < 2 {
                diags.push(Diagnostic::DanglingWire(WireId(i)));
            } else if up != 1 || down != 1 {
                diags.push(Diagnostic::OverconnectedWire { wire: WireId(i), upstream: up, downstream: down });
            }
        }

        // Inlet designation.
        match self.inlet_bc {
            None => diags.push(Diagnostic::NoInletDesignated),
            Some(id) => match self.elements.get(id.0) {
                Some(e) if matches!(e.kind, ElementKind::FlowBc(_)) => {}
                _ => diags.push(Diagnostic::InletNotFlowBc(id)),
            },
        }

        // Connectivity over the element graph (wires as edges).
        if !self.elements.is_empty() && diags.iter().all(|d| !matches!(d, Diagnostic::UnknownWire { .. })) {
            let mut wire_elems: Vec<Vec<usize>> = vec![Vec::new(); self.wires.len()];
            for (i, e) in self.elements.iter().enumerate() {
                for w in e.ports() {
                    wire_elems[w.0].push(i);
                }
            }
            let mut seen = vec![false; self.elements.len()];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for w in self.elements[i].ports() {
                    for &j in &wire_elems[w.0] {
                        if !seen[j] {
                            seen[j] = true;
                            stack.push(j);
                        }
                    }
                }
            }
            for (i, &s) in seen.iter().enumerate() {
                if !s {
                    diags.push(Diagnostic::Disconnected(ElementId(i)));
                }
            }
        }

        diags
    }

    fn check_parameters(&self, e: &ElementSpec, diags: &mut Vec<Diagnostic>) {
        let mut bad = |name: &'static str| {
            diags.push(Diagnostic::InvalidParameter {
                element: e.id,
                label: e.label.clone(),
                parameter: name,
            })
        };
        match &e.kind {
            ElementKind::Vessel(v) => {
                if !(v.resistance >= 0.0) {
                    bad("R_poiseuille");
                }
                if !(v.capacitance >= 0.0) {
                    bad("C");
                }
                if !(v.inductance >= 0.0) {
                    bad("L");
                }
                if !(v.stenosis_coefficient >= 0.0) {
                    bad("stenosis_coefficient");
                }
            }
            ElementKind::ResistanceBc(r) => {
                if !(r.resistance >= 0.0) {
                    bad("R");
                }
            }
            ElementKind::WindkesselBc(w) => {
                if !(w.resistance_proximal >= 0.0) {
                    bad("Rp");
                }
                if !(w.capacitance > 0.0) {
                    bad("C");
                }
                // The distal branch equation divides by Rd.
                if !(w.resistance_distal > 0.0) {
                    bad("Rd");
                }
            }
            ElementKind::CoronaryBc(c) => {
                if !(c.resistance_arterial >= 0.0) {
                    bad("Ra");
                }
                if !(c.resistance_micro >= 0.0) {
                    bad("Ram");
                }
                if !(c.resistance_venous > 0.0) {
                    bad("Rv");
                }
                if !(c.capacitance_arterial > 0.0) {
                    bad("Ca");
                }
                if !(c.capacitance_intramyocardial > 0.0) {
                    bad("Cim");
                }
            }
            _ => {}
        }
    }
}

/// Assembles a [`NetworkModel`] from elements and port-to-port connections,
/// materializing wires in a canonical order (sorted by downstream element and
/// inlet slot). Two builders fed equivalent descriptions produce identical
/// models, which keeps file round-trips exact.
#[derive(Debug)]
pub struct NetworkBuilder {
    fluid: FluidProperties,
    elements: Vec<(String, ElementKind)>,
    /// (from element, outlet slot) → (to element, inlet slot)
    connections: Vec<((usize, usize), (usize, usize))>,
    inlet: Option<usize>,
}

impl NetworkBuilder {
    pub fn new(fluid: FluidProperties) -> Self {
        Self { fluid, elements: Vec::new(), connections: Vec::new(), inlet: None }
    }

    pub fn add_element(&mut self, label: impl Into<String>, kind: ElementKind) -> usize {
        self.elements.push((label.into(), kind));
        self.elements.len() - 1
    }

    /// Declares that outlet slot `from_slot` of `from` feeds inlet slot
    /// `to_slot` of `to`.
    pub fn connect(&mut self, from: usize, from_slot: usize, to: usize, to_slot: usize) {
        self.connections.push(((from, from_slot), (to, to_slot)));
    }

    pub fn designate_inlet(&mut self, element: usize) {
        self.inlet = Some(element);
    }

    pub fn build(mut self) -> NetworkModel {
        self.connections.sort_by_key(|&(_, to)| to);
        let mut net = NetworkModel::new(self.fluid);
        let mut inlets: Vec<Vec<(usize, WireId)>> = vec![Vec::new(); self.elements.len()];
        let mut outlets: Vec<Vec<(usize, WireId)>> = vec![Vec::new(); self.elements.len()];
        for &((from, from_slot), (to, to_slot)) in &self.connections {
            let label = format!("{}:{}", self.elements[from].0, self.elements[to].0);
            let wire = net.add_wire(label);
            outlets[from].push((from_slot, wire));
            inlets[to].push((to_slot, wire));
        }
        for (i, (label, kind)) in self.elements.into_iter().enumerate() {
            let mut ins = std::mem::take(&mut inlets[i]);
            let mut outs = std::mem::take(&mut outlets[i]);
            ins.sort_by_key(|&(slot, _)| slot);
            outs.sort_by_key(|&(slot, _)| slot);
            net.add_element(
                label,
                kind,
                ins.into_iter().map(|(_, w)| w).collect(),
                outs.into_iter().map(|(_, w)| w).collect(),
            );
        }
        net.inlet_bc = self.inlet.map(ElementId);
        net
    }
}

/// Structural problems found by [`NetworkModel::validate`]. Each names the
/// offending entity.
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    DanglingWire(WireId),
    OverconnectedWire { wire: WireId, upstream: usize, downstream: usize },
    UnknownWire { element: ElementId, wire: WireId },
    WrongPortCount { element: ElementId, label: String, kind: &'static str, inlets: usize, outlets: usize },
    NoInletDesignated,
    InletNotFlowBc(ElementId),
    Disconnected(ElementId),
    InvalidParameter { element: ElementId, label: String, parameter: &'static str },
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Diagnostic::DanglingWire(w) => {
                write!(f, "wire {} is not connected to two element ports", w.0)
            }
            Diagnostic::OverconnectedWire { wire, upstream, downstream } => write!(
                f,
                "wire {} has {} upstream and {} downstream attachments (expected 1 and 1)",
                wire.0, upstream, downstream
            ),
            Diagnostic::UnknownWire { element, wire } => {
                write!(f, "element {} references unknown wire {}", element.0, wire.0)
            }
            Diagnostic::WrongPortCount { element, label, kind, inlets, outlets } => write!(
                f,
                "element {} ({label}, {kind}) has invalid port counts: {} inlets, {} outlets",
                element.0, inlets, outlets
            ),
            Diagnostic::NoInletDesignated => write!(f, "no flow boundary condition is designated as the model inlet"),
            Diagnostic::InletNotFlowBc(e) => {
                write!(f, "designated inlet element {} is not a flow boundary condition", e.0)
            }
            Diagnostic::Disconnected(e) => {
                write!(f, "element {} is not connected to the rest of the network", e.0)
            }
            Diagnostic::InvalidParameter { element, label, parameter } => {
                write!(f, "element {} ({label}) has invalid parameter {parameter}", element.0)
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid fluid properties: {0}")]
    InvalidFluid(&'static str),
    #[error("invalid time series: {0}")]
    InvalidTimeSeries(&'static str),
    #[error("degree-of-freedom count {dofs} does not match equation count {equations}; the network is structurally unsolvable")]
    CountMismatch { dofs: usize, equations: usize },
    #[error("network failed validation: {0}")]
    Invalid(String),
}

/// Assignment of global unknown indices: one pressure and one flow per wire,
/// plus each element's internal unknowns, followed by one contiguous block of
/// equation rows per element.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    wire_dofs: Vec<(usize, usize)>,
    internal_dofs: Vec<Vec<usize>>,
    equation_offsets: Vec<usize>,
    total: usize,
}

impl DofMap {
    /// Numbers all unknowns and equations and checks that the counts balance.
    pub fn build(network: &NetworkModel) -> Result<Self, ModelError> {
        let mut next = 0usize;
        let wire_dofs: Vec<(usize, usize)> = network
            .wires
            .iter()
            .map(|_| {
                let p = next;
                next += 2;
                (p, p + 1)
            })
            .collect();
        let internal_dofs: Vec<Vec<usize>> = network
            .elements
            .iter()
            .map(|e| {
                (0..e.kind.internal_dof_count())
                    .map(|_| {
                        let d = next;
                        next += 1;
                        d
                    })
                    .collect()
            })
            .collect();
        let total_dofs = next;

        let mut eq = 0usize;
        let equation_offsets: Vec<usize> = network
            .elements
            .iter()
            .map(|e| {
                let off = eq;
                eq += e.equation_count();
                off
            })
            .collect();
        if eq != total_dofs {
            return Err(ModelError::CountMismatch { dofs: total_dofs, equations: eq });
        }
        Ok(Self { wire_dofs, internal_dofs, equation_offsets, total: total_dofs })
    }

    /// Index of the pressure unknown on a wire.
    pub fn pressure(&self, wire: WireId) -> usize {
        self.wire_dofs[wire.0].0
    }

    /// Index of the flow unknown on a wire.
    pub fn flow(&self, wire: WireId) -> usize {
        self.wire_dofs[wire.0].1
    }

    /// Indices of an element's internal unknowns.
    pub fn internal(&self, element: ElementId) -> &[usize] {
        &self.internal_dofs[element.0]
    }

    /// First equation row of an element's block.
    pub fn equation_offset(&self, element: ElementId) -> usize {
        self.equation_offsets[element.0]
    }

    pub fn total_dofs(&self) -> usize {
        self.total
    }

    pub fn total_equations(&self) -> usize {
        self.total
    }

    /// Local-to-global index list for an element: ports as (P, Q) pairs in
    /// inlet-then-outlet order, followed by internal unknowns.
    pub fn local_dofs(&self, element: &ElementSpec) -> Vec<usize> {
        let mut dofs = Vec::with_capacity(2 * element.port_count() + 3);
        for w in element.ports() {
            dofs.push(self.pressure(w));
            dofs.push(self.flow(w));
        }
        dofs.extend_from_slice(self.internal(element.id));
        dofs
    }
}

/// A periodic sampled signal with piecewise-linear interpolation.
///
/// The period is the last sample time; evaluation wraps `t` modulo the
/// period before any interpolation, so shifting by whole periods cannot
/// accumulate rounding error.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, ModelError> {
        if times.len() < 2 {
            return Err(ModelError::InvalidTimeSeries("need at least two samples"));
        }
        if times.len() != values.len() {
            return Err(ModelError::InvalidTimeSeries("times and values differ in length"));
        }
        if times[0] != 0.0 {
            return Err(ModelError::InvalidTimeSeries("first sample time must be 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(ModelError::InvalidTimeSeries("sample times must be strictly increasing"));
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidTimeSeries("samples must be finite"));
        }
        Ok(Self { times, values })
    }

    /// A constant signal with the given period.
    pub fn constant(value: f64, period: f64) -> Self {
        Self { times: vec![0.0, period], values: vec![value, value] }
    }

    pub fn period(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn wrap(&self, t: f64) -> f64 {
        let period = self.period();
        let w = t.rem_euclid(period);
        // rem_euclid of a negative t that is an exact multiple yields `period`
        // only through rounding; map it back to 0.
        if w >= period {
            0.0
        } else {
            w
        }
    }

    /// Piecewise-linear interpolation at `t mod period`. Exact at sample
    /// times: the convex form `v_a·(1−θ) + v_b·θ` returns stored values
    /// bit-for-bit at θ ∈ {0, 1}.
    pub fn value_at(&self, t: f64) -> f64 {
        let t = self.wrap(t);
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.values[i],
            Err(i) => i,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let theta = (t - t0) / (t1 - t0);
        v0 * (1.0 - theta) + v1 * theta
    }

    /// Slope of the interpolant at `t mod period`; right-continuous at
    /// sample times.
    pub fn derivative_at(&self, t: f64) -> f64 {
        let t = self.wrap(t);
        let i = match self.times.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => (i + 1).min(self.times.len() - 1).max(1),
            Err(i) => i,
        };
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        (v1 - v0) / (t1 - t0)
    }

    /// Mean of the interpolant over one period (trapezoidal, exact for the
    /// piecewise-linear signal).
    pub fn mean(&self) -> f64 {
        let mut area = 0.0;
        for i in 1..self.times.len() {
            area += 0.5 * (self.values[i] + self.values[i - 1]) * (self.times[i] - self.times[i - 1]);
        }
        area / self.period()
    }
}

/// Solution vector and its time derivative at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionState {
    pub t: f64,
    pub y: Vec<f64>,
    pub ydot: Vec<f64>,
}

impl SolutionState {
    /// Cold start: all unknowns and derivatives zero.
    pub fn zeros(n: usize) -> Self {
        Self { t: 0.0, y: vec![0.0; n], ydot: vec![0.0; n] }
    }
}
