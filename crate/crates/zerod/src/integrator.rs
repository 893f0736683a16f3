//! Global assembly and implicit time integration.
//!
//! The element-local arrays are scattered into a global sparse system
//! `E(y,t)·ẏ + F(y,t)·y + c(y,t) = 0` which is advanced with the implicit
//! generalized-α method: a predictor, an interpolation of the unknowns to
//! intermediate levels (`y` at `t + α_f·Δt`, `ẏ` at `t + α_m·Δt`), a Newton
//! multi-corrector solving `K·Δy = −r` with the tangent
//! `K = dE + (α_m/(α_f·γ·Δt))·E + dF + F + dc`, and a final update.
//!
//! One simulation is strictly sequential; independent simulations over a
//! shared immutable [`NetworkModel`] can run concurrently since every
//! [`Integrator`] owns its assembly and factorization workspaces.

use crate::elements::{fill_local_system, ElementError, LocalSystem};
use crate::model::{
    DofMap, ElementKind, ModelError, NetworkModel, SolutionState, WireId,
};
use crate::sparse::{CscMatrix, LinearSolveError, SparseLu};
use thiserror::Error;

/// Generalized-α parameters and Newton controls.
///
/// The method parameters derive from the spectral radius ρ∞ ∈ [0, 1]:
/// `α_m = (3 − ρ∞)/(2 + 2ρ∞)`, `α_f = 1/(1 + ρ∞)`, `γ = ½ + α_m − α_f`.
/// ρ∞ = 0 (maximal high-frequency damping) is the default.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorParams {
    pub spectral_radius: f64,
    /// Time step in seconds; uniform within a run.
    pub dt: f64,
    pub steps_per_cycle: usize,
    pub max_newton_iters: usize,
    /// Absolute residual tolerance in CGS residual units.
    pub newton_abs_tol: f64,
    /// Relative tolerance against the first residual of each step.
    pub newton_rel_tol: f64,
}

impl Default for IntegratorParams {
    fn default() -> Self {
        Self {
            spectral_radius: 0.0,
            dt: 1e-3,
            steps_per_cycle: 1000,
            max_newton_iters: 30,
            newton_abs_tol: 1e-8,
            newton_rel_tol: 1e-5,
        }
    }
}

impl IntegratorParams {
    /// Parameters stepping one cycle of length `period` with the default
    /// Newton controls.
    pub fn for_cycle(period: f64, steps_per_cycle: usize) -> Self {
        Self { dt: period / steps_per_cycle as f64, steps_per_cycle, ..Self::default() }
    }

    pub fn alpha_m(&self) -> f64 {
        (3.0 - self.spectral_radius) / (2.0 + 2.0 * self.spectral_radius)
    }

    pub fn alpha_f(&self) -> f64 {
        1.0 / (1.0 + self.spectral_radius)
    }

    pub fn gamma(&self) -> f64 {
        0.5 + self.alpha_m() - self.alpha_f()
    }

    /// Coefficient coupling ẏ updates to y updates in the corrector.
    pub fn time_factor(&self) -> f64 {
        self.alpha_m() / (self.alpha_f() * self.gamma() * self.dt)
    }

    pub fn validate(&self) -> Result<(), IntegratorError> {
        if !(0.0..=1.0).contains(&self.spectral_radius) {
            return Err(IntegratorError::InvalidParams("spectral radius must lie in [0, 1]"));
        }
        if !(self.dt > 0.0) {
            return Err(IntegratorError::InvalidParams("dt must be positive"));
        }
        if self.steps_per_cycle == 0 {
            return Err(IntegratorError::InvalidParams("steps_per_cycle must be at least 1"));
        }
        if self.max_newton_iters == 0 {
            return Err(IntegratorError::InvalidParams("max_newton_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Assembled residual and tangent at one state.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub residual: Vec<f64>,
    pub tangent: CscMatrix,
}

#[derive(Debug, Error)]
pub enum IntegratorError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("Newton iteration diverged at step {step} (t = {time:.6e}): residual {residual:.3e} after {iterations} iterations")]
    NewtonDivergence { step: usize, time: f64, iterations: usize, residual: f64 },
    #[error("singular tangent at step {step} (t = {time:.6e}): {source}")]
    SingularTangent { step: usize, time: f64, source: LinearSolveError },
    #[error("periodicity check requires at least 2 stored cycles, found {available}")]
    InsufficientCycles { available: usize },
    #[error("invalid integrator parameters: {0}")]
    InvalidParams(&'static str),
    #[error("initial state has {got} unknowns, expected {expected}")]
    InitialStateSize { expected: usize, got: usize },
    #[error("steady-state run did not reach periodicity within {cycles} cycles")]
    SteadyStateNotReached { cycles: usize },
}

/// Failure of a single time step, without run-level context.
#[derive(Debug, Error)]
pub enum StepError {
    #[error(transparent)]
    Element(#[from] ElementError),
    #[error("Newton iteration diverged: residual {residual:.3e} after {iterations} iterations")]
    NewtonDivergence { iterations: usize, residual: f64 },
    #[error("singular tangent: {0}")]
    SingularTangent(#[from] LinearSolveError),
}

struct ElementSlot {
    equation_offset: usize,
    dofs: Vec<usize>,
    /// CSC value slot per local (row-major) entry.
    scatter: Vec<usize>,
    local: LocalSystem,
    y_local: Vec<f64>,
    ydot_local: Vec<f64>,
}

/// Scatters element-local systems into a global sparse residual and tangent.
/// The sparsity pattern is fixed at construction; assembly only rewrites
/// values.
pub struct Assembler {
    slots: Vec<ElementSlot>,
    matrix: CscMatrix,
    residual: Vec<f64>,
}

impl Assembler {
    pub fn new(network: &NetworkModel, dofmap: &DofMap) -> Self {
        let n = dofmap.total_dofs();
        let mut pattern: Vec<(usize, usize, f64)> = Vec::new();
        let mut slots: Vec<ElementSlot> = Vec::with_capacity(network.elements.len());
        for e in &network.elements {
            let dofs = dofmap.local_dofs(e);
            let n_eq = e.equation_count();
            let offset = dofmap.equation_offset(e.id);
            for i in 0..n_eq {
                for &col in &dofs {
                    pattern.push((offset + i, col, 0.0));
                }
            }
            let n_local = dofs.len();
            slots.push(ElementSlot {
                equation_offset: offset,
                scatter: Vec::new(),
                local: LocalSystem::sized(n_eq, n_local),
                y_local: vec![0.0; n_local],
                ydot_local: vec![0.0; n_local],
                dofs,
            });
        }
        let matrix = CscMatrix::from_triplets(n, &pattern);
        // Map each local entry to its value slot. Equation rows are unique per
        // element, so every (row, col) pair resolves to a distinct slot.
        for (e, slot) in network.elements.iter().zip(&mut slots) {
            let n_eq = e.equation_count();
            for i in 0..n_eq {
                let row = slot.equation_offset + i;
                for &col in &slot.dofs {
                    let range = matrix.col_ptr[col]..matrix.col_ptr[col + 1];
                    let pos = matrix.row_idx[range.clone()]
                        .binary_search(&row)
                        .expect("pattern entry present");
                    slot.scatter.push(range.start + pos);
                }
            }
        }
        Self { slots, matrix, residual: vec![0.0; n] }
    }

    /// Evaluates residual and tangent at `(y, ẏ, t)` with the given time
    /// factor multiplying `E` in the tangent.
    pub fn assemble(
        &mut self,
        network: &NetworkModel,
        y: &[f64],
        ydot: &[f64],
        t: f64,
        time_factor: f64,
    ) -> Result<(), ElementError> {
        self.matrix.values.iter_mut().for_each(|v| *v = 0.0);
        self.residual.iter_mut().for_each(|v| *v = 0.0);
        for (e, slot) in network.elements.iter().zip(&mut self.slots) {
            for (k, &dof) in slot.dofs.iter().enumerate() {
                slot.y_local[k] = y[dof];
                slot.ydot_local[k] = ydot[dof];
            }
            fill_local_system(e, &slot.y_local, &slot.ydot_local, t, &mut slot.local)?;
            let local = &slot.local;
            let n_local = slot.dofs.len();
            for i in 0..local.n_eq {
                let mut r = local.c[i];
                for j in 0..n_local {
                    let ev = local.e.get(i, j);
                    let fv = local.f.get(i, j);
                    r += ev * slot.ydot_local[j] + fv * slot.y_local[j];
                    let k = local.de.get(i, j)
                        + local.df.get(i, j)
                        + local.dc.get(i, j)
                        + fv
                        + time_factor * ev;
                    self.matrix.values[slot.scatter[i * n_local + j]] += k;
                }
                self.residual[slot.equation_offset + i] = r;
            }
        }
        Ok(())
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn tangent(&self) -> &CscMatrix {
        &self.matrix
    }
}

/// Builds the global residual and tangent at one state. `time_factor` is
/// `α_m/(α_f·γ·Δt)` when assembling within a generalized-α corrector, or any
/// coefficient multiplying `E` in `K` otherwise.
pub fn assemble(
    network: &NetworkModel,
    dofmap: &DofMap,
    y: &[f64],
    ydot: &[f64],
    t: f64,
    time_factor: f64,
) -> Result<GlobalSystem, IntegratorError> {
    let mut assembler = Assembler::new(network, dofmap);
    assembler.assemble(network, y, ydot, t, time_factor)?;
    Ok(GlobalSystem { residual: assembler.residual, tangent: assembler.matrix })
}

/// Time stepper owning all mutable solver state for one simulation.
pub struct Integrator<'a> {
    network: &'a NetworkModel,
    dofmap: DofMap,
    params: IntegratorParams,
    assembler: Assembler,
    lu: SparseLu,
    delta: Vec<f64>,
}

impl<'a> Integrator<'a> {
    pub fn new(network: &'a NetworkModel, params: IntegratorParams) -> Result<Self, IntegratorError> {
        params.validate()?;
        let dofmap = DofMap::build(network)?;
        let assembler = Assembler::new(network, &dofmap);
        let n = dofmap.total_dofs();
        Ok(Self { network, dofmap, params, assembler, lu: SparseLu::new(), delta: vec![0.0; n] })
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn params(&self) -> &IntegratorParams {
        &self.params
    }

    /// Advances one generalized-α step from `state`. Returns the state at
    /// `t + Δt` and the number of Newton corrections performed.
    pub fn step(&mut self, state: &SolutionState) -> Result<(SolutionState, usize), StepError> {
        self.step_traced(state, None)
    }

    /// Like [`Integrator::step`], recording the residual norm before each
    /// convergence check into `trace`.
    pub fn step_traced(
        &mut self,
        state: &SolutionState,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<(SolutionState, usize), StepError> {
        let p = &self.params;
        let (alpha_m, alpha_f, gamma, dt) = (p.alpha_m(), p.alpha_f(), p.gamma(), p.dt);
        let factor = p.time_factor();
        let t_mid = state.t + alpha_f * dt;

        // Predictor y_{n+1} = y_n, ẏ_{n+1} = ((γ−1)/γ)·ẏ_n, then the
        // initiator interpolation to the intermediate levels.
        let mut y_mid = state.y.clone();
        let ydot_factor = 1.0 - alpha_m / gamma;
        let mut ydot_mid: Vec<f64> = state.ydot.iter().map(|v| v * ydot_factor).collect();

        let mut iterations = 0usize;
        let mut first_norm = f64::INFINITY;
        loop {
            self.assembler.assemble(self.network, &y_mid, &ydot_mid, t_mid, factor)?;
            let norm = l2_norm(self.assembler.residual());
            if let Some(t) = trace.as_deref_mut() {
                t.push(norm);
            }
            if !norm.is_finite() {
                return Err(StepError::NewtonDivergence { iterations, residual: norm });
            }
            if iterations == 0 {
                first_norm = norm;
            }
            if norm < p.newton_abs_tol || norm < p.newton_rel_tol * first_norm {
                break;
            }
            if iterations >= p.max_newton_iters {
                return Err(StepError::NewtonDivergence { iterations, residual: norm });
            }
            self.lu.factor(self.assembler.tangent())?;
            for (d, r) in self.delta.iter_mut().zip(self.assembler.residual()) {
                *d = -r;
            }
            self.lu.solve_in_place(&mut self.delta)?;
            for ((y, yd), d) in y_mid.iter_mut().zip(ydot_mid.iter_mut()).zip(&self.delta) {
                *y += d;
                *yd += factor * d;
            }
            iterations += 1;
        }

        // Update step back to the end-of-step levels.
        let y_next: Vec<f64> = state
            .y
            .iter()
            .zip(&y_mid)
            .map(|(yn, ym)| yn + (ym - yn) / alpha_f)
            .collect();
        let ydot_next: Vec<f64> = state
            .ydot
            .iter()
            .zip(&ydot_mid)
            .map(|(dn, dm)| dn + (dm - dn) / alpha_m)
            .collect();
        Ok((SolutionState { t: state.t + dt, y: y_next, ydot: ydot_next }, iterations))
    }
}

/// Per-wire pressure and flow histories over all simulated cycles, plus
/// solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultSet {
    /// Sample times, `steps·dt` apart, including the initial state.
    pub times: Vec<f64>,
    pub wire_labels: Vec<String>,
    /// `pressures[wire][sample]` in dyn/cm².
    pub pressures: Vec<Vec<f64>>,
    /// `flows[wire][sample]` in cm³/s.
    pub flows: Vec<Vec<f64>>,
    /// Newton corrections per computed step (`times.len() − 1` entries).
    pub newton_iterations: Vec<usize>,
    pub steps_per_cycle: usize,
    pub cycles: usize,
    /// Wire positions of outlet caps, in element order.
    pub outlet_wires: Vec<usize>,
    /// Wire position of the designated inlet cap.
    pub inlet_wire: Option<usize>,
    pub final_state: SolutionState,
}

impl ResultSet {
    pub fn pressure(&self, wire: WireId) -> &[f64] {
        &self.pressures[wire.0]
    }

    pub fn flow(&self, wire: WireId) -> &[f64] {
        &self.flows[wire.0]
    }

    /// Sample indices belonging to cycle `c`: the states computed during that
    /// cycle, `(c·spc, (c+1)·spc]`.
    pub fn cycle_samples(&self, cycle: usize) -> std::ops::Range<usize> {
        let spc = self.steps_per_cycle;
        (cycle * spc + 1)..((cycle + 1) * spc + 1)
    }

    /// Mean pressure of one wire over one cycle.
    pub fn cycle_mean_pressure(&self, wire: usize, cycle: usize) -> f64 {
        let range = self.cycle_samples(cycle);
        let n = range.len();
        self.pressures[wire][range].iter().sum::<f64>() / n as f64
    }

    /// Copy truncated to the first `cycles` cycles.
    pub fn truncated(&self, cycles: usize) -> ResultSet {
        assert!(cycles <= self.cycles && cycles >= 1);
        let keep = cycles * self.steps_per_cycle + 1;
        ResultSet {
            times: self.times[..keep].to_vec(),
            wire_labels: self.wire_labels.clone(),
            pressures: self.pressures.iter().map(|p| p[..keep].to_vec()).collect(),
            flows: self.flows.iter().map(|f| f[..keep].to_vec()).collect(),
            newton_iterations: self.newton_iterations[..keep - 1].to_vec(),
            steps_per_cycle: self.steps_per_cycle,
            cycles,
            outlet_wires: self.outlet_wires.clone(),
            inlet_wire: self.inlet_wire,
            final_state: self.final_state.clone(),
        }
    }
}

/// Integrates `n_cycles · steps_per_cycle` steps from `t = 0`.
///
/// The default initial state is a cold start (`y = ẏ = 0`); pass `initial`
/// to warm-start, e.g. from [`steady_initial_state`]. All steps of every
/// cycle are stored.
pub fn run_simulation(
    network: &NetworkModel,
    params: &IntegratorParams,
    n_cycles: usize,
    initial: Option<SolutionState>,
) -> Result<ResultSet, IntegratorError> {
    if n_cycles == 0 {
        return Err(IntegratorError::InvalidParams("n_cycles must be at least 1"));
    }
    let diagnostics = network.validate();
    if !diagnostics.is_empty() {
        let msg = diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
        return Err(IntegratorError::Model(ModelError::Invalid(msg)));
    }
    let mut integrator = Integrator::new(network, *params)?;
    let n = integrator.dofmap.total_dofs();
    let mut state = match initial {
        Some(s) => {
            if s.y.len() != n || s.ydot.len() != n {
                return Err(IntegratorError::InitialStateSize { expected: n, got: s.y.len() });
            }
            s
        }
        None => SolutionState::zeros(n),
    };
    let t0 = state.t;

    let n_steps = n_cycles * params.steps_per_cycle;
    let n_wires = network.wires.len();
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut pressures = vec![Vec::with_capacity(n_steps + 1); n_wires];
    let mut flows = vec![Vec::with_capacity(n_steps + 1); n_wires];
    let mut newton_iterations = Vec::with_capacity(n_steps);

    let record = |state: &SolutionState,
                  pressures: &mut Vec<Vec<f64>>,
                  flows: &mut Vec<Vec<f64>>,
                  dofmap: &DofMap| {
        for (w, series) in pressures.iter_mut().enumerate() {
            series.push(state.y[dofmap.pressure(WireId(w))]);
        }
        for (w, series) in flows.iter_mut().enumerate() {
            series.push(state.y[dofmap.flow(WireId(w))]);
        }
    };

    times.push(t0);
    record(&state, &mut pressures, &mut flows, &integrator.dofmap);

    for step in 0..n_steps {
        state.t = t0 + step as f64 * params.dt;
        let (next, iters) = integrator.step(&state).map_err(|e| at_step(e, step, state.t))?;
        state = next;
        state.t = t0 + (step + 1) as f64 * params.dt;
        times.push(state.t);
        newton_iterations.push(iters);
        record(&state, &mut pressures, &mut flows, &integrator.dofmap);
    }

    let outlet_wires = network.outlet_wires().iter().map(|w| w.0).collect();
    let inlet_wire = network.inlet_wire().map(|w| w.0);
    Ok(ResultSet {
        times,
        wire_labels: network.wires.iter().map(|w| w.label.clone()).collect(),
        pressures,
        flows,
        newton_iterations,
        steps_per_cycle: params.steps_per_cycle,
        cycles: n_cycles,
        outlet_wires,
        inlet_wire,
        final_state: state,
    })
}

fn at_step(e: StepError, step: usize, time: f64) -> IntegratorError {
    match e {
        StepError::Element(err) => IntegratorError::Element(err),
        StepError::NewtonDivergence { iterations, residual } => {
            IntegratorError::NewtonDivergence { step, time, iterations, residual }
        }
        StepError::SingularTangent(source) => IntegratorError::SingularTangent { step, time, source },
    }
}

/// Per-outlet pressure delta between the last two cycles.
#[derive(Debug, Clone, PartialEq)]
pub struct OutletDelta {
    pub wire: usize,
    pub label: String,
    pub mean_previous: f64,
    pub mean_last: f64,
    /// |last − previous| / |previous|.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicityReport {
    pub tolerance: f64,
    pub converged: bool,
    pub outlets: Vec<OutletDelta>,
}

/// Compares cycle-averaged outlet pressures between the last two stored
/// cycles; the run is periodic when every relative delta is below `tol`
/// (0.01 is the conventional threshold).
pub fn check_periodicity(results: &ResultSet, tol: f64) -> Result<PeriodicityReport, IntegratorError> {
    if results.cycles < 2 {
        return Err(IntegratorError::InsufficientCycles { available: results.cycles });
    }
    let last = results.cycles - 1;
    let mut outlets = Vec::with_capacity(results.outlet_wires.len());
    let mut converged = true;
    for &w in &results.outlet_wires {
        let mean_previous = results.cycle_mean_pressure(w, last - 1);
        let mean_last = results.cycle_mean_pressure(w, last);
        let delta = if mean_previous == 0.0 {
            if mean_last == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (mean_last - mean_previous).abs() / mean_previous.abs()
        };
        converged &= delta < tol;
        outlets.push(OutletDelta {
            wire: w,
            label: results.wire_labels[w].clone(),
            mean_previous,
            mean_last,
            delta,
        });
    }
    Ok(PeriodicityReport { tolerance: tol, converged, outlets })
}

/// Warm-start state: integrates the network with every prescribed inflow
/// replaced by its cycle average until the periodicity check passes, then
/// returns the final state with the clock reset to zero.
pub fn steady_initial_state(
    network: &NetworkModel,
    params: &IntegratorParams,
    tol: f64,
    max_cycles: usize,
) -> Result<SolutionState, IntegratorError> {
    let mut steady = network.clone();
    for e in &mut steady.elements {
        if let ElementKind::FlowBc(p) = &mut e.kind {
            p.flow = crate::model::TimeSeries::constant(p.flow.mean(), p.flow.period());
        }
    }
    let mut state: Option<SolutionState> = None;
    let mut previous_means: Option<Vec<f64>> = None;
    for _ in 0..max_cycles {
        let results = run_simulation(&steady, params, 1, state)?;
        let means: Vec<f64> = results
            .outlet_wires
            .iter()
            .map(|&w| results.cycle_mean_pressure(w, 0))
            .collect();
        let mut final_state = results.final_state;
        final_state.t = 0.0;
        if let Some(prev) = &previous_means {
            let converged = prev.iter().zip(&means).all(|(p, l)| {
                if *p == 0.0 {
                    *l == 0.0
                } else {
                    (l - p).abs() / p.abs() < tol
                }
            });
            if converged {
                return Ok(final_state);
            }
        }
        previous_means = Some(means);
        state = Some(final_state);
    }
    Err(IntegratorError::SteadyStateNotReached { cycles: max_cycles })
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
