//! The operations behind the `zerod` command-line interface: building models
//! from centerline trees, running simulations, comparing against references,
//! and parameter sweeps. Each returns structured outcomes so they are as
//! usable from tests and library code as from the binary.
//!
//! Exit codes: 0 success, 2 file or format error, 3 validation failure,
//! 4 solver failure, 5 comparison failure.

use crate::integrator::{check_periodicity, run_simulation, steady_initial_state, IntegratorError, IntegratorParams};
use crate::io::model_file::parse_model;
use crate::io::results_file::{
    read_cap_map, write_comparison_report, write_manifest, FailureInfo, NewtonStats,
};
use crate::io::tree_file::assemble_tree;
use crate::io::{
    self, read_model, read_overlay, read_results_csv, read_tree, write_model, write_results_csv,
    ComparisonReport, IoError, PeriodicitySummary, RunManifest, SimulationParameters,
};
use crate::metrics::{cap_errors, resample_cap, MetricsError};
use crate::model::{ElementKind, NetworkModel};
use crate::rom::{build_network, RomError, SegmentRole, SegmentationMode};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;
pub const EXIT_COMPARISON: i32 = 5;

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "ZEROD_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Solver(String),
    #[error("{0}")]
    Comparison(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Comparison(_) => EXIT_COMPARISON,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<RomError> for CliError {
    fn from(e: RomError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<IntegratorError> for CliError {
    fn from(e: IntegratorError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::Comparison(e.to_string())
    }
}

fn validated(network: NetworkModel) -> Result<NetworkModel, CliError> {
    let diagnostics = network.validate();
    if diagnostics.is_empty() {
        Ok(network)
    } else {
        let msg = diagnostics.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n  ");
        Err(CliError::Validation(format!("model failed validation:\n  {msg}")))
    }
}

// ---------------------------------------------------------------------------
// build

#[derive(Debug, Clone)]
pub struct BuildArgs {
    pub tree: PathBuf,
    pub bcs: Option<PathBuf>,
    pub mode: SegmentationMode,
    pub output: PathBuf,
    /// Simulation defaults embedded into the model file.
    pub simulation: SimulationParameters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchSummary {
    pub branch: usize,
    pub segments: usize,
    /// (S₀/S_s ratio, stenosis extent) when a stenosis segment was emitted.
    pub stenosis: Option<(f64, (f64, f64))>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOutcome {
    pub model_path: PathBuf,
    pub branches: Vec<BranchSummary>,
    pub vessels: usize,
    pub junctions: usize,
    pub boundary_conditions: usize,
}

impl BuildOutcome {
    pub fn summary(&self) -> String {
        let mut lines = vec![format!(
            "model written to {} ({} vessels, {} junctions, {} boundary conditions)",
            self.model_path.display(),
            self.vessels,
            self.junctions,
            self.boundary_conditions
        )];
        for b in &self.branches {
            match &b.stenosis {
                Some((ratio, (s0, s1))) => lines.push(format!(
                    "branch {}: {} segments, stenosis S0/Ss = {ratio:.3} over [{s0:.3}, {s1:.3}] cm",
                    b.branch, b.segments
                )),
                None => lines.push(format!("branch {}: {} segments", b.branch, b.segments)),
            }
        }
        lines.join("\n")
    }
}

/// Builds a model file from a centerline tree (plus optional boundary
/// condition overlay) and writes it to `args.output`.
pub fn cmd_build(args: &BuildArgs) -> Result<BuildOutcome, CliError> {
    let tree_file = read_tree(&args.tree)?;
    let overlay = match &args.bcs {
        Some(path) => Some(read_overlay(path)?),
        None => None,
    };
    let (tree, fluid, wall) = assemble_tree(&tree_file, overlay.as_ref())
        .map_err(|message| CliError::Parse(format!("{}: {message}", args.tree.display())))?;

    let network = validated(build_network(&tree, fluid, wall, args.mode)?)?;

    // Per-branch summaries re-run the (cheap) segmentation.
    let mut branches = Vec::with_capacity(tree.branches.len());
    for profile in &tree.branches {
        let segmentation = match args.mode {
            SegmentationMode::Automatic { min_ratio } => crate::rom::detect_stenosis(profile, min_ratio),
            SegmentationMode::Fixed { segments } => crate::rom::fit_segments(profile, segments)?,
        };
        let stenosis = segmentation
            .segments
            .iter()
            .find(|s| s.role == SegmentRole::Stenosis)
            .map(|s| (s.area_proximal / s.area_stenosis, (s.s_start, s.s_end)));
        branches.push(BranchSummary { branch: profile.id, segments: segmentation.segments.len(), stenosis });
    }

    let mut simulation = args.simulation.clone();
    simulation.density = fluid.density;
    simulation.viscosity = fluid.viscosity;
    write_model(&args.output, &network, &simulation)?;

    Ok(BuildOutcome {
        model_path: args.output.clone(),
        branches,
        vessels: network.elements.iter().filter(|e| matches!(e.kind, ElementKind::Vessel(_))).count(),
        junctions: network.elements.iter().filter(|e| matches!(e.kind, ElementKind::Junction)).count(),
        boundary_conditions: network.elements.iter().filter(|e| e.kind.is_bc()).count(),
    })
}

// ---------------------------------------------------------------------------
// run

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub model: PathBuf,
    pub out_dir: PathBuf,
    /// Override the model file's cycle count.
    pub cycles: Option<usize>,
    pub steps_per_cycle: Option<usize>,
    pub spectral_radius: Option<f64>,
    /// Periodicity tolerance for the manifest report (default 0.01).
    pub periodicity_tol: f64,
    /// Keep every cycle in the CSV instead of only the final one.
    pub store_all_cycles: bool,
    /// Start from a steady solution with cycle-averaged inflow.
    pub warm_start: bool,
}

impl RunArgs {
    pub fn new(model: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            model: model.into(),
            out_dir: out_dir.into(),
            cycles: None,
            steps_per_cycle: None,
            spectral_radius: None,
            periodicity_tol: 0.01,
            store_all_cycles: false,
            warm_start: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub results_path: PathBuf,
    pub manifest_path: PathBuf,
    pub manifest: RunManifest,
}

/// Integrator parameters implied by a model file's simulation section: one
/// cycle spans the inlet flow period.
pub fn integrator_params(network: &NetworkModel, sim: &SimulationParameters) -> Result<IntegratorParams, CliError> {
    let inlet = network
        .inlet_bc
        .and_then(|id| network.elements.get(id.0))
        .ok_or_else(|| CliError::Validation("model has no designated inlet flow".into()))?;
    let period = match &inlet.kind {
        ElementKind::FlowBc(p) => p.flow.period(),
        _ => return Err(CliError::Validation("designated inlet is not a flow boundary condition".into())),
    };
    let steps = sim.number_of_time_pts_per_cardiac_cycle;
    Ok(IntegratorParams {
        spectral_radius: sim.spectral_radius,
        dt: period / steps as f64,
        steps_per_cycle: steps,
        max_newton_iters: sim.max_newton_iterations,
        newton_abs_tol: sim.newton_abs_tol,
        newton_rel_tol: sim.newton_rel_tol,
    })
}

/// Runs a model file and writes `results.csv` plus `manifest.json` into the
/// output directory. A solver failure still writes the manifest, with the
/// failing step recorded.
pub fn cmd_run(args: &RunArgs) -> Result<RunOutcome, CliError> {
    let loaded = read_model(&args.model)?;
    let network = validated(loaded.network)?;
    let mut sim = loaded.simulation;
    if let Some(c) = args.cycles {
        sim.number_of_cardiac_cycles = c;
    }
    if let Some(s) = args.steps_per_cycle {
        sim.number_of_time_pts_per_cardiac_cycle = s;
    }
    if let Some(r) = args.spectral_radius {
        sim.spectral_radius = r;
    }
    let params = integrator_params(&network, &sim)?;
    let cycles = sim.number_of_cardiac_cycles.max(1);

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|source| IoError::Write { path: args.out_dir.display().to_string(), source })?;
    let results_path = args.out_dir.join("results.csv");
    let manifest_path = args.out_dir.join("manifest.json");

    let start = Instant::now();
    let initial = if args.warm_start {
        Some(steady_initial_state(&network, &params, args.periodicity_tol, 50)?)
    } else {
        None
    };
    let outcome = run_simulation(&network, &params, cycles, initial);
    let wall_clock_seconds = start.elapsed().as_secs_f64();

    let mut manifest = RunManifest {
        model: args.model.display().to_string(),
        units: "cgs".into(),
        cycles,
        steps_per_cycle: params.steps_per_cycle,
        dt: params.dt,
        spectral_radius: params.spectral_radius,
        converged: false,
        newton: NewtonStats::from_counts(&[]),
        wall_clock_seconds,
        periodicity: None,
        failure: None,
    };

    match outcome {
        Ok(results) => {
            manifest.converged = true;
            manifest.newton = NewtonStats::from_counts(&results.newton_iterations);
            if cycles >= 2 {
                let report = check_periodicity(&results, args.periodicity_tol)?;
                manifest.periodicity = Some(PeriodicitySummary::from(&report));
            }
            let first = if args.store_all_cycles {
                0
            } else {
                (cycles - 1) * params.steps_per_cycle
            };
            write_results_csv(&results_path, &results, first, results.times.len() - 1)?;
            write_manifest(&manifest_path, &manifest)?;
            Ok(RunOutcome { results_path, manifest_path, manifest })
        }
        Err(e) => {
            if let IntegratorError::NewtonDivergence { step, time, .. }
            | IntegratorError::SingularTangent { step, time, .. } = &e
            {
                manifest.failure = Some(FailureInfo { step: *step, time: *time, message: e.to_string() });
                write_manifest(&manifest_path, &manifest)?;
            }
            Err(e.into())
        }
    }
}

// ---------------------------------------------------------------------------
// compare

#[derive(Debug, Clone)]
pub struct CompareArgs {
    pub results: PathBuf,
    pub reference: PathBuf,
    pub cap_map: PathBuf,
    /// Resample the test series onto the reference grid when lengths differ.
    pub resample: bool,
    pub output: PathBuf,
}

/// Compares a results file against a reference and writes the error report.
pub fn cmd_compare(args: &CompareArgs) -> Result<ComparisonReport, CliError> {
    let results = read_results_csv(&args.results)?;
    let reference = read_results_csv(&args.reference)?;
    let map = read_cap_map(&args.cap_map)?;
    if map.caps.is_empty() {
        return Err(CliError::Parse(format!("{}: cap map is empty", args.cap_map.display())));
    }

    let mut reference_caps = Vec::with_capacity(map.caps.len());
    let mut test_caps = Vec::with_capacity(map.caps.len());
    for entry in &map.caps {
        reference_caps.push(
            reference
                .cap_series(&entry.id, &entry.reference, entry.inlet)
                .map_err(|m| CliError::Parse(format!("{}: {m}", args.reference.display())))?,
        );
        test_caps.push(
            results
                .cap_series(&entry.id, &entry.result, entry.inlet)
                .map_err(|m| CliError::Parse(format!("{}: {m}", args.results.display())))?,
        );
    }

    let n_ref = reference_caps[0].len();
    let n_test = test_caps[0].len();
    if n_ref != n_test {
        if !args.resample {
            return Err(CliError::Comparison(format!(
                "time grids differ ({n_test} vs {n_ref} samples); pass --resample to interpolate"
            )));
        }
        test_caps = test_caps.iter().map(|c| resample_cap(c, n_ref)).collect();
    }

    let report = cap_errors(&reference_caps, &test_caps)?;
    let report = ComparisonReport::new(&report, map.caps.len(), n_ref);
    write_comparison_report(&args.output, &report)?;
    Ok(report)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Dotted path into the model file, e.g. `boundary_conditions.OUT.Rd`
    /// or `vessels.branch0_seg0.R_poiseuille`.
    pub parameter: String,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<SweepRange>,
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

fn default_parallelism() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepSpec {
    pub fn expanded_values(&self) -> Vec<f64> {
        let mut values = self.values.clone();
        if let Some(r) = &self.range {
            if r.count == 1 {
                values.push(r.start);
            } else {
                for i in 0..r.count {
                    values.push(r.start + (r.stop - r.start) * i as f64 / (r.count - 1) as f64);
                }
            }
        }
        values
    }
}

pub fn read_sweep_spec(path: &Path) -> Result<SweepSpec, IoError> {
    let text = io::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.display().to_string(), source })
}

#[derive(Debug, Clone)]
pub struct SweepArgs {
    pub model: PathBuf,
    pub spec: SweepSpec,
    pub out_dir: PathBuf,
    /// Overrides the spec's parallelism when set.
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    /// Mean outlet pressures over the final cycle, in outlet order.
    pub outlet_means: Vec<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub summary_path: PathBuf,
    pub outlet_labels: Vec<String>,
    pub rows: Vec<SweepRow>,
}

/// Runs one simulation per parameter value, up to `jobs` at a time, and
/// writes per-row results plus a `summary.csv` ordered by value order.
pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepOutcome, CliError> {
    let values = args.spec.expanded_values();
    if values.is_empty() {
        return Err(CliError::Parse("sweep value list is empty".into()));
    }
    let text = io::read_to_string(&args.model)?;
    let base: serde_json::Value = serde_json::from_str(&text)
        .map_err(|source| IoError::Json { path: args.model.display().to_string(), source })?;
    // Resolve the path once up front so typos fail fast.
    set_parameter(&mut base.clone(), &args.spec.parameter, values[0])
        .map_err(|m| CliError::Parse(format!("parameter path '{}': {m}", args.spec.parameter)))?;

    // Outlet labels from the unmodified model, for the summary header.
    let loaded = read_model(&args.model)?;
    let outlet_labels: Vec<String> = {
        let network = validated(loaded.network)?;
        network.outlet_wires().iter().map(|w| network.wire(*w).label.clone()).collect()
    };

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|source| IoError::Write { path: args.out_dir.display().to_string(), source })?;

    let mut threads = args.jobs.unwrap_or(args.spec.parallelism).max(1);
    if let Ok(cap) = std::env::var(THREADS_ENV) {
        if let Ok(cap) = cap.trim().parse::<usize>() {
            threads = threads.min(cap.max(1));
        }
    }
    threads = threads.min(values.len());

    let rows: Vec<SweepRow> = {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<SweepRow>>> =
            values.iter().map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..threads {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= values.len() {
                        break;
                    }
                    let row = sweep_row(&base, &args.spec.parameter, values[i], &args.out_dir, i);
                    *slots[i].lock().unwrap() = Some(row);
                });
            }
        });
        slots.into_iter().map(|s| s.into_inner().unwrap().unwrap()).collect()
    };

    // Summary written by the collector only, in value order.
    let mut summary = String::from("value,converged");
    for label in &outlet_labels {
        summary.push_str(&format!(",mean_pressure:{}", label.replace(',', "_")));
    }
    summary.push_str(",error\n");
    for row in &rows {
        summary.push_str(&io::format_g17(row.value));
        summary.push(',');
        summary.push_str(if row.converged { "true" } else { "false" });
        for k in 0..outlet_labels.len() {
            summary.push(',');
            match row.outlet_means.get(k) {
                Some(m) => summary.push_str(&io::format_g17(*m)),
                None => summary.push_str("nan"),
            }
        }
        summary.push(',');
        if let Some(e) = &row.error {
            summary.push_str(&e.replace([',', '\n'], ";"));
        }
        summary.push('\n');
    }
    let summary_path = args.out_dir.join("summary.csv");
    io::write_string(&summary_path, &summary)?;

    if rows.iter().all(|r| !r.converged) {
        return Err(CliError::Solver(format!(
            "all {} sweep rows failed; see {}",
            rows.len(),
            summary_path.display()
        )));
    }
    Ok(SweepOutcome { summary_path, outlet_labels, rows })
}

fn sweep_row(
    base: &serde_json::Value,
    parameter: &str,
    value: f64,
    out_dir: &Path,
    index: usize,
) -> SweepRow {
    let mut row = SweepRow { value, converged: false, outlet_means: Vec::new(), error: None };
    let attempt = || -> Result<Vec<f64>, CliError> {
        let mut patched = base.clone();
        set_parameter(&mut patched, parameter, value).map_err(CliError::Parse)?;
        let file: crate::io::ModelFile = serde_json::from_value(patched)
            .map_err(|e| CliError::Parse(format!("patched model: {e}")))?;
        let loaded = parse_model(&file).map_err(CliError::Parse)?;
        let network = validated(loaded.network)?;
        let params = integrator_params(&network, &loaded.simulation)?;
        let cycles = loaded.simulation.number_of_cardiac_cycles.max(1);
        let results = run_simulation(&network, &params, cycles, None)?;

        let row_dir = out_dir.join(format!("row_{index:03}"));
        std::fs::create_dir_all(&row_dir)
            .map_err(|source| IoError::Write { path: row_dir.display().to_string(), source })?;
        let first = (cycles - 1) * params.steps_per_cycle;
        write_results_csv(&row_dir.join("results.csv"), &results, first, results.times.len() - 1)?;

        let last_cycle = results.cycles - 1;
        Ok(results
            .outlet_wires
            .iter()
            .map(|&w| results.cycle_mean_pressure(w, last_cycle))
            .collect())
    };
    match attempt() {
        Ok(means) => {
            row.converged = true;
            row.outlet_means = means;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// Sets a numeric field addressed by a dotted path into the model JSON:
/// `boundary_conditions.<name>.<field>`, `vessels.<name-or-id>.<field>`, or
/// `simulation_parameters.<field>`.
pub fn set_parameter(model: &mut serde_json::Value, path: &str, value: f64) -> Result<(), String> {
    let parts: Vec<&str> = path.split('.').collect();
    let number = serde_json::Value::from(value);
    match parts.as_slice() {
        ["boundary_conditions", name, field] => {
            let list = model
                .get_mut("boundary_conditions")
                .and_then(|v| v.as_array_mut())
                .ok_or("model has no boundary_conditions section")?;
            let entry = list
                .iter_mut()
                .find(|b| b.get("bc_name").and_then(|n| n.as_str()) == Some(*name))
                .ok_or_else(|| format!("no boundary condition named '{name}'"))?;
            let values = entry
                .get_mut("bc_values")
                .and_then(|v| v.as_object_mut())
                .ok_or("boundary condition has no bc_values object")?;
            let slot = values
                .get_mut(*field)
                .ok_or_else(|| format!("boundary condition '{name}' has no field '{field}'"))?;
            if !slot.is_number() {
                return Err(format!("field '{field}' of '{name}' is not a scalar"));
            }
            *slot = number;
            Ok(())
        }
        ["vessels", name, field] => {
            let list = model
                .get_mut("vessels")
                .and_then(|v| v.as_array_mut())
                .ok_or("model has no vessels section")?;
            let by_id: Option<u64> = name.parse().ok();
            let entry = list
                .iter_mut()
                .find(|v| {
                    v.get("vessel_name").and_then(|n| n.as_str()) == Some(*name)
                        || (by_id.is_some() && v.get("vessel_id").and_then(|n| n.as_u64()) == by_id)
                })
                .ok_or_else(|| format!("no vessel named '{name}'"))?;
            let values = entry
                .get_mut("zero_d_element_values")
                .and_then(|v| v.as_object_mut())
                .ok_or("vessel has no zero_d_element_values object")?;
            let slot = values
                .get_mut(*field)
                .ok_or_else(|| format!("vessel '{name}' has no field '{field}'"))?;
            *slot = number;
            Ok(())
        }
        ["simulation_parameters", field] => {
            let section = model
                .get_mut("simulation_parameters")
                .and_then(|v| v.as_object_mut())
                .ok_or("model has no simulation_parameters section")?;
            let slot = section
                .get_mut(*field)
                .ok_or_else(|| format!("simulation_parameters has no field '{field}'"))?;
            *slot = number;
            Ok(())
        }
        _ => Err(format!(
            "cannot resolve '{path}'; expected boundary_conditions.<name>.<field>, vessels.<name>.<field>, or simulation_parameters.<field>"
        )),
    }
}

/// Parses the `--mode` flag: `automatic`, `automatic:<ratio>`, or `fixed:<n>`.
pub fn parse_mode(text: &str) -> Result<SegmentationMode, String> {
    if text == "automatic" {
        return Ok(SegmentationMode::default());
    }
    if let Some(ratio) = text.strip_prefix("automatic:") {
        let min_ratio: f64 = ratio.parse().map_err(|_| format!("invalid ratio '{ratio}'"))?;
        if !(min_ratio >= 1.0) {
            return Err("detection ratio must be at least 1".into());
        }
        return Ok(SegmentationMode::Automatic { min_ratio });
    }
    if let Some(n) = text.strip_prefix("fixed:") {
        let segments: usize = n.parse().map_err(|_| format!("invalid segment count '{n}'"))?;
        if segments == 0 {
            return Err("segment count must be at least 1".into());
        }
        return Ok(SegmentationMode::Fixed { segments });
    }
    Err(format!("unknown mode '{text}'; expected automatic, automatic:<ratio>, or fixed:<n>"))
}
