//! Lumped-parameter (0D) cardiovascular hemodynamics.
//!
//! `zerod` assembles vessel-tree descriptions into lumped networks of
//! differential-algebraic equations, integrates them in time with the
//! implicit generalized-α method, builds such networks automatically from
//! centerline geometry (including stenosis detection), and evaluates
//! approximation-error metrics against reference solutions.
//!
//! The `examples/` directory contains one runnable example per major
//! capability; the `zerod` binary exposes the same functionality as the
//! `build`, `run`, `compare`, and `sweep` subcommands.
//!
//! All internal quantities are CGS (cm, g, s): pressure in dyn/cm², flow in
//! cm³/s. Converters for mmHg and kPa live at the I/O boundary.

pub mod elements;
pub mod integrator;
pub mod metrics;
pub mod model;
pub mod rom;
pub mod sparse;
pub mod synth;

pub mod commands;
pub mod io;

pub use elements::{
    element_local_system, stenosis_coefficient, CoronaryParams, FlowBcParams, LocalSystem,
    PressureBcParams, ResistanceBcParams, VesselParams, WindkesselParams,
};
pub use integrator::{
    assemble, check_periodicity, run_simulation, steady_initial_state, Integrator,
    IntegratorError, IntegratorParams, PeriodicityReport, ResultSet,
};
pub use metrics::{branch_interpolate, cap_errors, systole_diastole_indices, CapSeries, ErrorReport};
pub use model::{
    DofMap, ElementId, ElementKind, ElementSpec, FluidProperties, NetworkModel, SolutionState,
    TimeSeries, Wire, WireId,
};
pub use rom::{
    build_network, detect_stenosis, fit_segments, vessel_parameters, BranchProfile,
    CenterlineTree, Segment, SegmentRole, Segmentation, SegmentationMode, WallModel,
};
pub use sparse::{solve_linear, CscMatrix, SparseLu};
