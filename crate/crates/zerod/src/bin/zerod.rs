//! Command-line front end: `build`, `run`, `compare`, `sweep`.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use zerod::commands::{
    cmd_build, cmd_compare, cmd_run, cmd_sweep, parse_mode, read_sweep_spec, BuildArgs,
    CliError, CompareArgs, RunArgs, SweepArgs, SweepSpec,
};
use zerod::io::SimulationParameters;

#[derive(Parser)]
#[command(name = "zerod", version, about = "Lumped-parameter cardiovascular network solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model file from a centerline-tree file.
    Build(BuildCli),
    /// Run a simulation from a model file.
    Run(RunCli),
    /// Compare a results file against a reference.
    Compare(CompareCli),
    /// Run one simulation per parameter value.
    Sweep(SweepCli),
}

#[derive(Args)]
struct BuildCli {
    /// Centerline-tree JSON file.
    tree: PathBuf,
    /// Boundary-condition overlay JSON (overrides the tree's sections).
    #[arg(long)]
    bcs: Option<PathBuf>,
    /// Segmentation mode: automatic, automatic:<ratio>, or fixed:<n>.
    #[arg(long, default_value = "automatic")]
    mode: String,
    /// Output model file.
    #[arg(short, long, default_value = "model.json")]
    output: PathBuf,
    /// Cardiac cycles to embed as the run default.
    #[arg(long, default_value_t = 5)]
    cycles: usize,
    /// Time steps per cycle to embed as the run default.
    #[arg(long, default_value_t = 1000)]
    steps: usize,
}

#[derive(Args)]
struct RunCli {
    /// Model JSON file.
    model: PathBuf,
    /// Output directory for results.csv and manifest.json.
    #[arg(short, long, default_value = "run")]
    out_dir: PathBuf,
    /// Override the model's cardiac cycle count.
    #[arg(long)]
    cycles: Option<usize>,
    /// Override the model's steps per cycle.
    #[arg(long)]
    steps: Option<usize>,
    /// Override the generalized-alpha spectral radius.
    #[arg(long)]
    rho_inf: Option<f64>,
    /// Periodicity tolerance reported in the manifest.
    #[arg(long, default_value_t = 0.01)]
    check_periodicity: f64,
    /// Store every cycle in the CSV instead of only the final one.
    #[arg(long)]
    store_all: bool,
    /// Warm-start from a steady solve with cycle-averaged inflow.
    #[arg(long)]
    warm_start: bool,
}

#[derive(Args)]
struct CompareCli {
    /// Results CSV to evaluate.
    results: PathBuf,
    /// Reference CSV.
    reference: PathBuf,
    /// Cap map JSON associating cap ids with wire columns.
    #[arg(long)]
    caps: PathBuf,
    /// Linearly resample the results onto the reference grid if needed.
    #[arg(long)]
    resample: bool,
    /// Output report path.
    #[arg(short, long, default_value = "comparison.json")]
    output: PathBuf,
}

#[derive(Args)]
struct SweepCli {
    /// Model JSON file.
    model: PathBuf,
    /// Sweep specification JSON file.
    #[arg(long, conflicts_with_all = ["param", "values"])]
    spec: Option<PathBuf>,
    /// Parameter path, e.g. boundary_conditions.OUT.Rd.
    #[arg(long, requires = "values")]
    param: Option<String>,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', requires = "param")]
    values: Vec<f64>,
    /// Output directory.
    #[arg(short, long, default_value = "sweep")]
    out_dir: PathBuf,
    /// Maximum concurrent simulations (also capped by ZEROD_THREADS).
    #[arg(short, long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Build(args) => build(args),
        Command::Run(args) => run(args),
        Command::Compare(args) => compare(args),
        Command::Sweep(args) => sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn build(args: BuildCli) -> Result<(), CliError> {
    let mode = parse_mode(&args.mode).map_err(CliError::Parse)?;
    let simulation = SimulationParameters {
        number_of_cardiac_cycles: args.cycles,
        number_of_time_pts_per_cardiac_cycle: args.steps,
        ..SimulationParameters::default()
    };
    let outcome = cmd_build(&BuildArgs {
        tree: args.tree,
        bcs: args.bcs,
        mode,
        output: args.output,
        simulation,
    })?;
    println!("{}", outcome.summary());
    Ok(())
}

fn run(args: RunCli) -> Result<(), CliError> {
    let outcome = cmd_run(&RunArgs {
        model: args.model,
        out_dir: args.out_dir,
        cycles: args.cycles,
        steps_per_cycle: args.steps,
        spectral_radius: args.rho_inf,
        periodicity_tol: args.check_periodicity,
        store_all_cycles: args.store_all,
        warm_start: args.warm_start,
    })?;
    let m = &outcome.manifest;
    println!(
        "{} steps in {:.3} s ({} Newton iterations, max {} per step)",
        m.cycles * m.steps_per_cycle,
        m.wall_clock_seconds,
        m.newton.total_iterations,
        m.newton.max_per_step
    );
    if let Some(p) = &m.periodicity {
        let worst = p.outlets.iter().map(|o| o.delta).fold(0.0, f64::max);
        println!(
            "periodicity: {} (worst outlet delta {:.3e}, tolerance {:.3e})",
            if p.converged { "converged" } else { "not converged" },
            worst,
            p.tolerance
        );
    }
    println!("results: {}", outcome.results_path.display());
    println!("manifest: {}", outcome.manifest_path.display());
    Ok(())
}

fn compare(args: CompareCli) -> Result<(), CliError> {
    let report = cmd_compare(&CompareArgs {
        results: args.results,
        reference: args.reference,
        cap_map: args.caps,
        resample: args.resample,
        output: args.output.clone(),
    })?;
    println!(
        "pressure errors: avg {:.4e}, max {:.4e}, sys {:.4e}, dia {:.4e}",
        report.pressure.avg, report.pressure.max, report.pressure.systolic, report.pressure.diastolic
    );
    println!(
        "flow errors:     avg {:.4e}, max {:.4e}, sys {:.4e}, dia {:.4e}",
        report.flow.avg, report.flow.max, report.flow.systolic, report.flow.diastolic
    );
    println!("report: {}", args.output.display());
    Ok(())
}

fn sweep(args: SweepCli) -> Result<(), CliError> {
    let spec = match (args.spec, args.param) {
        (Some(path), _) => read_sweep_spec(&path).map_err(CliError::from)?,
        (None, Some(parameter)) => SweepSpec {
            parameter,
            values: args.values,
            range: None,
            parallelism: 1,
        },
        (None, None) => {
            return Err(CliError::Parse("pass either --spec <file> or --param/--values".into()))
        }
    };
    let outcome = cmd_sweep(&SweepArgs {
        model: args.model,
        spec,
        out_dir: args.out_dir,
        jobs: args.jobs,
    })?;
    let failures = outcome.rows.iter().filter(|r| !r.converged).count();
    println!(
        "{} rows ({} failed); summary: {}",
        outcome.rows.len(),
        failures,
        outcome.summary_path.display()
    );
    Ok(())
}
