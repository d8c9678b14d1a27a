//! `ep2l` — propagate, verify, and tabulate the non-Hermitian two-level
//! passages from the command line.
//!
//! Exit codes: 0 on success, 2 on configuration errors, 3 when propagation
//! fails numerically (partial output is kept with a failure marker).

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ep2l::algebra::{BlochVector, DensityMatrix, StateVec2, C64};
use ep2l::experiments::{run_ensemble, ConvergenceReport, EnsembleSpec, FigureId};
use ep2l::integrator::{propagate, Method, TrajectoryRecord};
use ep2l::passages::{ep_times, PassageSpec};
use ep2l::CoreError;

use config::{
    load_file, parse_gamma, FamilyName, FileConfig, Frame, IntegratorInputs, PassageInputs,
};

#[derive(Parser)]
#[command(
    name = "ep2l",
    version,
    about = "Non-Hermitian two-level passage simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate one initial state and write a trajectory CSV.
    Simulate(SimulateArgs),
    /// Tabulate the closed-form solution and its Bloch orbit on a grid.
    Oracle(OracleArgs),
    /// Locate exceptional points and label spectral regimes.
    Ep(EpArgs),
    /// Propagate a seeded ensemble; write member CSVs and a JSON report.
    Ensemble(EnsembleArgs),
    /// Run one of the pinned figure datasets (fig1a, fig1b, fig2a, fig2b).
    Figure(FigureArgs),
}

/// Passage and integrator flags shared by the propagating commands; every
/// flag overrides the matching config-file value.
#[derive(Args, Default)]
struct CommonOpts {
    /// Hamiltonian family.
    #[arg(long, value_enum)]
    passage: Option<FamilyName>,
    /// Passage index n ≥ 0 (diabatic families).
    #[arg(long, allow_negative_numbers = true)]
    n: Option<f64>,
    /// Window start.
    #[arg(long, allow_negative_numbers = true)]
    t0: Option<f64>,
    /// Window end.
    #[arg(long, allow_negative_numbers = true)]
    t1: Option<f64>,
    /// Fixed coupling for constant-kappa.
    #[arg(long, allow_negative_numbers = true)]
    kappa0: Option<f64>,
    /// Gain ramp for constant-kappa: linear:slope,intercept or quadratic:a,b,c.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<String>,
    /// Step size.
    #[arg(long)]
    dt: Option<f64>,
    /// Stepping scheme.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Record every this-many steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Output frame for trajectories and fixed points.
    #[arg(long, value_enum)]
    frame: Option<Frame>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[clap(rename_all = "lowercase")]
enum MethodArg {
    Euler,
    Rk4,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Euler => Method::Euler,
            MethodArg::Rk4 => Method::Rk4,
        }
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Initial amplitudes a_re,a_im,b_re,b_im.
    #[arg(long, allow_hyphen_values = true)]
    amps: Option<String>,
    /// Initial Bloch vector ax,ay,az (|a| ≤ 1).
    #[arg(long, allow_hyphen_values = true)]
    bloch: Option<String>,
}

#[derive(Args)]
struct OracleArgs {
    /// Nonnegative integer passage index.
    #[arg(long)]
    n: u32,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    t0: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    t1: f64,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EpArgs {
    #[command(flatten)]
    common: CommonOpts,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    common: CommonOpts,
    /// Pure initial states, uniform on the Bloch sphere.
    #[arg(long)]
    pure: Option<usize>,
    /// Mixed initial states, uniform in the Bloch ball.
    #[arg(long)]
    mixed: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct FigureArgs {
    /// Dataset id: fig1a, fig1b, fig2a, fig2b.
    id: String,
    #[arg(long)]
    frame: Option<Frame>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum AppError {
    Core(CoreError),
    Io(std::io::Error),
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        AppError::Core(e)
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Io(e)
    }
}

impl AppError {
    fn report(&self) -> (String, u8) {
        match self {
            AppError::Core(e @ CoreError::NumericalFailure { .. }) => (e.to_string(), 3),
            AppError::Core(e) => (e.to_string(), 2),
            AppError::Io(e) => (format!("io error: {e}"), 1),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let (msg, code) = e.report();
            eprintln!("ep2l: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, AppError> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Ep(args) => cmd_ep(args),
        Command::Ensemble(args) => cmd_ensemble(args),
        Command::Figure(args) => cmd_figure(args),
    }
}

struct Resolved {
    passage: PassageSpec,
    integrator: ep2l::integrator::IntegratorConfig,
    frame: Frame,
    out_dir: PathBuf,
    file: FileConfig,
}

fn resolve_common(opts: &CommonOpts) -> Result<Resolved, AppError> {
    let file = match &opts.config {
        Some(path) => load_file(path)?,
        None => FileConfig::default(),
    };
    let gamma = opts.gamma.as_deref().map(parse_gamma).transpose()?;
    let passage = PassageInputs {
        family: opts.passage,
        n: opts.n,
        t0: opts.t0,
        t1: opts.t1,
        kappa0: opts.kappa0,
        gamma,
    }
    .overlay_file(file.passage.as_ref())
    .build()?;
    let (integrator_inputs, threshold) = IntegratorInputs {
        method: opts.method.map(Method::from),
        dt: opts.dt,
        stride: opts.stride,
    }
    .overlay_file(file.integrator.as_ref());
    let integrator = integrator_inputs.build(threshold);
    let frame = opts
        .frame
        .or(file.output.as_ref().and_then(|o| o.frame))
        .unwrap_or(Frame::Native);
    let out_dir = opts
        .out
        .clone()
        .or(file.output.as_ref().and_then(|o| o.dir.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok(Resolved {
        passage,
        integrator,
        frame,
        out_dir,
        file,
    })
}

fn parse_floats<const N: usize>(text: &str, what: &str) -> Result<[f64; N], CoreError> {
    let nums: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CoreError::Configuration(format!("{what}: cannot parse `{text}`")))?;
    nums.try_into()
        .map_err(|_| CoreError::Configuration(format!("{what}: expected {N} numbers")))
}

fn initial_state(args: &SimulateArgs, file: &FileConfig) -> Result<DensityMatrix, CoreError> {
    let amps = match &args.amps {
        Some(s) => Some(parse_floats::<4>(s, "--amps")?),
        None => file.initial.as_ref().and_then(|i| i.amps),
    };
    let bloch = match &args.bloch {
        Some(s) => Some(parse_floats::<3>(s, "--bloch")?),
        None => file.initial.as_ref().and_then(|i| i.bloch),
    };
    match (amps, bloch) {
        (Some(_), Some(_)) => Err(CoreError::Configuration(
            "give either amplitudes or a Bloch vector, not both".into(),
        )),
        (Some([ar, ai, br, bi]), None) => {
            DensityMatrix::from_state(&StateVec2::new(C64::new(ar, ai), C64::new(br, bi)))
        }
        (None, Some([ax, ay, az])) => DensityMatrix::from_bloch(&BlochVector::new(ax, ay, az)),
        (None, None) => Err(CoreError::Configuration(
            "an initial state is required (--amps or --bloch)".into(),
        )),
    }
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, AppError> {
    let resolved = resolve_common(&args.common)?;
    let rho0 = initial_state(&args, &resolved.file)?;
    let record = propagate(&resolved.passage, &rho0, &resolved.integrator)?;
    std::fs::create_dir_all(&resolved.out_dir)?;
    let path = resolved.out_dir.join("trajectory.csv");
    output::write_trajectory_csv(&path, &resolved.passage, &record, resolved.frame)?;
    println!("wrote {}", path.display());
    if let Some(f) = record.failure {
        eprintln!("ep2l: numerical failure at t = {}", f.t);
        return Ok(3);
    }
    Ok(0)
}

fn cmd_oracle(args: OracleArgs) -> Result<u8, AppError> {
    if !(args.dt > 0.0 && args.t0 < args.t1) {
        return Err(CoreError::Configuration("oracle grid needs t0 < t1 and dt > 0".into()).into());
    }
    let steps = ((args.t1 - args.t0) / args.dt - 1e-9).ceil().max(1.0) as usize;
    let mut grid: Vec<f64> = (0..steps).map(|k| args.t0 + k as f64 * args.dt).collect();
    grid.push(args.t1);
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir)?;
    let path = out_dir.join("oracle.csv");
    output::write_oracle_csv(&path, args.n, &grid)?;
    println!("wrote {}", path.display());
    Ok(0)
}

fn cmd_ep(args: EpArgs) -> Result<u8, AppError> {
    let resolved = resolve_common(&args.common)?;
    let report = ep_times(&resolved.passage);
    print!("{}", output::format_ep_report(&resolved.passage, &report));
    Ok(0)
}

fn cmd_ensemble(args: EnsembleArgs) -> Result<u8, AppError> {
    let resolved = resolve_common(&args.common)?;
    let section = resolved.file.ensemble.as_ref();
    let spec = EnsembleSpec {
        passage: resolved.passage,
        n_pure: args.pure.or(section.and_then(|e| e.pure)).unwrap_or(10),
        n_mixed: args.mixed.or(section.and_then(|e| e.mixed)).unwrap_or(10),
        seed: args.seed.or(section.and_then(|e| e.seed)).unwrap_or(42),
        integrator: resolved.integrator,
    };
    let (trajectories, report) = run_ensemble(&spec)?;
    write_dataset(
        &resolved.out_dir,
        None,
        &spec,
        &trajectories,
        &report,
        resolved.frame,
    )?;
    Ok(if report.failures > 0 { 3 } else { 0 })
}

fn cmd_figure(args: FigureArgs) -> Result<u8, AppError> {
    let id: FigureId = args.id.parse()?;
    let spec = ep2l::experiments::figure_spec(id);
    let (trajectories, report) = run_ensemble(&spec)?;
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("out"));
    let frame = args.frame.unwrap_or(Frame::Native);
    write_dataset(
        &out_dir,
        Some(id.to_string()),
        &spec,
        &trajectories,
        &report,
        frame,
    )?;
    Ok(if report.failures > 0 { 3 } else { 0 })
}

fn write_dataset(
    out_dir: &Path,
    figure: Option<String>,
    spec: &EnsembleSpec,
    trajectories: &[TrajectoryRecord],
    report: &ConvergenceReport,
    frame: Frame,
) -> Result<(), AppError> {
    std::fs::create_dir_all(out_dir)?;
    for (i, traj) in trajectories.iter().enumerate() {
        let path = out_dir.join(format!("member_{i:03}.csv"));
        output::write_trajectory_csv(&path, &spec.passage, traj, frame)?;
    }
    let ep = ep_times(&spec.passage);
    let file = output::build_report(figure, spec, report, &ep, frame);
    let path = out_dir.join("report.json");
    output::write_report_json(&path, &file)?;
    println!(
        "wrote {} member file(s) and {}",
        trajectories.len(),
        path.display()
    );
    Ok(())
}
