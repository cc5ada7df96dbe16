//! Command-line front end for the trajectory smoother.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use trajsmooth::error::Error;
use trajsmooth::io::{emit_plot_data, export_result, read_waypoints};
use trajsmooth::lp::LpStatus;
use trajsmooth::pipeline::{run_pipeline, AeroMode, PipelineConfig, VRef};
use trajsmooth::roll::{solve_time_domain, LpVariant};
use trajsmooth::{
    simulate, AirplaneControl, AirplaneState, ControlSchedule, ModelKind, VehicleLimits,
};

#[derive(Parser)]
#[command(name = "trajsmooth", version, about = "Waypoint trajectory smoothing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full smoothing pipeline on a waypoint file.
    Smooth(SmoothArgs),
    /// Replay a control schedule through the vehicle model.
    Simulate(SimulateArgs),
    /// Time-domain tracking LP for references the spatial pipeline rejects.
    Fallback(FallbackArgs),
    /// Validate a trajectory file against vehicle limits.
    Check(CheckArgs),
}

#[derive(Args)]
struct SmoothArgs {
    /// Waypoint file(s): CSV with header x,y,z[,gamma] or JSON [[x,y,z],..].
    #[arg(required = true)]
    input: Vec<PathBuf>,
    /// JSON pipeline configuration; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Sampling time, s.
    #[arg(long)]
    ts: Option<f64>,
    /// Station spacing, m.
    #[arg(long)]
    spacing: Option<f64>,
    /// Constant reference speed, m/s.
    #[arg(long)]
    vref: Option<f64>,
    /// JSON file with vehicle limits.
    #[arg(long)]
    limits: Option<PathBuf>,
    #[arg(long, value_enum)]
    aerobatic: Option<AeroArg>,
    /// LP refinement iterations.
    #[arg(long)]
    iterations: Option<usize>,
    /// Output directory (per-input subdirectories in batch mode).
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Process multiple input files in parallel.
    #[arg(long)]
    batch: bool,
    /// Also write per-axis plot series.
    #[arg(long)]
    plot_data: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Control schedule CSV with header gamma,phi,v.
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    ts: f64,
    #[arg(long, value_enum, default_value = "airplane")]
    model: ModelArg,
    #[arg(long)]
    limits: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    x0: f64,
    #[arg(long, default_value_t = 0.0)]
    y0: f64,
    #[arg(long, default_value_t = 0.0)]
    z0: f64,
    #[arg(long, default_value_t = 0.0)]
    psi0: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct FallbackArgs {
    /// Waypoint file.
    input: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    ts: f64,
    #[arg(long, default_value_t = 20.0)]
    vref: f64,
    #[arg(long)]
    limits: Option<PathBuf>,
    /// Re-linearization passes.
    #[arg(long, default_value_t = 3)]
    iterations: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Trajectory CSV produced by `smooth`.
    input: PathBuf,
    #[arg(long)]
    limits: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VariantArg {
    Lp1,
    Lp2,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModelArg {
    Airplane,
    Tractor,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AeroArg {
    Auto,
    Xy,
    Xz,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InfeasibleSlope { .. }
        | Error::InfeasibleSpeed { .. }
        | Error::ProjectionSingular { .. }
        | Error::DegeneratePath(_)
        | Error::TooShort(_)
        | Error::LpFailed(LpStatus::Infeasible)
        | Error::LpFailed(LpStatus::Unbounded) => 2,
        Error::Io(_)
        | Error::InvalidConfig(_)
        | Error::InvalidLimits(_)
        | Error::NonFinite(_)
        | Error::NonPositive(_)
        | Error::DimensionMismatch(_) => 3,
        Error::LpFailed(_) | Error::TooLarge(_) | Error::SingularControl(_) => 4,
    }
}

fn load_limits(path: &Path) -> Result<VehicleLimits, Error> {
    let text = std::fs::read_to_string(path)?;
    let limits: VehicleLimits = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    limits.validate()?;
    Ok(limits)
}

fn build_config(args: &SmoothArgs) -> Result<PipelineConfig, Error> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str::<PipelineConfig>(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", p.display())))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(v) = args.variant {
        cfg.variant = match v {
            VariantArg::Lp1 => LpVariant::Lp1,
            VariantArg::Lp2 => LpVariant::Lp2,
        };
    }
    if let Some(m) = args.model {
        cfg.model = match m {
            ModelArg::Airplane => ModelKind::Airplane,
            ModelArg::Tractor => ModelKind::Tractor,
        };
    }
    if let Some(ts) = args.ts {
        cfg.t_s = ts;
    }
    if let Some(h) = args.spacing {
        cfg.h = h;
    }
    if let Some(v) = args.vref {
        cfg.v_ref = VRef::Constant(v);
    }
    if let Some(p) = &args.limits {
        cfg.limits = load_limits(p)?;
    }
    if let Some(a) = args.aerobatic {
        cfg.aerobatic = match a {
            AeroArg::Auto => AeroMode::Auto,
            AeroArg::Xy => AeroMode::ForceXy,
            AeroArg::Xz => AeroMode::ForceXz,
        };
    }
    if let Some(it) = args.iterations {
        cfg.lp_iterations = it;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn smooth_one(cfg: &PipelineConfig, input: &Path, out: &Path, plot: bool) -> Result<(), Error> {
    let set = read_waypoints(input)?;
    let result = run_pipeline(cfg, &set.points, set.terrain_gamma.as_deref())?;
    export_result(&result, out)?;
    if plot {
        emit_plot_data(&result, out)?;
    }
    if result.approximation_warning {
        eprintln!(
            "warning: {} leaves the small-angle regime of the rotated frame",
            input.display()
        );
    }
    println!(
        "{}: {} stations, max |e_y| {:.3} m, max |phi| {:.3} rad -> {}",
        input.display(),
        result.trajectory.len(),
        result.metrics.max_e_y,
        result.metrics.max_phi,
        out.display()
    );
    Ok(())
}

fn run_smooth(args: &SmoothArgs) -> Result<(), Error> {
    let cfg = build_config(args)?;
    if args.batch || args.input.len() > 1 {
        let results: Vec<Result<(), Error>> = std::thread::scope(|scope| {
            let handles: Vec<_> = args
                .input
                .iter()
                .map(|input| {
                    let cfg = &cfg;
                    let out = args
                        .out
                        .join(input.file_stem().map_or_else(Default::default, |s| {
                            PathBuf::from(s)
                        }));
                    scope.spawn(move || smooth_one(cfg, input, &out, args.plot_data))
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut first_err = None;
        for r in results {
            if let Err(e) = r {
                eprintln!("error: {e}");
                first_err.get_or_insert(e);
            }
        }
        first_err.map_or(Ok(()), Err)
    } else {
        smooth_one(&cfg, &args.input[0], &args.out, args.plot_data)
    }
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Error> {
    let limits = match &args.limits {
        Some(p) => load_limits(p)?,
        None => VehicleLimits::default(),
    };
    let mut rdr = csv::Reader::from_path(&args.input)
        .map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    let mut schedule = ControlSchedule::default();
    for rec in rdr.deserialize::<AirplaneControl>() {
        schedule
            .steps
            .push(rec.map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?);
    }
    let initial = AirplaneState::new(args.x0, args.y0, args.z0, args.psi0);
    let model = match args.model {
        ModelArg::Airplane => ModelKind::Airplane,
        ModelArg::Tractor => ModelKind::Tractor,
    };
    let states = simulate(&initial, &schedule, args.ts, model, &limits)?;
    std::fs::create_dir_all(&args.out)?;
    let mut out = String::from("t,x,y,z,psi\n");
    for (k, st) in states.iter().enumerate() {
        out.push_str(&format!(
            "{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            k as f64 * args.ts,
            st.x,
            st.y,
            st.z,
            st.psi
        ));
    }
    std::fs::write(args.out.join("states.csv"), out)?;
    println!("{} steps -> {}", schedule.steps.len(), args.out.display());
    Ok(())
}

fn run_fallback(args: &FallbackArgs) -> Result<(), Error> {
    let limits = match &args.limits {
        Some(p) => load_limits(p)?,
        None => VehicleLimits::default(),
    };
    let set = read_waypoints(&args.input)?;
    let sol = solve_time_domain(&set.points, args.ts, args.vref, &limits, args.iterations)?;
    std::fs::create_dir_all(&args.out)?;
    let mut out = String::from("t,x,y,psi,phi\n");
    for (k, st) in sol.states.iter().enumerate() {
        let phi = sol.phi.get(k).or(sol.phi.last()).copied().unwrap_or(0.0);
        out.push_str(&format!(
            "{:.9},{:.9},{:.9},{:.9},{:.9}\n",
            k as f64 * sol.t_s,
            st[0],
            st[1],
            st[2],
            phi
        ));
    }
    std::fs::write(args.out.join("fallback.csv"), out)?;
    println!(
        "tracking objective {:.6} over {} steps -> {}",
        sol.objective,
        sol.phi.len(),
        args.out.display()
    );
    Ok(())
}

fn run_check(args: &CheckArgs) -> Result<(), Error> {
    let limits = match &args.limits {
        Some(p) => load_limits(p)?,
        None => VehicleLimits::default(),
    };
    let mut rdr = csv::Reader::from_path(&args.input)
        .map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    #[derive(serde::Deserialize)]
    struct Row {
        t: f64,
        gamma: f64,
        phi: f64,
        v: f64,
    }
    let rows: Vec<Row> = rdr
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Io(format!("{}: {e}", args.input.display())))?;
    if rows.is_empty() {
        return Err(Error::TooShort("trajectory file has no rows".into()));
    }
    let tol = 1e-9;
    let mut violations = 0usize;
    for (k, r) in rows.iter().enumerate() {
        let checks = [
            ("gamma", r.gamma, limits.gamma_min, limits.gamma_max),
            ("phi", r.phi, limits.phi_min, limits.phi_max),
            ("v", r.v, limits.v_min, limits.v_max),
        ];
        for (name, val, lo, hi) in checks {
            if val < lo - tol || val > hi + tol {
                eprintln!("row {k}: {name} = {val} outside [{lo}, {hi}]");
                violations += 1;
            }
        }
    }
    for (k, w) in rows.windows(2).enumerate() {
        let dt = w[1].t - w[0].t;
        if dt <= 0.0 {
            eprintln!("row {}: non-increasing time", k + 1);
            violations += 1;
            continue;
        }
        let rates = [
            ("dgamma", (w[1].gamma - w[0].gamma) / dt, limits.dgamma_min, limits.dgamma_max),
            ("dphi", (w[1].phi - w[0].phi) / dt, limits.dphi_min, limits.dphi_max),
            ("dv", (w[1].v - w[0].v) / dt, limits.dv_min, limits.dv_max),
        ];
        for (name, val, lo, hi) in rates {
            if val < lo - tol || val > hi + tol {
                eprintln!("rows {}-{}: {name} = {val} outside [{lo}, {hi}]", k, k + 1);
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return Err(Error::InvalidLimits(format!(
            "{violations} limit violation(s) in {}",
            args.input.display()
        )));
    }
    println!("{}: {} rows within limits", args.input.display(), rows.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Smooth(args) => run_smooth(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Fallback(args) => run_fallback(args),
        Command::Check(args) => run_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // `check` reports violations as infeasible content, not config.
            let code = if matches!(cli.command, Command::Check(_))
                && matches!(e, Error::InvalidLimits(_))
            {
                2
            } else {
                exit_code_for(&e)
            };
            ExitCode::from(code)
        }
    }
}
