//! Command-line front end.
//!
//! Grammar: `lattice-mbo <simulate|velocity|pinning|angle-sweep|verify>
//! [--config FILE] [flags]`. Every value can come from three places, later
//! ones winning: built-in defaults, the optional config file, and individual
//! command-line flags (for `simulate`, a named `--preset` slots between file
//! and flags). Outputs are files a human inspects afterwards — snapshots,
//! CSV tables, gnuplot scripts — plus a short stdout summary.
//!
//! Exit codes: 0 success, 1 validation or usage error, 2 numerical failure,
//! 3 failed verification checks. `LATTICE_MBO_THREADS` caps the angle-sweep
//! worker pool.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use crate::anisotropy::{angle_sweep, write_angle_plot_script, write_angle_sweep_csv, AngleRow};
use crate::config::{format_float, ExperimentConfig, ShapeSpec, SimulateConfig, TimeStepSpec};
use crate::evolution::{run_scheme, Trajectory};
use crate::heat_kernel::{truncation_radius, Regime, SchemeParams};
use crate::lattice::rasterize;
use crate::shapes::{Disk, Dumbbell, Finger, HalfPlane, Parabola, Region};
use crate::velocity_law::{discrete_velocity, phi, pinning_threshold, write_cell_count_sweep_csv};
use crate::{verify, Error, Result};

/// Largest padded transform side `simulate` will attempt. Guards against
/// configurations whose window or diffusion length would silently demand
/// gigabyte-scale buffers.
const MAX_TRANSFORM_SIDE: usize = 6144;

#[derive(Parser, Debug)]
#[command(
    name = "lattice-mbo",
    version,
    about = "Threshold dynamics on the 2-D lattice: exact diffusion steps, front velocities, pinning"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the diffusion-threshold scheme and export snapshots + diagnostics
    Simulate(SimulateArgs),
    /// Evaluate the critical-regime velocity law at one (mu, kappa)
    Velocity(VelocityArgs),
    /// Locate the pinning threshold for mu * kappa by bisection
    Pinning(PinningArgs),
    /// Tabulate front velocity against interface angle for several mu
    AngleSweep(AngleSweepArgs),
    /// Run the numerical self-check suites and report residuals
    Verify(VerifyArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// Config file (key = value sections; see README)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set: subcritical, supercritical, or dumbbell
    #[arg(long)]
    preset: Option<String>,
    /// Initial shape: disk, dumbbell, halfplane, parabola, or finger
    #[arg(long)]
    shape: Option<String>,
    /// Disk radius
    #[arg(long)]
    radius: Option<f64>,
    /// Disk center, x coordinate
    #[arg(long)]
    center_x: Option<f64>,
    /// Disk center, y coordinate
    #[arg(long)]
    center_y: Option<f64>,
    /// Dumbbell bulb radius
    #[arg(long)]
    bulb_radius: Option<f64>,
    /// Dumbbell bulb center offset from the origin
    #[arg(long)]
    bulb_offset: Option<f64>,
    /// Dumbbell neck half-width
    #[arg(long)]
    neck_halfwidth: Option<f64>,
    /// Curvature of the parabola / finger boundary
    #[arg(long)]
    kappa: Option<f64>,
    /// Finger slope numerator p (tan theta = p/q)
    #[arg(long)]
    angle_p: Option<u64>,
    /// Finger slope denominator q
    #[arg(long)]
    angle_q: Option<u64>,
    /// Grid spacing
    #[arg(long)]
    h: Option<f64>,
    /// Time step (exclusive with --mu and --gamma/--scale-c)
    #[arg(long)]
    tau: Option<f64>,
    /// Critical coupling tau = mu * h (exclusive with --tau and --gamma/--scale-c)
    #[arg(long)]
    mu: Option<f64>,
    /// Scaling exponent in h = scale_c * tau^gamma (exclusive with --tau and --mu)
    #[arg(long)]
    gamma: Option<f64>,
    /// Scaling prefactor in h = scale_c * tau^gamma
    #[arg(long)]
    scale_c: Option<f64>,
    /// Maximum number of steps (stops early if the set vanishes)
    #[arg(long)]
    steps: Option<usize>,
    /// Snapshot every this many steps
    #[arg(long)]
    stride: Option<usize>,
    /// Rasterization rule: dist (within h of the set) or center
    #[arg(long)]
    raster: Option<String>,
    /// Physical half-width of the window; 0 = automatic
    #[arg(long)]
    half_width: Option<f64>,
    /// Directory for snapshots, diagnostics.csv, and plot scripts
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VelocityArgs {
    /// Config file (key = value sections; see README)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Time-step-to-grid ratio tau / h
    #[arg(long)]
    mu: Option<f64>,
    /// Front curvature
    #[arg(long)]
    kappa: Option<f64>,
    /// Also write a (mu * kappa, n0) sweep CSV to this path
    #[arg(long)]
    sweep: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PinningArgs {
    /// Config file (key = value sections; see README)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bisection tolerance on mu * kappa
    #[arg(long)]
    tol: Option<f64>,
    /// Also evaluate the law's objective just below and above the threshold
    #[arg(long)]
    check: bool,
}

#[derive(Args, Debug)]
struct AngleSweepArgs {
    /// Config file (key = value sections; see README)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated list of mu values, one output CSV per value
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Front curvature used for every angle
    #[arg(long)]
    kappa: Option<f64>,
    /// First angle of the sweep, in whole degrees
    #[arg(long)]
    degree_min: Option<u32>,
    /// Last angle of the sweep, in whole degrees (at most 45)
    #[arg(long)]
    degree_max: Option<u32>,
    /// Directory for the per-mu CSV files and the plot script
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Config file (key = value sections; see README)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Check suite: kernel, evolution, velocity, anisotropy, or all
    #[arg(long)]
    suite: Option<String>,
    /// Seed for the randomized fixtures (verdicts must not depend on it)
    #[arg(long)]
    seed: Option<u64>,
}

/// Parse `args` and run the selected command, writing human output to `out`.
/// Returns the process exit code; errors are reported on stderr.
pub fn run_from<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    0
                }
                _ => {
                    eprintln!("{e}");
                    1
                }
            };
        }
    };
    let outcome = match cli.command {
        Cmd::Simulate(a) => cmd_simulate(a, out),
        Cmd::Velocity(a) => cmd_velocity(a, out),
        Cmd::Pinning(a) => cmd_pinning(a, out),
        Cmd::AngleSweep(a) => cmd_angle_sweep(a, out),
        Cmd::Verify(a) => cmd_verify(a, out),
    };
    match outcome {
        Ok(code) => code,
        // A closed stdout (piping into `head`, say) is the reader's choice,
        // not a failure: stop quietly.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit-code mapping: validation problems (bad flags, files, parameter
/// domains) are 1, numerical failures at runtime are 2.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Io(_) => 1,
        Error::Truncation { .. }
        | Error::InsufficientPadding(_)
        | Error::ProbeMiss(_)
        | Error::Bracketing(_)
        | Error::StepSizeUnderflow => 2,
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig> {
    match path {
        Some(p) => ExperimentConfig::load(p),
        None => Ok(ExperimentConfig::default()),
    }
}

/// Named simulate parameter sets, one per time-step regime.
fn apply_preset(sim: &mut SimulateConfig, name: &str) -> Result<()> {
    match name {
        // tau >> h: a unit disk shrinking by curvature until it vanishes.
        "subcritical" => {
            *sim = SimulateConfig::default();
            sim.output_dir = PathBuf::from("out/subcritical");
        }
        // tau << h (tau = h^2): so little diffusion per step that the
        // threshold undoes it entirely and nothing ever moves. The disk
        // center sits half a cell off the origin so no cell center lands
        // exactly on the boundary circle.
        "supercritical" => {
            let h = 1.0 / 64.0;
            *sim = SimulateConfig {
                shape: ShapeSpec::Disk {
                    radius: 1.0,
                    center: (h / 2.0, h / 2.0),
                },
                h,
                time: TimeStepSpec::Tau(h * h),
                steps: 10,
                stride: 1,
                raster: crate::config::RasterMode::DistanceH,
                half_width: 0.0,
                output_dir: PathBuf::from("out/supercritical"),
            };
        }
        // tau >> h on a dumbbell: the thin neck's diffused value drops below
        // 1/2 within one step while the bulbs survive, so the connected
        // component count goes 1 -> 2 before both pieces shrink away.
        "dumbbell" => {
            *sim = SimulateConfig {
                shape: ShapeSpec::Dumbbell {
                    bulb_radius: 0.5,
                    bulb_offset: 1.0,
                    neck_halfwidth: 0.08,
                },
                h: 1.0 / 256.0,
                time: TimeStepSpec::Scaling {
                    gamma: 1.5,
                    scale_c: 1.0,
                },
                steps: 12,
                stride: 1,
                raster: crate::config::RasterMode::DistanceH,
                half_width: 0.0,
                output_dir: PathBuf::from("out/dumbbell"),
            };
        }
        other => {
            return Err(Error::Config(format!(
                "unknown preset '{other}' (expected subcritical, supercritical, or dumbbell)"
            )))
        }
    }
    Ok(())
}

fn set_sim(sim: &mut SimulateConfig, key: &str, value: String) -> Result<()> {
    sim.apply(key, &value)
        .map_err(|e| Error::Config(format!("--{}: {e}", key.replace('_', "-"))))
}

fn merge_simulate(args: &SimulateArgs, sim: &mut SimulateConfig) -> Result<()> {
    if let Some(preset) = &args.preset {
        apply_preset(sim, preset)?;
    }
    let time_groups = usize::from(args.tau.is_some())
        + usize::from(args.mu.is_some())
        + usize::from(args.gamma.is_some() || args.scale_c.is_some());
    if time_groups > 1 {
        return Err(Error::Config(
            "choose one time parameterization: --tau, --mu, or --gamma/--scale-c".into(),
        ));
    }
    // Shape first so shape-specific keys apply to the right variant.
    if let Some(v) = &args.shape {
        set_sim(sim, "shape", v.clone())?;
    }
    if let Some(v) = args.radius {
        set_sim(sim, "radius", v.to_string())?;
    }
    if let Some(v) = args.center_x {
        set_sim(sim, "center_x", v.to_string())?;
    }
    if let Some(v) = args.center_y {
        set_sim(sim, "center_y", v.to_string())?;
    }
    if let Some(v) = args.bulb_radius {
        set_sim(sim, "bulb_radius", v.to_string())?;
    }
    if let Some(v) = args.bulb_offset {
        set_sim(sim, "bulb_offset", v.to_string())?;
    }
    if let Some(v) = args.neck_halfwidth {
        set_sim(sim, "neck_halfwidth", v.to_string())?;
    }
    if let Some(v) = args.kappa {
        set_sim(sim, "kappa", v.to_string())?;
    }
    if let Some(v) = args.angle_p {
        set_sim(sim, "angle_p", v.to_string())?;
    }
    if let Some(v) = args.angle_q {
        set_sim(sim, "angle_q", v.to_string())?;
    }
    if let Some(v) = args.h {
        set_sim(sim, "h", v.to_string())?;
    }
    if let Some(v) = args.tau {
        set_sim(sim, "tau", v.to_string())?;
    }
    if let Some(v) = args.mu {
        set_sim(sim, "mu", v.to_string())?;
    }
    if let Some(v) = args.gamma {
        set_sim(sim, "gamma", v.to_string())?;
    }
    if let Some(v) = args.scale_c {
        set_sim(sim, "scale_c", v.to_string())?;
    }
    if let Some(v) = args.steps {
        set_sim(sim, "steps", v.to_string())?;
    }
    if let Some(v) = args.stride {
        set_sim(sim, "stride", v.to_string())?;
    }
    if let Some(v) = &args.raster {
        set_sim(sim, "raster", v.clone())?;
    }
    if let Some(v) = args.half_width {
        set_sim(sim, "half_width", v.to_string())?;
    }
    if let Some(v) = &args.output_dir {
        sim.output_dir = v.clone();
    }
    Ok(())
}

fn build_region(shape: &ShapeSpec) -> Box<dyn Region> {
    match *shape {
        ShapeSpec::Disk { radius, center } => Box::new(Disk { center, radius }),
        ShapeSpec::Dumbbell {
            bulb_radius,
            bulb_offset,
            neck_halfwidth,
        } => Box::new(Dumbbell {
            bulb_radius,
            bulb_offset,
            neck_halfwidth,
        }),
        ShapeSpec::HalfPlane => Box::new(HalfPlane),
        ShapeSpec::Parabola { kappa } => Box::new(Parabola { kappa }),
        ShapeSpec::Finger { kappa, p, q } => Box::new(Finger { kappa, p, q }),
    }
}

/// Window half-width when the config leaves it automatic: the shape's extent
/// plus a margin wide enough that one diffusion step cannot push visible mass
/// into the zero frame (6 sqrt(tau) covers the step's Gaussian to ~1e-9, and
/// 16 cells guard the small-tau end). Unbounded shapes get a fixed 1.5
/// physical units of front; their clipped sides sit in the margin.
fn auto_half_width(shape: &ShapeSpec, params: &SchemeParams) -> f64 {
    let margin = (6.0 * params.tau().sqrt()).max(16.0 * params.h());
    let extent = match *shape {
        ShapeSpec::Disk { radius, center } => radius + center.0.abs().max(center.1.abs()),
        ShapeSpec::Dumbbell {
            bulb_radius,
            bulb_offset,
            ..
        } => bulb_offset + bulb_radius,
        ShapeSpec::HalfPlane | ShapeSpec::Parabola { .. } | ShapeSpec::Finger { .. } => 1.5,
    };
    extent + margin
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::Subcritical => "subcritical",
        Regime::Critical => "critical",
        Regime::Supercritical => "supercritical",
    }
}

/// Gnuplot overlay of the measured front radius against the shrinking-circle
/// law R(t) = sqrt(R0^2 - 2t), seeded with the measured initial radius.
fn write_radius_plot(traj: &Trajectory, dir: &Path) -> Result<()> {
    let r0 = traj
        .diagnostics
        .first()
        .map(|d| d.radius_estimate)
        .unwrap_or(0.0);
    let mut s = String::new();
    s.push_str("set datafile separator comma\n");
    s.push_str("set xlabel 't'\n");
    s.push_str("set ylabel 'front radius'\n");
    s.push_str("set grid\n");
    s.push_str(&format!("r0 = {}\n", format_float(r0)));
    s.push_str("law(t) = r0**2 - 2*t >= 0 ? sqrt(r0**2 - 2*t) : 1/0\n");
    s.push_str(
        "plot 'diagnostics.csv' skip 1 using 2:4 with points pt 7 title 'measured', \\\n",
    );
    s.push_str("     law(x) with lines lw 2 title 'shrinking-circle law'\n");
    crate::write_atomic(&dir.join("radius.gp"), s.as_bytes())
}

fn cmd_simulate(args: SimulateArgs, out: &mut impl Write) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    merge_simulate(&args, &mut cfg.simulate)?;
    cfg.validate()?;
    let sim = &cfg.simulate;
    let params = sim.time.resolve(sim.h, sim.steps)?;
    let half_width = if sim.half_width > 0.0 {
        sim.half_width
    } else {
        auto_half_width(&sim.shape, &params)
    };

    let side_estimate = (2.0 * half_width / sim.h).ceil() as usize + 2;
    if side_estimate > MAX_TRANSFORM_SIDE {
        return Err(Error::Config(format!(
            "window would span ~{side_estimate} cells per side (cap {MAX_TRANSFORM_SIDE}); increase h or reduce half_width"
        )));
    }
    let padded = side_estimate + 2 * (truncation_radius(params.alpha(), 1e-12)? + 8);
    if padded > MAX_TRANSFORM_SIDE {
        return Err(Error::Config(format!(
            "window plus diffusion padding would need a {padded}^2 transform (cap {MAX_TRANSFORM_SIDE}); reduce tau or half_width"
        )));
    }

    let region = build_region(&sim.shape);
    let bbox = [-half_width, -half_width, half_width, half_width];
    let init = rasterize(region.as_ref(), sim.h, bbox, sim.raster)?;
    writeln!(
        out,
        "scheme: h = {}, tau = {}, alpha = {:.3}, regime = {}",
        params.h(),
        params.tau(),
        params.alpha(),
        regime_name(params.regime())
    )?;
    writeln!(
        out,
        "window: [{:.4}, {:.4}]^2, {} x {} cells, {} occupied",
        -half_width,
        half_width,
        init.geometry().width,
        init.geometry().height,
        init.count_ones()
    )?;

    let traj = run_scheme(&params, &init, sim.stride)?;
    traj.export(&sim.output_dir)?;
    let disk_run = matches!(sim.shape, ShapeSpec::Disk { .. });
    if disk_run {
        write_radius_plot(&traj, &sim.output_dir)?;
    }

    for (k, field) in &traj.snapshots {
        writeln!(
            out,
            "step {k:>5}: area = {:.6}, components = {}",
            field.area(),
            field.components()
        )?;
    }
    match traj.vanished_at {
        Some(k) => writeln!(out, "front vanished at step {k}")?,
        None => writeln!(out, "front still present after {} steps", traj.params.steps())?,
    }
    writeln!(
        out,
        "wrote {} snapshots + diagnostics.csv to {}",
        traj.snapshots.len(),
        sim.output_dir.display()
    )?;
    if disk_run {
        writeln!(out, "radius overlay script: {}", sim.output_dir.join("radius.gp").display())?;
    }
    Ok(0)
}

fn cmd_velocity(args: VelocityArgs, out: &mut impl Write) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(mu) = args.mu {
        cfg.velocity.mu = mu;
    }
    if let Some(kappa) = args.kappa {
        cfg.velocity.kappa = kappa;
    }
    cfg.validate()?;
    let r = discrete_velocity(cfg.velocity.mu, cfg.velocity.kappa)?;
    writeln!(out, "mu                  = {}", r.mu)?;
    writeln!(out, "kappa               = {}", r.kappa)?;
    writeln!(out, "mu * kappa          = {}", r.mu * r.kappa)?;
    writeln!(out, "n0                  = {} cells per step", r.n0)?;
    writeln!(out, "velocity            = {} (n0 / mu)", r.velocity)?;
    writeln!(out, "objective at n0     = {:+.6e}", r.phi_at_n0)?;
    writeln!(out, "objective at n0 + 1 = {:+.6e}", r.phi_at_n0_plus_1)?;
    if r.n0 == 0 {
        writeln!(out, "pinned: the front does not move at these parameters")?;
    }
    if let Some(path) = &args.sweep {
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 * 0.05).collect();
        let mut buf = Vec::new();
        write_cell_count_sweep_csv(&grid, &mut buf)?;
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        crate::write_atomic(path, &buf)?;
        writeln!(out, "wrote {} sweep rows to {}", grid.len(), path.display())?;
    }
    Ok(0)
}

fn cmd_pinning(args: PinningArgs, out: &mut impl Write) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(tol) = args.tol {
        cfg.pinning.tol = tol;
    }
    cfg.validate()?;
    let star = pinning_threshold(cfg.pinning.tol)?;
    writeln!(
        out,
        "pinning threshold: flat-aligned fronts stay put for mu * kappa <= {star:.6}"
    )?;
    writeln!(out, "bisection tolerance: {}", cfg.pinning.tol)?;
    if args.check {
        // The law's objective at the first cell flips sign across the
        // threshold: positive = that cell is kept (pinned), negative = it is
        // expelled (the front moves).
        for (label, m) in [("below", star - 0.01), ("above", star + 0.01)] {
            let v = phi(1, m)?;
            writeln!(
                out,
                "check {label}: objective(1, {m:.6}) = {v:+.6e} -> {}",
                if v > 0.0 { "front pinned" } else { "front moves" }
            )?;
        }
    }
    Ok(0)
}

/// Worker count for the sweep pool: the env cap if set and sane, else the
/// machine's parallelism, never more than the number of jobs.
fn worker_count(env_cap: Option<&str>, jobs: usize) -> usize {
    let available = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1);
    let cap = env_cap
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(available);
    cap.min(jobs).max(1)
}

/// Run one angle sweep per mu on a small worker pool. Results are stored by
/// index, so the output never depends on scheduling order.
fn sweep_parallel(
    mus: &[f64],
    kappa: f64,
    degrees: &[f64],
) -> Result<Vec<(f64, Vec<AngleRow>)>> {
    let env_cap = std::env::var("LATTICE_MBO_THREADS").ok();
    let threads = worker_count(env_cap.as_deref(), mus.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<Vec<AngleRow>>>>> =
        Mutex::new((0..mus.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= mus.len() {
                    break;
                }
                // Denominator cap 60: every whole-degree angle in [0, 45] is
                // approximated to better than a tenth of a degree (worst case
                // 0.055 degrees, at 16 degrees).
                let result = angle_sweep(mus[i], kappa, degrees, 60);
                slots.lock().expect("sweep worker panicked")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("sweep worker panicked")
        .into_iter()
        .zip(mus)
        .map(|(slot, &mu)| slot.expect("every sweep slot is filled").map(|rows| (mu, rows)))
        .collect()
}

fn cmd_angle_sweep(args: AngleSweepArgs, out: &mut impl Write) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(list) = &args.mu {
        cfg.angle_sweep.mu_list = list.clone();
    }
    if let Some(kappa) = args.kappa {
        cfg.angle_sweep.kappa = kappa;
    }
    if let Some(d) = args.degree_min {
        cfg.angle_sweep.degree_min = d;
    }
    if let Some(d) = args.degree_max {
        cfg.angle_sweep.degree_max = d;
    }
    if let Some(dir) = &args.output_dir {
        cfg.angle_sweep.output_dir = dir.clone();
    }
    cfg.validate()?;
    let sw = &cfg.angle_sweep;
    let degrees: Vec<f64> = (sw.degree_min..=sw.degree_max).map(f64::from).collect();
    let results = sweep_parallel(&sw.mu_list, sw.kappa, &degrees)?;
    std::fs::create_dir_all(&sw.output_dir)?;
    let mut series = Vec::new();
    let mut total_rows = 0usize;
    for (mu, rows) in &results {
        let name = format!("angle_sweep_mu_{mu}.csv");
        let mut buf = Vec::new();
        write_angle_sweep_csv(rows, &mut buf)?;
        crate::write_atomic(&sw.output_dir.join(&name), &buf)?;
        total_rows += rows.len();
        series.push((format!("mu = {mu}"), name));
    }
    let mut buf = Vec::new();
    write_angle_plot_script(&series, &mut buf)?;
    crate::write_atomic(&sw.output_dir.join("angle_sweep.gp"), &buf)?;
    writeln!(
        out,
        "{} mu values x {} angles = {} rows, kappa = {}",
        results.len(),
        degrees.len(),
        total_rows,
        sw.kappa
    )?;
    for (_, name) in &series {
        writeln!(out, "wrote {}", sw.output_dir.join(name).display())?;
    }
    writeln!(out, "plot script: {}", sw.output_dir.join("angle_sweep.gp").display())?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs, out: &mut impl Write) -> Result<i32> {
    let mut cfg = load_config(&args.config)?;
    if let Some(suite) = &args.suite {
        cfg.verify.suite = suite.clone();
    }
    if let Some(seed) = args.seed {
        cfg.verify.seed = seed;
    }
    cfg.validate()?;
    let results = verify::run_suite(&cfg.verify.suite, cfg.verify.seed)?;
    let mut failures = 0usize;
    for r in &results {
        let status = if r.passed() {
            "PASS"
        } else {
            failures += 1;
            "FAIL"
        };
        writeln!(
            out,
            "{status} {:<10} {:<28} residual {:.3e} (bound {:.1e})",
            r.suite, r.name, r.residual, r.bound
        )?;
    }
    if failures > 0 {
        writeln!(out, "{failures} of {} checks FAILED", results.len())?;
        Ok(3)
    } else {
        writeln!(
            out,
            "all {} checks passed (suite {}, seed {})",
            results.len(),
            cfg.verify.suite,
            cfg.verify.seed
        )?;
        Ok(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn run(args: &[&str]) -> (i32, String) {
        let mut buf = Vec::new();
        let full: Vec<&str> = std::iter::once("lattice-mbo").chain(args.iter().copied()).collect();
        let code = run_from(full, &mut buf);
        (code, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn help_prints_subcommands_and_exits_zero() {
        let (code, text) = run(&["--help"]);
        assert_eq!(code, 0);
        for cmd in ["simulate", "velocity", "pinning", "angle-sweep", "verify"] {
            assert!(text.contains(cmd), "missing {cmd} in help:\n{text}");
        }
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        let (code, _) = run(&["frobnicate"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn exit_codes_follow_error_class() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::Domain("x".into())), 1);
        assert_eq!(
            exit_code(&Error::Io(std::io::Error::new(std::io::ErrorKind::Other, "x"))),
            1
        );
        assert_eq!(exit_code(&Error::Bracketing("x".into())), 2);
        assert_eq!(exit_code(&Error::InsufficientPadding("x".into())), 2);
        assert_eq!(exit_code(&Error::ProbeMiss("x".into())), 2);
        assert_eq!(exit_code(&Error::StepSizeUnderflow), 2);
        assert_eq!(
            exit_code(&Error::Truncation {
                achieved: 1e-3,
                requested: 1e-12,
                cap: 10
            }),
            2
        );
    }

    #[test]
    fn velocity_below_threshold_reports_pinning() {
        let (code, text) = run(&["velocity", "--mu", "1", "--kappa", "0.5"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("n0                  = 0"), "{text}");
        assert!(text.contains("pinned"), "{text}");
    }

    #[test]
    fn velocity_at_zero_curvature_is_zero() {
        let (code, text) = run(&["velocity", "--kappa", "0"]);
        assert_eq!(code, 0);
        assert!(text.contains("n0                  = 0"), "{text}");
    }

    #[test]
    fn velocity_at_large_mu_tracks_curvature() {
        let (code, text) = run(&["velocity", "--mu", "500", "--kappa", "1"]);
        assert_eq!(code, 0);
        // n0 / mu must sit within 5% of kappa; at integer mu*kappa it is exact.
        assert!(text.contains("n0                  = 500"), "{text}");
        assert!(text.contains("velocity            = 1 "), "{text}");
    }

    #[test]
    fn velocity_rejects_negative_mu() {
        let (code, _) = run(&["velocity", "--mu", "-1"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn velocity_sweep_writes_csv() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let (code, text) = run(&["velocity", "--sweep", path.to_str().unwrap()]);
        assert_eq!(code, 0, "{text}");
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("mu_kappa,n0\n"));
        assert_eq!(body.lines().count(), 101);
    }

    #[test]
    fn pinning_reports_reference_threshold() {
        let (code, text) = run(&["pinning", "--check"]);
        assert_eq!(code, 0);
        assert!(text.contains("0.821"), "{text}");
        assert!(text.contains("front pinned"), "{text}");
        assert!(text.contains("front moves"), "{text}");
    }

    #[test]
    fn pinning_rejects_out_of_range_tolerance() {
        let (code, _) = run(&["pinning", "--tol", "0.5"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "[velocity]\nmu = 2\nkappa = 2\n").unwrap();
        let (code, text) = run(&[
            "velocity",
            "--config",
            path.to_str().unwrap(),
            "--kappa",
            "0.25",
        ]);
        assert_eq!(code, 0);
        // mu from the file survives, kappa from the flag wins.
        assert!(text.contains("mu                  = 2\n"), "{text}");
        assert!(text.contains("kappa               = 0.25"), "{text}");
    }

    #[test]
    fn bad_config_file_is_validation_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        std::fs::write(&path, "[velocity]\nbogus = 1\n").unwrap();
        let (code, _) = run(&["velocity", "--config", path.to_str().unwrap()]);
        assert_eq!(code, 1);
        let (code, _) = run(&["velocity", "--config", "/nonexistent/exp.cfg"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn verify_kernel_suite_passes() {
        let (code, text) = run(&["verify", "--suite", "kernel"]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("PASS"), "{text}");
        assert!(!text.contains("FAIL"), "{text}");
        assert!(text.contains("mass normalization"), "{text}");
    }

    #[test]
    fn verify_rejects_unknown_suite() {
        let (code, _) = run(&["verify", "--suite", "everything"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn angle_sweep_outputs_are_deterministic() {
        let dir = tempdir().unwrap();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        for out_dir in [&out_a, &out_b] {
            let (code, text) = run(&[
                "angle-sweep",
                "--mu",
                "0.5,1.0",
                "--kappa",
                "2",
                "--degree-max",
                "6",
                "--output-dir",
                out_dir.to_str().unwrap(),
            ]);
            assert_eq!(code, 0, "{text}");
        }
        for name in ["angle_sweep_mu_0.5.csv", "angle_sweep_mu_1.csv", "angle_sweep.gp"] {
            let a = std::fs::read(out_a.join(name)).unwrap();
            let b = std::fs::read(out_b.join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
        let csv = std::fs::read_to_string(out_a.join("angle_sweep_mu_1.csv")).unwrap();
        assert_eq!(csv.lines().count(), 8, "header + 7 angle rows");
        assert!(csv.starts_with("theta_degrees,p,q,n0,d_n0,velocity\n"));
    }

    #[test]
    fn angle_sweep_zero_degree_row_matches_velocity_law() {
        let dir = tempdir().unwrap();
        let (code, _) = run(&[
            "angle-sweep",
            "--mu",
            "1.0",
            "--kappa",
            "1.6",
            "--degree-max",
            "0",
            "--output-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let csv = std::fs::read_to_string(dir.path().join("angle_sweep_mu_1.csv")).unwrap();
        let row = csv.lines().nth(1).unwrap();
        let n0_field: u64 = row.split(',').nth(3).unwrap().parse().unwrap();
        let law = discrete_velocity(1.0, 1.6).unwrap();
        assert_eq!(n0_field, law.n0);
    }

    #[test]
    fn angle_sweep_rejects_degenerate_range() {
        let (code, _) = run(&["angle-sweep", "--degree-min", "30", "--degree-max", "10"]);
        assert_eq!(code, 1);
        let (code, _) = run(&["angle-sweep", "--degree-max", "90"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn worker_count_respects_env_and_job_bounds() {
        assert_eq!(worker_count(Some("2"), 8), 2);
        assert_eq!(worker_count(Some("16"), 3), 3);
        assert_eq!(worker_count(Some("0"), 3), worker_count(None, 3));
        assert_eq!(worker_count(Some("junk"), 1), 1);
        assert!(worker_count(None, 100) >= 1);
    }

    #[test]
    fn simulate_small_disk_writes_artifacts() {
        let dir = tempdir().unwrap();
        let out_dir = dir.path().join("run");
        let (code, text) = run(&[
            "simulate",
            "--shape",
            "disk",
            "--radius",
            "0.3",
            "--h",
            "0.05",
            "--tau",
            "0.01",
            "--steps",
            "2",
            "--stride",
            "1",
            "--output-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{text}");
        assert!(out_dir.join("snap_00000.pbm").is_file());
        assert!(out_dir.join("snap_00002.pbm").is_file());
        assert!(out_dir.join("radius.gp").is_file());
        let csv = std::fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
        assert!(csv.starts_with("k,t,front_cell_count,radius_estimate,area\n"));
        assert_eq!(csv.lines().count(), 4, "header + steps 0..=2");
        // gamma = ln h / ln tau = 0.65 < 1, yet alpha = 8 still moves the
        // front: the regime label describes the h -> 0 scaling family.
        assert!(text.contains("regime = supercritical"), "{text}");
    }

    #[test]
    fn simulate_diagnostics_are_deterministic() {
        let dir = tempdir().unwrap();
        let args_for = |name: &str| {
            [
                "simulate".to_string(),
                "--shape".into(),
                "disk".into(),
                "--radius".into(),
                "0.25".into(),
                "--h".into(),
                "0.05".into(),
                "--mu".into(),
                "1".into(),
                "--steps".into(),
                "3".into(),
                "--output-dir".into(),
                dir.path().join(name).to_str().unwrap().to_string(),
            ]
        };
        for name in ["a", "b"] {
            let owned = args_for(name);
            let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
            let (code, text) = run(&refs);
            assert_eq!(code, 0, "{text}");
        }
        let a = std::fs::read(dir.path().join("a/diagnostics.csv")).unwrap();
        let b = std::fs::read(dir.path().join("b/diagnostics.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulate_rejects_conflicting_time_flags() {
        let (code, _) = run(&["simulate", "--tau", "0.01", "--mu", "1"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn simulate_rejects_oversized_window() {
        let (code, _) = run(&["simulate", "--half-width", "50", "--h", "0.001"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn simulate_rejects_unknown_preset_and_shape_mismatch() {
        let (code, _) = run(&["simulate", "--preset", "imaginary"]);
        assert_eq!(code, 1);
        let (code, _) = run(&["simulate", "--shape", "parabola", "--radius", "2"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn preset_fields_match_their_regimes() {
        let mut sim = SimulateConfig::default();
        apply_preset(&mut sim, "supercritical").unwrap();
        let params = sim.time.resolve(sim.h, sim.steps).unwrap();
        assert_eq!(regime_name(params.regime()), "supercritical");
        apply_preset(&mut sim, "subcritical").unwrap();
        let params = sim.time.resolve(sim.h, sim.steps).unwrap();
        assert_eq!(regime_name(params.regime()), "subcritical");
        apply_preset(&mut sim, "dumbbell").unwrap();
        assert!(matches!(sim.shape, ShapeSpec::Dumbbell { .. }));
    }
}
