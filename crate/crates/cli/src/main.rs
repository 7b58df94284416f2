//! `mvcl`: simulate, verify and cross-check measure-valued conservation-law runs.
// `!(a > b)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use mvcl_core::config::{FluxSection, RunConfig};
use mvcl_core::evolution::{run, run_coupled, Trajectory};
use mvcl_core::measure::{Grid, MeasureState};
use mvcl_core::oracle::{convergence_study, ExampleSolution};
use mvcl_core::output::{self, snapshot_csv};
use mvcl_core::presets;
use mvcl_core::riemann::{solve_modified_riemann, solve_standard_riemann};
use mvcl_core::verification::{
    check_comparison, check_contraction, refinement_improves, verify_trajectory, CheckEntry, Location,
    TestFunctionFamily, VerificationReport, VerifyOptions,
};
use mvcl_core::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_VERIFY_FAILED: u8 = 3;

/// Report file written into the verified run directory.
const REPORT: &str = "verification.json";

#[derive(Parser)]
#[command(name = "mvcl", version, about = "Entropy solutions of u_t + phi(u)_x = 0 with Dirac atoms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Godunov scheme and write snapshots, ledger and manifest.
    Simulate(SimulateArgs),
    /// Print the exact Riemann fan (with an atom when --mass > 0) as JSON.
    Riemann(RiemannArgs),
    /// Re-run a stored run on a dense history and check its inequalities.
    Verify(VerifyArgs),
    /// Convergence table against the inverse-power closed form.
    Converge(ConvergeArgs),
    /// Write the closed-form inverse-power solution as a snapshot CSV.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration instead of a file; pair members are `NAME.u` and `NAME.v`.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory; overrides [output].dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of cells.
    #[arg(long)]
    cells: Option<usize>,
}

#[derive(Args)]
struct RiemannArgs {
    /// Left state.
    #[arg(long, allow_negative_numbers = true)]
    left: f64,
    /// Right state.
    #[arg(long, allow_negative_numbers = true)]
    right: f64,
    /// Atom mass at the interface; 0 solves the plain Riemann problem.
    #[arg(long, default_value_t = 0.0)]
    mass: f64,
    /// Built-in flux: inverse_power, bump, monotone_tanh or equilibrium.
    #[arg(long, default_value = "bump", conflicts_with = "config")]
    flux: String,
    /// Exponent of the inverse-power flux.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Take the flux from the [flux] section of a run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Cap for infinite trace states.
    #[arg(long, default_value_t = 1e6)]
    u_cap: f64,
    /// Sample the solution at time --t into this `x,u_r` CSV.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x_lo: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    x_hi: f64,
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run directory written by `simulate`.
    #[arg(long)]
    run: PathBuf,
    /// Second run for the comparison and contraction checks.
    #[arg(long)]
    against: Option<PathBuf>,
    /// Skip the second pass on a grid twice as fine.
    #[arg(long)]
    no_refine: bool,
    /// Report path; defaults to verification.json inside the run directory.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    #[arg(long, default_value_t = 0.5)]
    t: f64,
    /// Grid sizes, coarse to fine.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    cells: Vec<usize>,
    /// L1 error window.
    #[arg(long, default_value_t = 0.05, allow_negative_numbers = true)]
    window_lo: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    window_hi: f64,
    /// Fail (exit 3) when an observed order falls below this.
    #[arg(long, default_value_t = 0.5)]
    min_order: f64,
    /// Also write the table as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    p: f64,
    #[arg(long)]
    t: f64,
    /// Output snapshot CSV; the atom sidecar goes next to it as *_atoms.csv.
    #[arg(long)]
    samples: PathBuf,
    #[arg(long, default_value_t = 400)]
    cells: usize,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    x_lo: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    x_hi: f64,
}

/// A failed command: message plus exit code.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Json(_) | Error::Internal(_) | Error::DeadAtom(_) => EXIT_FAILURE,
            _ => EXIT_INVALID,
        };
        Self { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e).into()
    }
}

type CmdResult = Result<(), Failure>;

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INVALID, message: message.into() }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // clap reports usage errors with exit code 2 and help/version with 0
    let cli = Cli::try_parse().unwrap_or_else(|e| e.exit());
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Riemann(a) => riemann(a),
        Command::Verify(a) => verify(a),
        Command::Converge(a) => converge(a),
        Command::Oracle(a) => oracle(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(config: Option<&Path>, preset: Option<&str>) -> Result<RunConfig, Failure> {
    match (config, preset) {
        (Some(path), _) => Ok(RunConfig::from_file(path)?),
        (None, Some(name)) => named_preset(name).ok_or_else(|| {
            invalid(format!(
                "unknown preset {name:?}; available: {}, and {} with suffix .u or .v",
                presets::PRESETS.join(", "),
                presets::PAIRS.join(", ")
            ))
        }),
        (None, None) => Err(invalid("either --config or --preset is required")),
    }
}

/// Single presets by name; pair members as `pair.u` and `pair.v`.
fn named_preset(name: &str) -> Option<RunConfig> {
    match name.rsplit_once('.') {
        Some((pair, "u")) => presets::pair(pair).map(|(u, _)| u),
        Some((pair, "v")) => presets::pair(pair).map(|(_, v)| v),
        _ => presets::preset(name),
    }
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let mut cfg = load_config(args.config.as_deref(), args.preset.as_deref())?;
    if let Some(n) = args.cells {
        cfg.grid.cells = n;
    }
    cfg.validate()?;
    let dir = match (&args.out, &cfg.output.dir) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => return Err(invalid("no output directory: pass --out or set [output].dir")),
    };
    let flux = cfg.flux()?;
    let (initial, warnings) = cfg.initial_state()?;
    let clock = Instant::now();
    let traj = run(&initial, &flux, &cfg.solver_config())?;
    let wall = clock.elapsed().as_secs_f64();
    let manifest = output::write_run(&dir, &cfg, &flux.describe(), &traj, &warnings, wall)?;
    let fin = traj.final_state();
    println!(
        "{}: {} steps to t = {}, {} snapshots, max balance residual {:.3e}",
        dir.display(),
        traj.steps.len(),
        fin.time,
        manifest.snapshots.len(),
        manifest.max_balance_residual
    );
    for (j, a) in fin.atoms.iter().enumerate() {
        let ext = manifest.extinction_times[j].map_or("alive".to_string(), |t| format!("extinct at t = {t}"));
        println!("  atom {j} at x = {}: mass {} ({ext})", a.position, a.mass);
    }
    Ok(())
}

fn builtin_flux(name: &str, p: f64) -> Result<FluxSection, Failure> {
    Ok(match name {
        "inverse_power" => FluxSection::InversePower { p },
        "bump" => FluxSection::Bump,
        "monotone_tanh" => FluxSection::MonotoneTanh,
        "equilibrium" => FluxSection::Equilibrium { level: 0.5, knee: 1.0 },
        _ => return Err(invalid(format!("unknown flux {name:?}"))),
    })
}

fn riemann(args: RiemannArgs) -> CmdResult {
    let section = match &args.config {
        Some(path) => RunConfig::from_file(path)?.flux,
        None => builtin_flux(&args.flux, args.p)?,
    };
    let flux = section.build()?;
    if args.samples.is_some() && !(args.t > 0.0 && args.x_hi > args.x_lo && args.points >= 2) {
        return Err(invalid("sampling needs --t > 0, --x-hi > --x-lo and --points >= 2"));
    }
    let xs = (0..args.points).map(|i| args.x_lo + (args.x_hi - args.x_lo) * i as f64 / (args.points - 1) as f64);
    let (json, sampled): (String, Vec<(f64, f64)>) = if args.mass > 0.0 {
        let sol = solve_modified_riemann(args.left, args.right, args.mass, &flux, args.u_cap)?;
        let sampled = xs.map(|x| (x, sol.regular(x, args.t))).collect();
        let json = serde_json::to_string_pretty(&serde_json::json!({ "kind": "modified", "solution": sol }))?;
        (json, sampled)
    } else {
        let fan = solve_standard_riemann(args.left, args.right, &flux)?;
        let sampled = xs.map(|x| (x, fan.eval(x / args.t))).collect();
        let json = serde_json::to_string_pretty(&serde_json::json!({ "kind": "standard", "fan": fan }))?;
        (json, sampled)
    };
    println!("{json}");
    if let Some(path) = &args.samples {
        let mut text = String::from("x,u_r\n");
        for (x, u) in sampled {
            text.push_str(&format!("{x},{u}\n"));
        }
        std::fs::write(path, text)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    run: String,
    against: Option<String>,
    n_cells: usize,
    passed: bool,
    entries: &'a [CheckEntry],
}

/// Re-simulates a stored run with a frame after every step.
fn rerun(cfg: &RunConfig) -> Result<(Trajectory, mvcl_core::flux::FluxModel), Failure> {
    let mut dense = cfg.clone();
    dense.solver.history_stride = 1;
    let flux = dense.flux()?;
    let (initial, _) = dense.initial_state()?;
    let traj = run(&initial, &flux, &dense.solver_config())?;
    Ok((traj, flux))
}

/// Counts stored snapshot files that the re-simulation does not reproduce byte for byte.
fn reproducibility(dir: &Path, manifest: &output::RunManifest, traj: &Trajectory) -> CheckEntry {
    let mut mismatched = 0usize;
    let mut first = None;
    for (n, entry) in manifest.snapshots.iter().enumerate() {
        let stored = std::fs::read_to_string(dir.join(&entry.file)).ok();
        let fresh = traj.snapshots.get(n).map(snapshot_csv);
        if stored.is_none() || stored != fresh {
            mismatched += 1;
            first.get_or_insert(entry.t);
        }
    }
    if manifest.snapshots.len() != traj.snapshots.len() {
        mismatched += 1;
    }
    CheckEntry {
        name: "reproducibility".into(),
        worst_residual: mismatched as f64,
        threshold: 0.0,
        passed: mismatched == 0,
        location: Location { time: first, ..Default::default() },
        evaluations: manifest.snapshots.len(),
        extra: Default::default(),
    }
}

fn balance_entry(traj: &Trajectory) -> CheckEntry {
    let mut worst = (0.0f64, 0.0f64, None);
    for s in &traj.steps {
        let tol = 1e-12 * s.total_mass_before.max(s.total_mass_after).max(f64::MIN_POSITIVE);
        if s.balance_residual / tol > worst.0 / worst.1.max(f64::MIN_POSITIVE) || worst.2.is_none() {
            worst = (s.balance_residual, tol, Some(s.t));
        }
    }
    CheckEntry {
        name: "mass_balance".into(),
        worst_residual: worst.0,
        threshold: worst.1,
        passed: worst.0 <= worst.1,
        location: Location { time: worst.2, ..Default::default() },
        evaluations: traj.steps.len(),
        extra: Default::default(),
    }
}

fn verify_options(cfg: &RunConfig, traj: &Trajectory) -> Result<VerifyOptions, Failure> {
    let [nx, nt] = cfg.verify.family;
    let family = TestFunctionFamily::tensor(cfg.grid.x_lo, cfg.grid.x_hi, traj.final_state().time, nx, nt)?;
    Ok(VerifyOptions { family: Some(family), k_grid: cfg.verify.k_grid.clone(), u_cap: cfg.solver.u_cap })
}

fn verify(args: VerifyArgs) -> CmdResult {
    let manifest = output::read_manifest(&args.run)?;
    let cfg = manifest.config.clone();
    cfg.validate()?;
    let (traj, flux) = rerun(&cfg)?;
    let mut report =
        VerificationReport { entries: vec![reproducibility(&args.run, &manifest, &traj), balance_entry(&traj)] };

    match &args.against {
        None => {
            let coarse = verify_trajectory(&traj, &flux, &verify_options(&cfg, &traj)?)?;
            if cfg.verify.refine && !args.no_refine {
                let fine_cfg = cfg.refined(2);
                let (fine_traj, _) = rerun(&fine_cfg)?;
                let fine = verify_trajectory(&fine_traj, &flux, &verify_options(&fine_cfg, &fine_traj)?)?;
                let mut refined = Vec::new();
                for c in &coarse.entries {
                    let Some(f) = fine.entries.iter().find(|f| f.name == c.name) else { continue };
                    refined.push(CheckEntry {
                        name: format!("{}@2N", c.name),
                        passed: f.passed && refinement_improves(c, f),
                        ..f.clone()
                    });
                }
                report.entries.extend(coarse.entries);
                report.entries.extend(refined);
            } else {
                report.entries.extend(coarse.entries);
            }
        }
        Some(other) => {
            let other_cfg = output::read_manifest(other)?.config;
            if other_cfg.grid != cfg.grid || other_cfg.flux != cfg.flux || other_cfg.solver != cfg.solver {
                return Err(invalid("paired runs need the same grid, flux and solver settings"));
            }
            let mut dense = cfg.solver_config();
            dense.history_stride = 1;
            let (u0, _) = cfg.initial_state()?;
            let (v0, _) = other_cfg.initial_state()?;
            let ordered = u0.leq(&v0, 0.0)?;
            let same_atoms = u0.atoms == v0.atoms;
            if !ordered && !same_atoms {
                return Err(invalid("paired runs must be ordered (u <= v) or share their atoms"));
            }
            let (u, v) = run_coupled(&u0, &v0, &flux, &dense)?;
            if ordered {
                report.entries.push(check_comparison(&u, &v)?);
            }
            if same_atoms {
                report.entries.push(check_contraction(&u, &v, &flux, cfg.verify.sampled_pairs)?);
            }
        }
    }

    let out = VerifyOutput {
        run: args.run.display().to_string(),
        against: args.against.as_ref().map(|p| p.display().to_string()),
        n_cells: cfg.grid.cells,
        passed: report.passed(),
        entries: &report.entries,
    };
    let path = args.report.unwrap_or_else(|| args.run.join(REPORT));
    std::fs::write(&path, serde_json::to_string_pretty(&out)? + "\n")?;
    print!("{}", report.summary_table());
    println!("report: {}", path.display());
    if report.passed() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Failure { code: EXIT_VERIFY_FAILED, message: "verification failed".into() })
    }
}

fn example_config(p: f64, t: f64, cells: usize) -> Result<RunConfig, Failure> {
    let mut cfg = presets::preset("inverse_power_p1").expect("preset exists");
    cfg.flux = FluxSection::InversePower { p };
    cfg.grid.cells = cells;
    cfg.solver.end_time = t;
    cfg.solver.snapshot_times.clear();
    cfg.validate()?;
    Ok(cfg)
}

fn converge(args: ConvergeArgs) -> CmdResult {
    if args.cells.is_empty() || !(args.t > 0.0) {
        return Err(invalid("converge needs at least one grid and --t > 0"));
    }
    let exact = ExampleSolution::new(args.p, args.t, 1e-4)?;
    let rows = convergence_study(
        &args.cells,
        Some((args.window_lo, args.window_hi)),
        |n| {
            let cfg = example_config(args.p, args.t, n).map_err(|f| Error::InvalidConfig(f.message))?;
            let flux = cfg.flux()?;
            let (s, _) = cfg.initial_state()?;
            Ok(run(&s, &flux, &cfg.solver_config())?.final_state().clone())
        },
        |g, t| exact.snapshot(g, t),
    )?;
    println!("{:>6} {:>12} {:>13} {:>13} {:>7}", "N", "dx", "L1 error", "atom error", "order");
    for r in &rows {
        let order = r.observed_order.map_or("-".to_string(), |o| format!("{o:.3}"));
        println!("{:>6} {:>12.4e} {:>13.4e} {:>13.4e} {:>7}", r.n_cells, r.dx, r.l1_error, r.atom_mass_error, order);
    }
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&rows)? + "\n")?;
    }
    let bad = rows.iter().filter_map(|r| r.observed_order).any(|o| !(o >= args.min_order));
    if bad {
        return Err(Failure {
            code: EXIT_VERIFY_FAILED,
            message: format!("observed order below {} on some refinement", args.min_order),
        });
    }
    Ok(())
}

fn oracle(args: OracleArgs) -> CmdResult {
    let grid = Grid::new(args.x_lo, args.x_hi, args.cells)?;
    if !(args.t >= 0.0) {
        return Err(invalid("--t must be nonnegative"));
    }
    let exact = ExampleSolution::new(args.p, args.t, 1e-4)?;
    let snap: MeasureState = exact.snapshot(&grid, args.t)?;
    std::fs::write(&args.samples, snapshot_csv(&snap))?;
    let sidecar = sidecar_path(&args.samples);
    std::fs::write(&sidecar, output::atoms_csv(&snap))?;
    println!("{} and {}", args.samples.display(), sidecar.display());
    Ok(())
}

/// `dir/name.csv` -> `dir/name_atoms.csv`.
fn sidecar_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}_atoms.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn sidecar_sits_next_to_the_snapshot() {
        assert_eq!(sidecar_path(Path::new("out/exact.csv")), PathBuf::from("out/exact_atoms.csv"));
    }

    #[test]
    fn validation_errors_map_to_exit_two() {
        let f: Failure = Error::InvalidInitial("negative".into()).into();
        assert_eq!(f.code, EXIT_INVALID);
        let f: Failure = Error::Internal("oops".into()).into();
        assert_eq!(f.code, EXIT_FAILURE);
    }
}
