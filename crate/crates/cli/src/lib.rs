//! Command-line front end: hypothesis checks, radius bounds, both solvers,
//! cross-verification and trajectory export.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use ppsolve::bounds::DEFAULT_SEED;
use ppsolve::operator::{DEFAULT_DAMPING, DEFAULT_MAX_ITER, DEFAULT_OP_TOL};
use ppsolve::shooting::{averaged_seed, find_periodic};
use ppsolve::{
    check_proof_steps, examples, CoefficientSet, GridFunction, OperatorContext, OrbitResult, ShootingOptions,
};

pub const EXPORT_SAMPLES: usize = 2048;
pub const EXPORT_HORIZON: f64 = 10.0 * PI;
pub const CSV_NAME: &str = "trajectory.csv";
pub const PLOT_NAME: &str = "plot.py";

#[derive(Debug, Parser)]
#[command(name = "ppsolve", version, about = "Positive periodic solutions of periodic predator-prey systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Check,
    Bounds,
    SolveShooting,
    SolveOperator,
    Verify,
    Export,
    Demo,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the sign and non-degeneracy hypotheses
    Check(CommonArgs),
    /// Print the cone constant and the radii r < R
    Bounds(CommonArgs),
    /// Periodic orbit by Newton shooting on the period map
    SolveShooting(CommonArgs),
    /// Fixed point of the integral operator by damped Picard iteration
    SolveOperator(CommonArgs),
    /// Run both solvers and compare them
    Verify(CommonArgs),
    /// Write the orbit over [0, 10π] as CSV plus a plot script
    Export(CommonArgs),
    /// Shooting and export for a built-in example
    Demo(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Built-in example id (example1, example2, example3)
    pub id: Option<String>,
    /// System spec file
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Built-in example id
    #[arg(long)]
    pub demo: Option<String>,
    /// Grid size of the operator discretisation (power of two, >= 64)
    #[arg(long, default_value_t = 512)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub rtol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub atol: f64,
    /// Fixed-point residual at which Picard iteration stops
    #[arg(long, default_value_t = DEFAULT_OP_TOL)]
    pub op_tol: f64,
    /// Picard damping λ in (0, 1]
    #[arg(long, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
    /// Seed of the random proof-step trials
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output directory of `export` and `demo`
    #[arg(long, default_value = "ppsolve-out")]
    pub out: PathBuf,
    /// Number of random cone elements per shell for `bounds`
    #[arg(long)]
    pub proof_steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Demo(String),
    Spec(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub source: Source,
    pub grid: usize,
    pub rtol: f64,
    pub atol: f64,
    pub op_tol: f64,
    pub damping: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub proof_steps: Option<usize>,
}

impl RunConfig {
    /// Defaults for a built-in example.
    pub fn demo(command: CommandKind, id: &str) -> Self {
        RunConfig {
            command,
            source: Source::Demo(id.to_string()),
            grid: 512,
            rtol: 1e-10,
            atol: 1e-12,
            op_tol: DEFAULT_OP_TOL,
            damping: DEFAULT_DAMPING,
            max_iter: DEFAULT_MAX_ITER,
            seed: DEFAULT_SEED,
            out: PathBuf::from("ppsolve-out"),
            proof_steps: None,
        }
    }

    pub fn spec(command: CommandKind, path: impl Into<PathBuf>) -> Self {
        RunConfig { source: Source::Spec(path.into()), ..RunConfig::demo(command, "") }
    }
}

impl TryFrom<Cli> for RunConfig {
    type Error = anyhow::Error;

    fn try_from(cli: Cli) -> anyhow::Result<Self> {
        let (command, a) = match cli.command {
            Command::Check(a) => (CommandKind::Check, a),
            Command::Bounds(a) => (CommandKind::Bounds, a),
            Command::SolveShooting(a) => (CommandKind::SolveShooting, a),
            Command::SolveOperator(a) => (CommandKind::SolveOperator, a),
            Command::Verify(a) => (CommandKind::Verify, a),
            Command::Export(a) => (CommandKind::Export, a),
            Command::Demo(a) => (CommandKind::Demo, a),
        };
        let source = match (a.id, a.demo, a.spec) {
            (Some(id), None, None) | (None, Some(id), None) => Source::Demo(id),
            (None, None, Some(path)) => Source::Spec(path),
            (None, None, None) => bail!("give a demo id or --spec <path>"),
            _ => bail!("give exactly one of a demo id, --demo or --spec"),
        };
        if command == CommandKind::Demo && !matches!(source, Source::Demo(_)) {
            bail!("demo needs a built-in example id");
        }
        Ok(RunConfig {
            command,
            source,
            grid: a.grid,
            rtol: a.rtol,
            atol: a.atol,
            op_tol: a.op_tol,
            damping: a.damping,
            max_iter: DEFAULT_MAX_ITER,
            seed: a.seed,
            out: a.out,
            proof_steps: a.proof_steps,
        })
    }
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    HypothesisFailure,
    SolverFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::HypothesisFailure => 1,
            Status::SolverFailure => 2,
        }
    }
}

/// `v` to 16 significant digits.
pub fn sig16(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        format!("{:.*}", (15 - exp) as usize, v)
    } else {
        format!("{v:.15e}")
    }
}

pub fn load(source: &Source) -> anyhow::Result<CoefficientSet> {
    match source {
        Source::Demo(id) => examples::by_id(id).ok_or_else(|| anyhow!("unknown example '{id}'")),
        Source::Spec(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("cannot read spec file {}", path.display()))?;
            CoefficientSet::from_spec_str(&text).with_context(|| format!("invalid spec file {}", path.display()))
        }
    }
}

/// Runs one command, writing the summary to `out` and diagnostics to `err`.
pub fn run(config: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Status {
    match dispatch(config, out) {
        Ok(status) => status,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            Status::SolverFailure
        }
    }
}

fn dispatch(config: &RunConfig, out: &mut dyn Write) -> anyhow::Result<Status> {
    let coeffs = load(&config.source)?;
    let report = coeffs.verify_hypotheses()?;
    if config.command == CommandKind::Check {
        writeln!(out, "{report}")?;
    }
    if !report.pass {
        if config.command != CommandKind::Check {
            writeln!(out, "{report}")?;
        }
        return Ok(Status::HypothesisFailure);
    }
    match config.command {
        CommandKind::Check => Ok(Status::Success),
        CommandKind::Bounds => bounds(config, &coeffs, out),
        CommandKind::SolveShooting => {
            let orbit = shoot(config, &coeffs)?;
            print_orbit(&orbit, out)?;
            Ok(Status::Success)
        }
        CommandKind::SolveOperator => solve_operator(config, &coeffs, out),
        CommandKind::Verify => verify(config, &coeffs, out),
        CommandKind::Export => export(config, &coeffs, out),
        CommandKind::Demo => {
            let orbit = shoot(config, &coeffs)?;
            print_orbit(&orbit, out)?;
            if let Source::Demo(id) = &config.source {
                if let Some(p) = examples::published(id) {
                    writeln!(out, "published x(0) = {}", sig16(p.x0))?;
                    writeln!(out, "published y(0) = {}", sig16(p.y0))?;
                    writeln!(out, "published defect bound = {:e}", p.defect_bound)?;
                }
            }
            write_export(config, |t| pair(&orbit, t), out)?;
            Ok(Status::Success)
        }
    }
}

fn bounds(config: &RunConfig, coeffs: &CoefficientSet, out: &mut dyn Write) -> anyhow::Result<Status> {
    let ctx = OperatorContext::new(coeffs, config.grid)?;
    let d = ctx.domain();
    writeln!(out, "gamma = {}", sig16(d.gamma))?;
    writeln!(out, "r = {}", sig16(d.r))?;
    writeln!(out, "R = {}", sig16(d.big_r))?;
    writeln!(out, "baseline max = {}", sig16(d.r_upper))?;
    writeln!(out, "R lower bound = {}", sig16(d.r_lower))?;
    writeln!(out, "denominator min = {}", sig16(d.denominator_min))?;
    if let Some(trials) = config.proof_steps {
        let rep = check_proof_steps(&ctx, trials, config.seed)?;
        writeln!(out, "proof steps: {} trials per shell, seed {}", rep.trials, config.seed)?;
        writeln!(out, "  inner shell violations = {}", rep.inner_violations)?;
        writeln!(out, "  outer shell violations = {}", rep.outer_violations)?;
        writeln!(out, "  infimum violations = {}", rep.infimum_violations)?;
        writeln!(out, "  cone violations = {}", rep.cone_violations)?;
        writeln!(out, "  inner margin = {}", sig16(rep.inner_margin))?;
        writeln!(out, "  outer margin = {}", sig16(rep.outer_margin))?;
        writeln!(out, "  infimum = {}", sig16(rep.infimum))?;
        writeln!(out, "proof steps {}", if rep.pass() { "PASS" } else { "FAIL" })?;
        if !rep.pass() {
            return Ok(Status::SolverFailure);
        }
    }
    Ok(Status::Success)
}

fn shoot(config: &RunConfig, coeffs: &CoefficientSet) -> anyhow::Result<OrbitResult> {
    let opts = ShootingOptions { rtol: config.rtol, atol: config.atol, ..ShootingOptions::default() };
    let seed = averaged_seed(coeffs)?;
    Ok(find_periodic(coeffs, seed, &opts)?)
}

fn pair(orbit: &OrbitResult, t: f64) -> (f64, f64) {
    let s = orbit.at(t);
    (s.x, s.y)
}

fn print_orbit(orbit: &OrbitResult, out: &mut dyn Write) -> anyhow::Result<()> {
    writeln!(out, "x(0) = {}", sig16(orbit.initial.x))?;
    writeln!(out, "y(0) = {}", sig16(orbit.initial.y))?;
    writeln!(out, "defect = {:.15e} (rtol {:e})", orbit.defect, orbit.integrator_tolerance)?;
    writeln!(out, "newton steps = {}", orbit.newton_steps)?;
    Ok(())
}

struct OperatorSolution {
    ctx: OperatorContext,
    x: GridFunction,
    y: GridFunction,
    residual: f64,
    steps: usize,
}

fn operator_solution(config: &RunConfig, coeffs: &CoefficientSet) -> anyhow::Result<OperatorSolution> {
    let ctx = OperatorContext::new(coeffs, config.grid)?;
    let (fixed, trace) = ctx.damped_picard(&ctx.default_seed(), config.damping, config.op_tol, config.max_iter)?;
    if !trace.converged {
        bail!(
            "Picard iteration did not reach {:e} in {} steps (residual {:e})",
            config.op_tol,
            trace.steps,
            trace.final_residual()
        );
    }
    let (x, y) = ctx.reconstruct_xy(&fixed)?;
    Ok(OperatorSolution { ctx, x, y, residual: trace.final_residual(), steps: trace.steps })
}

fn solve_operator(config: &RunConfig, coeffs: &CoefficientSet, out: &mut dyn Write) -> anyhow::Result<Status> {
    let sol = operator_solution(config, coeffs)?;
    writeln!(out, "fixed-point residual = {:.15e}", sol.residual)?;
    writeln!(out, "picard steps = {}", sol.steps)?;
    writeln!(out, "x(0) = {}", sig16(sol.x.values()[0]))?;
    writeln!(out, "y(0) = {}", sig16(sol.y.values()[0]))?;
    writeln!(out, "ode residual = {:.15e}", sol.ctx.ode_residual(&sol.x, &sol.y))?;
    Ok(Status::Success)
}

/// Cross-path comparison of the two solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verification {
    /// `sup |x_op - x_shoot| + sup |y_op - y_shoot|` over the grid.
    pub distance: f64,
    /// `||X - T(X)||` for `X = 1/x` of the shooting orbit.
    pub shooting_fixed_point_residual: f64,
    pub operator_ode_residual: f64,
    pub shooting_defect: f64,
}

pub fn cross_verify(config: &RunConfig, coeffs: &CoefficientSet) -> anyhow::Result<Verification> {
    let orbit = shoot(config, coeffs)?;
    let sol = operator_solution(config, coeffs)?;
    let n = config.grid;
    let omega = coeffs.omega();
    let xs = GridFunction::from_fn(n, omega, |t| orbit.at(t).x)?;
    let ys = GridFunction::from_fn(n, omega, |t| orbit.at(t).y)?;
    let big_x = xs.map(|v| 1.0 / v)?;
    let residual = big_x.distance(&sol.ctx.apply(&big_x)?);
    Ok(Verification {
        distance: sol.x.distance(&xs) + sol.y.distance(&ys),
        shooting_fixed_point_residual: residual,
        operator_ode_residual: sol.ctx.ode_residual(&sol.x, &sol.y),
        shooting_defect: orbit.defect,
    })
}

fn verify(config: &RunConfig, coeffs: &CoefficientSet, out: &mut dyn Write) -> anyhow::Result<Status> {
    let v = cross_verify(config, coeffs)?;
    writeln!(out, "cross-path distance = {:.15e}", v.distance)?;
    writeln!(out, "shooting fixed-point residual = {:.15e}", v.shooting_fixed_point_residual)?;
    writeln!(out, "operator ode residual = {:.15e}", v.operator_ode_residual)?;
    writeln!(out, "shooting defect = {:.15e}", v.shooting_defect)?;
    Ok(Status::Success)
}

fn export(config: &RunConfig, coeffs: &CoefficientSet, out: &mut dyn Write) -> anyhow::Result<Status> {
    let has_delays = coeffs.delays().is_some_and(|d| d.tau_x != 0.0 || d.tau_y != 0.0);
    if has_delays {
        let sol = operator_solution(config, coeffs)?;
        let (x, y) = (sol.x.spectrum(), sol.y.spectrum());
        writeln!(out, "fixed-point residual = {:.15e}", sol.residual)?;
        write_export(config, |t| (x.eval(t), y.eval(t)), out)?;
    } else {
        let orbit = shoot(config, coeffs)?;
        print_orbit(&orbit, out)?;
        write_export(config, |t| pair(&orbit, t), out)?;
    }
    Ok(Status::Success)
}

fn write_export<F: Fn(f64) -> (f64, f64)>(config: &RunConfig, state: F, out: &mut dyn Write) -> anyhow::Result<()> {
    fs::create_dir_all(&config.out).with_context(|| format!("cannot create {}", config.out.display()))?;
    let csv_path = config.out.join(CSV_NAME);
    fs::write(&csv_path, trajectory_csv(state)?)?;
    let plot_path = config.out.join(PLOT_NAME);
    fs::write(&plot_path, PLOT_SCRIPT)?;
    writeln!(out, "wrote {}", display(&csv_path))?;
    writeln!(out, "wrote {}", display(&plot_path))?;
    Ok(())
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// CSV `t,x,y` at `EXPORT_SAMPLES` equispaced times covering `[0, 10π]`.
pub fn trajectory_csv<F: Fn(f64) -> (f64, f64)>(state: F) -> anyhow::Result<String> {
    let mut csv = String::from("t,x,y\n");
    for k in 0..EXPORT_SAMPLES {
        let t = EXPORT_HORIZON * k as f64 / (EXPORT_SAMPLES - 1) as f64;
        let (x, y) = state(t);
        if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
            bail!("non-positive state ({x}, {y}) at t = {t}");
        }
        csv.push_str(&format!("{},{},{}\n", sig16(t), sig16(x), sig16(y)));
    }
    Ok(csv)
}

const PLOT_SCRIPT: &str = r#"# Plots trajectory.csv from this directory: x(t), y(t) and the phase curve.
import csv
import os

import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "trajectory.csv")) as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
x = [float(r["x"]) for r in rows]
y = [float(r["y"]) for r in rows]

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
ax1.plot(t, x, label="x(t)")
ax1.plot(t, y, label="y(t)")
ax1.set_xlabel("t")
ax1.legend()
ax2.plot(x, y)
ax2.set_xlabel("x")
ax2.set_ylabel("y")
fig.tight_layout()
fig.savefig(os.path.join(here, "trajectory.png"), dpi=120)
plt.show()
"#;
