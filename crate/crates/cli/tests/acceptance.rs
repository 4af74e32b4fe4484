//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::TAU;
use std::fs;
use std::process::Command;
use std::time::Instant;

use ppsolve::bounds::shell_bound;
use ppsolve::kernel::{gamma_of, periodic_linear_solve, weighted_period_integral};
use ppsolve::shooting::{find_periodic, poincare_defect};
use ppsolve::{
    check_proof_steps, examples, CoefficientSet, CumulativeIntegral, GridFunction, OperatorContext, PeriodicExpr,
    ShootingOptions, State, SystemVariant,
};
use ppsolve_cli::{cross_verify, run, CommandKind, RunConfig, Status};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn field(output: &str, key: &str) -> Result<f64, String> {
    output
        .lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix(" = ")))
        .and_then(|v| v.split_whitespace().next())
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| format!("no '{key}' in output"))
}

fn example_reproduction() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (id, coeffs) in examples::all() {
        let published = examples::published(id).unwrap();
        let mut config = RunConfig::demo(CommandKind::Demo, id);
        config.out = dir.path().join(id);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let start = Instant::now();
        let status = run(&config, &mut out, &mut err);
        let elapsed = start.elapsed().as_secs_f64();
        let text = String::from_utf8_lossy(&out).into_owned();
        ensure(status == Status::Success, format!("{id}: demo failed: {}", String::from_utf8_lossy(&err)))?;
        ensure(elapsed < 10.0, format!("{id}: took {elapsed:.2} s"))?;
        let (x0, y0) = (field(&text, "x(0)")?, field(&text, "y(0)")?);
        let defect = poincare_defect(&coeffs, State::new(x0, y0).map_err(|e| e.to_string())?, 1e-13, 1e-15)
            .map_err(|e| e.to_string())?;
        let (dx, dy) = ((x0 - published.x0).abs(), (y0 - published.y0).abs());
        ensure(defect < published.defect_bound, format!("{id}: defect {defect:e} >= {:e}", published.defect_bound))?;
        ensure(dx < 1e-6 && dy < 1e-6, format!("{id}: initial values off by ({dx:e}, {dy:e})"))?;
        notes.push(format!("{id} defect {defect:.2e}, |dx0| {dx:.1e}, |dy0| {dy:.1e}, {elapsed:.2} s"));
    }
    Ok(notes.join("; "))
}

fn dual_path_agreement() -> Outcome {
    let mut notes = Vec::new();
    for (id, coeffs) in examples::all() {
        let v = cross_verify(&RunConfig::demo(CommandKind::Verify, id), &coeffs).map_err(|e| format!("{id}: {e:#}"))?;
        ensure(
            v.shooting_fixed_point_residual < 1e-6,
            format!("{id}: fixed-point residual {:e}", v.shooting_fixed_point_residual),
        )?;
        ensure(v.operator_ode_residual < 1e-6, format!("{id}: ode residual {:e}", v.operator_ode_residual))?;
        notes.push(format!(
            "{id} |X-T(X)| {:.1e}, ode {:.1e}",
            v.shooting_fixed_point_residual, v.operator_ode_residual
        ));
    }
    Ok(notes.join("; "))
}

fn fd_residual(n: usize) -> Result<(f64, f64), String> {
    let a = PeriodicExpr::parse("1+sin(5*t)", TAU).map_err(|e| e.to_string())?;
    let f = |t: f64| (1.0 + (5.0 * t).sin()) / (2.0 + t.sin());
    let x = periodic_linear_solve(&a, f, n).map_err(|e| e.to_string())?;
    let h = TAU / n as f64;
    let v = x.values();
    let (mut worst, mut sup_f) = (0.0f64, 0.0f64);
    for j in 0..n {
        let t = j as f64 * h;
        let slope = (v[(j + 1) % n] - v[(j + n - 1) % n]) / (2.0 * h);
        worst = worst.max((slope + a.value(t) * v[j] - f(t)).abs());
        sup_f = sup_f.max(f(t).abs());
    }
    Ok((worst, sup_f))
}

fn kernel_correctness() -> Outcome {
    let mut worst_identity: f64 = 0.0;
    for a in [0.5, 1.0, 2.0] {
        let expr = PeriodicExpr::constant(a, TAU).map_err(|e| e.to_string())?;
        let ca = CumulativeIntegral::with_defaults(&expr).map_err(|e| e.to_string())?;
        for t in [0.0, 1.3, 4.4] {
            let v = weighted_period_integral(&ca, |_| a, t, 1e-13).map_err(|e| e.to_string())?;
            worst_identity = worst_identity.max((v - 1.0).abs());
        }
        worst_identity = worst_identity.max((gamma_of(&ca) - (-a * TAU).exp()).abs());
    }
    ensure(worst_identity < 1e-12, format!("constant identities off by {worst_identity:e}"))?;

    let a = PeriodicExpr::parse("1+sin(5*t)", TAU).map_err(|e| e.to_string())?;
    let f = |t: f64| t.cos() + (1.0 + (5.0 * t).sin()) * (2.0 + t.sin());
    let x = periodic_linear_solve(&a, f, 512).map_err(|e| e.to_string())?;
    let exact = GridFunction::from_fn(512, TAU, |t| 2.0 + t.sin()).map_err(|e| e.to_string())?;
    let manufactured = x.distance(&exact);
    ensure(manufactured < 1e-8, format!("manufactured solution error {manufactured:e}"))?;

    let (r512, sup_f) = fd_residual(512)?;
    let (r1024, _) = fd_residual(1024)?;
    let ratio = r512 / r1024;
    ensure(r512 <= 1e-4 * (1.0 + sup_f), format!("finite-difference residual {r512:e}"))?;
    ensure(ratio >= 3.9, format!("halving ratio {ratio:.3}"))?;
    Ok(format!("identities {worst_identity:.1e}, manufactured {manufactured:.1e}, FD ratio {ratio:.3}"))
}

fn proof_step_suite() -> Outcome {
    let mut notes = Vec::new();
    for (id, coeffs) in examples::all() {
        let ctx = OperatorContext::with_default_grid(&coeffs).map_err(|e| e.to_string())?;
        let rep = check_proof_steps(&ctx, 100, ppsolve::bounds::DEFAULT_SEED).map_err(|e| e.to_string())?;
        ensure(rep.pass(), format!("{id}: {rep:?}"))?;
        ensure(
            rep.inner_margin > 0.0 && rep.outer_margin > 0.0 && rep.infimum > 0.0,
            format!("{id}: margins {rep:?}"),
        )?;
        notes.push(format!("{id} 0 violations, inner margin {:.3}", rep.inner_margin));
    }
    Ok(notes.join("; "))
}

fn radius_bounds() -> Outcome {
    let mut notes = Vec::new();
    for (id, coeffs) in examples::all() {
        let ctx = OperatorContext::with_default_grid(&coeffs).map_err(|e| e.to_string())?;
        let d = ctx.domain();
        ensure(0.0 < d.r && d.r < d.r_upper, format!("{id}: r = {} vs max baseline {}", d.r, d.r_upper))?;
        match coeffs.variant() {
            SystemVariant::S3 => {
                let a0 = shell_bound(ctx.grid(), d.gamma, d.r_lower).map_err(|e| e.to_string())?;
                let a_r = shell_bound(ctx.grid(), d.gamma, d.big_r).map_err(|e| e.to_string())?;
                ensure((d.r_lower - a0).abs() < 1e-8, format!("{id}: |R0 - A(R0)| = {:e}", (d.r_lower - a0).abs()))?;
                ensure(d.big_r == 2.0 * d.r_lower && d.big_r > a_r, format!("{id}: R = {} vs A(R) = {a_r}", d.big_r))?;
                notes.push(format!("{id} |R0-A(R0)| {:.1e}", (d.r_lower - a0).abs()));
            }
            _ => {
                let bound = shell_bound(ctx.grid(), d.gamma, d.big_r).map_err(|e| e.to_string())?;
                ensure(d.big_r == 2.0 * bound && d.big_r > bound, format!("{id}: R = {} vs bound {bound}", d.big_r))?;
                notes.push(format!("{id} R/bound = {}", d.big_r / bound));
            }
        }
    }
    Ok(notes.join("; "))
}

fn delay_extension() -> Outcome {
    let coeffs = examples::example1();
    let ctx = OperatorContext::with_default_grid(&coeffs).map_err(|e| e.to_string())?;
    let x = ctx.default_seed();
    let reduction =
        ctx.apply_t(&x).and_then(|a| Ok(a.distance(&ctx.apply_t_delay(&x, 0.0, 0.0)?))).map_err(|e| e.to_string())?;
    ensure(reduction < 1e-12, format!("zero-delay mismatch {reduction:e}"))?;

    let delayed = coeffs.with_delays(0.5, 0.5).map_err(|e| e.to_string())?;
    let ctx = OperatorContext::with_default_grid(&delayed).map_err(|e| e.to_string())?;
    let (_, trace) = ctx.damped_picard(&ctx.default_seed(), 0.5, 1e-6, 500).map_err(|e| e.to_string())?;
    let last = trace.final_residual();
    ensure(trace.converged && last < 1e-6, format!("delayed Picard residual {last:e} after {} steps", trace.steps))?;
    Ok(format!("zero-delay {reduction:.1e}; delayed residual {last:.1e} in {} steps", trace.steps))
}

fn trivial_systems() -> Outcome {
    let s1 = CoefficientSet::constant(SystemVariant::S1, TAU, 1.0).map_err(|e| e.to_string())?;
    let orbit =
        find_periodic(&s1, State::new(0.4, 0.6).unwrap(), &ShootingOptions::default()).map_err(|e| e.to_string())?;
    let shoot_err = (orbit.initial.x - 0.5).abs().max((orbit.initial.y - 0.5).abs());
    ensure(
        shoot_err < 1e-12 && orbit.defect <= 1e-12,
        format!("S1 shooting error {shoot_err:e}, defect {:e}", orbit.defect),
    )?;

    let ctx = OperatorContext::new(&s1, 64).map_err(|e| e.to_string())?;
    let seed = GridFunction::constant(64, TAU, 1.0).unwrap();
    let (fixed, _) = ctx.damped_picard(&seed, 0.5, 1e-14, 500).map_err(|e| e.to_string())?;
    let (x, y) = ctx.reconstruct_xy(&fixed).map_err(|e| e.to_string())?;
    let op_err = x.values().iter().chain(y.values()).fold(0.0f64, |m, v| m.max((v - 0.5).abs()));
    let op_state = State::new(x.values()[0], y.values()[0]).map_err(|e| e.to_string())?;
    let op_defect = poincare_defect(&s1, op_state, 1e-13, 1e-15).map_err(|e| e.to_string())?;
    ensure(op_err < 1e-12 && op_defect <= 1e-12, format!("S1 operator error {op_err:e}, defect {op_defect:e}"))?;

    // Positive root of X = 1 + X/(X+1) by bisection.
    let (mut lo, mut hi) = (1.0f64, 3.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - 1.0 - mid / (mid + 1.0) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let s2 = CoefficientSet::constant(SystemVariant::S2, TAU, 1.0).map_err(|e| e.to_string())?;
    let ctx = OperatorContext::new(&s2, 64).map_err(|e| e.to_string())?;
    let (fixed, _) = ctx.damped_picard(&seed, 1.0, 1e-14, 500).map_err(|e| e.to_string())?;
    let s2_err = fixed.values().iter().fold(0.0f64, |m, v| m.max((v - root).abs()));
    ensure(s2_err < 1e-10, format!("S2 fixed point off by {s2_err:e}"))?;
    Ok(format!("S1 shooting {shoot_err:.1e}, S1 operator {op_err:.1e}, S2 vs bisection {s2_err:.1e}"))
}

fn hypothesis_gate() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases = [
        (
            "sigma_zero",
            "variant = S2\nrho = 1+sin(5*t)\nkappa = 2+sin(t)\nmu = 1\nalpha = 2\nsigma = 0\neta = 1\n",
            "sigma is identically zero",
        ),
        (
            "alpha_sign",
            "variant = S2\nrho = 1\nkappa = 2\nmu = 1\nalpha = sin(t)\nsigma = 1\neta = 1\n",
            "alpha is negative somewhere",
        ),
        ("kappa_zero", "variant = S1\nrho = 1\nkappa = 1+cos(t)\nmu = 1\nsigma = 1\neta = 1\n", "kappa > 0 fails"),
    ];
    for (name, body, diagnosis) in cases {
        let path = dir.path().join(format!("{name}.spec"));
        fs::write(&path, format!("omega = 2*pi\n{body}")).map_err(|e| e.to_string())?;
        let out = Command::new(env!("CARGO_BIN_EXE_ppsolve"))
            .args(["check", "--spec"])
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        let text = String::from_utf8_lossy(&out.stdout);
        ensure(out.status.code() == Some(1), format!("{name}: exit {:?}", out.status.code()))?;
        ensure(text.contains(diagnosis), format!("{name}: no '{diagnosis}' in output"))?;
    }
    Ok("three violating specs exit 1 with named diagnoses".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("example reproduction", example_reproduction),
        ("dual-path agreement", dual_path_agreement),
        ("kernel correctness", kernel_correctness),
        ("cone and proof-step suite", proof_step_suite),
        ("radius-bound construction", radius_bounds),
        ("delay reduction and extension", delay_extension),
        ("trivial-system oracle", trivial_systems),
        ("hypothesis gate", hypothesis_gate),
    ];
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} ({name}): PASS [{detail}]", k + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {} ({name}): FAIL [{detail}]", k + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
