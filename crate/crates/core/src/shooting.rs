//! Periodic orbits of the original `(x, y)` systems as fixed points of the
//! period map, by Newton iteration with a finite-difference Jacobian.

use std::fmt;

use crate::coeff::{Coefficient, CoefficientSet, CoefficientValues, SystemVariant};
use crate::error::{Error, Result};
use crate::integrate::{self, Trajectory, Vec2};
use crate::operator::functional_response;

/// Prey `x` and predator `y`; both strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State {
    pub x: f64,
    pub y: f64,
}

impl State {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite()) {
            return Err(Error::InvalidArgument(format!("state must be positive, got ({x}, {y})")));
        }
        Ok(State { x, y })
    }

    fn to_array(self) -> Vec2 {
        [self.x, self.y]
    }

    fn from_array(a: Vec2) -> Self {
        State { x: a[0], y: a[1] }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x = {:.16}, y = {:.16}", self.x, self.y)
    }
}

#[inline]
fn field(variant: SystemVariant, v: &CoefficientValues, x: f64, y: f64) -> Vec2 {
    let dx = v.rho * x * (1.0 - x / v.kappa) - y * functional_response(variant, v, x);
    let dy = v.sigma * y * (1.0 - v.eta * y / x);
    [dx, dy]
}

fn reject_delays(coeffs: &CoefficientSet) -> Result<()> {
    match coeffs.delays() {
        Some(d) if d.tau_x != 0.0 || d.tau_y != 0.0 => {
            Err(Error::InvalidSystem("the shooting solver does not handle delays".into()))
        }
        _ => Ok(()),
    }
}

/// `(ẋ, ẏ)` of the variant at time `t`.
pub fn rhs(coeffs: &CoefficientSet, t: f64, s: State) -> Result<(f64, f64)> {
    if !(s.x > 0.0) {
        return Err(Error::InvalidArgument(format!("rhs needs x > 0, got {}", s.x)));
    }
    let [dx, dy] = field(coeffs.variant(), &coeffs.values(t), s.x, s.y);
    if !(dx.is_finite() && dy.is_finite()) {
        return Err(Error::NonFinite { what: "right-hand side", t });
    }
    Ok((dx, dy))
}

/// Adaptive Dormand–Prince trajectory from `(t0, s0)` to `t1`.
pub fn integrate(coeffs: &CoefficientSet, s0: State, t0: f64, t1: f64, rtol: f64, atol: f64) -> Result<Trajectory> {
    reject_delays(coeffs)?;
    let variant = coeffs.variant();
    let f = |t: f64, u: &Vec2| {
        if !(u[0] > 0.0) {
            return None;
        }
        let d = field(variant, &coeffs.values(t), u[0], u[1]);
        (d[0].is_finite() && d[1].is_finite()).then_some(d)
    };
    integrate::integrate(f, t0, s0.to_array(), t1, rtol, atol)
}

/// `Φ_ω(s0)`.
pub fn period_map(coeffs: &CoefficientSet, s0: State, rtol: f64, atol: f64) -> Result<State> {
    let traj = integrate(coeffs, s0, 0.0, coeffs.omega(), rtol, atol)?;
    Ok(State::from_array(traj.end))
}

/// `|x(0) - x(ω)| + |y(0) - y(ω)|` from one period integration.
pub fn poincare_defect(coeffs: &CoefficientSet, s0: State, rtol: f64, atol: f64) -> Result<f64> {
    let end = period_map(coeffs, s0, rtol, atol)?;
    Ok((end.x - s0.x).abs() + (end.y - s0.y).abs())
}

/// Positive equilibrium of the system with every coefficient replaced by its
/// period mean.
pub fn averaged_seed(coeffs: &CoefficientSet) -> Result<State> {
    let omega = coeffs.omega();
    let mean = |c: Coefficient| -> Result<f64> {
        match coeffs.get(c) {
            Some(e) => Ok(e.mean_integral()? / omega),
            None => Ok(0.0),
        }
    };
    let v = CoefficientValues {
        rho: mean(Coefficient::Rho)?,
        kappa: mean(Coefficient::Kappa)?,
        mu: mean(Coefficient::Mu)?,
        alpha: mean(Coefficient::Alpha)?,
        beta: mean(Coefficient::Beta)?,
        sigma: mean(Coefficient::Sigma)?,
        eta: mean(Coefficient::Eta)?,
    };
    if !(v.rho > 0.0 && v.kappa > 0.0 && v.eta > 0.0) {
        return Err(Error::Bisection(format!(
            "averaged coefficients admit no positive equilibrium (rho {}, kappa {}, eta {})",
            v.rho, v.kappa, v.eta
        )));
    }
    let variant = coeffs.variant();
    // ρ(1 - x/κ) = (x/η)·p(x)/x once y = x/η is substituted.
    let g = |x: f64| v.rho * (1.0 - x / v.kappa) - functional_response(variant, &v, x) / v.eta;
    let (mut lo, mut hi) = (0.0, v.kappa);
    if !(g(hi) < 0.0) {
        return Err(Error::Bisection("no sign change of the equilibrium equation on (0, kappa]".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    State::new(x, x / v.eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    /// Tolerances of the integrations inside the Newton loop.
    pub rtol: f64,
    pub atol: f64,
    /// `||Φ(u) - u||∞` at which the Newton loop stops.
    pub newton_tol: f64,
    /// Tolerances of the polishing steps and of the reported defect.
    pub final_rtol: f64,
    pub final_atol: f64,
    pub max_newton: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        ShootingOptions {
            rtol: 1e-10,
            atol: 1e-12,
            newton_tol: 1e-8,
            final_rtol: 1e-13,
            final_atol: 1e-15,
            max_newton: 50,
        }
    }
}

/// A periodic orbit found by shooting.
#[derive(Debug, Clone)]
pub struct OrbitResult {
    pub initial: State,
    /// `|x(0) - x(ω)| + |y(0) - y(ω)|` at `integrator_tolerance`.
    pub defect: f64,
    /// One period at `integrator_tolerance`, with dense output.
    pub trajectory: Trajectory,
    pub newton_steps: usize,
    pub integrator_tolerance: f64,
}

impl OrbitResult {
    pub fn at(&self, t: f64) -> State {
        let omega = self.trajectory.t1;
        let r = t - (t / omega).floor() * omega;
        State::from_array(self.trajectory.at(r))
    }
}

fn residual(coeffs: &CoefficientSet, u: State, rtol: f64, atol: f64) -> Result<Vec2> {
    let end = period_map(coeffs, u, rtol, atol)?;
    Ok([end.x - u.x, end.y - u.y])
}

fn sup(v: &Vec2) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Jacobian of `G(u) = Φ(u) - u` by central differences of `Φ`.
fn jacobian(coeffs: &CoefficientSet, u: State, rtol: f64, atol: f64) -> Result<[[f64; 2]; 2]> {
    let base = u.to_array();
    let mut jac = [[0.0; 2]; 2];
    for col in 0..2 {
        let step = 1e-7f64.max(1e-7 * base[col].abs());
        let mut plus = base;
        let mut minus = base;
        plus[col] += step;
        minus[col] -= step;
        let fp = period_map(coeffs, State::from_array(plus), rtol, atol)?;
        let fm = period_map(coeffs, State::from_array(minus), rtol, atol)?;
        jac[0][col] = (fp.x - fm.x) / (2.0 * step);
        jac[1][col] = (fp.y - fm.y) / (2.0 * step);
        jac[col][col] -= 1.0;
    }
    Ok(jac)
}

fn solve2(j: &[[f64; 2]; 2], rhs: &Vec2) -> Result<Vec2> {
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let scale = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(Error::Newton(format!("singular Jacobian (det = {det:e})")));
    }
    Ok([(j[1][1] * rhs[0] - j[0][1] * rhs[1]) / det, (j[0][0] * rhs[1] - j[1][0] * rhs[0]) / det])
}

fn newton_update(u: State, delta: &Vec2) -> Result<State> {
    let mut lambda = 1.0;
    for _ in 0..30 {
        let cand = State { x: u.x - lambda * delta[0], y: u.y - lambda * delta[1] };
        if cand.x > 0.0 && cand.y > 0.0 {
            return Ok(cand);
        }
        lambda *= 0.5;
    }
    Err(Error::Newton("iterate left the positive quadrant".into()))
}

/// Newton iteration on `G(u) = Φ_ω(u) - u` from `seed`, followed by chord
/// polishing at the final tolerance.
pub fn find_periodic(coeffs: &CoefficientSet, seed: State, opts: &ShootingOptions) -> Result<OrbitResult> {
    reject_delays(coeffs)?;
    State::new(seed.x, seed.y)?;
    let mut u = seed;
    let mut steps = 0;
    let mut g = residual(coeffs, u, opts.rtol, opts.atol)?;
    let mut jac = jacobian(coeffs, u, opts.rtol, opts.atol)?;
    while sup(&g) > opts.newton_tol {
        if steps >= opts.max_newton {
            return Err(Error::Newton(format!("no convergence in {} steps (|G| = {:e})", opts.max_newton, sup(&g))));
        }
        if steps > 0 {
            jac = jacobian(coeffs, u, opts.rtol, opts.atol)?;
        }
        let delta = solve2(&jac, &g)?;
        u = newton_update(u, &delta)?;
        g = residual(coeffs, u, opts.rtol, opts.atol)?;
        steps += 1;
    }

    let mut g_fine = residual(coeffs, u, opts.final_rtol, opts.final_atol)?;
    for _ in 0..8 {
        let delta = solve2(&jac, &g_fine)?;
        let cand = newton_update(u, &delta)?;
        let g_cand = residual(coeffs, cand, opts.final_rtol, opts.final_atol)?;
        if sup(&g_cand) >= sup(&g_fine) {
            break;
        }
        u = cand;
        g_fine = g_cand;
        if sup(&g_fine) < 1e-15 {
            break;
        }
    }

    let trajectory = integrate(coeffs, u, 0.0, coeffs.omega(), opts.final_rtol, opts.final_atol)?;
    let defect = (trajectory.end[0] - u.x).abs() + (trajectory.end[1] - u.y).abs();
    Ok(OrbitResult { initial: u, defect, trajectory, newton_steps: steps, integrator_tolerance: opts.final_rtol })
}
