//! Cone radii `r < R` of the annular domain `D = {X ∈ K_γ : r ≤ ||X|| ≤ R}`
//! and numerical checks of the compression/expansion inequalities on its shells.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeff::SystemVariant;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::gamma_of;
use crate::operator::{OperatorContext, SystemGrid};

pub const DEFAULT_SEED: u64 = 20240607;

/// The annular cone domain used by the existence argument.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeDomain {
    pub gamma: f64,
    pub r: f64,
    pub big_r: f64,
    pub omega: f64,
    /// `b(t) = ∫_t^{t+ω} H(t,s;ρ) ρ(s)/κ(s) ds`.
    pub baseline: GridFunction,
    /// `max_t b`, the strict upper bound for `r`.
    pub r_upper: f64,
    /// The lower bound for `R` (for S3 the root `R₀` of `R = A(R)`).
    pub r_lower: f64,
    /// `min_s ∫_s^{s+ω} H(s,θ;σ) σ(θ)η(θ) dθ`.
    pub denominator_min: f64,
}

/// `max_t b(t)`.
pub fn r_upper(grid: &SystemGrid) -> Result<f64> {
    Ok(grid.baseline()?.max())
}

/// Minimum over the grid of the inner integral `∫ H(s,θ;σ) σ η dθ`.
pub fn denominator_min(grid: &SystemGrid) -> Result<f64> {
    let m = grid.denominator()?.min();
    if !(m > 0.0) {
        return Err(Error::NonPositiveDenominator(m));
    }
    Ok(m)
}

/// Node values of `∫ H(t,s;ρ) c(s)/d(s) ds`, the part of the `R` bound that
/// scales with the response, with `c = μ/(αγ²)` (S2), `μ/γ` (S1) or
/// `μ/(αβγ³)` (S3, before division by `R`).
fn response_bound(grid: &SystemGrid, gamma: f64) -> Result<GridFunction> {
    let d = grid.denominator()?;
    if !(d.min() > 0.0) {
        return Err(Error::NonPositiveDenominator(d.min()));
    }
    let d_points = grid.layout().interpolate(&d);
    let variant = grid.variant();
    let g: Vec<f64> = grid
        .point_values()
        .iter()
        .zip(&d_points)
        .map(|(v, ds)| {
            let c = match variant {
                SystemVariant::S1 => v.mu / gamma,
                SystemVariant::S2 => v.mu / (v.alpha * gamma * gamma),
                SystemVariant::S3 => v.mu / (v.alpha * v.beta * gamma.powi(3)),
            };
            c / ds
        })
        .collect();
    grid.solve_rho(&g)
}

/// Right-hand side of the `R` condition evaluated at `big_r`.
///
/// For S1 and S2 it does not depend on `big_r`; for S3 it is the decreasing map
/// `A(R) = max_t ∫ H [ρ/κ + μ/(Rαβγ³) · 1/d] ds`.
pub fn shell_bound(grid: &SystemGrid, gamma: f64, big_r: f64) -> Result<f64> {
    let b = grid.baseline()?;
    let c = response_bound(grid, gamma)?;
    let scale = if grid.variant() == SystemVariant::S3 { 1.0 / big_r } else { 1.0 };
    Ok(b.values().iter().zip(c.values()).fold(f64::NEG_INFINITY, |m, (b, c)| m.max(b + scale * c)))
}

/// Lower bound for `R`.
///
/// S1/S2: the closed maximum. S3: the unique positive root `R₀` of `R = A(R)`,
/// found by bisection; any `R > R₀` satisfies `R > A(R)`.
pub fn r_lower(grid: &SystemGrid, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    let b = grid.baseline()?;
    let c = response_bound(grid, gamma)?;
    let direct = || b.values().iter().zip(c.values()).fold(f64::NEG_INFINITY, |m, (b, c)| m.max(b + c));
    if grid.variant() != SystemVariant::S3 {
        return Ok(direct());
    }
    let a = |r: f64| b.values().iter().zip(c.values()).fold(f64::NEG_INFINITY, |m, (b, c)| m.max(b + c / r));
    let mut lo = b.max();
    if !(lo > 0.0 && a(lo) >= lo) {
        return Err(Error::Bisection(format!("lower end {lo} does not satisfy R <= A(R)")));
    }
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    while hi <= a(hi) {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 || !hi.is_finite() {
            return Err(Error::Bisection("no upper bracket found".into()));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mid - a(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // Of the two bracket ends keep the one with the smaller residual.
    Ok(if (lo - a(lo)).abs() <= (hi - a(hi)).abs() { lo } else { hi })
}

/// `γ` from the ρ kernel, `r = max b / 2`, `R = 2·(lower bound)`.
pub fn choose_radii(grid: &SystemGrid) -> Result<ConeDomain> {
    let gamma = gamma_of(grid.ca_rho());
    let baseline = grid.baseline()?;
    let r_up = baseline.max();
    if !(r_up > 0.0) {
        return Err(Error::NonPositiveDenominator(r_up));
    }
    let denominator_min = denominator_min(grid)?;
    let lower = r_lower(grid, gamma)?;
    let domain = ConeDomain {
        gamma,
        r: 0.5 * r_up,
        big_r: 2.0 * lower,
        omega: grid.omega(),
        baseline,
        r_upper: r_up,
        r_lower: lower,
        denominator_min,
    };
    if !(domain.r < domain.big_r) {
        return Err(Error::InvalidArgument(format!("degenerate radii r = {} >= R = {}", domain.r, domain.big_r)));
    }
    Ok(domain)
}

/// Whether `f` lies in `K_γ`, judged on its samples.
pub fn in_cone(f: &GridFunction, gamma: f64) -> bool {
    f.min() >= 0.0 && f.min() >= gamma * f.max()
}

/// A random element of `K_γ` with sup norm `norm`.
///
/// Draws alternate between the baseline plus a positive trigonometric
/// polynomial and raised-cosine bumps sitting on the cone boundary floor `γ'·max`
/// with `γ' ∈ [γ, 2γ]`. Rejection keeps only samples that satisfy the cone test.
pub fn random_cone_element<R: Rng>(rng: &mut R, domain: &ConeDomain, norm: f64) -> GridFunction {
    let n = domain.baseline.len();
    let omega = domain.omega;
    let freq = std::f64::consts::TAU / omega;
    loop {
        let candidate = if rng.gen_bool(0.5) {
            let scale = domain.r_upper * 10f64.powf(rng.gen_range(-1.0..1.5));
            let terms: Vec<(f64, f64, f64)> = (1..=rng.gen_range(1..=6))
                .map(|k| (rng.gen_range(0.0..scale), k as f64, rng.gen_range(0.0..omega)))
                .collect();
            let b = &domain.baseline;
            GridFunction::from_fn(n, omega, |t| {
                let j = ((t / omega * n as f64).round() as usize) % n;
                b.values()[j] + terms.iter().map(|(c, k, phi)| c * (1.0 + (k * freq * (t - phi)).cos())).sum::<f64>()
            })
        } else {
            let floor = (domain.gamma * rng.gen_range(1.0..2.0)).min(1.0);
            let k = rng.gen_range(1..=4) as f64;
            let p = rng.gen_range(1..=8);
            let phi = rng.gen_range(0.0..omega);
            GridFunction::from_fn(n, omega, |t| {
                let bump = (0.5 * (1.0 + (k * freq * (t - phi)).cos())).powi(p);
                floor + (1.0 - floor) * bump
            })
        };
        let Ok(f) = candidate else { continue };
        if in_cone(&f, domain.gamma) && f.sup_norm() > 0.0 {
            return f.scaled(norm / f.sup_norm());
        }
    }
}

/// Outcome of [`check_proof_steps`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProofStepReport {
    pub trials: usize,
    /// `||T(X)|| < max b` or `max b <= r` on the inner shell.
    pub inner_violations: usize,
    /// `||T(X)|| >= R` on the outer shell.
    pub outer_violations: usize,
    /// `||T(X)|| = 0` on the inner shell.
    pub infimum_violations: usize,
    /// `min T(X) < γ max T(X) - 1e-10` on either shell.
    pub cone_violations: usize,
    /// `min (||T(X)|| - max b)` over inner-shell trials.
    pub inner_margin: f64,
    /// `min (R - ||T(X)||)` over outer-shell trials.
    pub outer_margin: f64,
    /// `min ||T(X)||` over inner-shell trials.
    pub infimum: f64,
    /// Largest `||T(X)||` seen on the outer shell.
    pub outer_max: f64,
}

impl ProofStepReport {
    pub fn pass(&self) -> bool {
        self.inner_violations + self.outer_violations + self.infimum_violations + self.cone_violations == 0
    }
}

const CONE_SLACK: f64 = 1e-10;

/// Samples `trials` cone elements on each shell `||X|| = r` and `||X|| = R` and
/// checks `||T(X)|| >= max b > r`, `inf ||T(X)|| > 0` and `||T(X)|| < R`.
pub fn check_proof_steps(ctx: &OperatorContext, trials: usize, seed: u64) -> Result<ProofStepReport> {
    let dom = ctx.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ProofStepReport {
        trials,
        inner_violations: 0,
        outer_violations: 0,
        infimum_violations: 0,
        cone_violations: 0,
        inner_margin: f64::INFINITY,
        outer_margin: f64::INFINITY,
        infimum: f64::INFINITY,
        outer_max: 0.0,
    };
    let cone_ok = |f: &GridFunction| f.min() >= dom.gamma * f.max() - CONE_SLACK;
    for _ in 0..trials {
        let inner = random_cone_element(&mut rng, dom, dom.r);
        let t_inner = ctx.apply(&inner)?;
        let norm = t_inner.sup_norm();
        let margin = norm - dom.r_upper;
        report.inner_margin = report.inner_margin.min(margin);
        report.infimum = report.infimum.min(norm);
        if margin < -1e-12 * dom.r_upper || dom.r_upper <= dom.r {
            report.inner_violations += 1;
        }
        if !(norm > 0.0) {
            report.infimum_violations += 1;
        }
        if !cone_ok(&t_inner) {
            report.cone_violations += 1;
        }

        let outer = random_cone_element(&mut rng, dom, dom.big_r);
        let t_outer = ctx.apply(&outer)?;
        let norm = t_outer.sup_norm();
        report.outer_margin = report.outer_margin.min(dom.big_r - norm);
        report.outer_max = report.outer_max.max(norm);
        if !(norm < dom.big_r) {
            report.outer_violations += 1;
        }
        if !cone_ok(&t_outer) {
            report.cone_violations += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::CoefficientSet;
    use std::f64::consts::TAU;

    fn constant_grid(variant: SystemVariant) -> SystemGrid {
        SystemGrid::new(&CoefficientSet::constant(variant, TAU, 1.0).unwrap(), 64).unwrap()
    }

    #[test]
    fn constant_s1_radii() {
        let grid = constant_grid(SystemVariant::S1);
        assert!((r_upper(&grid).unwrap() - 1.0).abs() < 1e-12);
        let gamma = (-TAU).exp();
        let want = 1.0 + TAU.exp();
        assert!((r_lower(&grid, gamma).unwrap() / want - 1.0).abs() < 1e-11);
    }

    #[test]
    fn constant_s2_radii() {
        let grid = constant_grid(SystemVariant::S2);
        let dom = choose_radii(&grid).unwrap();
        let want_r = 2.0 * (1.0 + (2.0 * TAU).exp());
        assert!((dom.r - 0.5).abs() < 1e-12);
        assert!((dom.big_r / want_r - 1.0).abs() < 1e-11);
        assert!((dom.denominator_min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kappa_scaling_halves_r_upper() {
        let set = CoefficientSet::constant(SystemVariant::S1, TAU, 1.0).unwrap();
        let doubled = set.clone().with("kappa", "2").unwrap();
        let a = r_upper(&SystemGrid::new(&set, 64).unwrap()).unwrap();
        let b = r_upper(&SystemGrid::new(&doubled, 64).unwrap()).unwrap();
        assert!((b - 0.5 * a).abs() < 1e-12);
    }

    #[test]
    fn kernel_coefficient_denominator() {
        let set = CoefficientSet::constant(SystemVariant::S2, TAU, 1.0).unwrap().with("sigma", "2").unwrap();
        let grid = SystemGrid::new(&set, 64).unwrap();
        assert!((denominator_min(&grid).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_elements_are_in_the_cone() {
        let grid = constant_grid(SystemVariant::S2);
        let dom = choose_radii(&grid).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let f = random_cone_element(&mut rng, &dom, 3.0);
            assert!(in_cone(&f, dom.gamma));
            assert!((f.sup_norm() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_s2_inner_shell_images_dominate_baseline() {
        let ctx = OperatorContext::from_grid(constant_grid(SystemVariant::S2)).unwrap();
        let r = ctx.domain().r;
        let x = GridFunction::constant(64, TAU, r).unwrap();
        let tx = ctx.apply_t(&x).unwrap();
        assert!(tx.values().iter().all(|v| *v >= 1.0 - 1e-12));
    }
}
