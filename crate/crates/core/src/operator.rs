//! The resolving operator
//!
//! ```text
//! T(X)(t) = ∫_t^{t+ω} H(t,s;ρ) [ ρ(s)/κ(s) + P(s, X(s)) / Y(s) ] ds,
//! Y(t)    = ∫_t^{t+ω} H(t,θ;σ) σ(θ)η(θ) X(θ) dθ,
//! ```
//!
//! obtained from the substitution `x = 1/X`, `y = 1/Y`, where `P` is the
//! transformed functional response of the variant. Fixed points `X = T(X)`
//! in the min-max cone give positive periodic solutions `(1/X, 1/Y)`.

use crate::bounds::{choose_radii, ConeDomain};
use crate::coeff::{CoefficientSet, CoefficientValues, Delays, SystemVariant};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::{CumulativeIntegral, NodalKernel, PanelLayout, DEFAULT_GRID, DEFAULT_ORDER};

pub const DEFAULT_DAMPING: f64 = 0.5;
pub const DEFAULT_OP_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 2000;

/// Coefficients and both kernels discretised on one grid.
#[derive(Debug, Clone)]
pub struct SystemGrid {
    coeffs: CoefficientSet,
    ca_rho: CumulativeIntegral,
    ca_sigma: CumulativeIntegral,
    layout: PanelLayout,
    kernel_rho: NodalKernel,
    kernel_sigma: NodalKernel,
    rho_over_kappa: Vec<f64>,
    sigma_eta: Vec<f64>,
    point_values: Vec<CoefficientValues>,
}

impl SystemGrid {
    pub fn new(coeffs: &CoefficientSet, n: usize) -> Result<Self> {
        let omega = coeffs.omega();
        let ca_rho = CumulativeIntegral::with_defaults(coeffs.rho())?;
        let ca_sigma = CumulativeIntegral::with_defaults(coeffs.sigma())?;
        let layout = PanelLayout::new(n, omega, DEFAULT_ORDER)?;
        let kernel_rho = NodalKernel::new(&ca_rho, &layout)?;
        let kernel_sigma = NodalKernel::new(&ca_sigma, &layout)?;
        let point_values: Vec<CoefficientValues> = layout.points().map(|s| coeffs.values(s)).collect();
        let rho_over_kappa: Vec<f64> = point_values.iter().map(|v| v.rho / v.kappa).collect();
        let sigma_eta: Vec<f64> = point_values.iter().map(|v| v.sigma * v.eta).collect();
        for (k, (a, b)) in rho_over_kappa.iter().zip(&sigma_eta).enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                let s = layout.points().nth(k).unwrap_or(0.0);
                return Err(Error::NonFinite { what: "coefficient sample", t: s });
            }
        }
        Ok(SystemGrid {
            coeffs: coeffs.clone(),
            ca_rho,
            ca_sigma,
            layout,
            kernel_rho,
            kernel_sigma,
            rho_over_kappa,
            sigma_eta,
            point_values,
        })
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn variant(&self) -> SystemVariant {
        self.coeffs.variant()
    }

    pub fn omega(&self) -> f64 {
        self.coeffs.omega()
    }

    pub fn grid_size(&self) -> usize {
        self.layout.grid_size()
    }

    pub fn layout(&self) -> &PanelLayout {
        &self.layout
    }

    pub fn ca_rho(&self) -> &CumulativeIntegral {
        &self.ca_rho
    }

    pub fn ca_sigma(&self) -> &CumulativeIntegral {
        &self.ca_sigma
    }

    pub fn point_values(&self) -> &[CoefficientValues] {
        &self.point_values
    }

    /// `t ↦ ∫ H(t,s;ρ) g(s) ds` at the nodes, `g` given at layout points.
    pub fn solve_rho(&self, g: &[f64]) -> Result<GridFunction> {
        GridFunction::new(self.kernel_rho.solve(g), self.omega())
    }

    /// `t ↦ ∫ H(t,s;σ) g(s) ds` at the nodes, `g` given at layout points.
    pub fn solve_sigma(&self, g: &[f64]) -> Result<GridFunction> {
        GridFunction::new(self.kernel_sigma.solve(g), self.omega())
    }

    /// `b(t) = ∫_t^{t+ω} H(t,s;ρ) ρ(s)/κ(s) ds`.
    pub fn baseline(&self) -> Result<GridFunction> {
        self.solve_rho(&self.rho_over_kappa)
    }

    /// `d(s) = ∫_s^{s+ω} H(s,θ;σ) σ(θ)η(θ) dθ`.
    pub fn denominator(&self) -> Result<GridFunction> {
        self.solve_sigma(&self.sigma_eta)
    }

    /// `Y` for an input already interpolated to the layout points.
    fn y_from_points(&self, x_points: &[f64]) -> Result<GridFunction> {
        let g: Vec<f64> = self.sigma_eta.iter().zip(x_points).map(|(a, b)| a * b).collect();
        self.solve_sigma(&g)
    }

    /// Outer integral for given `X` and denominator values at the layout points.
    fn outer(&self, x_points: &[f64], y_points: &[f64]) -> Result<GridFunction> {
        let variant = self.variant();
        let mut g = Vec::with_capacity(x_points.len());
        for (k, v) in self.point_values.iter().enumerate() {
            let ys = y_points[k];
            if !(ys > 0.0) {
                return Err(Error::NonPositiveDenominator(ys));
            }
            g.push(self.rho_over_kappa[k] + response(variant, v, x_points[k]) / ys);
        }
        self.solve_rho(&g)
    }
}

#[inline]
fn response(variant: SystemVariant, v: &CoefficientValues, x: f64) -> f64 {
    match variant {
        SystemVariant::S1 => v.mu * x,
        SystemVariant::S2 => v.mu * x * x / (v.alpha * x + 1.0),
        SystemVariant::S3 => v.mu * x * x / ((v.alpha * x + 1.0) * (v.beta * x + 1.0)),
    }
}

/// The transformed response divided by `Y(s)`: `μX/Y`, `μX²/((αX+1)Y)` or
/// `μX²/((αX+1)(βX+1)Y)`.
pub fn response_term(variant: SystemVariant, v: &CoefficientValues, xs: f64, ys: f64) -> Result<f64> {
    if !(ys > 0.0) {
        return Err(Error::NonPositiveDenominator(ys));
    }
    if xs < 0.0 {
        return Err(Error::InvalidArgument(format!("response term needs X >= 0, got {xs}")));
    }
    Ok(response(variant, v, xs) / ys)
}

/// Residual history of [`OperatorContext::damped_picard`].
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    /// `||X_k - T(X_k)||∞` for every evaluated iterate.
    pub residuals: Vec<f64>,
    pub damping: f64,
    pub converged: bool,
    pub steps: usize,
}

impl IterationTrace {
    pub fn final_residual(&self) -> f64 {
        self.residuals.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Everything needed to apply `T`: the discretised system and the cone domain.
#[derive(Debug, Clone)]
pub struct OperatorContext {
    grid: SystemGrid,
    domain: ConeDomain,
}

impl OperatorContext {
    pub fn new(coeffs: &CoefficientSet, n: usize) -> Result<Self> {
        OperatorContext::from_grid(SystemGrid::new(coeffs, n)?)
    }

    pub fn with_default_grid(coeffs: &CoefficientSet) -> Result<Self> {
        OperatorContext::new(coeffs, DEFAULT_GRID)
    }

    pub fn from_grid(grid: SystemGrid) -> Result<Self> {
        let domain = choose_radii(&grid)?;
        Ok(OperatorContext { grid, domain })
    }

    pub fn grid(&self) -> &SystemGrid {
        &self.grid
    }

    pub fn domain(&self) -> &ConeDomain {
        &self.domain
    }

    pub fn coeffs(&self) -> &CoefficientSet {
        self.grid.coeffs()
    }

    pub fn grid_size(&self) -> usize {
        self.grid.grid_size()
    }

    pub fn omega(&self) -> f64 {
        self.grid.omega()
    }

    fn check_input(&self, x: &GridFunction) -> Result<()> {
        if x.len() != self.grid_size() {
            return Err(Error::InvalidGrid(format!("expected {} samples, got {}", self.grid_size(), x.len())));
        }
        if x.sup_norm() == 0.0 {
            return Err(Error::ZeroInput);
        }
        Ok(())
    }

    /// `Y(t) = ∫ H(t,s;σ) σηX ds`, with `X(θ - τx)` when the system carries delays.
    pub fn compute_y(&self, x: &GridFunction) -> Result<GridFunction> {
        self.check_input(x)?;
        let tau_x = self.coeffs().delays().map_or(0.0, |d| d.tau_x);
        self.y_with_shift(x, tau_x)
    }

    fn y_with_shift(&self, x: &GridFunction, tau_x: f64) -> Result<GridFunction> {
        let source = if tau_x == 0.0 { x.clone() } else { x.shifted(-tau_x) };
        self.grid.y_from_points(&self.grid.layout.interpolate(&source))
    }

    /// `T(X)`, using the delayed form when the coefficient set carries delays.
    pub fn apply(&self, x: &GridFunction) -> Result<GridFunction> {
        match self.coeffs().delays() {
            Some(Delays { tau_x, tau_y }) => self.apply_t_delay(x, tau_x, tau_y),
            None => self.apply_t(x),
        }
    }

    /// The delay-free operator.
    pub fn apply_t(&self, x: &GridFunction) -> Result<GridFunction> {
        self.check_input(x)?;
        let layout = &self.grid.layout;
        let x_points = layout.interpolate(x);
        let y = self.grid.y_from_points(&x_points)?;
        let y_points = layout.interpolate(&y);
        self.grid.outer(&x_points, &y_points)
    }

    /// The S2 operator with denominator
    /// `∫_{s-τy}^{s-τy+ω} H(s-τy,θ;σ) σ(θ)η(θ) X(θ-τx) dθ`.
    pub fn apply_t_delay(&self, x: &GridFunction, tau_x: f64, tau_y: f64) -> Result<GridFunction> {
        if self.grid.variant() != SystemVariant::S2 {
            return Err(Error::InvalidSystem("delays are only supported for S2".into()));
        }
        Delays::new(tau_x, tau_y)?;
        self.check_input(x)?;
        let layout = &self.grid.layout;
        let shifted_y = self.y_with_shift(x, tau_x)?;
        let y_delayed = if tau_y == 0.0 { shifted_y } else { shifted_y.shifted(-tau_y) };
        let x_points = layout.interpolate(x);
        let y_points = layout.interpolate(&y_delayed);
        self.grid.outer(&x_points, &y_points)
    }

    /// The baseline `b`, rescaled into `[r, R]` when needed.
    pub fn default_seed(&self) -> GridFunction {
        let b = &self.domain.baseline;
        let norm = b.sup_norm();
        let target = norm.clamp(self.domain.r, self.domain.big_r);
        b.scaled(target / norm)
    }

    /// Krasnoselskii–Mann averaging `X_{k+1} = (1-λ)X_k + λT(X_k)`.
    ///
    /// Stops as soon as `||X_k - T(X_k)||∞ <= tol` and returns that `X_k`.
    pub fn damped_picard(
        &self,
        x0: &GridFunction,
        damping: f64,
        tol: f64,
        max_iter: usize,
    ) -> Result<(GridFunction, IterationTrace)> {
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping must lie in (0, 1], got {damping}")));
        }
        self.check_input(x0)?;
        if x0.min() < 0.0 {
            return Err(Error::InvalidArgument("initial iterate must be nonnegative".into()));
        }
        let (lo, hi) = (self.domain.r / 10.0, 10.0 * self.domain.big_r);
        let mut x = x0.clone();
        let mut trace = IterationTrace { residuals: Vec::new(), damping, converged: false, steps: 0 };
        for step in 0..=max_iter {
            let norm = x.sup_norm();
            if !(norm >= lo && norm <= hi) {
                return Err(Error::Divergence { norm, lo, hi, step });
            }
            let tx = self.apply(&x)?;
            let residual = x.distance(&tx);
            trace.residuals.push(residual);
            trace.steps = step;
            if residual <= tol {
                trace.converged = true;
                return Ok((x, trace));
            }
            if step < max_iter {
                x = x.blend(&tx, damping);
            }
        }
        Ok((x, trace))
    }

    /// `x = 1/X`, `y = 1/Y` at the grid nodes.
    pub fn reconstruct_xy(&self, x: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        if let Some((index, &value)) = x.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        let y = self.compute_y(x)?;
        if let Some((index, &value)) = y.values().iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositive { index, value });
        }
        Ok((x.map(|v| 1.0 / v)?, y.map(|v| 1.0 / v)?))
    }

    /// Sup-norm of `ẋ - f(t, x, y)` and `ẏ - g(t, x, y)` with spectral derivatives,
    /// honouring the delays of the coefficient set.
    pub fn ode_residual(&self, x: &GridFunction, y: &GridFunction) -> f64 {
        let coeffs = self.coeffs();
        let (tau_x, tau_y) = coeffs.delays().map_or((0.0, 0.0), |d| (d.tau_x, d.tau_y));
        let x_lag = if tau_x == 0.0 { x.clone() } else { x.shifted(-tau_x) };
        let y_lag = if tau_y == 0.0 { y.clone() } else { y.shifted(-tau_y) };
        let dx = x.derivative();
        let dy = y.derivative();
        let mut worst: f64 = 0.0;
        for (j, t) in x.nodes().enumerate() {
            let v = coeffs.values(t);
            let (xs, ys) = (x.values()[j], y.values()[j]);
            let fx =
                v.rho * xs * (1.0 - xs / v.kappa) - y_lag.values()[j] * functional_response(coeffs.variant(), &v, xs);
            let fy = v.sigma * ys * (1.0 - v.eta * ys / x_lag.values()[j]);
            let r = (dx.values()[j] - fx).abs().max((dy.values()[j] - fy).abs());
            worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
        }
        worst
    }
}

/// `p(x)` of the variant.
#[inline]
pub fn functional_response(variant: SystemVariant, v: &CoefficientValues, x: f64) -> f64 {
    match variant {
        SystemVariant::S1 => v.mu * x,
        SystemVariant::S2 => v.mu * x / (v.alpha + x),
        SystemVariant::S3 => v.mu * x * x / ((v.alpha + x) * (v.beta + x)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::examples;
    use std::f64::consts::TAU;

    fn constant_ctx(variant: SystemVariant) -> OperatorContext {
        OperatorContext::new(&CoefficientSet::constant(variant, TAU, 1.0).unwrap(), 64).unwrap()
    }

    #[test]
    fn y_of_constant_input() {
        let ctx = constant_ctx(SystemVariant::S2);
        let x = GridFunction::constant(64, TAU, 2.5).unwrap();
        let y = ctx.compute_y(&x).unwrap();
        assert!(y.values().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn zero_input_is_rejected() {
        let ctx = constant_ctx(SystemVariant::S2);
        let zero = GridFunction::constant(64, TAU, 0.0).unwrap();
        assert_eq!(ctx.compute_y(&zero), Err(Error::ZeroInput));
        assert_eq!(ctx.apply_t(&zero), Err(Error::ZeroInput));
        assert!(matches!(ctx.damped_picard(&zero, 0.5, 1e-10, 10), Err(Error::ZeroInput)));
    }

    #[test]
    fn response_terms() {
        let v = CoefficientValues { mu: 1.0, alpha: 1.0, beta: 1.0, ..Default::default() };
        assert_eq!(response_term(SystemVariant::S2, &v, 1.0, 1.0).unwrap(), 0.5);
        assert_eq!(response_term(SystemVariant::S3, &v, 1.0, 1.0).unwrap(), 0.25);
        for variant in [SystemVariant::S1, SystemVariant::S2, SystemVariant::S3] {
            assert_eq!(response_term(variant, &v, 0.0, 2.0).unwrap(), 0.0);
        }
        assert!(response_term(SystemVariant::S1, &v, 1.0, 0.0).is_err());
    }

    #[test]
    fn constant_s2_operator() {
        let ctx = constant_ctx(SystemVariant::S2);
        let one = GridFunction::constant(64, TAU, 1.0).unwrap();
        let tx = ctx.apply_t(&one).unwrap();
        assert!(tx.values().iter().all(|v| (v - 1.5).abs() < 1e-12));
        let delayed = ctx.apply_t_delay(&one, 0.7, 1.3).unwrap();
        assert!(delayed.values().iter().all(|v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn delays_rejected_outside_s2() {
        let ctx = constant_ctx(SystemVariant::S1);
        let one = GridFunction::constant(64, TAU, 1.0).unwrap();
        assert!(ctx.apply_t_delay(&one, 0.1, 0.1).is_err());
    }

    #[test]
    fn reconstruct_constant() {
        let ctx = constant_ctx(SystemVariant::S1);
        let two = GridFunction::constant(64, TAU, 2.0).unwrap();
        let (x, y) = ctx.reconstruct_xy(&two).unwrap();
        assert!(x.values().iter().chain(y.values()).all(|v| (v - 0.5).abs() < 1e-12));
        assert!(ctx.ode_residual(&x, &y) < 1e-12);
    }

    #[test]
    fn reconstruct_rejects_zero_sample() {
        let ctx = constant_ctx(SystemVariant::S1);
        let mut v = vec![1.0; 64];
        v[10] = 0.0;
        let x = GridFunction::new(v, TAU).unwrap();
        assert_eq!(ctx.reconstruct_xy(&x).unwrap_err(), Error::NonPositive { index: 10, value: 0.0 });
    }

    #[test]
    fn residual_detects_non_solutions() {
        let ctx = OperatorContext::new(&examples::example1(), 128).unwrap();
        let x = GridFunction::from_fn(128, TAU, |t| 1.0 + 0.3 * t.sin()).unwrap();
        let y = GridFunction::from_fn(128, TAU, |t| 0.5 + 0.2 * (2.0 * t).cos()).unwrap();
        assert!(ctx.ode_residual(&x, &y) > 1e-3);
    }

    #[test]
    fn picard_rejects_bad_damping() {
        let ctx = constant_ctx(SystemVariant::S2);
        let one = GridFunction::constant(64, TAU, 1.0).unwrap();
        assert!(ctx.damped_picard(&one, 0.0, 1e-10, 10).is_err());
        assert!(ctx.damped_picard(&one, 1.5, 1e-10, 10).is_err());
    }
}
