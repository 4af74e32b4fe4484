//! The Green kernel of the periodic linear problem `ẋ = -a(t)x + f(t)`,
//!
//! ```text
//! H(t, s; a) = exp(∫_t^s a) / (exp(∫_0^ω a) - 1),   t ≤ s ≤ t + ω,
//! ```
//!
//! whose period integral `x(t) = ∫_t^{t+ω} H(t,s;a) f(s) ds` is the unique
//! ω-periodic solution. All kernel evaluations go through a cached
//! antiderivative `A(t) = ∫_0^t a`.

use crate::error::{Error, Result};
use crate::expr::PeriodicExpr;
use crate::grid::{check_grid_size, GridFunction};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_PANELS: usize = 256;
pub const DEFAULT_ORDER: usize = 8;
pub const DEFAULT_GRID: usize = 512;
pub const DEFAULT_TOL: f64 = 1e-12;

// exp(2·A_ω) must stay comfortably inside the f64 range.
const MAX_TOTAL: f64 = 300.0;

const SIGN_GRID: usize = 4096;

// Period integrals below this are indistinguishable from zero.
const MIN_TOTAL: f64 = 1e-9;

/// Antiderivative `A(t) = ∫_0^t a` tabulated at `M + 1` uniform nodes.
#[derive(Debug, Clone)]
pub struct CumulativeIntegral {
    source: PeriodicExpr,
    panels: usize,
    rule: GaussLegendre,
    nodes: Vec<f64>,
    total: f64,
}

impl CumulativeIntegral {
    pub fn new(a: &PeriodicExpr, panels: usize, order: usize) -> Result<Self> {
        if panels == 0 || order == 0 {
            return Err(Error::InvalidArgument("panel count and order must be positive".into()));
        }
        let rule = GaussLegendre::new(order);
        let omega = a.period();
        let h = omega / panels as f64;
        let mut nodes = Vec::with_capacity(panels + 1);
        nodes.push(0.0);
        let mut acc = 0.0;
        for p in 0..panels {
            let lo = p as f64 * h;
            for (x, w) in rule.mapped(lo, lo + h) {
                acc += w * a.eval(x)?;
            }
            nodes.push(acc);
        }
        let total = acc;
        if !(total > MIN_TOTAL) {
            return Err(Error::NonPositiveTotal(total));
        }
        if total > MAX_TOTAL {
            return Err(Error::InvalidArgument(format!("period integral {total} is too large for the kernel")));
        }
        Ok(CumulativeIntegral { source: a.clone(), panels, rule, nodes, total })
    }

    pub fn with_defaults(a: &PeriodicExpr) -> Result<Self> {
        CumulativeIntegral::new(a, DEFAULT_PANELS, DEFAULT_ORDER)
    }

    pub fn source(&self) -> &PeriodicExpr {
        &self.source
    }

    pub fn omega(&self) -> f64 {
        self.source.period()
    }

    /// `A_ω = ∫_0^ω a`.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn order(&self) -> usize {
        self.rule.order()
    }

    /// `A(t)` for any real `t`, extended by `A(t + ω) = A(t) + A_ω`.
    ///
    /// Off-node values are re-integrated from the nearest node.
    pub fn at(&self, t: f64) -> f64 {
        let omega = self.omega();
        let k = (t / omega).floor();
        let r = t - k * omega;
        let h = omega / self.panels as f64;
        let j = ((r / h).round() as usize).min(self.panels);
        let tj = j as f64 * h;
        let partial = if r == tj { 0.0 } else { self.rule.integrate(|x| self.source.value(x), tj, r) };
        self.nodes[j] + partial + k * self.total
    }

    /// `∫_t^s a = A(s) - A(t)`.
    pub fn increment(&self, t: f64, s: f64) -> f64 {
        self.at(s) - self.at(t)
    }

    fn denominator(&self) -> f64 {
        self.total.exp_m1()
    }
}

/// `H(t, s; a)` on the strip `t ≤ s ≤ t + ω`.
pub fn kernel_h(ca: &CumulativeIntegral, t: f64, s: f64) -> Result<f64> {
    let slack = 1e-12 * (1.0 + t.abs());
    if !(s >= t - slack && s <= t + ca.omega() + slack) {
        return Err(Error::OutsideStrip { t, s });
    }
    Ok(ca.increment(t, s).exp() / ca.denominator())
}

/// `∫_t^{t+ω} H(t,s;a) g(s) ds` by composite Gauss–Legendre on panels aligned
/// with the antiderivative grid, subdividing until two successive estimates
/// agree to `tol`.
pub fn weighted_period_integral<G: Fn(f64) -> f64>(ca: &CumulativeIntegral, g: G, t: f64, tol: f64) -> Result<f64> {
    let omega = ca.omega();
    let h = omega / ca.panels as f64;
    let end = t + omega;
    let mut breaks = vec![t];
    let mut node = ((t / h).floor() + 1.0) * h;
    while node < end - 1e-14 * omega {
        if node > t + 1e-14 * omega {
            breaks.push(node);
        }
        node += h;
    }
    breaks.push(end);

    let a_t = ca.at(t);
    let denom = ca.denominator();
    let rule = &ca.rule;
    let estimate = |split: usize| {
        let mut total = 0.0;
        for seg in breaks.windows(2) {
            let w = (seg[1] - seg[0]) / split as f64;
            for k in 0..split {
                let lo = seg[0] + k as f64 * w;
                for (s, wt) in rule.mapped(lo, lo + w) {
                    total += wt * (ca.at(s) - a_t).exp() * g(s);
                }
            }
        }
        total / denom
    };

    let mut prev = estimate(1);
    let mut change = f64::INFINITY;
    for level in 1..=6 {
        let next = estimate(1 << level);
        change = (next - prev).abs();
        if !next.is_finite() {
            return Err(Error::NonFinite { what: "weighted period integral", t });
        }
        if change <= tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureBudget { tol, change })
}

/// Gauss–Legendre points of `N` panels aligned with the grid `t_j = jω/N`.
///
/// Point `(p, i)` sits at `t_p + offsets[i]` and lives at flat index `p·q + i`.
#[derive(Debug, Clone)]
pub struct PanelLayout {
    n: usize,
    omega: f64,
    offsets: Vec<f64>,
    weights: Vec<f64>,
}

impl PanelLayout {
    pub fn new(n: usize, omega: f64, order: usize) -> Result<Self> {
        check_grid_size(n)?;
        let rule = GaussLegendre::new(order);
        let h = omega / n as f64;
        let (offsets, weights) = rule.mapped(0.0, h).unzip();
        Ok(PanelLayout { n, omega, offsets, weights })
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn order(&self) -> usize {
        self.offsets.len()
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.n * self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.omega / self.n as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).flat_map(move |p| {
            let tp = self.node(p);
            self.offsets.iter().map(move |d| tp + d)
        })
    }

    /// Interpolated values of `f` at every point, in flat layout order.
    pub fn interpolate(&self, f: &GridFunction) -> Vec<f64> {
        assert_eq!(f.len(), self.n, "grid size mismatch");
        let spectrum = f.spectrum();
        let q = self.order();
        let mut out = vec![0.0; self.len()];
        for (i, &d) in self.offsets.iter().enumerate() {
            for (p, v) in spectrum.shifted_samples(d).into_iter().enumerate() {
                out[p * q + i] = v;
            }
        }
        out
    }

    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points().map(f).collect()
    }
}

/// Batched evaluation of `t_j ↦ ∫_{t_j}^{t_j+ω} H(t_j,s;a) g(s) ds` at every
/// grid node, for `g` given at the points of a [`PanelLayout`].
#[derive(Debug, Clone)]
pub struct NodalKernel {
    layout: PanelLayout,
    exp_a_points: Vec<f64>,
    exp_neg_a_nodes: Vec<f64>,
    exp_total: f64,
    denominator: f64,
}

impl NodalKernel {
    pub fn new(ca: &CumulativeIntegral, layout: &PanelLayout) -> Result<Self> {
        if (ca.omega() - layout.omega()).abs() > 1e-14 * layout.omega() {
            return Err(Error::InvalidArgument("kernel and layout periods differ".into()));
        }
        let exp_a_points = layout.points().map(|s| ca.at(s).exp()).collect();
        let exp_neg_a_nodes = (0..layout.grid_size()).map(|j| (-ca.at(layout.node(j))).exp()).collect();
        Ok(NodalKernel {
            layout: layout.clone(),
            exp_a_points,
            exp_neg_a_nodes,
            exp_total: ca.total().exp(),
            denominator: ca.denominator(),
        })
    }

    pub fn layout(&self) -> &PanelLayout {
        &self.layout
    }

    /// Node values of the period integral; `g` is indexed like the layout points.
    pub fn solve(&self, g: &[f64]) -> Vec<f64> {
        let n = self.layout.grid_size();
        let q = self.layout.order();
        assert_eq!(g.len(), n * q, "integrand length mismatch");
        let panel: Vec<f64> = (0..n)
            .map(|p| {
                let base = p * q;
                (0..q).map(|i| self.layout.weights[i] * self.exp_a_points[base + i] * g[base + i]).sum()
            })
            .collect();
        let mut tail = vec![0.0; n + 1];
        for p in (0..n).rev() {
            tail[p] = tail[p + 1] + panel[p];
        }
        let mut head = 0.0;
        let mut out = Vec::with_capacity(n);
        for j in 0..n {
            out.push(self.exp_neg_a_nodes[j] * (tail[j] + self.exp_total * head) / self.denominator);
            head += panel[j];
        }
        out
    }
}

/// Periodic solution of `ẋ = -a(t)x + f(t)` at the nodes of an `N`-grid.
pub fn periodic_linear_solve<F: Fn(f64) -> f64>(a: &PeriodicExpr, f: F, n: usize) -> Result<GridFunction> {
    let ca = CumulativeIntegral::with_defaults(a)?;
    let layout = PanelLayout::new(n, a.period(), DEFAULT_ORDER)?;
    let kernel = NodalKernel::new(&ca, &layout)?;
    let g = layout.sample(f);
    if let Some(k) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "right-hand side", t: layout.points().nth(k).unwrap_or(0.0) });
    }
    GridFunction::new(kernel.solve(&g), a.period())
}

/// Cone constant `γ_a = min_Ω H / max_Ω H`.
///
/// For `a ≥ 0` the exponent `A(s) - A(t)` sweeps exactly `[0, A_ω]`, so
/// `γ_a = exp(-A_ω)`; otherwise the strip is searched.
pub fn gamma_of(ca: &CumulativeIntegral) -> f64 {
    let omega = ca.omega();
    let nonnegative = (0..SIGN_GRID).all(|j| ca.source().value(j as f64 * omega / SIGN_GRID as f64) >= 0.0);
    if nonnegative {
        (-ca.total()).exp()
    } else {
        gamma_by_search(ca, 256)
    }
}

/// `γ_a` from an `n × n` lattice search over the strip, with the interior
/// extrema polished by golden-section search.
pub fn gamma_by_search(ca: &CumulativeIntegral, n: usize) -> f64 {
    let omega = ca.omega();
    let h = omega / n as f64;
    let lattice: Vec<f64> = (0..=2 * n).map(|k| ca.at(k as f64 * h)).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lo_at, mut hi_at) = ((0, 0), (0, 0));
    for i in 0..n {
        for k in 0..=n {
            let d = lattice[i + k] - lattice[i];
            if d < lo {
                lo = d;
                lo_at = (i, k);
            }
            if d > hi {
                hi = d;
                hi_at = (i, k);
            }
        }
    }
    let polish = |(i, k): (usize, usize), sign: f64, current: f64| -> f64 {
        if k == 0 || k == n {
            return current;
        }
        let t0 = i as f64 * h;
        let s0 = t0 + k as f64 * h;
        // sign > 0 maximises A(s) - A(t): push A(s) up and A(t) down.
        let s = golden(|s| sign * ca.at(s), s0 - h, s0 + h);
        let t = golden(|t| -sign * ca.at(t), t0 - h, t0 + h);
        if s < t || s > t + omega {
            return current;
        }
        let polished = ca.at(s) - ca.at(t);
        if sign * polished > sign * current {
            polished
        } else {
            current
        }
    };
    let hi = polish(hi_at, 1.0, hi);
    let lo = polish(lo_at, -1.0, lo);
    (lo - hi).exp()
}

/// Maximiser of `f` on `[a, b]`.
fn golden<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}
