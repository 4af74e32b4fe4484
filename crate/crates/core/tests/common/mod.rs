//! Independent reference computations: adaptive Simpson quadrature, closed-form
//! antiderivatives of the example rates and a scalar bisection.

#![allow(dead_code)]

use std::f64::consts::TAU;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    // Split into a few panels first so oscillatory integrands are not
    // mistaken for flat ones by the first estimate.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            refine(f, lo, hi, flo, fmid, fhi, whole, tol / pieces as f64, 50)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// A closed-form antiderivative `A(t) = ∫_0^t a` with its period integral.
#[derive(Clone, Copy)]
pub struct Antiderivative {
    pub eval: fn(f64) -> f64,
    pub total: f64,
}

impl Antiderivative {
    /// `H(t, s)` for `t <= s <= t + ω`.
    pub fn kernel(&self, t: f64, s: f64) -> f64 {
        ((self.eval)(s) - (self.eval)(t)).exp() / self.total.exp_m1()
    }

    /// `∫_t^{t+ω} H(t,s) g(s) ds` by adaptive Simpson.
    pub fn window<G: Fn(f64) -> f64>(&self, g: G, t: f64, tol: f64) -> f64 {
        simpson(&|s| self.kernel(t, s) * g(s), t, t + TAU, tol)
    }
}

/// `a = 1 + sin 5t`.
pub const RHO_EX1: Antiderivative = Antiderivative { eval: |t| t + (1.0 - (5.0 * t).cos()) / 5.0, total: TAU };

/// `a = 1 - cos 7t`.
pub const SIGMA_EX1: Antiderivative = Antiderivative { eval: |t| t - (7.0 * t).sin() / 7.0, total: TAU };

/// `a ≡ 1`.
pub const UNIT: Antiderivative = Antiderivative { eval: |t| t, total: TAU };

/// Coefficients of the S2 example system as plain closures.
pub mod ex1 {
    pub fn rho(t: f64) -> f64 {
        1.0 + (5.0 * t).sin()
    }
    pub fn kappa(t: f64) -> f64 {
        2.0 + t.sin()
    }
    pub fn mu(t: f64) -> f64 {
        1.0 + (3.0 * t).cos()
    }
    pub fn alpha(t: f64) -> f64 {
        2.0 - (3.0 * t).cos()
    }
    pub fn sigma(t: f64) -> f64 {
        1.0 - (7.0 * t).cos()
    }
    pub fn eta(t: f64) -> f64 {
        1.0 - t.sin()
    }
}

/// Root of `f` on `[lo, hi]` by plain bisection; `f(lo)` and `f(hi)` must differ in sign.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) <= 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (f(mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
