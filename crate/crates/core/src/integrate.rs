//! Dormand–Prince 5(4) with continuous (dense) output for planar systems.

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth minus embedded fourth order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense output (Hairer & Wanner, contd5).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const MAX_STEPS: usize = 2_000_000;

#[inline]
fn axpy(y: &Vec2, terms: &[(f64, &Vec2)], h: f64) -> Vec2 {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

#[inline]
fn positive(y: &Vec2) -> bool {
    y[0] > 0.0 && y[1] > 0.0
}

/// One accepted step and its interpolation polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep {
    pub t: f64,
    pub h: f64,
    rcont: [Vec2; 5],
}

impl DenseStep {
    #[inline]
    fn eval(&self, t: f64) -> Vec2 {
        let theta = (t - self.t) / self.h;
        let theta1 = 1.0 - theta;
        let r = &self.rcont;
        let mut out = [0.0; 2];
        for (i, o) in out.iter_mut().enumerate() {
            *o = r[0][i] + theta * (r[1][i] + theta1 * (r[2][i] + theta * (r[3][i] + theta1 * r[4][i])));
        }
        out
    }
}

/// Accepted steps of one integration, with dense output in between.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub t1: f64,
    pub start: Vec2,
    pub end: Vec2,
    pub steps: Vec<DenseStep>,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Trajectory {
    /// State at any `t` between `t0` and `t1`.
    pub fn at(&self, t: f64) -> Vec2 {
        if self.steps.is_empty() || t == self.t0 {
            return self.start;
        }
        if t == self.t1 {
            return self.end;
        }
        let forward = self.t1 > self.t0;
        // first step whose end lies beyond t
        let idx = self.steps.partition_point(|s| {
            let end = s.t + s.h;
            if forward {
                end < t
            } else {
                end > t
            }
        });
        self.steps[idx.min(self.steps.len() - 1)].eval(t)
    }

    /// `n` uniformly spaced samples on `[t0, t1]`, endpoints included.
    pub fn sample(&self, n: usize) -> Vec<(f64, Vec2)> {
        let span = self.t1 - self.t0;
        (0..n)
            .map(|k| {
                let t = if k + 1 == n { self.t1 } else { self.t0 + span * k as f64 / (n - 1).max(1) as f64 };
                (t, self.at(t))
            })
            .collect()
    }
}

fn error_norm(err: &Vec2, y0: &Vec2, y1: &Vec2, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sk = atol + rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sk).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn initial_step<F>(f: &F, t0: f64, y0: &Vec2, f0: &Vec2, span: f64, rtol: f64, atol: f64) -> f64
where
    F: Fn(f64, &Vec2) -> Option<Vec2>,
{
    let norm = |v: &Vec2| {
        let s: f64 = (0..2).map(|i| (v[i] / (atol + rtol * y0[i].abs())).powi(2)).sum();
        (s / 2.0).sqrt()
    };
    let (d0, d1) = (norm(y0), norm(f0));
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span.abs());
    let dir = span.signum();
    let y1 = axpy(y0, &[(1.0, f0)], dir * h0);
    let d2 = match f(t0 + dir * h0, &y1) {
        Some(f1) => norm(&[f1[0] - f0[0], f1[1] - f0[1]]) / h0,
        None => return h0 * 1e-3,
    };
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
    (100.0 * h0).min(h1).min(span.abs())
}

/// Integrates `y' = f(t, y)` from `t0` to `t1` (either direction).
///
/// `f` returns `None` for states outside its domain. A step whose stages or
/// result leave the positive quadrant is rejected and halved.
pub fn integrate<F>(f: F, t0: f64, y0: Vec2, t1: f64, rtol: f64, atol: f64) -> Result<Trajectory>
where
    F: Fn(f64, &Vec2) -> Option<Vec2>,
{
    if !(rtol > 0.0 && atol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerances must be positive: rtol {rtol}, atol {atol}")));
    }
    if !positive(&y0) {
        return Err(Error::PositivityLoss { t: t0 });
    }
    let mut traj = Trajectory { t0, t1, start: y0, end: y0, steps: Vec::new(), rejected: 0, evaluations: 0 };
    if t1 == t0 {
        return Ok(traj);
    }
    let span = t1 - t0;
    let dir = span.signum();
    let mut k1 = f(t0, &y0).ok_or(Error::PositivityLoss { t: t0 })?;
    let mut h = initial_step(&f, t0, &y0, &k1, span, rtol, atol);
    let mut t = t0;
    let mut y = y0;
    let mut evaluations = 2usize;
    let mut last_rejected = false;

    while (t1 - t) * dir > 0.0 {
        if traj.steps.len() > MAX_STEPS {
            return Err(Error::StepUnderflow { t, h });
        }
        let min_h = 1e-14 * t.abs().max(1.0);
        if h < min_h {
            return Err(Error::StepUnderflow { t, h });
        }
        let mut last = false;
        if (t + dir * h - t1) * dir >= 0.0 || (t1 - t).abs() - h < min_h {
            h = (t1 - t).abs();
            last = true;
        }
        let hs = dir * h;

        let stages = (|| {
            let y2 = axpy(&y, &[(A21, &k1)], hs);
            let k2 = f(t + C2 * hs, &y2).filter(|_| positive(&y2))?;
            let y3 = axpy(&y, &[(A31, &k1), (A32, &k2)], hs);
            let k3 = f(t + C3 * hs, &y3).filter(|_| positive(&y3))?;
            let y4 = axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs);
            let k4 = f(t + C4 * hs, &y4).filter(|_| positive(&y4))?;
            let y5 = axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs);
            let k5 = f(t + C5 * hs, &y5).filter(|_| positive(&y5))?;
            let y6 = axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs);
            let k6 = f(t + hs, &y6).filter(|_| positive(&y6))?;
            let ynew = axpy(&y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], hs);
            let k7 = f(t + hs, &ynew).filter(|_| positive(&ynew))?;
            Some((k2, k3, k4, k5, k6, k7, ynew))
        })();
        evaluations += 6;

        let Some((_k2, k3, k4, k5, k6, k7, ynew)) = stages else {
            traj.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            if h < min_h {
                return Err(Error::PositivityLoss { t });
            }
            continue;
        };

        let mut err = [0.0; 2];
        for i in 0..2 {
            err[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let en = error_norm(&err, &y, &ynew, rtol, atol);
        if !en.is_finite() {
            traj.rejected += 1;
            h *= 0.5;
            last_rejected = true;
            continue;
        }
        let mut fac = if en == 0.0 { FAC_MAX } else { SAFETY * en.powf(-0.2) };
        if en <= 1.0 {
            if last_rejected {
                fac = fac.min(1.0);
            }
            let mut rcont = [[0.0; 2]; 5];
            for i in 0..2 {
                let dy = ynew[i] - y[i];
                let bspl = hs * k1[i] - dy;
                rcont[0][i] = y[i];
                rcont[1][i] = dy;
                rcont[2][i] = bspl;
                rcont[3][i] = dy - hs * k7[i] - bspl;
                rcont[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            traj.steps.push(DenseStep { t, h: hs, rcont });
            t = if last { t1 } else { t + hs };
            y = ynew;
            k1 = k7;
            h *= fac.clamp(FAC_MIN, FAC_MAX);
            last_rejected = false;
        } else {
            traj.rejected += 1;
            h *= fac.clamp(FAC_MIN, 1.0);
            last_rejected = true;
        }
    }
    traj.end = y;
    traj.evaluations = evaluations;
    Ok(traj)
}
