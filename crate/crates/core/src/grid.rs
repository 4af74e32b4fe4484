//! ω-periodic functions sampled on a uniform grid, with trigonometric
//! interpolation for off-node values.

use std::cell::RefCell;
use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub const MIN_GRID: usize = 64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        if inverse {
            p.plan_fft_inverse(n)
        } else {
            p.plan_fft_forward(n)
        }
    })
}

/// Checks `n >= 64` and `n` a power of two.
pub fn check_grid_size(n: usize) -> Result<()> {
    if n < MIN_GRID || !n.is_power_of_two() {
        return Err(Error::InvalidGrid(format!("grid size must be a power of two >= {MIN_GRID}, got {n}")));
    }
    Ok(())
}

/// Samples at `t_j = jω/N`, `j = 0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    values: Vec<f64>,
    omega: f64,
}

impl GridFunction {
    pub fn new(values: Vec<f64>, omega: f64) -> Result<Self> {
        check_grid_size(values.len())?;
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidPeriod(omega));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "grid sample", t: j as f64 * omega / values.len() as f64 });
        }
        Ok(GridFunction { values, omega })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(n: usize, omega: f64, f: F) -> Result<Self> {
        let values = (0..n).map(|j| f(j as f64 * omega / n as f64)).collect();
        GridFunction::new(values, omega)
    }

    pub fn constant(n: usize, omega: f64, value: f64) -> Result<Self> {
        GridFunction::new(vec![value; n], omega)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn node(&self, j: usize) -> f64 {
        j as f64 * self.omega / self.len() as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.node(j))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sup_j |self_j - other_j|`; grids must match.
    pub fn distance(&self, other: &GridFunction) -> f64 {
        assert_eq!(self.len(), other.len(), "grid size mismatch");
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<GridFunction> {
        GridFunction::new(self.values.iter().map(|&v| f(v)).collect(), self.omega)
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|v| c * v).collect(), omega: self.omega }
    }

    /// `(1-λ)·self + λ·other`.
    pub fn blend(&self, other: &GridFunction, lambda: f64) -> GridFunction {
        let values = self.values.iter().zip(&other.values).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
        GridFunction { values, omega: self.omega }
    }

    /// Every second sample; the same function on the grid of size `N/2`.
    pub fn decimated(&self) -> Result<GridFunction> {
        GridFunction::new(self.values.iter().step_by(2).copied().collect(), self.omega)
    }

    pub fn spectrum(&self) -> Spectrum {
        let n = self.len();
        let mut buf: Vec<Complex64> = self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan(n, false).process(&mut buf);
        Spectrum { coeffs: buf, omega: self.omega }
    }

    /// Trigonometric interpolant at an arbitrary `t`.
    pub fn eval(&self, t: f64) -> f64 {
        self.spectrum().eval(t)
    }

    /// Samples of `t ↦ f(t + shift)` on the same grid.
    pub fn shifted(&self, shift: f64) -> GridFunction {
        let values = self.spectrum().shifted_samples(shift);
        GridFunction { values, omega: self.omega }
    }

    /// Spectral derivative of the interpolant at the nodes.
    pub fn derivative(&self) -> GridFunction {
        let values = self.spectrum().derivative_samples();
        GridFunction { values, omega: self.omega }
    }
}

/// Discrete Fourier coefficients of a [`GridFunction`].
#[derive(Debug, Clone)]
pub struct Spectrum {
    coeffs: Vec<Complex64>,
    omega: f64,
}

impl Spectrum {
    fn len(&self) -> usize {
        self.coeffs.len()
    }

    /// Signed wavenumber of slot `k`; the Nyquist slot reports `n/2`.
    fn wavenumber(&self, k: usize) -> f64 {
        let n = self.len();
        if k <= n / 2 {
            k as f64
        } else {
            k as f64 - n as f64
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.len();
        let theta = TAU * t / self.omega;
        let mut acc = self.coeffs[0].re;
        for k in 1..n / 2 {
            let phase = Complex64::from_polar(1.0, k as f64 * theta);
            acc += 2.0 * (self.coeffs[k] * phase).re;
        }
        acc += self.coeffs[n / 2].re * (0.5 * n as f64 * theta).cos();
        acc / n as f64
    }

    pub fn shifted_samples(&self, shift: f64) -> Vec<f64> {
        let n = self.len();
        let theta = TAU * shift / self.omega;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| {
                if k == n / 2 {
                    self.coeffs[k] * (0.5 * n as f64 * theta).cos()
                } else {
                    self.coeffs[k] * Complex64::from_polar(1.0, self.wavenumber(k) * theta)
                }
            })
            .collect();
        plan(n, true).process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    pub fn derivative_samples(&self) -> Vec<f64> {
        let n = self.len();
        let scale = TAU / self.omega;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|k| {
                if k == n / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.coeffs[k] * Complex64::new(0.0, scale * self.wavenumber(k))
                }
            })
            .collect();
        plan(n, true).process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }
}
