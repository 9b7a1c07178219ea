//! Periodic 1D grid, FFT-based derivatives, and finite-difference stencils.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Result};

pub const MIN_POINTS: usize = 16;

/// Uniform periodic grid on `[x_min, x_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Default for Grid1D {
    fn default() -> Self {
        Self { x_min: -20.0, x_max: 20.0, n_points: 1024 }
    }
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        let g = Self { x_min, x_max, n_points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < MIN_POINTS {
            return Err(invalid("n_points", format!("need at least {MIN_POINTS}, got {}", self.n_points)));
        }
        if !(self.x_max > self.x_min && self.length().is_finite()) {
            return Err(invalid("x_max", "domain must satisfy x_min < x_max"));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumbers in FFT order; the Nyquist mode is negative.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = TAU / self.length();
        (0..n).map(|j| if j < (n + 1) / 2 { j } else { j - n } as f64 * dk).collect()
    }

    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx()
    }

    /// Same domain with `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Self {
        Self { n_points: self.n_points * factor, ..*self }
    }

    /// Rectangle-rule integral, spectrally accurate for smooth periodic fields.
    pub fn integrate(&self, f: impl IntoIterator<Item = f64>) -> f64 {
        f.into_iter().sum::<f64>() * self.dx()
    }
}

/// FFT plans and wavenumbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid1D,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Spectral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: &Grid1D) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        Ok(Self {
            grid: *grid,
            k: grid.wavenumbers(),
            forward: planner.plan_fft_forward(grid.n_points),
            inverse: planner.plan_fft_inverse(grid.n_points),
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let s = 1.0 / buf.len() as f64;
        buf.iter_mut().for_each(|z| *z *= s);
    }

    /// `order`-th derivative of a periodic field. The Nyquist mode is dropped
    /// for odd orders.
    pub fn derivative(&self, field: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut buf = field.to_vec();
        self.forward(&mut buf);
        let nyquist = (self.grid.n_points % 2 == 0).then_some(self.grid.n_points / 2);
        for (j, (z, &k)) in buf.iter_mut().zip(&self.k).enumerate() {
            if order % 2 == 1 && Some(j) == nyquist {
                *z = Complex64::new(0.0, 0.0);
            } else {
                *z *= Complex64::new(0.0, k).powu(order);
            }
        }
        self.inverse(&mut buf);
        buf
    }

    pub fn derivative_real(&self, field: &[f64], order: u32) -> Vec<f64> {
        let c: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&c, order).into_iter().map(|z| z.re).collect()
    }

    /// Multiply each Fourier mode by `f(k)`.
    pub fn apply_multiplier(&self, buf: &mut [Complex64], mult: &[Complex64]) {
        self.forward(buf);
        buf.iter_mut().zip(mult).for_each(|(z, m)| *z *= m);
        self.inverse(buf);
    }
}

/// Fourth-order central first and second derivatives from local offsets
/// `d[m] = f(x_{j+m}) - f(x_j)` for `m = -2..=2` (index `m + 2`).
pub fn stencil4(d: [f64; 5], dx: f64) -> (f64, f64) {
    let first = (-d[4] + 8.0 * d[3] - 8.0 * d[1] + d[0]) / (12.0 * dx);
    let second = (-d[4] + 16.0 * d[3] + 16.0 * d[1] - d[0]) / (12.0 * dx * dx);
    (first, second)
}

/// Second-order first and second derivatives on a non-periodic grid. Edges
/// use one-sided three-point formulas, exact for quadratics.
pub fn open_derivatives(f: &[f64], dx: f64) -> (Vec<f64>, Vec<f64>) {
    let n = f.len();
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    if n < 3 {
        return (d1, d2);
    }
    for j in 1..n - 1 {
        d1[j] = (f[j + 1] - f[j - 1]) / (2.0 * dx);
        d2[j] = (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (dx * dx);
    }
    d1[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx);
    d1[n - 1] = (3.0 * f[n - 1] - 4.0 * f[n - 2] + f[n - 3]) / (2.0 * dx);
    d2[0] = (f[0] - 2.0 * f[1] + f[2]) / (dx * dx);
    d2[n - 1] = (f[n - 1] - 2.0 * f[n - 2] + f[n - 3]) / (dx * dx);
    (d1, d2)
}
