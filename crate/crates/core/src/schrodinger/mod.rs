//! 1D wavefunction laboratory on a periodic grid.
//!
//! Split-step spectral evolution of `ψ = A exp(iS/ħ)`, its amplitude/phase
//! decomposition, and numerical checks of the identities linking the
//! Hamilton-Jacobi, continuity and Schrödinger forms.

pub mod diagnostics;
pub mod grid;
pub mod madelung;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{invalid, Error, Result};
use crate::wave::PhysConstants;

pub use diagnostics::{dephasing_term, hamilton_jacobi_kinetic, momentum_field, wkb_classicality};
pub use grid::{Grid1D, Spectral};
pub use madelung::{
    continuity_residual, madelung_decompose, term_decomposition_residual, term_refinement, ContinuityReport, Madelung,
    RefinementStudy, TermDecomposition,
};

/// Largest allowed change of `Σ|ψ|²dx` in a single step.
pub const STEP_NORM_TOLERANCE: f64 = 1e-12;

/// Normalization tolerance for a freshly built wavefunction.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Complex field on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridWavefunction {
    pub grid: Grid1D,
    pub psi: Vec<Complex64>,
}

impl HybridWavefunction {
    pub fn new(grid: Grid1D, psi: Vec<Complex64>) -> Result<Self> {
        grid.validate()?;
        if psi.len() != grid.n_points {
            return Err(Error::LengthMismatch { expected: grid.n_points, actual: psi.len() });
        }
        if let Some(index) = psi.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite { context: "wavefunction", index });
        }
        Ok(Self { grid, psi })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let psi = grid.points().into_iter().map(f).collect();
        Self::new(grid, psi)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.integrate(self.psi.iter().map(|z| z.norm_sqr()))
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0 && n.is_finite()) {
            return Err(invalid("psi", "cannot normalize a zero or non-finite field"));
        }
        let s = 1.0 / n.sqrt();
        self.psi.iter_mut().for_each(|z| *z *= s);
        Ok(self)
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn amplitude(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm()).collect()
    }

    /// Multiply by a constant phase `exp(i alpha)`.
    pub fn with_global_phase(mut self, alpha: f64) -> Self {
        let g = Complex64::cis(alpha);
        self.psi.iter_mut().for_each(|z| *z *= g);
        self
    }

    /// `(⟨x⟩, sqrt(⟨x²⟩ - ⟨x⟩²))` for a normalized, localized state.
    pub fn position_moments(&self) -> (f64, f64) {
        let xs = self.grid.points();
        let rho = self.density();
        let norm = self.grid.integrate(rho.iter().copied());
        let mean = self.grid.integrate(xs.iter().zip(&rho).map(|(x, r)| x * r)) / norm;
        let var = self.grid.integrate(xs.iter().zip(&rho).map(|(x, r)| (x - mean).powi(2) * r)) / norm;
        (mean, var.sqrt())
    }
}

/// Real potential on the grid, in energy units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    pub v: Vec<f64>,
}

impl PotentialField {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        if let Some(index) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { context: "potential", index });
        }
        Ok(Self { v })
    }

    pub fn zero(grid: &Grid1D) -> Self {
        Self { v: vec![0.0; grid.n_points] }
    }

    /// `m ω² x² / 2`.
    pub fn harmonic(grid: &Grid1D, c: &PhysConstants, omega: f64) -> Self {
        Self { v: grid.points().iter().map(|x| 0.5 * c.mass * omega * omega * x * x).collect() }
    }

    fn check(&self, grid: &Grid1D) -> Result<()> {
        if self.v.len() != grid.n_points {
            return Err(Error::LengthMismatch { expected: grid.n_points, actual: self.v.len() });
        }
        Ok(())
    }
}

/// Normalized `(2πσ₀²)^(-1/4) exp(-(x-x0)²/4σ₀² + i k0 x)`.
pub fn gaussian_packet(grid: &Grid1D, x0: f64, sigma0: f64, k0: f64) -> Result<HybridWavefunction> {
    if !(sigma0 > 0.0) {
        return Err(invalid("sigma0", "must be positive"));
    }
    let pref = (2.0 * PI * sigma0 * sigma0).powf(-0.25);
    HybridWavefunction::from_fn(*grid, |x| {
        let d = x - x0;
        Complex64::from_polar(pref * (-d * d / (4.0 * sigma0 * sigma0)).exp(), k0 * x)
    })?
    .normalized()
}

/// Centered Gaussian times `exp(i beta x² / ħ)`.
pub fn chirped_gaussian(grid: &Grid1D, sigma0: f64, beta: f64, hbar: f64) -> Result<HybridWavefunction> {
    let g = gaussian_packet(grid, 0.0, sigma0, 0.0)?;
    let psi = g.psi.iter().zip(grid.points()).map(|(z, x)| z * Complex64::cis(beta * x * x / hbar)).collect();
    HybridWavefunction::new(*grid, psi)
}

/// `exp(i k x)/sqrt(L)` with `k = 2π mode / L`, periodic on the grid.
pub fn plane_wave(grid: &Grid1D, mode: i64) -> Result<HybridWavefunction> {
    let k = 2.0 * PI * mode as f64 / grid.length();
    let a = grid.length().sqrt().recip();
    HybridWavefunction::from_fn(*grid, |x| Complex64::from_polar(a, k * (x - grid.x_min)))
}

/// `σ(t) = σ₀ sqrt(1 + (ħt / 2mσ₀²)²)`.
pub fn free_gaussian_width(sigma0: f64, c: &PhysConstants, t: f64) -> f64 {
    let r = c.hbar * t / (2.0 * c.mass * sigma0 * sigma0);
    sigma0 * (1.0 + r * r).sqrt()
}

/// Time step keeping the kinetic phase per step below π/4 at the Nyquist mode.
pub fn default_dt(grid: &Grid1D, c: &PhysConstants) -> f64 {
    let k = grid.k_max();
    FRAC_PI_4 / (c.hbar * k * k / (2.0 * c.mass))
}

/// Strang splitting: half potential kick, full kinetic drift, half kick.
#[derive(Debug, Clone)]
pub struct SplitStep {
    spectral: Spectral,
    half_kick: Vec<Complex64>,
    drift: Vec<Complex64>,
    imaginary: bool,
}

impl SplitStep {
    pub fn new(grid: &Grid1D, v: &PotentialField, c: &PhysConstants, dt: f64) -> Result<Self> {
        Self::build(grid, v, c, dt, false)
    }

    /// Imaginary-time variant `exp(-H dt / ħ)` for relaxation to the ground
    /// state; the caller renormalizes.
    pub fn imaginary(grid: &Grid1D, v: &PotentialField, c: &PhysConstants, dt: f64) -> Result<Self> {
        Self::build(grid, v, c, dt, true)
    }

    fn build(grid: &Grid1D, v: &PotentialField, c: &PhysConstants, dt: f64, imaginary: bool) -> Result<Self> {
        c.validate()?;
        v.check(grid)?;
        if !(dt >= 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be non-negative, got {dt}")));
        }
        let spectral = Spectral::new(grid)?;
        let factor = |phase: f64| {
            if imaginary {
                Complex64::new((-phase).exp(), 0.0)
            } else {
                Complex64::cis(-phase)
            }
        };
        let half_kick = v.v.iter().map(|&v| factor(0.5 * v * dt / c.hbar)).collect();
        let drift = spectral.wavenumbers().iter().map(|&k| factor(c.hbar * k * k * dt / (2.0 * c.mass))).collect();
        Ok(Self { spectral, half_kick, drift, imaginary })
    }

    pub fn step(&self, psi: &mut [Complex64]) {
        psi.iter_mut().zip(&self.half_kick).for_each(|(z, k)| *z *= k);
        self.spectral.apply_multiplier(psi, &self.drift);
        psi.iter_mut().zip(&self.half_kick).for_each(|(z, k)| *z *= k);
    }

    pub fn is_imaginary(&self) -> bool {
        self.imaginary
    }
}

fn first_non_finite(psi: &[Complex64]) -> Option<usize> {
    psi.iter().position(|z| !z.is_finite())
}

/// Advance `steps` steps of size `dt`.
///
/// Fails with [`Error::NonFinite`] on NaN/Inf and with [`Error::NormDrift`]
/// if one step changes the norm by more than [`STEP_NORM_TOLERANCE`].
pub fn evolve(
    psi: &HybridWavefunction,
    v: &PotentialField,
    c: &PhysConstants,
    dt: f64,
    steps: usize,
) -> Result<HybridWavefunction> {
    if dt == 0.0 || steps == 0 {
        v.check(&psi.grid)?;
        return Ok(psi.clone());
    }
    let stepper = SplitStep::new(&psi.grid, v, c, dt)?;
    evolve_with(&stepper, psi, steps)
}

pub fn evolve_with(stepper: &SplitStep, psi: &HybridWavefunction, steps: usize) -> Result<HybridWavefunction> {
    let mut out = psi.clone();
    let mut prev = out.norm_sqr();
    for step in 0..steps {
        stepper.step(&mut out.psi);
        let norm = out.norm_sqr();
        if !norm.is_finite() {
            return Err(Error::NonFinite { context: "evolve", index: first_non_finite(&out.psi).unwrap_or(0) });
        }
        if !stepper.is_imaginary() && (norm - prev).abs() > STEP_NORM_TOLERANCE * prev.max(1.0) {
            return Err(Error::NormDrift { step, drift: norm - prev });
        }
        prev = norm;
    }
    Ok(out)
}

/// `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩` with a spectral kinetic term.
pub fn energy(psi: &HybridWavefunction, v: &PotentialField, c: &PhysConstants) -> Result<f64> {
    v.check(&psi.grid)?;
    let spectral = Spectral::new(&psi.grid)?;
    let lap = spectral.derivative(&psi.psi, 2);
    let g = &psi.grid;
    let kinetic =
        g.integrate(psi.psi.iter().zip(&lap).map(|(z, l)| (z.conj() * l).re)) * (-c.hbar * c.hbar / (2.0 * c.mass));
    let potential = g.integrate(psi.psi.iter().zip(&v.v).map(|(z, v)| z.norm_sqr() * v));
    Ok((kinetic + potential) / psi.norm_sqr())
}

/// Relax `initial` in imaginary time. `schedule` lists `(dt, steps)` stages,
/// normally with shrinking `dt`. Returns the state and its energy.
pub fn imaginary_time_ground_state(
    initial: &HybridWavefunction,
    v: &PotentialField,
    c: &PhysConstants,
    schedule: &[(f64, usize)],
) -> Result<(HybridWavefunction, f64)> {
    let mut psi = initial.clone().normalized()?;
    for &(dt, steps) in schedule {
        let stepper = SplitStep::imaginary(&psi.grid, v, c, dt)?;
        for _ in 0..steps {
            stepper.step(&mut psi.psi);
            psi = psi.normalized()?;
        }
    }
    let e = energy(&psi, v, c)?;
    Ok((psi, e))
}

/// Advance `∂a/∂t = (iħ/2m) ∇²a` by `dt`, exactly in Fourier space.
pub fn amplitude_diffusion_step(a: &[Complex64], grid: &Grid1D, c: &PhysConstants, dt: f64) -> Result<Vec<Complex64>> {
    c.validate()?;
    if a.len() != grid.n_points {
        return Err(Error::LengthMismatch { expected: grid.n_points, actual: a.len() });
    }
    let spectral = Spectral::new(grid)?;
    let mult: Vec<Complex64> =
        spectral.wavenumbers().iter().map(|&k| Complex64::cis(-c.hbar * k * k * dt / (2.0 * c.mass))).collect();
    let mut out = a.to_vec();
    spectral.apply_multiplier(&mut out, &mult);
    Ok(out)
}
