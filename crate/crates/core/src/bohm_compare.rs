//! Particle in a box: guiding-equation velocity versus two-branch momentum.
//!
//! The stationary state `A e^{-iωt} cos(ax)` has a constant phase, so a
//! guidance law gives zero velocity everywhere. In the event model the same
//! state is two co-propagating waves `e^{±iax}` and the particle travels on
//! one of them with momentum `±ħa`.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::engine::{run_ensemble, sample_branch_with, BranchPipeline, BranchSet, EnsembleStats};
use crate::error::{invalid, Error, Result};
use crate::schrodinger::{Grid1D, Spectral};
use crate::wave::PhysConstants;

/// `|cos(ax)|` below this marks a node.
pub const NODE_TOLERANCE: f64 = 1e-8;

pub const MOMENTUM_LABELS: [&str; 2] = ["+p", "-p"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxState {
    pub a: f64,
    pub omega: f64,
    pub half_width: f64,
    pub amplitude: f64,
}

impl Default for BoxState {
    /// `a = 1`, `a·l = 100.5π`, `ω = ħa²/2m` in natural units, unit norm.
    fn default() -> Self {
        Self::new(1.0, 100.5 * PI, &PhysConstants::default())
    }
}

impl BoxState {
    /// Normalized state with `ω = ħa²/2m`.
    pub fn new(a: f64, half_width: f64, c: &PhysConstants) -> Self {
        Self { a, omega: c.hbar * a * a / (2.0 * c.mass), half_width, amplitude: half_width.sqrt().recip() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(invalid("a", "must be positive"));
        }
        if !(self.half_width > 0.0) {
            return Err(invalid("half_width", "must be positive"));
        }
        let edge = (self.a * self.half_width).cos();
        if edge.abs() > 1e-9 {
            return Err(invalid("half_width", format!("cos(a l) = {edge:e}; the state must vanish at the walls")));
        }
        Ok(())
    }

    fn check_inside(&self, x: f64) -> Result<()> {
        if x.abs() > self.half_width * (1.0 + 1e-12) {
            return Err(invalid("x", format!("{x} lies outside the box")));
        }
        Ok(())
    }
}

/// `A e^{-iωt} cos(ax)`.
pub fn box_wavefunction(s: &BoxState, x: f64, t: f64) -> Result<Complex64> {
    s.check_inside(x)?;
    Ok(Complex64::cis(-s.omega * t) * (s.amplitude * (s.a * x).cos()))
}

/// `(A/2) e^{-iωt}(e^{iax} + e^{-iax})`.
pub fn box_wavefunction_waves(s: &BoxState, x: f64, t: f64) -> Result<Complex64> {
    s.check_inside(x)?;
    let waves = Complex64::cis(s.a * x) + Complex64::cis(-s.a * x);
    Ok(Complex64::cis(-s.omega * t) * waves * (0.5 * s.amplitude))
}

/// `(ħ/m) Im(ψ'/ψ)` from a value and its derivative.
pub fn guidance_velocity(psi: Complex64, dpsi: Complex64, c: &PhysConstants, x: f64) -> Result<f64> {
    if psi.norm() < NODE_TOLERANCE {
        return Err(Error::Node { x });
    }
    Ok(c.hbar / c.mass * (dpsi / psi).im)
}

/// Guidance velocity of the box state; [`Error::Node`] where `|cos(ax)|` is
/// below [`NODE_TOLERANCE`].
pub fn bohm_velocity(s: &BoxState, x: f64, c: &PhysConstants) -> Result<f64> {
    s.check_inside(x)?;
    if (s.a * x).cos().abs() < NODE_TOLERANCE {
        return Err(Error::Node { x });
    }
    let psi = box_wavefunction(s, x, 0.0)?;
    let dpsi = Complex64::new(-s.amplitude * s.a * (s.a * x).sin(), 0.0);
    guidance_velocity(psi, dpsi, c, x)
}

/// `-(ħ²/2m) ∇²R / R` with a spectral Laplacian; `None` where
/// `|R| < NODE_TOLERANCE * max|R|`.
pub fn quantum_potential(r: &[f64], grid: &Grid1D, c: &PhysConstants) -> Result<Vec<Option<f64>>> {
    c.validate()?;
    if r.len() != grid.n_points {
        return Err(Error::LengthMismatch { expected: grid.n_points, actual: r.len() });
    }
    let lap = Spectral::new(grid)?.derivative_real(r, 2);
    let floor = NODE_TOLERANCE * r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(r.iter()
        .zip(lap)
        .map(|(&r, l)| (r.abs() >= floor && floor > 0.0).then(|| -c.hbar * c.hbar / (2.0 * c.mass) * l / r))
        .collect())
}

/// The two momentum branches `±ħa` with amplitude `1/√2` each.
pub fn momentum_branches() -> BranchSet {
    BranchSet::real([(MOMENTUM_LABELS[0], FRAC_1_SQRT_2), (MOMENTUM_LABELS[1], FRAC_1_SQRT_2)])
        .expect("equal branches are normalized")
}

/// Momentum carried by one event.
pub fn sample_momentum<R: Rng + ?Sized>(s: &BoxState, c: &PhysConstants, rng: &mut R) -> f64 {
    let sign = if sample_branch_with(&momentum_branches(), rng) == 0 { 1.0 } else { -1.0 };
    sign * c.hbar * s.a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumReport {
    pub stats: EnsembleStats,
    /// `ħa`.
    pub momentum_magnitude: f64,
    pub mean_momentum: f64,
    pub mean_std_error: f64,
    /// Guidance velocity of the same state, zero away from nodes.
    pub bohm_velocity: f64,
    pub commentary: String,
}

pub fn rqm_momentum_model(s: &BoxState, c: &PhysConstants, n: u64, seed: u64) -> Result<MomentumReport> {
    s.validate()?;
    c.validate()?;
    let stats = run_ensemble(&BranchPipeline::measurement(momentum_branches()), n, seed)?;
    let p = c.hbar * s.a;
    let f = stats.frequencies();
    let mean = p * (f[0] - f[1]);
    // each event contributes ±p, variance p² - mean²
    let mean_std_error = ((p * p - mean * mean).max(0.0) / n as f64).sqrt();
    Ok(MomentumReport {
        stats,
        momentum_magnitude: p,
        mean_momentum: mean,
        mean_std_error,
        bohm_velocity: bohm_velocity(s, 0.0, c)?,
        commentary: "guidance velocity vanishes everywhere off the nodes; a momentum \
                     measurement must then accelerate the particle to ±ħa/m, a step with \
                     no dynamical law and not simulated. In the event model each particle \
                     already moves at ±ħa/m on one of the two waves."
            .to_string(),
    })
}
