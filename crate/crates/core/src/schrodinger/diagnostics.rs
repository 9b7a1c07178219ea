//! Dephasing, classical-limit and WKB diagnostics for a phase field.

use num_complex::Complex64;

use super::grid::{open_derivatives, Spectral};
use super::madelung::AMPLITUDE_FLOOR_RATIO;
use super::HybridWavefunction;
use crate::error::{invalid, Result};
use crate::wave::PhysConstants;

/// `(iħ/2m) ∇²S` on an open grid with spacing `dx`.
pub fn dephasing_term(s: &[f64], dx: f64, c: &PhysConstants) -> Vec<Complex64> {
    let (_, d2) = open_derivatives(s, dx);
    d2.into_iter().map(|v| Complex64::new(0.0, c.hbar / (2.0 * c.mass) * v)).collect()
}

/// `(∇S)² / 2m`, the Hamilton-Jacobi kinetic term, with the same stencils.
pub fn hamilton_jacobi_kinetic(s: &[f64], dx: f64, c: &PhysConstants) -> Vec<f64> {
    let (d1, _) = open_derivatives(s, dx);
    d1.into_iter().map(|v| v * v / (2.0 * c.mass)).collect()
}

/// `(ħ/p²)|∂p/∂x|`; `None` where `|p| <= p_floor`.
pub fn wkb_classicality(p: &[f64], dx: f64, hbar: f64, p_floor: f64) -> Result<Vec<Option<f64>>> {
    if p.len() < 3 {
        return Err(invalid("p", "need at least three samples"));
    }
    if !(p_floor >= 0.0) {
        return Err(invalid("p_floor", "must be non-negative"));
    }
    let (d1, _) = open_derivatives(p, dx);
    Ok(p.iter().zip(d1).map(|(&p, dp)| (p.abs() > p_floor).then(|| hbar * dp.abs() / (p * p))).collect())
}

/// Local momentum `∂S/∂x = ħ Im(ψ*∇ψ)/|ψ|²`; `None` below the amplitude floor.
pub fn momentum_field(psi: &HybridWavefunction, c: &PhysConstants) -> Result<Vec<Option<f64>>> {
    let spectral = Spectral::new(&psi.grid)?;
    let d = spectral.derivative(&psi.psi, 1);
    let max_a = psi.psi.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let floor = AMPLITUDE_FLOOR_RATIO * max_a;
    Ok(psi
        .psi
        .iter()
        .zip(&d)
        .map(|(z, dz)| (z.norm() >= floor && floor > 0.0).then(|| c.hbar * (z.conj() * dz).im / z.norm_sqr()))
        .collect())
}
