//! Amplitude/phase decomposition and the identities built on it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use super::grid::{stencil4, Grid1D, Spectral};
use super::HybridWavefunction;
use crate::error::{invalid, Error, Result};
use crate::wave::PhysConstants;

/// Points with `A < AMPLITUDE_FLOOR_RATIO * max(A)` are treated as nodes.
pub const AMPLITUDE_FLOOR_RATIO: f64 = 1e-8;

/// Wrap an angle into `(-π, π]`.
pub fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI {
        y - TAU
    } else {
        y
    }
}

/// `ψ = A exp(iS/ħ)` with `S` unwrapped outward from the amplitude maximum
/// nearest the grid center.
///
/// `S` is `NaN` at nodes. Across a node the unwrapped phase may jump by `πħ`,
/// since `A` is kept non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Madelung {
    pub a: Vec<f64>,
    pub s: Vec<f64>,
    pub nodes: Vec<usize>,
    pub floor: f64,
    pub hbar: f64,
}

impl Madelung {
    pub fn is_node(&self, j: usize) -> bool {
        self.a[j] < self.floor
    }

    /// `A exp(iS/ħ)`; zero at nodes.
    pub fn recompose(&self) -> Vec<Complex64> {
        self.a
            .iter()
            .zip(&self.s)
            .map(|(&a, &s)| if s.is_nan() { Complex64::new(0.0, 0.0) } else { Complex64::from_polar(a, s / self.hbar) })
            .collect()
    }

    /// Max `|A exp(iS/ħ) - ψ|` over non-nodal points.
    pub fn recomposition_error(&self, psi: &[Complex64]) -> f64 {
        self.recompose()
            .iter()
            .zip(psi)
            .enumerate()
            .filter(|(j, _)| !self.is_node(*j))
            .map(|(_, (r, p))| (r - p).norm())
            .fold(0.0, f64::max)
    }
}

pub fn madelung_decompose(psi: &HybridWavefunction, hbar: f64) -> Result<Madelung> {
    if !(hbar > 0.0) {
        return Err(invalid("hbar", "must be positive"));
    }
    let a = psi.amplitude();
    let max_a = a.iter().copied().fold(0.0, f64::max);
    if max_a == 0.0 {
        return Err(Error::Node { x: psi.grid.x(0) });
    }
    // ties for the maximum go to the point nearest the grid center
    let center = 0.5 * (psi.grid.x_min + psi.grid.x_max);
    let reference = (0..a.len())
        .filter(|&j| a[j] >= (1.0 - 1e-9) * max_a)
        .min_by(|&i, &j| (psi.grid.x(i) - center).abs().total_cmp(&(psi.grid.x(j) - center).abs()))
        .expect("maximum exists");
    let floor = AMPLITUDE_FLOOR_RATIO * max_a;
    let n = a.len();
    let mut s = vec![f64::NAN; n];
    let arg = |j: usize| psi.psi[j].arg();
    s[reference] = hbar * arg(reference);
    for dir in [1i64, -1] {
        let mut last = arg(reference);
        let mut j = reference as i64 + dir;
        while j >= 0 && (j as usize) < n {
            let ju = j as usize;
            if a[ju] >= floor {
                last += wrap_angle(arg(ju) - last);
                s[ju] = hbar * last;
            }
            j += dir;
        }
    }
    let nodes = (0..n).filter(|&j| a[j] < floor).collect();
    Ok(Madelung { a, s, nodes, floor, hbar })
}

/// Stencil offsets `f(x_{j+m}) - f(x_j)` on the periodic grid, or `None` if
/// the stencil touches a node.
fn local_offsets(psi: &[Complex64], a: &[f64], floor: f64, j: usize) -> Option<([f64; 5], [f64; 5])> {
    let n = psi.len();
    let idx = |m: i64| ((j as i64 + m).rem_euclid(n as i64)) as usize;
    if (-2..=2).any(|m| a[idx(m)] < floor) {
        return None;
    }
    let mut da = [0.0; 5];
    let mut dphase = [0.0; 5];
    for m in [-2i64, -1, 1, 2] {
        da[(m + 2) as usize] = a[idx(m)] - a[j];
    }
    // accumulate wrapped neighbour differences so the offsets stay local
    let step = |from: usize, to: usize| wrap_angle(psi[to].arg() - psi[from].arg());
    dphase[3] = step(j, idx(1));
    dphase[4] = dphase[3] + step(idx(1), idx(2));
    dphase[1] = step(j, idx(-1));
    dphase[0] = dphase[1] + step(idx(-1), idx(-2));
    Some((da, dphase))
}

/// The four pieces of `-(ħ²/2m)∇²ψ` written through `A` and `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDecomposition {
    /// `ψ (∇S)² / 2m`.
    pub hamilton_jacobi: Vec<Complex64>,
    /// `-(iħ/2m) ψ ∇²S`.
    pub dephasing: Vec<Complex64>,
    /// `-(iħ/m) (ψ/A) ∇S·∇A`.
    pub transport: Vec<Complex64>,
    /// `-(ħ²/2m) (ψ/A) ∇²A`.
    pub quantum: Vec<Complex64>,
    /// `-(ħ²/2m)∇²ψ` from the spectral Laplacian.
    pub direct: Vec<Complex64>,
    /// Points where every stencil entry is above the amplitude floor.
    pub valid: Vec<bool>,
    /// Max pointwise `|Σ terms - direct|` over valid points.
    pub residual: f64,
    /// Max `|direct|` over valid points.
    pub scale: f64,
    /// Max magnitude of each of the four terms.
    pub term_max: [f64; 4],
    pub excluded: usize,
}

/// Build each term from fourth-order stencils on `A` and on the local phase,
/// and compare their sum with the spectral Laplacian of `ψ`.
pub fn term_decomposition_residual(psi: &HybridWavefunction, c: &PhysConstants) -> Result<TermDecomposition> {
    c.validate()?;
    let m = madelung_decompose(psi, c.hbar)?;
    let spectral = Spectral::new(&psi.grid)?;
    let (hb, mass) = (c.hbar, c.mass);
    let direct: Vec<Complex64> =
        spectral.derivative(&psi.psi, 2).into_iter().map(|l| l * (-hb * hb / (2.0 * mass))).collect();
    let n = psi.psi.len();
    let dx = psi.grid.dx();
    let zero = Complex64::new(0.0, 0.0);
    let mut out = TermDecomposition {
        hamilton_jacobi: vec![zero; n],
        dephasing: vec![zero; n],
        transport: vec![zero; n],
        quantum: vec![zero; n],
        direct,
        valid: vec![false; n],
        residual: 0.0,
        scale: 0.0,
        term_max: [0.0; 4],
        excluded: 0,
    };
    let i = Complex64::new(0.0, 1.0);
    for j in 0..n {
        let Some((da, dphase)) = local_offsets(&psi.psi, &m.a, m.floor, j) else {
            out.excluded += 1;
            continue;
        };
        let (a1, a2) = stencil4(da, dx);
        let (p1, p2) = stencil4(dphase, dx);
        let (s1, s2) = (hb * p1, hb * p2);
        let z = psi.psi[j];
        let unit = z / m.a[j];
        let terms = [
            z * (s1 * s1 / (2.0 * mass)),
            -i * (hb / (2.0 * mass)) * z * s2,
            -i * (hb / mass) * unit * (s1 * a1),
            unit * (-hb * hb / (2.0 * mass) * a2),
        ];
        out.hamilton_jacobi[j] = terms[0];
        out.dephasing[j] = terms[1];
        out.transport[j] = terms[2];
        out.quantum[j] = terms[3];
        out.valid[j] = true;
        let sum: Complex64 = terms.iter().sum();
        out.residual = out.residual.max((sum - out.direct[j]).norm());
        out.scale = out.scale.max(out.direct[j].norm());
        for (k, t) in terms.iter().enumerate() {
            out.term_max[k] = out.term_max[k].max(t.norm());
        }
    }
    Ok(out)
}

/// Residual of `∂ρ/∂t + ∇·j` between two snapshots `dt` apart, with
/// `j = ρ∇S/m = (ħ/m) Im(ψ* ∇ψ)` averaged over both snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub residual: f64,
    /// Max `|∂ρ/∂t|`, for scale.
    pub max_density_rate: f64,
    pub dt: f64,
    pub n_points: usize,
}

pub fn continuity_residual(
    before: &HybridWavefunction,
    after: &HybridWavefunction,
    dt: f64,
    c: &PhysConstants,
) -> Result<ContinuityReport> {
    c.validate()?;
    if before.grid != after.grid {
        return Err(invalid("after", "snapshots must share a grid"));
    }
    if !(dt > 0.0) {
        return Err(invalid("dt", "snapshot spacing must be positive"));
    }
    let spectral = Spectral::new(&before.grid)?;
    let current = |w: &HybridWavefunction| -> Vec<f64> {
        let d = spectral.derivative(&w.psi, 1);
        w.psi.iter().zip(&d).map(|(z, dz)| c.hbar / c.mass * (z.conj() * dz).im).collect()
    };
    let j0 = current(before);
    let j1 = current(after);
    let mid: Vec<f64> = j0.iter().zip(&j1).map(|(a, b)| 0.5 * (a + b)).collect();
    let div = spectral.derivative_real(&mid, 1);
    let mut residual: f64 = 0.0;
    let mut rate_max: f64 = 0.0;
    for ((z0, z1), d) in before.psi.iter().zip(&after.psi).zip(&div) {
        let rate = (z1.norm_sqr() - z0.norm_sqr()) / dt;
        residual = residual.max((rate + d).abs());
        rate_max = rate_max.max(rate.abs());
    }
    Ok(ContinuityReport { residual, max_density_rate: rate_max, dt, n_points: before.grid.n_points })
}

/// Residuals at successive refinements and the observed convergence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    /// `(resolution parameter, residual)`; the parameter is `dx` or `dt`.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope of `log residual` against `log parameter`.
    pub order: f64,
}

impl RefinementStudy {
    pub fn from_points(points: Vec<(f64, f64)>) -> Self {
        let logs: Vec<(f64, f64)> = points.iter().map(|(h, r)| (h.ln(), r.ln())).collect();
        let n = logs.len() as f64;
        let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Self { order: sxy / sxx, points }
    }
}

/// Term-identity residual for `make(grid)` on successively doubled grids.
pub fn term_refinement<F>(grid: &Grid1D, levels: usize, c: &PhysConstants, make: F) -> Result<RefinementStudy>
where
    F: Fn(&Grid1D) -> Result<HybridWavefunction>,
{
    let mut points = Vec::with_capacity(levels);
    for level in 0..levels {
        let g = grid.refined(1 << level);
        let r = term_decomposition_residual(&make(&g)?, c)?;
        points.push((g.dx(), r.residual));
    }
    Ok(RefinementStudy::from_points(points))
}
