//! Spin in a magnetic field combined with two-well tunneling.
//!
//! The 4×4 Hamiltonian has the block form `[[ħΩ·I, μ₀σ·B], [μ₀σ·B, -ħΩ·I]]`,
//! which is `μ₀ α·B + β ħΩ` with Dirac-type `α` and `β`.

use nalgebra::{DMatrix, Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::engine::{run_ensemble, BranchPipeline, BranchSet, EnsembleStats, OutputBasis, Stage};
use crate::error::{invalid, Error, Result};

pub type Matrix4c = Matrix4<Complex64>;

/// Field strength above which `μ₀|B|/ħΩ` is no longer small.
pub const WEAK_FIELD_LIMIT: f64 = 0.1;

const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiracFormConfig {
    pub omega: f64,
    pub b: [f64; 3],
    pub mu0: f64,
    pub hbar: f64,
}

impl DiracFormConfig {
    pub fn new(omega: f64, b: [f64; 3], mu0: f64) -> Self {
        Self { omega, b, mu0, hbar: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(invalid("omega", format!("must be non-negative, got {}", self.omega)));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(invalid("hbar", "must be positive"));
        }
        if !(self.mu0.is_finite() && self.b.iter().all(|v| v.is_finite())) {
            return Err(invalid("b", "field and coupling must be finite"));
        }
        Ok(())
    }

    pub fn field_norm(&self) -> f64 {
        self.b.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `μ₀|B|`.
    pub fn coupling_energy(&self) -> f64 {
        self.mu0.abs() * self.field_norm()
    }

    /// `ħΩ`.
    pub fn tunneling_energy(&self) -> f64 {
        self.hbar * self.omega
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `σ·v` as a 2×2 block `[[v_z, v_x - i v_y], [v_x + i v_y, -v_z]]`.
fn pauli_dot(v: [f64; 3]) -> [[Complex64; 2]; 2] {
    [[c(v[2], 0.0), c(v[0], -v[1])], [c(v[0], v[1]), c(-v[2], 0.0)]]
}

/// Block matrix `[[m·I, σ·v], [σ·v, -m·I]]`.
fn block_form(m: f64, v: [f64; 3]) -> Matrix4c {
    let s = pauli_dot(v);
    let mut h = Matrix4c::zeros();
    for i in 0..2 {
        h[(i, i)] = c(m, 0.0);
        h[(i + 2, i + 2)] = c(-m, 0.0);
        for j in 0..2 {
            h[(i, j + 2)] = s[i][j];
            h[(i + 2, j)] = s[i][j];
        }
    }
    h
}

pub fn build_hamiltonian(c: &DiracFormConfig) -> Result<Matrix4c> {
    c.validate()?;
    let v = c.b.map(|b| c.mu0 * b);
    Ok(block_form(c.tunneling_energy(), v))
}

/// The same algebra with `(pc, mc²)` in place of `(μ₀B, ħΩ)`.
pub fn relativistic_hamiltonian(momentum: [f64; 3], mass: f64, c_light: f64) -> Result<Matrix4c> {
    if !(mass >= 0.0 && c_light > 0.0) {
        return Err(invalid("mass", "mass must be non-negative and c positive"));
    }
    Ok(block_form(mass * c_light * c_light, momentum.map(|p| p * c_light)))
}

/// `E = sqrt(ħ²Ω² + μ₀²|B|²)`.
pub fn split_energy(c: &DiracFormConfig) -> f64 {
    c.tunneling_energy().hypot(c.coupling_energy())
}

pub fn hermiticity_defect(h: &Matrix4c) -> f64 {
    (h - h.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigenvalues in descending order.
pub fn spectrum(h: &Matrix4c) -> Result<[f64; 4]> {
    let defect = hermiticity_defect(h);
    if defect > HERMITIAN_TOLERANCE {
        return Err(invalid("h", format!("not Hermitian, defect {defect:e}")));
    }
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok([ev[0], ev[1], ev[2], ev[3]])
}

/// The `α` and `β` matrices read off the Hamiltonian builder.
#[derive(Debug, Clone, PartialEq)]
pub struct CliffordSet {
    pub alpha: [Matrix4c; 3],
    pub beta: Matrix4c,
}

impl CliffordSet {
    pub fn extract() -> Self {
        let unit = |b: [f64; 3], omega: f64| {
            build_hamiltonian(&DiracFormConfig::new(omega, b, 1.0)).expect("unit configs are valid")
        };
        Self {
            alpha: [unit([1.0, 0.0, 0.0], 0.0), unit([0.0, 1.0, 0.0], 0.0), unit([0.0, 0.0, 1.0], 0.0)],
            beta: unit([0.0; 3], 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliffordReport {
    /// Max over `{α_i, α_j} - 2δ_ij`.
    pub alpha_alpha: f64,
    /// `β² - 1`.
    pub beta_square: f64,
    /// Max over `{α_i, β}`.
    pub alpha_beta: f64,
    /// `H - (μ₀ α·B + β ħΩ)` for the given config.
    pub reconstruction: f64,
}

impl CliffordReport {
    /// Largest anticommutation residual.
    pub fn max_residual(&self) -> f64 {
        self.alpha_alpha.max(self.beta_square).max(self.alpha_beta)
    }
}

fn max_abs(m: &Matrix4c) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn verify_clifford(c: &DiracFormConfig) -> Result<CliffordReport> {
    let h = build_hamiltonian(c)?;
    let set = CliffordSet::extract();
    let id = Matrix4c::identity();
    let anti = |a: &Matrix4c, b: &Matrix4c| a * b + b * a;
    let mut alpha_alpha: f64 = 0.0;
    let mut alpha_beta: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let target = if i == j { id * c_scalar(2.0) } else { Matrix4c::zeros() };
            alpha_alpha = alpha_alpha.max(max_abs(&(anti(&set.alpha[i], &set.alpha[j]) - target)));
        }
        alpha_beta = alpha_beta.max(max_abs(&anti(&set.alpha[i], &set.beta)));
    }
    let beta_square = max_abs(&(set.beta * set.beta - id));
    let mut rebuilt = set.beta * c_scalar(c.tunneling_energy());
    for (a, b) in set.alpha.iter().zip(c.b) {
        rebuilt += a * c_scalar(c.mu0 * b);
    }
    Ok(CliffordReport { alpha_alpha, beta_square, alpha_beta, reconstruction: max_abs(&(h - rebuilt)) })
}

fn c_scalar(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRatio {
    /// `‖ψ_S‖ / ‖ψ_L‖` of a positive-energy eigenvector.
    pub ratio: f64,
    /// `μ₀|B| / (E + ħΩ)`.
    pub closed_form: f64,
    pub warning: Option<String>,
}

/// Lower-to-upper block ratio of the positive-energy eigenvector.
///
/// Every vector of the positive eigenspace has the same ratio, so the first
/// positive eigenvector returned by the solver is used.
pub fn component_ratio(c: &DiracFormConfig) -> Result<ComponentRatio> {
    let h = build_hamiltonian(c)?;
    let closed_form =
        if c.coupling_energy() == 0.0 { 0.0 } else { c.coupling_energy() / (split_energy(c) + c.tunneling_energy()) };
    let strength = c.coupling_energy() / c.tunneling_energy();
    let warning = (!(strength <= WEAK_FIELD_LIMIT)).then(|| {
        format!(
            "mu0|B|/(hbar Omega) = {strength:.3e} exceeds {WEAK_FIELD_LIMIT}; small-component expansion not applicable"
        )
    });
    let eig = h.symmetric_eigen();
    let k = (0..4).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b])).expect("four eigenvalues");
    let v: Vector4<Complex64> = eig.eigenvectors.column(k).into();
    let upper = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let lower = (v[2].norm_sqr() + v[3].norm_sqr()).sqrt();
    if upper == 0.0 {
        return Err(Error::NonFinite { context: "component_ratio", index: k });
    }
    Ok(ComponentRatio { ratio: lower / upper, closed_form, warning })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentRatioFit {
    /// `(μ₀|B|/ħΩ, ratio)` pairs.
    pub points: Vec<(f64, f64)>,
    /// Least-squares slope through the origin of ratio against `μ₀|B|/ħΩ`.
    pub coefficient: f64,
    /// Ratio at the largest strength over ratio at the smallest, divided by
    /// the strength ratio; one for exact linearity.
    pub linearity: f64,
}

/// Fit the small-field ratio along the direction of `c.b`.
pub fn component_ratio_fit(c: &DiracFormConfig, strengths: &[f64]) -> Result<ComponentRatioFit> {
    let norm = c.field_norm();
    if norm == 0.0 || c.mu0 == 0.0 || c.omega == 0.0 {
        return Err(invalid("b", "fit needs a nonzero field, coupling and Omega"));
    }
    if strengths.len() < 2 || strengths.iter().any(|&s| !(s > 0.0)) {
        return Err(invalid("strengths", "need at least two positive strengths"));
    }
    let mut points = Vec::with_capacity(strengths.len());
    for &s in strengths {
        let scale = s * c.tunneling_energy() / (c.mu0.abs() * norm);
        let cfg = DiracFormConfig { b: c.b.map(|v| v * scale), ..*c };
        points.push((s, component_ratio(&cfg)?.ratio));
    }
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let lo = points.iter().min_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    let hi = points.iter().max_by(|a, b| a.0.total_cmp(&b.0)).expect("non-empty");
    Ok(ComponentRatioFit { coefficient: sxy / sxx, linearity: (hi.1 / lo.1) / (hi.0 / lo.0), points })
}

pub const WELL_LABELS: [&str; 2] = ["L", "R"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelingState {
    /// Waves on the two energy branches `χ+` and `χ-`.
    pub waves: [Complex64; 2],
    /// Amplitudes at the left and right well.
    pub wells: [Complex64; 2],
    pub p_stay: f64,
    pub p_swap: f64,
}

fn check_field_free(c: &DiracFormConfig) -> Result<()> {
    c.validate()?;
    if c.b.iter().any(|&v| v != 0.0) {
        return Err(invalid("b", "tunneling evolution requires B = 0"));
    }
    Ok(())
}

/// Energy branches with waves `exp(±iΩt)`, detected in the well basis. The
/// particle starts in the left well.
pub fn tunneling_pipeline(c: &DiracFormConfig, t: f64) -> Result<BranchPipeline> {
    check_field_free(c)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", "must be non-negative"));
    }
    let energies = BranchSet::real([("chi+", FRAC_1_SQRT_2), ("chi-", FRAC_1_SQRT_2)])?;
    let wells = OutputBasis::real([
        (WELL_LABELS[0], vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]),
        (WELL_LABELS[1], vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2]),
    ])?;
    let wt = c.omega * t;
    BranchPipeline::new(energies, vec![Stage::Evolve(vec![wt, -wt]), Stage::Recombine(wells)])
}

pub fn tunneling_evolution(c: &DiracFormConfig, t: f64) -> Result<TunnelingState> {
    let pipeline = tunneling_pipeline(c, t)?;
    let wt = c.omega * t;
    let waves = [Complex64::cis(wt) * FRAC_1_SQRT_2, Complex64::cis(-wt) * FRAC_1_SQRT_2];
    let wells = [(waves[0] + waves[1]) * FRAC_1_SQRT_2, (waves[0] - waves[1]) * FRAC_1_SQRT_2];
    let p = pipeline.analytic_probabilities();
    Ok(TunnelingState { waves, wells, p_stay: p[0], p_swap: p[1] })
}

/// Well counts (`L`, `R`) after time `t`.
pub fn simulate_tunneling(c: &DiracFormConfig, t: f64, n: u64, seed: u64) -> Result<EnsembleStats> {
    run_ensemble(&tunneling_pipeline(c, t)?, n, seed)
}

/// Real symmetric 8×8 embedding `[[Re H, -Im H], [Im H, Re H]]`.
pub fn real_embedding(h: &Matrix4c) -> DMatrix<f64> {
    DMatrix::from_fn(8, 8, |i, j| {
        let z = h[(i % 4, j % 4)];
        match (i < 4, j < 4) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{draw_unit, EventKey};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn oracle_spectrum(h: &Matrix4c) -> Vec<f64> {
        let mut ev: Vec<f64> = real_embedding(h).symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    fn random_config(k: u64) -> DiracFormConfig {
        let mut rng = EventKey::new(77).rng(k);
        let mut u = || draw_unit(&mut rng);
        DiracFormConfig {
            omega: 3.0 * u(),
            b: [4.0 * u() - 2.0, 4.0 * u() - 2.0, 4.0 * u() - 2.0],
            mu0: 0.5 + u(),
            hbar: 0.5 + u(),
        }
    }

    #[test]
    fn zero_field_is_diagonal() {
        let h = build_hamiltonian(&DiracFormConfig::new(1.5, [0.0; 3], 1.0)).unwrap();
        let expected = Matrix4c::from_diagonal(&Vector4::new(c(1.5, 0.0), c(1.5, 0.0), c(-1.5, 0.0), c(-1.5, 0.0)));
        assert_eq!(h, expected);
    }

    #[test]
    fn z_field_blocks() {
        let h = build_hamiltonian(&DiracFormConfig::new(1.0, [0.0, 0.0, 2.0], 0.5)).unwrap();
        assert_eq!(h[(0, 2)], c(1.0, 0.0));
        assert_eq!(h[(1, 3)], c(-1.0, 0.0));
        assert_eq!(h[(0, 3)], c(0.0, 0.0));
        assert_eq!(h[(2, 0)], c(1.0, 0.0));
        assert_eq!(h[(3, 1)], c(-1.0, 0.0));
    }

    #[test]
    fn y_field_is_imaginary_off_diagonal() {
        let h = build_hamiltonian(&DiracFormConfig::new(1.0, [0.0, 1.0, 0.0], 1.0)).unwrap();
        assert_eq!(h[(0, 3)], c(0.0, -1.0));
        assert_eq!(h[(1, 2)], c(0.0, 1.0));
    }

    #[test]
    fn hermitian_exactly() {
        for k in 0..100 {
            let h = build_hamiltonian(&random_config(k)).unwrap();
            assert_eq!(h, h.adjoint());
        }
    }

    #[test]
    fn three_four_five() {
        let cfg = DiracFormConfig::new(3.0, [0.0, 4.0, 0.0], 1.0);
        let ev = spectrum(&build_hamiltonian(&cfg).unwrap()).unwrap();
        for (v, e) in ev.iter().zip([5.0, 5.0, -5.0, -5.0]) {
            assert!((v - e).abs() < 1e-12, "{ev:?}");
        }
        let ev = spectrum(&build_hamiltonian(&DiracFormConfig::new(1.0, [0.0; 3], 1.0)).unwrap()).unwrap();
        assert_eq!(ev, [1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn random_spectra_match_formula_and_oracle() {
        for k in 0..100 {
            let cfg = random_config(k);
            let h = build_hamiltonian(&cfg).unwrap();
            let ev = spectrum(&h).unwrap();
            let e = split_energy(&cfg);
            let tol = 1e-12 * e.max(1.0);
            for (v, x) in ev.iter().zip([e, e, -e, -e]) {
                assert!((v - x).abs() < tol, "config {k}: {ev:?} vs {e}");
            }
            assert!((ev[0] - ev[1]).abs() < 1e-12 * e.max(1.0));
            assert!((ev[2] - ev[3]).abs() < 1e-12 * e.max(1.0));
            // each eigenvalue appears twice in the real embedding
            let oracle = oracle_spectrum(&h);
            for (i, v) in ev.iter().enumerate() {
                assert!((oracle[2 * i] - v).abs() < tol);
                assert!((oracle[2 * i + 1] - v).abs() < tol);
            }
        }
    }

    #[test]
    fn rejects_negative_omega_and_non_hermitian() {
        assert!(build_hamiltonian(&DiracFormConfig::new(-1.0, [0.0; 3], 1.0)).is_err());
        let mut h = Matrix4c::zeros();
        h[(0, 1)] = c(1.0, 0.0);
        assert!(spectrum(&h).is_err());
    }

    #[test]
    fn clifford_exact() {
        for k in 0..10 {
            let r = verify_clifford(&random_config(k)).unwrap();
            assert_eq!(r.alpha_alpha, 0.0);
            assert_eq!(r.beta_square, 0.0);
            assert_eq!(r.alpha_beta, 0.0);
            assert_eq!(r.max_residual(), 0.0);
            assert!(r.reconstruction < 1e-14);
        }
    }

    #[test]
    fn component_ratio_examples() {
        let r = component_ratio(&DiracFormConfig::new(1.0, [0.0; 3], 1.0)).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(r.warning.is_none());
        let cfg = DiracFormConfig::new(2.0, [0.3, -0.1, 0.2], 1.0);
        let r = component_ratio(&cfg).unwrap();
        assert!((r.ratio - r.closed_form).abs() < 1e-12);
        assert!(r.warning.is_some());
        let weak = DiracFormConfig::new(2.0, [1e-4, 0.0, 0.0], 1.0);
        assert!(component_ratio(&weak).unwrap().warning.is_none());
    }

    #[test]
    fn component_ratio_is_linear() {
        let cfg = DiracFormConfig::new(1.3, [0.2, 0.5, -0.4], 0.8);
        let fit = component_ratio_fit(&cfg, &[1e-4, 1e-3]).unwrap();
        let r = fit.points[1].1 / fit.points[0].1;
        assert!((r - 10.0).abs() < 0.1, "{r}");
        assert!((fit.linearity - 1.0).abs() < 1e-2);
        // eigenvector oracle: μ₀|B|/(E + ħΩ) → strength / 2
        assert!((fit.coefficient - 0.5).abs() < 1e-5, "{}", fit.coefficient);
    }

    #[test]
    fn relativistic_energy() {
        let h = relativistic_hamiltonian([0.3, 0.4, 1.2], 2.0, 1.5).unwrap();
        let p2c2 = (0.09 + 0.16 + 1.44) * 2.25;
        let e = (p2c2 + (2.0f64 * 2.25).powi(2)).sqrt();
        let ev = spectrum(&h).unwrap();
        assert!((ev[0] - e).abs() < 1e-12 && (ev[3] + e).abs() < 1e-12);
    }

    #[test]
    fn tunneling_examples() {
        let cfg = DiracFormConfig::new(1.0, [0.0; 3], 1.0);
        assert_eq!(tunneling_evolution(&cfg, 0.0).unwrap().p_swap, 0.0);
        assert!((tunneling_evolution(&cfg, FRAC_PI_2).unwrap().p_swap - 1.0).abs() < 1e-15);
        for t in [0.1, 0.7, 2.9] {
            let s = tunneling_evolution(&cfg, t).unwrap();
            assert!((s.p_swap - t.sin().powi(2)).abs() < 1e-14);
            assert!((s.wells[1].norm_sqr() - s.p_swap).abs() < 1e-14);
        }
        let with_field = DiracFormConfig::new(1.0, [0.0, 0.0, 0.1], 1.0);
        assert!(tunneling_evolution(&with_field, 1.0).is_err());
    }

    #[test]
    fn tunneling_frequencies() {
        let cfg = DiracFormConfig::new(1.0, [0.0; 3], 1.0);
        let n = 1_000_000;
        let s = simulate_tunneling(&cfg, FRAC_PI_4, n, 9).unwrap();
        let se = (0.25 / n as f64).sqrt();
        assert!((s.frequency("R") - 0.5).abs() < 5.0 * se);
        let s = simulate_tunneling(&cfg, 0.0, 10_000, 9).unwrap();
        assert_eq!(s.frequency("L"), 1.0);
    }
}
