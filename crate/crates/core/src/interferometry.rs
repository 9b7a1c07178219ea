//! Stern-Gerlach and Mach-Zehnder interferometers.
//!
//! Both are two-branch pipelines: the particle enters one path, the waves on
//! both paths pick up phases, and recombination at the exit sets the port
//! probabilities.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use crate::engine::{run_ensemble, BranchPipeline, BranchSet, EnsembleStats, HistoryRecord, OutputBasis, Stage};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SgInput {
    #[serde(rename = "x+")]
    XPlus,
    #[serde(rename = "x-")]
    XMinus,
}

impl SgInput {
    pub fn label(self) -> &'static str {
        match self {
            SgInput::XPlus => "x+",
            SgInput::XMinus => "x-",
        }
    }

    /// The exit state reached by a spin transition.
    pub fn flipped(self) -> SgInput {
        match self {
            SgInput::XPlus => SgInput::XMinus,
            SgInput::XMinus => SgInput::XPlus,
        }
    }
}

impl std::str::FromStr for SgInput {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x+" => Ok(SgInput::XPlus),
            "x-" => Ok(SgInput::XMinus),
            other => Err(invalid("input", format!("expected x+ or x-, got `{other}`"))),
        }
    }
}

/// Symmetric Stern-Gerlach interferometer with field energy `mu_b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SgConfig {
    pub mu_b: f64,
    pub t: f64,
    pub input: SgInput,
    pub hbar: f64,
}

impl SgConfig {
    /// Configuration whose accumulated relative phase `2 mu_b t / hbar`
    /// equals `phase`.
    pub fn with_relative_phase(phase: f64) -> Self {
        Self { mu_b: phase / 2.0, t: 1.0, input: SgInput::XPlus, hbar: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t >= 0.0) {
            return Err(invalid("t", format!("must be non-negative, got {}", self.t)));
        }
        if !(self.hbar > 0.0) {
            return Err(invalid("hbar", "must be positive"));
        }
        if !self.mu_b.is_finite() {
            return Err(invalid("mu_b", "must be finite"));
        }
        Ok(())
    }

    /// `omega_pm t = +-mu_b t / hbar`.
    pub fn branch_phases(&self) -> [f64; 2] {
        let w = self.mu_b * self.t / self.hbar;
        [w, -w]
    }

    pub fn relative_phase(&self) -> f64 {
        2.0 * self.mu_b * self.t / self.hbar
    }
}

/// `P(x+ -> x-) = (1 - cos(2 mu_b t / hbar)) / 2`; the same for `x- -> x+`.
pub fn sg_transition_probability(c: &SgConfig) -> f64 {
    0.5 * (1.0 - c.relative_phase().cos())
}

/// Entrance split of the x-polarized waves onto the z paths.
pub fn sg_split_amplitudes(input: SgInput) -> BranchSet {
    let sign = match input {
        SgInput::XPlus => 1.0,
        SgInput::XMinus => -1.0,
    };
    BranchSet::real([("z+", FRAC_1_SQRT_2), ("z-", sign * FRAC_1_SQRT_2)]).expect("x states are normalized")
}

/// Projection of the z paths back onto the x basis at the exit.
pub fn x_basis() -> OutputBasis {
    OutputBasis::real([("x+", vec![FRAC_1_SQRT_2, FRAC_1_SQRT_2]), ("x-", vec![FRAC_1_SQRT_2, -FRAC_1_SQRT_2])])
        .expect("x basis is unitary")
}

pub fn sg_pipeline(c: &SgConfig) -> Result<BranchPipeline> {
    c.validate()?;
    BranchPipeline::new(
        sg_split_amplitudes(c.input),
        vec![Stage::Evolve(c.branch_phases().to_vec()), Stage::Recombine(x_basis())],
    )
}

/// Event-by-event run; outcome labels are `x+` and `x-`.
pub fn simulate_sg(c: &SgConfig, n: u64, seed: u64) -> Result<EnsembleStats> {
    run_ensemble(&sg_pipeline(c)?, n, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }
}

/// A Stern-Gerlach history together with the particle's own spin and the
/// energy it has exchanged with flippers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinHistory {
    pub record: HistoryRecord,
    pub particle_spin: Spin,
    pub energy_exchanged: f64,
}

/// Pass a spin flipper placed in `arm`.
///
/// The wave in that arm gains `π/2` whether or not the particle is there.
/// Only if the particle travels through `arm` does its spin flip, with the
/// energy `2 mu_b` exchanged.
pub fn spin_flipper_effect(mut h: SpinHistory, arm: usize, mu_b: f64) -> Result<SpinHistory> {
    let n = h.record.wave_phases.len();
    if arm >= n {
        return Err(invalid("flipped_arm", format!("arm {arm} not among {n} branches")));
    }
    h.record.wave_phases[arm] += FRAC_PI_2;
    if h.record.taken_branch == arm {
        h.particle_spin = h.particle_spin.flipped();
        h.energy_exchanged += 2.0 * mu_b;
    }
    Ok(h)
}

/// Mach-Zehnder interferometer with two identical beam splitters.
///
/// Each splitter is `[[t, i r], [i r, t]]` (reflection phase `i`). The
/// particle enters mode 1. Port 1 is the exit fed by one transmission and
/// one reflection along either arm; at zero relative phase a symmetric
/// device sends every particle there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MzConfig {
    pub phi1: f64,
    pub phi2: f64,
    /// Transmission and reflection amplitudes `(t, r)`.
    pub splitter: (f64, f64),
}

impl Default for MzConfig {
    fn default() -> Self {
        Self { phi1: 0.0, phi2: 0.0, splitter: (FRAC_1_SQRT_2, FRAC_1_SQRT_2) }
    }
}

impl MzConfig {
    pub fn with_phases(phi1: f64, phi2: f64) -> Self {
        Self { phi1, phi2, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let (t, r) = self.splitter;
        let norm = t * t + r * r;
        if !((norm - 1.0).abs() <= 1e-12) {
            return Err(invalid("splitter_ratio", format!("|t|^2 + |r|^2 = {norm}, expected 1")));
        }
        if !(self.phi1.is_finite() && self.phi2.is_finite()) {
            return Err(invalid("phi", "arm phases must be finite"));
        }
        Ok(())
    }

    pub fn beam_splitter(&self) -> [[Complex64; 2]; 2] {
        let (t, r) = self.splitter;
        let t = Complex64::new(t, 0.0);
        let ir = Complex64::new(0.0, r);
        [[t, ir], [ir, t]]
    }
}

pub type Splitter = [[Complex64; 2]; 2];

/// Exit amplitudes `(port1, port2)` for arbitrary splitter matrices.
pub fn mz_port_amplitudes(first: &Splitter, second: &Splitter, phi1: f64, phi2: f64) -> [Complex64; 2] {
    let arms = [first[0][0] * Complex64::cis(phi1), first[1][0] * Complex64::cis(phi2)];
    let out0 = second[0][0] * arms[0] + second[0][1] * arms[1];
    let out1 = second[1][0] * arms[0] + second[1][1] * arms[1];
    [out1, out0]
}

/// `(p_port1, p_port2)`; `p_port1 = 4 t^2 r^2 cos^2((phi1 - phi2)/2)`,
/// which is `cos^2((phi1 - phi2)/2)` for the symmetric splitter.
pub fn mz_exit_probability(c: &MzConfig) -> (f64, f64) {
    let (t, r) = c.splitter;
    let half = 0.5 * (c.phi1 - c.phi2);
    // 1/sqrt(2) squared rounds above 1/2
    let p1 = (4.0 * t * t * r * r * half.cos().powi(2)).clamp(0.0, 1.0);
    (p1, 1.0 - p1)
}

pub fn mz_pipeline(c: &MzConfig) -> Result<BranchPipeline> {
    c.validate()?;
    let bs = c.beam_splitter();
    let arms = BranchSet::new([("arm1", bs[0][0]), ("arm2", bs[1][0])])?;
    let exit = OutputBasis::new([("port1", vec![bs[1][0], bs[1][1]]), ("port2", vec![bs[0][0], bs[0][1]])])?;
    BranchPipeline::new(arms, vec![Stage::Evolve(vec![c.phi1, c.phi2]), Stage::Recombine(exit)])
}

/// Event-by-event run; outcome labels are `port1` and `port2`.
pub fn simulate_mz(c: &MzConfig, n: u64, seed: u64) -> Result<EnsembleStats> {
    run_ensemble(&mz_pipeline(c)?, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::evolve_waves;
    use crate::rng::EventKey;
    use std::f64::consts::PI;

    #[test]
    fn transition_probability_examples() {
        assert_eq!(sg_transition_probability(&SgConfig::with_relative_phase(0.0)), 0.0);
        assert_eq!(sg_transition_probability(&SgConfig::with_relative_phase(PI)), 1.0);
        assert!((sg_transition_probability(&SgConfig::with_relative_phase(PI / 2.0)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn split_amplitudes() {
        let plus = sg_split_amplitudes(SgInput::XPlus);
        let minus = sg_split_amplitudes(SgInput::XMinus);
        assert_eq!(plus.amplitudes()[0].re, FRAC_1_SQRT_2);
        assert_eq!(plus.amplitudes()[1].re, FRAC_1_SQRT_2);
        assert_eq!(minus.amplitudes()[1].re, -FRAC_1_SQRT_2);
        assert!((plus.norm_sqr() - 1.0).abs() < 1e-15);
        assert!((minus.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pipeline_matches_closed_form() {
        for k in 0..32 {
            let phase = k as f64 * PI / 8.0;
            for input in [SgInput::XPlus, SgInput::XMinus] {
                let c = SgConfig { input, ..SgConfig::with_relative_phase(phase) };
                let probs = sg_pipeline(&c).unwrap().analytic_probabilities();
                let target = sg_pipeline(&c)
                    .unwrap()
                    .outcome_labels()
                    .iter()
                    .position(|l| l == input.flipped().label())
                    .unwrap();
                assert!((probs[target] - sg_transition_probability(&c)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn deterministic_ports() {
        let flip = simulate_sg(&SgConfig::with_relative_phase(PI), 100_000, 3).unwrap();
        assert_eq!(flip.frequency("x-"), 1.0);
        let none = SgConfig { t: 0.0, ..SgConfig::with_relative_phase(1.0) };
        assert_eq!(simulate_sg(&none, 100_000, 3).unwrap().frequency("x-"), 0.0);
    }

    #[test]
    fn negative_time_rejected() {
        let c = SgConfig { t: -1.0, ..SgConfig::with_relative_phase(1.0) };
        assert!(simulate_sg(&c, 10, 0).is_err());
    }

    fn spin_history(taken: usize) -> SpinHistory {
        SpinHistory {
            record: HistoryRecord::enter(&sg_split_amplitudes(SgInput::XPlus), taken, 0),
            particle_spin: Spin::Up,
            energy_exchanged: 0.0,
        }
    }

    #[test]
    fn flipper_in_untaken_arm_only_shifts_wave() {
        let h = spin_flipper_effect(spin_history(0), 1, 0.7).unwrap();
        assert_eq!(h.record.wave_phases, vec![0.0, FRAC_PI_2]);
        assert_eq!(h.particle_spin, Spin::Up);
        assert_eq!(h.energy_exchanged, 0.0);
        assert_eq!(h.record.taken_branch, 0);
    }

    #[test]
    fn flipper_twice_adds_pi() {
        let h = spin_flipper_effect(spin_flipper_effect(spin_history(0), 1, 0.7).unwrap(), 1, 0.7).unwrap();
        assert!((h.record.wave_phases[1] - PI).abs() < 1e-15);
    }

    #[test]
    fn flipper_in_taken_arm_flips_particle() {
        let h = spin_flipper_effect(spin_history(0), 0, 0.7).unwrap();
        assert_eq!(h.particle_spin, Spin::Down);
        assert_eq!(h.record.wave_phases[0], FRAC_PI_2);
        assert!((h.energy_exchanged - 1.4).abs() < 1e-15);
        assert!(spin_flipper_effect(spin_history(0), 2, 0.7).is_err());
    }

    #[test]
    fn mz_examples() {
        assert_eq!(mz_exit_probability(&MzConfig::with_phases(0.0, 0.0)), (1.0, 0.0));
        let (p1, p2) = mz_exit_probability(&MzConfig::with_phases(PI, 0.0));
        assert!(p1 < 1e-15 && (p2 - 1.0).abs() < 1e-15);
        // Oracle: compose the two splitter matrices directly.
        let c = MzConfig::with_phases(PI / 2.0, 0.0);
        let amps = mz_port_amplitudes(&c.beam_splitter(), &c.beam_splitter(), c.phi1, c.phi2);
        let (p1, p2) = mz_exit_probability(&c);
        assert!((p1 - amps[0].norm_sqr()).abs() < 1e-15);
        assert!((p1 - 0.5).abs() < 1e-15 && (p2 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mz_complement_exact() {
        for k in 0..64 {
            let c = MzConfig::with_phases(k as f64 * 0.1, -0.37 * k as f64);
            let (p1, p2) = mz_exit_probability(&c);
            assert_eq!(p1 + p2, 1.0);
        }
    }

    #[test]
    fn global_phase_conventions_agree() {
        let c = MzConfig::with_phases(0.9, -0.4);
        let bs = c.beam_splitter();
        let rotate = |m: Splitter, a: f64| m.map(|row| row.map(|z| z * Complex64::cis(a)));
        let reference = mz_port_amplitudes(&bs, &bs, c.phi1, c.phi2);
        for (a, b) in [(0.3, 1.1), (PI, -2.0), (-0.5, 0.0)] {
            let other = mz_port_amplitudes(&rotate(bs, a), &rotate(bs, b), c.phi1, c.phi2);
            for (x, y) in reference.iter().zip(other) {
                assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pipeline_agrees_with_mz_formula_for_asymmetric_splitter() {
        let t = 0.8;
        let c = MzConfig { phi1: 1.3, phi2: 0.2, splitter: (t, (1.0f64 - t * t).sqrt()) };
        let probs = mz_pipeline(&c).unwrap().analytic_probabilities();
        let (p1, p2) = mz_exit_probability(&c);
        assert!((probs[0] - p1).abs() < 1e-14 && (probs[1] - p2).abs() < 1e-14);
        let bad = MzConfig { splitter: (0.8, 0.8), ..c };
        assert!(mz_pipeline(&bad).is_err());
    }

    #[test]
    fn untaken_arm_shifter_never_moves_particle() {
        let key = EventKey::new(42);
        let base = mz_pipeline(&MzConfig::with_phases(0.0, 0.0)).unwrap();
        let shifted = mz_pipeline(&MzConfig::with_phases(0.0, PI)).unwrap();
        let mut outcome_changed = false;
        for k in 0..1000 {
            let a = base.trace(&mut key.rng(k), k).unwrap();
            let b = shifted.trace(&mut key.rng(k), k).unwrap();
            assert_eq!(a.histories[0].taken_branch, b.histories[0].taken_branch);
            outcome_changed |= a.outcome != b.outcome;
        }
        assert!(outcome_changed);
    }

    #[test]
    fn evolution_keeps_path_probabilities() {
        let h = HistoryRecord::enter(&sg_split_amplitudes(SgInput::XPlus), 1, 0);
        let evolved = evolve_waves(h.clone(), &SgConfig::with_relative_phase(2.2).branch_phases()).unwrap();
        for (a, b) in h.waves().iter().zip(evolved.waves()) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-15);
        }
    }
}
