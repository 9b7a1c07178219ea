//! Two-flavor neutrino oscillation.
//!
//! A neutrino is emitted in exactly one mass state and keeps it. Both mass
//! waves travel with it, and their phase difference at detection decides the
//! flavor outcome.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{
    evolve_waves, recombine, run_ensemble, sample_branch_with, BranchPipeline, BranchSet, EnsembleStats, EventModel,
    HistoryRecord, OutputBasis, Stage,
};
use crate::error::{invalid, Result};

pub const MASS_LABELS: [&str; 2] = ["m1", "m2"];
pub const FLAVOR_LABELS: [&str; 2] = ["e", "mu"];

/// How the oscillation phase `Φ` grows with the propagation variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kinematics {
    /// `Φ = (omega2 - omega1) t / 2`; the propagation variable is time.
    Frequencies { omega1: f64, omega2: f64 },
    /// `Φ = c³ Δm² L / (4 ħ E)`; the propagation variable is the baseline `L`.
    Beam { delta_m2: f64, energy: f64, c_light: f64, hbar: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutrinoConfig {
    pub theta_mix: f64,
    pub kinematics: Kinematics,
}

impl NeutrinoConfig {
    pub fn with_frequencies(theta_mix: f64, omega1: f64, omega2: f64) -> Self {
        Self { theta_mix, kinematics: Kinematics::Frequencies { omega1, omega2 } }
    }

    /// Natural units with `omega1 = 0` and `omega2 = 2`, so `Φ = t`.
    pub fn unit_phase(theta_mix: f64) -> Self {
        Self::with_frequencies(theta_mix, 0.0, 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta_mix.is_finite() {
            return Err(invalid("theta_mix", "must be finite"));
        }
        match self.kinematics {
            Kinematics::Frequencies { omega1, omega2 } => {
                if !(omega1.is_finite() && omega2.is_finite()) {
                    return Err(invalid("omega", "frequencies must be finite"));
                }
            }
            Kinematics::Beam { delta_m2, energy, c_light, hbar } => {
                for (name, v) in [("delta_m2", delta_m2), ("energy", energy), ("c_light", c_light), ("hbar", hbar)] {
                    if !(v > 0.0 && v.is_finite()) {
                        return Err(invalid(name, format!("must be positive, got {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `(c_m1, c_m2) = (cos θ, sin θ)`.
    pub fn mass_amplitudes(&self) -> (f64, f64) {
        let (s, c) = self.theta_mix.sin_cos();
        (c, s)
    }

    /// Oscillation phase after propagating for `x` (time or baseline).
    pub fn phase(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0 && x.is_finite()) {
            return Err(invalid("t", format!("propagation must be non-negative, got {x}")));
        }
        self.validate()?;
        Ok(match self.kinematics {
            Kinematics::Frequencies { omega1, omega2 } => 0.5 * (omega2 - omega1) * x,
            Kinematics::Beam { delta_m2, energy, c_light, hbar } => {
                oscillation_phase(delta_m2, energy, x, c_light, hbar)
            }
        })
    }
}

/// `c³ Δm² L / (4 ħ E)`.
pub fn oscillation_phase(delta_m2: f64, energy: f64, length: f64, c_light: f64, hbar: f64) -> f64 {
    c_light.powi(3) * delta_m2 * length / (4.0 * hbar * energy)
}

/// `sin²(2θ) sin²(Φ)`.
pub fn appearance_from_phase(theta_mix: f64, phase: f64) -> f64 {
    let s2 = (2.0 * theta_mix).sin();
    let sp = phase.sin();
    s2 * s2 * sp * sp
}

/// `P_ee = 1 - 4|c_m1|²|c_m2|² sin²(Φ)`.
pub fn survival_probability(c: &NeutrinoConfig, t: f64) -> Result<f64> {
    Ok(1.0 - appearance_probability(c, t)?)
}

/// `P_eμ = sin²(2θ) sin²(Φ)`.
pub fn appearance_probability(c: &NeutrinoConfig, x: f64) -> Result<f64> {
    Ok(appearance_from_phase(c.theta_mix, c.phase(x)?))
}

/// Mass branches, relative phase `2Φ`, then projection onto flavor.
pub fn neutrino_pipeline(c: &NeutrinoConfig, x: f64) -> Result<BranchPipeline> {
    let phase = c.phase(x)?;
    let (cm1, cm2) = c.mass_amplitudes();
    let masses = BranchSet::real([(MASS_LABELS[0], cm1), (MASS_LABELS[1], cm2)])?;
    let flavors = OutputBasis::real([(FLAVOR_LABELS[0], vec![cm1, cm2]), (FLAVOR_LABELS[1], vec![-cm2, cm1])])?;
    BranchPipeline::new(masses, vec![Stage::Evolve(vec![0.0, 2.0 * phase]), Stage::Recombine(flavors)])
}

/// One neutrino from emission to detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeutrinoHistory {
    pub mass_at_emission: usize,
    pub mass_at_detection: usize,
    pub flavor: usize,
    pub mass_record: HistoryRecord,
}

impl NeutrinoHistory {
    pub fn mass_label(&self) -> &'static str {
        MASS_LABELS[self.mass_at_emission]
    }

    pub fn flavor_label(&self) -> &'static str {
        FLAVOR_LABELS[self.flavor]
    }
}

/// Event model with the draw order of [`neutrino_pipeline`].
#[derive(Debug, Clone)]
pub struct NeutrinoModel {
    theta_mix: f64,
    masses: BranchSet,
    phase: f64,
    flavors: OutputBasis,
}

impl NeutrinoModel {
    pub fn new(c: &NeutrinoConfig, x: f64) -> Result<Self> {
        let pipeline = neutrino_pipeline(c, x)?;
        let flavors = match &pipeline.stages()[1] {
            Stage::Recombine(b) => b.clone(),
            Stage::Evolve(_) => unreachable!("flavor projection is the second stage"),
        };
        Ok(Self { theta_mix: c.theta_mix, masses: pipeline.initial().clone(), phase: c.phase(x)?, flavors })
    }

    pub fn history<R: Rng + ?Sized>(&self, rng: &mut R, event_index: u64) -> Result<NeutrinoHistory> {
        let mass = sample_branch_with(&self.masses, rng);
        let emitted = HistoryRecord::enter(&self.masses, mass, event_index);
        let mass_record = evolve_waves(emitted, &[0.0, 2.0 * self.phase])?;
        let at_flavor = recombine(&mass_record, &self.flavors)?;
        let flavor = sample_branch_with(&at_flavor, rng);
        Ok(NeutrinoHistory { mass_at_emission: mass, mass_at_detection: mass_record.taken_branch, flavor, mass_record })
    }
}

impl EventModel for NeutrinoModel {
    fn outcome_labels(&self) -> Vec<String> {
        FLAVOR_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn sample_outcome(&self, rng: &mut ChaCha8Rng, event_index: u64) -> Result<usize> {
        let h = self.history(rng, event_index)?;
        debug_assert_eq!(h.mass_at_emission, h.mass_at_detection);
        Ok(h.flavor)
    }

    fn analytic_probabilities(&self) -> Option<Vec<f64>> {
        let p_emu = appearance_from_phase(self.theta_mix, self.phase);
        Some(vec![1.0 - p_emu, p_emu])
    }
}

/// Flavor counts (`e`, `mu`) at detection.
pub fn simulate_neutrinos(c: &NeutrinoConfig, t: f64, n: u64, seed: u64) -> Result<EnsembleStats> {
    run_ensemble(&NeutrinoModel::new(c, t)?, n, seed)
}
