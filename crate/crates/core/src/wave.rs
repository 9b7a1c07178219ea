//! Physical constants and the complex action-wave carrier.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Action scale and mass shared by an experiment.
///
/// Defaults to natural units, `hbar = mass = 1`. Every formula in the crate
/// keeps `hbar` symbolic, so dimensional values work as well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self { hbar: 1.0, mass: 1.0 }
    }
}

impl PhysConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        let c = Self { hbar, mass };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(invalid("hbar", format!("must be positive, got {}", self.hbar)));
        }
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(invalid("mass", format!("must be positive, got {}", self.mass)));
        }
        Ok(())
    }
}

/// A branch-weighted phase carrier `amplitude * exp(i * phase)`.
///
/// The phase is `S / hbar` in radians and is kept unwrapped; use
/// [`ActionWave::wrapped_phase`] when a value in `[0, 2π)` is wanted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionWave {
    pub phase: f64,
    pub amplitude: f64,
}

impl ActionWave {
    /// A lone wave of unit modulus.
    pub fn unit(phase: f64) -> Self {
        Self { phase, amplitude: 1.0 }
    }

    /// Build from an accumulated action `S`.
    pub fn from_action(action: f64, hbar: f64) -> Self {
        Self::unit(action / hbar)
    }

    pub fn action(&self, hbar: f64) -> f64 {
        self.phase * hbar
    }

    pub fn advance(self, delta_phase: f64) -> Self {
        Self { phase: self.phase + delta_phase, ..self }
    }

    pub fn wrapped_phase(&self) -> f64 {
        self.phase.rem_euclid(std::f64::consts::TAU)
    }

    pub fn value(&self) -> Complex64 {
        wave_value(*self)
    }
}

/// `amplitude * (cos(phase) + i sin(phase))`.
pub fn wave_value(w: ActionWave) -> Complex64 {
    let (s, c) = w.phase.sin_cos();
    Complex64::new(w.amplitude * c, w.amplitude * s)
}
