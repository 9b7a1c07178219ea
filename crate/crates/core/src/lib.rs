//! Action-wave laboratory.
//!
//! An event-by-event stochastic simulator in which a particle takes exactly
//! one branch per trial while unit-modulus action-waves `exp(iS/ħ)` propagate
//! along every branch, paired with the analytic probabilities each experiment
//! should reproduce on average.
//!
//! Modules:
//!
//! * [`wave`] and [`rng`]: complex amplitudes, constants, and counter-based
//!   randomness keyed by `(seed, event_index)`.
//! * [`engine`]: branch sampling, wave evolution, recombination and ensemble
//!   statistics.
//! * [`interferometry`], [`correlations`], [`neutrino`], [`dirac_form`],
//!   [`bohm_compare`]: the individual experiments.
//! * [`schrodinger`]: a 1D split-step spectral solver with amplitude/phase
//!   diagnostics.

// `!(x > 0.0)` style guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bohm_compare;
pub mod correlations;
pub mod dirac_form;
pub mod engine;
pub mod error;
pub mod interferometry;
pub mod neutrino;
pub mod rng;
pub mod schrodinger;
pub mod wave;

pub use engine::{
    born_convergence, recombine, run_ensemble, sample_branch, BranchPipeline, BranchSet, ConvergenceReport,
    EnsembleStats, EventModel, HistoryRecord, OutputBasis, Stage,
};
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng::{uniform_phase, RngStream};
pub use wave::{wave_value, ActionWave, PhysConstants};
