//! Counter-based randomness.
//!
//! Each event owns an independent ChaCha8 keystream selected by its index,
//! so the draws for event `k` depend only on `(seed, k)`. Ensembles therefore
//! give identical counts regardless of evaluation order or how events are
//! split across workers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub event_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, event_index: u64) -> Self {
        Self { seed, event_index }
    }

    /// The generator for this event, positioned at its first draw.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.event_index);
        rng
    }
}

/// Key material for many events sharing one seed.
///
/// Expanding the seed is done once; [`EventKey::stream`] then only selects
/// the per-event stream.
#[derive(Clone)]
pub struct EventKey {
    seed: u64,
    base: ChaCha8Rng,
}

impl EventKey {
    pub fn new(seed: u64) -> Self {
        Self { seed, base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rng(&self, event_index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(event_index);
        rng.set_word_pos(0);
        rng
    }
}

/// First phase of the event's stream, uniform on `[0, 2π)`.
pub fn uniform_phase(stream: &RngStream) -> f64 {
    draw_phase(&mut stream.rng())
}

/// Uniform phase on `[0, 2π)` from an arbitrary generator.
pub fn draw_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let p = TAU * rng.random::<f64>();
    // rounding can land exactly on 2π
    if p >= TAU {
        0.0
    } else {
        p
    }
}

/// Uniform draw on `[0, 1)`.
pub fn draw_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
