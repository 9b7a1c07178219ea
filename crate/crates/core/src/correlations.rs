//! Two-particle correlations from paired action-waves.
//!
//! Each pair is emitted in one definite joint state, `(+,-)` or `(-,+)`. Its
//! waves carry a random source phase (`phi` for spins, `y_s` for momentum
//! pairs) that washes out single-detector interference, while the pairing
//! constraint (`+1` only with `-2` and vice versa) cancels it from the joint
//! law. Outcomes are drawn from that joint law; independent local sampling is
//! kept as the local-hidden-variable baseline.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::engine::{run_ensemble, EnsembleStats, EventModel};
use crate::error::{invalid, Result};
use crate::rng::{draw_phase, draw_unit};

/// Outcome labels in index order.
pub const PAIR_LABELS: [&str; 4] = ["++", "+-", "-+", "--"];

/// Nodes of the periodic trapezoid rule used for phase averages. Exact for
/// trigonometric polynomials of degree below this.
const QUADRATURE_NODES: usize = 256;

/// Momentum-correlated pair source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSourceConfig {
    /// `(p+ - p-) / hbar`.
    pub delta_k: f64,
    pub source_extent: f64,
    pub y1: f64,
    pub y2: f64,
}

impl PairSourceConfig {
    /// Source ten fringe periods wide.
    pub fn new(delta_k: f64, y1: f64, y2: f64) -> Self {
        Self { delta_k, source_extent: 10.0 * TAU / delta_k, y1, y2 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_k > 0.0 && self.delta_k.is_finite()) {
            return Err(invalid("delta_k", "must be positive"));
        }
        if !(self.source_extent * self.delta_k >= TAU * (1.0 - 1e-12)) {
            return Err(invalid(
                "source_extent",
                format!("source_extent * delta_k = {} is below 2π", self.source_extent * self.delta_k),
            ));
        }
        Ok(())
    }

    pub fn fringe_period(&self) -> f64 {
        TAU / self.delta_k
    }
}

/// Spin-singlet analyzer settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingletConfig {
    pub theta1: f64,
    pub theta2: f64,
    /// `s+ - s-`; one for spin-1/2.
    pub delta_s: f64,
}

impl SingletConfig {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        Self { theta1, theta2, delta_s: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_s > 0.0 && self.delta_s.is_finite()) {
            return Err(invalid("delta_s", "must be positive"));
        }
        if !(self.theta1.is_finite() && self.theta2.is_finite()) {
            return Err(invalid("theta", "analyzer angles must be finite"));
        }
        Ok(())
    }

    pub fn delta_theta(&self) -> f64 {
        self.theta1 - self.theta2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JointState {
    PlusMinus,
    MinusPlus,
}

/// One emitted pair: its source draw, its definite joint state, and the two
/// detector outcomes (`+1` or `-1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvent {
    pub source_phase: f64,
    pub joint_state: JointState,
    pub outcomes: (i8, i8),
}

impl PairEvent {
    pub fn label_index(&self) -> usize {
        outcome_index(self.outcomes)
    }

    pub fn product(&self) -> i8 {
        self.outcomes.0 * self.outcomes.1
    }
}

fn outcome_index((a, b): (i8, i8)) -> usize {
    usize::from(a < 0) * 2 + usize::from(b < 0)
}

/// `1 + cos(delta_k (y - y_s))`: local wave intensity, mean one over `y_s`.
pub fn pair_local_intensity(y: f64, y_s: f64, c: &PairSourceConfig) -> f64 {
    1.0 + (c.delta_k * (y - y_s)).cos()
}

/// `(1 + cos(delta_k (y1 - y2))) / 2`, independent of the source point.
pub fn pair_coincidence_rate(y1: f64, y2: f64, c: &PairSourceConfig) -> f64 {
    0.5 * (1.0 + (c.delta_k * (y1 - y2)).cos())
}

/// `P(+ | theta, phi) = 1/2 + cos(delta_s (theta - phi)) / 2`.
pub fn singlet_local_probability(theta: f64, phi: f64, c: &SingletConfig) -> f64 {
    0.5 + 0.5 * (c.delta_s * (theta - phi)).cos()
}

/// `(P_opposite, P_same)` from the paired joint amplitude. The source phase
/// cancels, so neither value depends on it.
pub fn singlet_joint_probabilities(c: &SingletConfig) -> (f64, f64) {
    let x = (c.delta_s * c.delta_theta()).cos();
    (0.5 * (1.0 + x), 0.5 * (1.0 - x))
}

/// Joint probabilities built literally from the paired waves at a given
/// source phase. Kept next to the closed form to show the cancellation.
pub fn singlet_joint_from_waves(c: &SingletConfig, phi: f64) -> (f64, f64) {
    let s_plus = 0.5 * c.delta_s;
    let s_minus = -0.5 * c.delta_s;
    let wave = |s: f64, theta: f64| Complex64::cis(s * (theta - phi));
    // |+>1 pairs with |->2 and |->1 with |+>2; no ++ or -- combinations
    let opposite =
        0.5 * wave(s_plus, c.theta1) * wave(s_minus, c.theta2) + 0.5 * wave(s_minus, c.theta1) * wave(s_plus, c.theta2);
    let p_opposite = opposite.norm_sqr();
    (p_opposite, 1.0 - p_opposite)
}

/// `C = P_same - P_opposite = -cos(delta_s (theta1 - theta2))`.
pub fn singlet_correlation(c: &SingletConfig) -> f64 {
    let (opposite, same) = singlet_joint_probabilities(c);
    same - opposite
}

/// Sample one singlet pair.
///
/// Draw order is fixed: source phase, joint state, particle-1 outcome from
/// its local law, then whether particle 2 is opposite or equal from the joint
/// law. Analyzer angles enter only the last two draws.
pub fn sample_pair_event<R: Rng + ?Sized>(c: &SingletConfig, rng: &mut R) -> PairEvent {
    let phi = draw_phase(rng);
    let joint_state = if draw_unit(rng) < 0.5 { JointState::PlusMinus } else { JointState::MinusPlus };
    let first = if draw_unit(rng) < singlet_local_probability(c.theta1, phi, c) { 1 } else { -1 };
    let (p_opposite, _) = singlet_joint_probabilities(c);
    let second = if draw_unit(rng) < p_opposite { -first } else { first };
    PairEvent { source_phase: phi, joint_state, outcomes: (first, second) }
}

/// `|C(a,b) - C(a,b') + C(a',b) + C(a',b')|`.
pub fn chsh_statistic<F>(a: f64, a_prime: f64, b: f64, b_prime: f64, correlation: F) -> f64
where
    F: Fn(f64, f64) -> f64,
{
    (correlation(a, b) - correlation(a, b_prime) + correlation(a_prime, b) + correlation(a_prime, b_prime)).abs()
}

/// The four CHSH settings `(a, a', b, b')`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Default for ChshSettings {
    fn default() -> Self {
        Self { a: 0.0, a_prime: PI / 2.0, b: PI / 4.0, b_prime: 3.0 * PI / 4.0 }
    }
}

impl ChshSettings {
    pub fn pairs(&self) -> [(f64, f64); 4] {
        [(self.a, self.b), (self.a, self.b_prime), (self.a_prime, self.b), (self.a_prime, self.b_prime)]
    }

    pub fn statistic<F: Fn(f64, f64) -> f64>(&self, correlation: F) -> f64 {
        chsh_statistic(self.a, self.a_prime, self.b, self.b_prime, correlation)
    }
}

/// Mean over `phi` of `f(phi)`, periodic trapezoid rule on `[0, 2π)`.
fn phase_average<F: Fn(f64) -> f64>(f: F) -> f64 {
    let h = TAU / QUADRATURE_NODES as f64;
    (0..QUADRATURE_NODES).map(|j| f(j as f64 * h)).sum::<f64>() / QUADRATURE_NODES as f64
}

/// Correlation when each side samples its outcome independently from its
/// local law given the shared `phi`; particle 2 carries the opposite spin.
/// Equals `-cos(delta_s (theta1 - theta2)) / 2` for spin-1/2.
pub fn lhv_baseline_correlation(theta1: f64, theta2: f64, c: &SingletConfig) -> f64 {
    phase_average(|phi| {
        let e1 = 2.0 * singlet_local_probability(theta1, phi, c) - 1.0;
        let e2 = 2.0 * (1.0 - singlet_local_probability(theta2, phi, c)) - 1.0;
        e1 * e2
    })
}

/// Deviation of the singlet, rewritten in the basis along `n`, from its
/// original form up to a global phase. `n` is given by polar and azimuthal
/// angles.
pub fn singlet_basis_residual(polar: f64, azimuth: f64) -> f64 {
    let (s, c) = (0.5 * polar).sin_cos();
    let e = Complex64::cis(azimuth);
    let plus_n = [Complex64::new(c, 0.0), e * s];
    let minus_n = [-e.conj() * s, Complex64::new(c, 0.0)];
    let kron = |u: &[Complex64; 2], v: &[Complex64; 2]| [u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1]];
    let pm = kron(&plus_n, &minus_n);
    let mp = kron(&minus_n, &plus_n);
    let rotated: Vec<Complex64> = pm.iter().zip(&mp).map(|(a, b)| (a - b) * FRAC_1_SQRT_2).collect();
    let zero = Complex64::new(0.0, 0.0);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let original = [zero, h, -h, zero];
    let overlap: Complex64 = original.iter().zip(&rotated).map(|(o, r)| o.conj() * r).sum();
    let shape = original.iter().zip(&rotated).map(|(o, r)| (r - overlap * o).norm()).fold(0.0, f64::max);
    shape.max((1.0 - overlap.norm()).abs())
}

/// [`singlet_basis_residual`] for a basis rotated by `rotation` in the x-z
/// plane.
pub fn singlet_basis_invariance(rotation: f64) -> f64 {
    singlet_basis_residual(rotation, 0.0)
}

/// Coincidence fringe visibility when a fraction `q` of pairs have lost the
/// pairing constraint, so all four wave combinations contribute.
///
/// Evaluated numerically: the mixed coincidence rate is tabulated over one
/// fringe of `y2` (paired term from the joint amplitude, unpaired term as the
/// source average of the two local intensities) and `(max - min)/(max + min)`
/// is returned.
pub fn visibility_with_mixing(q: f64, c: &PairSourceConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(invalid("q", format!("must lie in [0, 1], got {q}")));
    }
    c.validate()?;
    let period = c.fringe_period();
    let samples = 64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..samples {
        let y2 = c.y1 + period * j as f64 / samples as f64;
        // both terms have unit mean over y2
        let paired = 2.0 * pair_coincidence_rate(c.y1, y2, c);
        let unpaired = phase_average(|u| {
            let y_s = u / c.delta_k;
            pair_local_intensity(c.y1, y_s, c) * pair_local_intensity(y2, y_s, c)
        });
        let rate = (1.0 - q) * paired + q * unpaired;
        lo = lo.min(rate);
        hi = hi.max(rate);
    }
    Ok((hi - lo) / (hi + lo))
}

/// Event model for singlet pairs; outcomes are [`PAIR_LABELS`].
#[derive(Debug, Clone, Copy)]
pub struct SingletModel {
    pub config: SingletConfig,
}

impl EventModel for SingletModel {
    fn outcome_labels(&self) -> Vec<String> {
        PAIR_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn sample_outcome(&self, rng: &mut ChaCha8Rng, _event_index: u64) -> Result<usize> {
        Ok(sample_pair_event(&self.config, rng).label_index())
    }

    fn analytic_probabilities(&self) -> Option<Vec<f64>> {
        let (opposite, same) = singlet_joint_probabilities(&self.config);
        Some(vec![0.5 * same, 0.5 * opposite, 0.5 * opposite, 0.5 * same])
    }
}

/// Independent local sampling given a shared `phi`.
#[derive(Debug, Clone, Copy)]
pub struct LhvModel {
    pub config: SingletConfig,
}

impl EventModel for LhvModel {
    fn outcome_labels(&self) -> Vec<String> {
        PAIR_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn sample_outcome(&self, rng: &mut ChaCha8Rng, _event_index: u64) -> Result<usize> {
        let c = &self.config;
        let phi = draw_phase(rng);
        let first = if draw_unit(rng) < singlet_local_probability(c.theta1, phi, c) { 1 } else { -1 };
        let second = if draw_unit(rng) < singlet_local_probability(c.theta2, phi, c) { -1 } else { 1 };
        Ok(outcome_index((first, second)))
    }
}

/// Pair statistics summarized as correlation and marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub stats: EnsembleStats,
    pub correlation: f64,
    pub correlation_std_error: f64,
    /// Frequency of `+1` at detector 1 and detector 2.
    pub marginals: (f64, f64),
    pub marginal_std_errors: (f64, f64),
}

impl CorrelationEstimate {
    pub fn from_stats(stats: EnsembleStats) -> Self {
        let n = stats.total as f64;
        let f = stats.frequencies();
        let correlation = f[0] - f[1] - f[2] + f[3];
        let m1 = f[0] + f[1];
        let m2 = f[0] + f[2];
        let se = |p: f64| (p * (1.0 - p) / n).sqrt();
        Self {
            correlation,
            correlation_std_error: ((1.0 - correlation * correlation).max(0.0) / n).sqrt(),
            marginals: (m1, m2),
            marginal_std_errors: (se(m1), se(m2)),
            stats,
        }
    }
}

pub fn simulate_singlet(c: &SingletConfig, n: u64, seed: u64) -> Result<CorrelationEstimate> {
    c.validate()?;
    let stats = run_ensemble(&SingletModel { config: *c }, n, seed)?;
    Ok(CorrelationEstimate::from_stats(stats))
}

pub fn simulate_lhv(c: &SingletConfig, n: u64, seed: u64) -> Result<CorrelationEstimate> {
    c.validate()?;
    let stats = run_ensemble(&LhvModel { config: *c }, n, seed)?;
    Ok(CorrelationEstimate::from_stats(stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshEstimate {
    pub settings: ChshSettings,
    pub correlations: [f64; 4],
    pub std_errors: [f64; 4],
    pub s: f64,
    /// Propagated from the four independent correlation estimates.
    pub s_std_error: f64,
    pub n_per_setting: u64,
}

/// Monte Carlo CHSH value; each setting pair uses its own seed offset.
pub fn simulate_chsh(settings: &ChshSettings, delta_s: f64, n: u64, seed: u64) -> Result<ChshEstimate> {
    let mut correlations = [0.0; 4];
    let mut std_errors = [0.0; 4];
    for (i, (t1, t2)) in settings.pairs().into_iter().enumerate() {
        let c = SingletConfig { theta1: t1, theta2: t2, delta_s };
        let est = simulate_singlet(&c, n, seed.wrapping_add(i as u64))?;
        correlations[i] = est.correlation;
        std_errors[i] = est.correlation_std_error;
    }
    let s = (correlations[0] - correlations[1] + correlations[2] + correlations[3]).abs();
    let s_std_error = std_errors.iter().map(|e| e * e).sum::<f64>().sqrt();
    Ok(ChshEstimate { settings: *settings, correlations, std_errors, s, s_std_error, n_per_setting: n })
}

/// Momentum-pair detection events.
///
/// Each detector reports `+1` when the particle leaves its local
/// interference through the bright output at the detector position. With
/// probability `mixing` the pairing constraint is broken and the two sides
/// are sampled independently.
#[derive(Debug, Clone, Copy)]
pub struct PairInterferenceModel {
    pub source: PairSourceConfig,
    pub mixing: f64,
}

impl PairInterferenceModel {
    pub fn sample_event<R: Rng + ?Sized>(&self, rng: &mut R) -> PairEvent {
        let c = &self.source;
        let y_s = (draw_unit(rng) - 0.5) * c.source_extent;
        let joint_state = if draw_unit(rng) < 0.5 { JointState::PlusMinus } else { JointState::MinusPlus };
        let first = if draw_unit(rng) < 0.5 * pair_local_intensity(c.y1, y_s, c) { 1 } else { -1 };
        let unpaired = draw_unit(rng) < self.mixing;
        let u = draw_unit(rng);
        let second = if unpaired {
            if u < 0.5 * pair_local_intensity(c.y2, y_s, c) {
                1
            } else {
                -1
            }
        } else if u < pair_coincidence_rate(c.y1, c.y2, c) {
            first
        } else {
            -first
        };
        PairEvent { source_phase: y_s, joint_state, outcomes: (first, second) }
    }
}

impl EventModel for PairInterferenceModel {
    fn outcome_labels(&self) -> Vec<String> {
        PAIR_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn sample_outcome(&self, rng: &mut ChaCha8Rng, _event_index: u64) -> Result<usize> {
        Ok(self.sample_event(rng).label_index())
    }
}

/// Empirical fringe visibilities from detector scans over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairVisibility {
    /// Coincidence (`++`) rate versus `y2` at fixed `y1`.
    pub coincidence_rates: Vec<(f64, f64)>,
    /// Detector-1 `+1` rate versus `y1`.
    pub single_rates: Vec<(f64, f64)>,
    pub coincidence_visibility: f64,
    pub single_visibility: f64,
    pub n_per_point: u64,
}

fn visibility(rates: &[(f64, f64)]) -> f64 {
    let hi = rates.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let lo = rates.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    (hi - lo) / (hi + lo)
}

/// Scan detector 2 (coincidences) and detector 1 (singles) over `points`
/// positions spanning one fringe.
pub fn simulate_pair_visibility(
    source: &PairSourceConfig,
    mixing: f64,
    points: usize,
    n: u64,
    seed: u64,
) -> Result<PairVisibility> {
    source.validate()?;
    if !(0.0..=1.0).contains(&mixing) {
        return Err(invalid("q", "mixing fraction must lie in [0, 1]"));
    }
    if points < 2 {
        return Err(invalid("points", "need at least two scan positions"));
    }
    let period = source.fringe_period();
    let mut coincidence_rates = Vec::with_capacity(points);
    let mut single_rates = Vec::with_capacity(points);
    for j in 0..points {
        let offset = period * j as f64 / points as f64;
        let scan2 = PairInterferenceModel { source: PairSourceConfig { y2: source.y1 + offset, ..*source }, mixing };
        let stats = run_ensemble(&scan2, n, seed.wrapping_add(2 * j as u64))?;
        coincidence_rates.push((scan2.source.y2, stats.frequencies()[0]));

        let scan1 = PairInterferenceModel { source: PairSourceConfig { y1: source.y1 + offset, ..*source }, mixing };
        let stats = run_ensemble(&scan1, n, seed.wrapping_add(2 * j as u64 + 1))?;
        let f = stats.frequencies();
        single_rates.push((scan1.source.y1, f[0] + f[1]));
    }
    Ok(PairVisibility {
        coincidence_visibility: visibility(&coincidence_rates),
        single_visibility: visibility(&single_rates),
        coincidence_rates,
        single_rates,
        n_per_point: n,
    })
}
