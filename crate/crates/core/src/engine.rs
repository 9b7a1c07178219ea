//! Event-by-event sampler.
//!
//! In every trial the particle occupies exactly one branch, while an
//! action-wave `a_i exp(i phase_i)` is carried along every branch. Where
//! branches are recombined the waves interfere and set the probabilities of
//! the next fork; the particle then again takes exactly one outcome.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{draw_unit, EventKey, RngStream};
use crate::wave::{wave_value, ActionWave};

/// Allowed deviation of `sum |a|^2` from one for a prepared branch set.
pub const NORM_TOLERANCE: f64 = 1e-12;
/// Allowed norm drift per recombination.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Events per parallel work unit. Counts do not depend on it.
const CHUNK: u64 = 1 << 14;

/// Labeled branches with complex wave amplitudes, `sum |a_i|^2 = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchSet {
    labels: Vec<String>,
    amplitudes: Vec<Complex64>,
}

impl BranchSet {
    pub fn new<L: Into<String>>(branches: impl IntoIterator<Item = (L, Complex64)>) -> Result<Self> {
        Self::with_tolerance(branches, NORM_TOLERANCE)
    }

    /// Real amplitudes, the common case for beam splitters and mixing angles.
    pub fn real<L: Into<String>>(branches: impl IntoIterator<Item = (L, f64)>) -> Result<Self> {
        Self::new(branches.into_iter().map(|(l, a)| (l, Complex64::new(a, 0.0))))
    }

    fn with_tolerance<L: Into<String>>(
        branches: impl IntoIterator<Item = (L, Complex64)>,
        tolerance: f64,
    ) -> Result<Self> {
        let (labels, amplitudes): (Vec<String>, Vec<Complex64>) =
            branches.into_iter().map(|(l, a)| (l.into(), a)).unzip();
        if labels.is_empty() {
            return Err(Error::EmptyBranchSet);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        if let Some(i) = amplitudes.iter().position(|a| !a.is_finite()) {
            return Err(Error::NonFinite { context: "branch amplitude", index: i });
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > tolerance {
            return Err(Error::NotNormalized { norm, tolerance });
        }
        Ok(Self { labels, amplitudes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `|a_i|^2` per branch.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Draw a branch index with probability `|a_k|^2`.
///
/// A uniform `u` selects the first branch whose cumulative weight exceeds it,
/// so exact ties on a boundary go to the lower index.
pub fn sample_branch_with<R: Rng + ?Sized>(b: &BranchSet, rng: &mut R) -> usize {
    let u = draw_unit(rng);
    let mut cumulative = 0.0;
    let mut last_nonzero = 0;
    for (i, a) in b.amplitudes.iter().enumerate() {
        let p = a.norm_sqr();
        if p > 0.0 {
            last_nonzero = i;
        }
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    // sum |a|^2 fell a few ulp short of u
    last_nonzero
}

/// Label drawn from the stream of a single event.
pub fn sample_branch<'a>(b: &'a BranchSet, stream: &RngStream) -> &'a str {
    let i = sample_branch_with(b, &mut stream.rng());
    b.label(i)
}

/// One dynamical history through a branch set: the branch the particle
/// actually took plus the phases of the waves on every branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRecord {
    pub taken_branch: usize,
    pub amplitudes: Vec<Complex64>,
    pub wave_phases: Vec<f64>,
    pub event_index: u64,
}

impl HistoryRecord {
    /// Fresh history entering `branches`, all wave phases zero.
    pub fn enter(branches: &BranchSet, taken_branch: usize, event_index: u64) -> Self {
        assert!(taken_branch < branches.len(), "taken branch out of range");
        Self {
            taken_branch,
            amplitudes: branches.amplitudes.clone(),
            wave_phases: vec![0.0; branches.len()],
            event_index,
        }
    }

    pub fn branch_count(&self) -> usize {
        self.wave_phases.len()
    }

    /// The complex wave on each branch, `a_i exp(i phase_i)`.
    pub fn waves(&self) -> Vec<Complex64> {
        self.amplitudes
            .iter()
            .zip(&self.wave_phases)
            .map(|(a, &phase)| a * wave_value(ActionWave::unit(phase)))
            .collect()
    }
}

/// Advance every branch's wave phase independently. The particle's branch is
/// untouched: the waves carry no energy or momentum.
pub fn evolve_waves(mut h: HistoryRecord, phase_increments: &[f64]) -> Result<HistoryRecord> {
    if phase_increments.len() != h.wave_phases.len() {
        return Err(Error::LengthMismatch { expected: h.wave_phases.len(), actual: phase_increments.len() });
    }
    for (phase, d) in h.wave_phases.iter_mut().zip(phase_increments) {
        *phase += d;
    }
    Ok(h)
}

/// Unitary map from input branches to labeled output ports.
///
/// Row `j` holds the projections `proj_ji` of input branch `i` onto output
/// `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputBasis {
    labels: Vec<String>,
    rows: Vec<Vec<Complex64>>,
}

impl OutputBasis {
    pub fn new<L: Into<String>>(rows: impl IntoIterator<Item = (L, Vec<Complex64>)>) -> Result<Self> {
        let (labels, rows): (Vec<String>, Vec<Vec<Complex64>>) = rows.into_iter().map(|(l, r)| (l.into(), r)).unzip();
        let n = labels.len();
        if n == 0 {
            return Err(Error::EmptyBranchSet);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        for r in &rows {
            if r.len() != n {
                return Err(Error::LengthMismatch { expected: n, actual: r.len() });
            }
        }
        let deviation = unitarity_deviation(&rows);
        if !(deviation <= UNITARITY_TOLERANCE) {
            return Err(Error::NonUnitary { deviation });
        }
        Ok(Self { labels, rows })
    }

    /// Real projection matrix.
    pub fn real<L: Into<String>>(rows: impl IntoIterator<Item = (L, Vec<f64>)>) -> Result<Self> {
        Self::new(rows.into_iter().map(|(l, r)| (l, r.into_iter().map(|x| Complex64::new(x, 0.0)).collect())))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn rows(&self) -> &[Vec<Complex64>] {
        &self.rows
    }

    fn apply(&self, waves: &[Complex64]) -> Vec<Complex64> {
        self.rows.iter().map(|row| row.iter().zip(waves).map(|(p, w)| p * w).sum()).collect()
    }
}

/// `max |(U U^dagger - I)_jk|` over a square matrix given by rows.
fn unitarity_deviation(rows: &[Vec<Complex64>]) -> f64 {
    let n = rows.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for k in 0..n {
            let dot: Complex64 = (0..n).map(|i| rows[j][i] * rows[k][i].conj()).sum();
            let target = if j == k { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).norm());
        }
    }
    worst
}

/// Interfere the waves of `h` through `basis`: output `j` receives
/// `sum_i proj_ji a_i exp(i phase_i)`.
pub fn recombine(h: &HistoryRecord, basis: &OutputBasis) -> Result<BranchSet> {
    if basis.dim() != h.branch_count() {
        return Err(Error::LengthMismatch { expected: h.branch_count(), actual: basis.dim() });
    }
    let waves = h.waves();
    let before: f64 = waves.iter().map(|w| w.norm_sqr()).sum();
    let out = basis.apply(&waves);
    let after: f64 = out.iter().map(|w| w.norm_sqr()).sum();
    let deviation = (after - before).abs();
    if !(deviation <= UNITARITY_TOLERANCE) {
        return Err(Error::NonUnitary { deviation });
    }
    BranchSet::with_tolerance(basis.labels.iter().cloned().zip(out), NORM_TOLERANCE + UNITARITY_TOLERANCE)
}

/// A stage acting on the co-propagating waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Stage {
    /// Per-branch phase increments.
    Evolve(Vec<f64>),
    /// Interfere the waves and let the particle take one output.
    Recombine(OutputBasis),
}

/// A prepared fork followed by evolution and recombination stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPipeline {
    initial: BranchSet,
    stages: Vec<Stage>,
}

/// Everything that happened in one event: one history per branch set the
/// particle passed through, the last ending at detection.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTrace {
    pub histories: Vec<HistoryRecord>,
    pub outcome: usize,
}

impl BranchPipeline {
    pub fn new(initial: BranchSet, stages: Vec<Stage>) -> Result<Self> {
        let mut width = initial.len();
        for stage in &stages {
            match stage {
                Stage::Evolve(inc) => {
                    if inc.len() != width {
                        return Err(Error::LengthMismatch { expected: width, actual: inc.len() });
                    }
                }
                Stage::Recombine(basis) => {
                    if basis.dim() != width {
                        return Err(Error::LengthMismatch { expected: width, actual: basis.dim() });
                    }
                    width = basis.dim();
                }
            }
        }
        Ok(Self { initial, stages })
    }

    /// A single measurement fork with no further stages.
    pub fn measurement(initial: BranchSet) -> Self {
        Self { initial, stages: Vec::new() }
    }

    pub fn initial(&self) -> &BranchSet {
        &self.initial
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn outcome_labels(&self) -> &[String] {
        self.stages
            .iter()
            .rev()
            .find_map(|s| match s {
                Stage::Recombine(b) => Some(b.labels()),
                Stage::Evolve(_) => None,
            })
            .unwrap_or(self.initial.labels())
    }

    /// Final-outcome probabilities from propagating the amplitudes alone.
    pub fn analytic_probabilities(&self) -> Vec<f64> {
        let mut amps = self.initial.amplitudes.clone();
        for stage in &self.stages {
            match stage {
                Stage::Evolve(inc) => {
                    for (a, &d) in amps.iter_mut().zip(inc) {
                        *a *= wave_value(ActionWave::unit(d));
                    }
                }
                Stage::Recombine(basis) => amps = basis.apply(&amps),
            }
        }
        amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Run one event and keep every history record.
    pub fn trace<R: Rng + ?Sized>(&self, rng: &mut R, event_index: u64) -> Result<EventTrace> {
        let taken = sample_branch_with(&self.initial, rng);
        let mut current = HistoryRecord::enter(&self.initial, taken, event_index);
        let mut histories = Vec::new();
        for stage in &self.stages {
            match stage {
                Stage::Evolve(inc) => current = evolve_waves(current, inc)?,
                Stage::Recombine(basis) => {
                    let next = recombine(&current, basis)?;
                    let taken = sample_branch_with(&next, rng);
                    histories.push(std::mem::replace(&mut current, HistoryRecord::enter(&next, taken, event_index)));
                }
            }
        }
        let outcome = current.taken_branch;
        histories.push(current);
        Ok(EventTrace { histories, outcome })
    }
}

/// Anything that yields one definite outcome per event.
pub trait EventModel: Sync {
    fn outcome_labels(&self) -> Vec<String>;

    fn sample_outcome(&self, rng: &mut ChaCha8Rng, event_index: u64) -> Result<usize>;

    /// Exact outcome probabilities, when known.
    fn analytic_probabilities(&self) -> Option<Vec<f64>> {
        None
    }
}

impl EventModel for BranchPipeline {
    fn outcome_labels(&self) -> Vec<String> {
        BranchPipeline::outcome_labels(self).to_vec()
    }

    fn sample_outcome(&self, rng: &mut ChaCha8Rng, event_index: u64) -> Result<usize> {
        Ok(self.trace(rng, event_index)?.outcome)
    }

    fn analytic_probabilities(&self) -> Option<Vec<f64>> {
        Some(BranchPipeline::analytic_probabilities(self))
    }
}

/// Outcome counts of an ensemble.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub labels: Vec<String>,
    pub counts: Vec<u64>,
    pub total: u64,
}

impl EnsembleStats {
    pub fn empty(labels: Vec<String>) -> Self {
        let counts = vec![0; labels.len()];
        Self { labels, counts, total: 0 }
    }

    pub fn from_counts(labels: Vec<String>, counts: Vec<u64>) -> Self {
        assert_eq!(labels.len(), counts.len());
        let total = counts.iter().sum();
        Self { labels, counts, total }
    }

    pub fn record(&mut self, outcome: usize) {
        self.counts[outcome] += 1;
        self.total += 1;
    }

    /// Combine two ensembles over the same labels. Associative and
    /// commutative, so any partition of events merges to the same result.
    pub fn merge(mut self, other: &EnsembleStats) -> Self {
        assert_eq!(self.labels, other.labels, "merging stats over different labels");
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.total += other.total;
        self
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| if self.total == 0 { 0.0 } else { c as f64 / self.total as f64 }).collect()
    }

    /// `sqrt(p (1 - p) / N)` with the empirical `p`.
    pub fn std_errors(&self) -> Vec<f64> {
        self.frequencies().into_iter().map(|p| binomial_std_error(p, self.total)).collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn count(&self, label: &str) -> u64 {
        self.index_of(label).map_or(0, |i| self.counts[i])
    }

    pub fn frequency(&self, label: &str) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(label) as f64 / self.total as f64
        }
    }

    /// `max_k |freq_k - p_k|`.
    pub fn max_deviation(&self, probabilities: &[f64]) -> f64 {
        self.frequencies().iter().zip(probabilities).map(|(f, p)| (f - p).abs()).fold(0.0, f64::max)
    }
}

pub fn binomial_std_error(p: f64, n: u64) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Run `n` independent events with indices `0..n`.
pub fn run_ensemble<M: EventModel + ?Sized>(model: &M, n: u64, seed: u64) -> Result<EnsembleStats> {
    if n == 0 {
        return Err(invalid("n_events", "must be at least 1"));
    }
    run_range(model, seed, 0, n)
}

/// Events `start..start + n`, split into fixed-size chunks run in parallel.
pub fn run_range<M: EventModel + ?Sized>(model: &M, seed: u64, start: u64, n: u64) -> Result<EnsembleStats> {
    let labels = model.outcome_labels();
    let key = EventKey::new(seed);
    let chunks = n.div_ceil(CHUNK);
    let width = labels.len();
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = start + c * CHUNK;
            let hi = (lo + CHUNK).min(start + n);
            count_events(model, &key, lo..hi, width)
        })
        .try_reduce(
            || vec![0u64; width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                Ok(a)
            },
        )?;
    Ok(EnsembleStats::from_counts(labels, counts))
}

fn count_events<M: EventModel + ?Sized>(
    model: &M,
    key: &EventKey,
    range: std::ops::Range<u64>,
    width: usize,
) -> Result<Vec<u64>> {
    let mut counts = vec![0u64; width];
    for k in range {
        let outcome = model.sample_outcome(&mut key.rng(k), k)?;
        counts[outcome] += 1;
    }
    Ok(counts)
}

/// Serial run with the events dealt round-robin into `parts` partitions and
/// merged afterwards. Exists to demonstrate partition invariance.
pub fn run_ensemble_partitioned<M: EventModel + ?Sized>(
    model: &M,
    n: u64,
    seed: u64,
    parts: u64,
) -> Result<EnsembleStats> {
    let parts = parts.max(1);
    let labels = model.outcome_labels();
    let key = EventKey::new(seed);
    let mut total = EnsembleStats::empty(labels.clone());
    for p in (0..parts).rev() {
        let mut partial = EnsembleStats::empty(labels.clone());
        for k in (p..n).step_by(parts as usize) {
            partial.record(model.sample_outcome(&mut key.rng(k), k)?);
        }
        total = total.merge(&partial);
    }
    Ok(total)
}

/// One rung of a Born-rule convergence ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub n: u64,
    /// Root-mean-square over replicates of `max_k |freq_k - p_k|`.
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `ln(error)` against `ln(N)`; `None` when fewer
    /// than two rungs have a nonzero error.
    pub slope: Option<f64>,
    pub replicates: u32,
}

/// Measure how fast empirical frequencies approach the analytic ones.
///
/// Each rung runs `replicates` independent ensembles on disjoint event-index
/// ranges and reports the RMS of the per-ensemble maximum deviation.
pub fn born_convergence<M: EventModel + ?Sized>(
    model: &M,
    n_list: &[u64],
    seed: u64,
    replicates: u32,
) -> Result<ConvergenceReport> {
    let probabilities =
        model.analytic_probabilities().ok_or_else(|| invalid("experiment", "analytic probabilities are not known"))?;
    if replicates == 0 {
        return Err(invalid("replicates", "must be at least 1"));
    }
    let mut points = Vec::with_capacity(n_list.len());
    for (rung, &n) in n_list.iter().enumerate() {
        if n == 0 || n >= 1 << 40 {
            return Err(invalid("n_list", format!("rung {n} outside 1..2^40")));
        }
        let mut sum_sq = 0.0;
        for r in 0..replicates as u64 {
            let start = (((rung as u64) << 12) | r) << 40;
            let stats = run_range(model, seed, start, n)?;
            sum_sq += stats.max_deviation(&probabilities).powi(2);
        }
        points.push(ConvergencePoint { n, error: (sum_sq / replicates as f64).sqrt() });
    }
    let xy: Vec<(f64, f64)> =
        points.iter().filter(|p| p.error > 0.0).map(|p| ((p.n as f64).ln(), p.error.ln())).collect();
    Ok(ConvergenceReport { slope: least_squares_slope(&xy), points, replicates })
}

pub(crate) fn least_squares_slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Geometric ladder `lo, lo*r, ...` up to `hi` with `per_decade` rungs per
/// factor of ten.
pub fn geometric_ladder(lo: u64, hi: u64, per_decade: u32) -> Vec<u64> {
    let lo_log = (lo.max(1) as f64).log10();
    let hi_log = (hi.max(1) as f64).log10();
    let steps = ((hi_log - lo_log) * per_decade as f64).round() as u32;
    let mut out: Vec<u64> =
        (0..=steps).map(|s| 10f64.powf(lo_log + s as f64 / per_decade as f64).round() as u64).collect();
    out.dedup();
    out
}
