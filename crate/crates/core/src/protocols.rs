//! Two-measurement protocols: exact conditional and total distributions,
//! the short-delay repeatability probe, and a seeded sampler of measurement
//! records.

use std::collections::BTreeMap;
use std::thread;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, inner, ComplexMatrix};
use crate::quantum::{born_distribution, evolve, DensityMatrix, Observable, OutcomeDistribution};

/// `P'(yₘ|xₙ) = |⟨yₘ|xₙ⟩|²`: outcome statistics of `y` measured right after
/// `x` returned outcome index `n`.
pub fn conditional_second_distribution(
    x: &Observable,
    y: &Observable,
    n: usize,
) -> Result<OutcomeDistribution> {
    y.matrix().check_dim(x.dim())?;
    x.check_index(n)?;
    let xn = x.eigenvector(n);
    let probs = (0..y.dim())
        .map(|m| inner(&y.eigenvector(m), &xn).norm_sqr())
        .collect();
    OutcomeDistribution::new(y.labels().to_vec(), probs)
}

/// `P'(yₘ) = Σₙ P(xₙ) P'(yₘ|xₙ)`: statistics of `y` when `x` was measured
/// first and its outcome discarded.
pub fn post_measurement_distribution(
    rho: &DensityMatrix,
    x: &Observable,
    y: &Observable,
) -> Result<OutcomeDistribution> {
    y.matrix().check_dim(x.dim())?;
    let first = born_distribution(rho, x)?;
    let mut probs = vec![0.0; y.dim()];
    for (n, &pn) in first.probs().iter().enumerate() {
        let cond = conditional_second_distribution(x, y, n)?;
        for (acc, q) in probs.iter_mut().zip(cond.probs()) {
            *acc += pn * q;
        }
    }
    OutcomeDistribution::new(y.labels().to_vec(), probs)
}

/// `P(yₘ) = ⟨yₘ|ρ|yₘ⟩` with no prior measurement.
pub fn direct_distribution(rho: &DensityMatrix, y: &Observable) -> Result<OutcomeDistribution> {
    born_distribution(rho, y)
}

/// `P(yₘ) - P'(yₘ)` per outcome of `y`, in label order. Vanishes identically
/// for classical statistics.
pub fn total_probability_residual(
    rho: &DensityMatrix,
    x: &Observable,
    y: &Observable,
) -> Result<Vec<f64>> {
    let direct = direct_distribution(rho, y)?;
    let post = post_measurement_distribution(rho, x, y)?;
    Ok(direct
        .probs()
        .iter()
        .zip(post.probs())
        .map(|(a, b)| a - b)
        .collect())
}

/// Geometric grid of 16 delays from `1e-1` down to `1e-4`.
pub fn default_t_grid() -> Vec<f64> {
    geometric_grid(1e-1, 1e-4, 16)
}

/// `points` values from `start` to `end` with constant ratio, endpoints included.
pub fn geometric_grid(start: f64, end: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let ratio = (end / start).ln() / (points - 1) as f64;
    (0..points)
        .map(|k| match k {
            0 => start,
            k if k == points - 1 => end,
            k => start * (ratio * k as f64).exp(),
        })
        .collect()
}

/// Requires a non-empty, strictly positive, strictly descending grid.
pub fn validate_t_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if let Some(t) = t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidGrid(format!("delay {t} is not positive")));
    }
    if let Some(w) = t_grid.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid(format!(
            "delays must descend strictly ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Conditional matrix at a single delay; `matrix[n][m] = P⁽ᵗ⁾(xₘ|xₙ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub t: f64,
    pub matrix: Vec<Vec<f64>>,
}

/// Power-law fit `P⁽ᵗ⁾(xₘ|xₙ) ≈ a tᵏ` for one off-diagonal pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub from: usize,
    pub to: usize,
    /// `None` when fewer than two grid points are above the noise floor.
    pub exponent: Option<f64>,
    pub points_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmoProbe {
    pub labels: Vec<f64>,
    /// Distribution of the first measurement on the supplied state.
    pub first: OutcomeDistribution,
    pub rows: Vec<ProbeRow>,
    pub exponents: Vec<ExponentFit>,
}

impl CmoProbe {
    /// Largest `|P⁽ᵗ⁾ - I|` entry at the smallest delay.
    pub fn deviation_at_smallest_t(&self) -> f64 {
        self.rows
            .last()
            .map(|r| deviation_from_identity(&r.matrix))
            .unwrap_or(0.0)
    }
}

fn deviation_from_identity(m: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (n, row) in m.iter().enumerate() {
        for (k, &v) in row.iter().enumerate() {
            let target = if n == k { 1.0 } else { 0.0 };
            worst = worst.max((v - target).abs());
        }
    }
    worst
}

/// Points below this probability are excluded from exponent fits.
pub const FIT_NOISE_FLOOR: f64 = 1e-14;

/// Repeat-measurement statistics `P⁽ᵗ⁾(xₘ|xₙ) = |⟨xₘ|e^{-iHt}|xₙ⟩|²` over a
/// descending delay grid, with least-squares log-log slopes for every
/// off-diagonal entry.
pub fn cmo_limit_probe(
    rho: &DensityMatrix,
    x: &Observable,
    hamiltonian: &ComplexMatrix,
    t_grid: &[f64],
) -> Result<CmoProbe> {
    hamiltonian.check_dim(x.dim())?;
    let first = born_distribution(rho, x)?;
    validate_t_grid(t_grid)?;
    let spectral = linalg::eigh(hamiltonian)?;
    let d = x.dim();
    let basis: Vec<_> = (0..d).map(|n| x.eigenvector(n)).collect();

    let rows: Vec<ProbeRow> = t_grid
        .iter()
        .map(|&t| {
            let u = spectral.map_spectrum(|l| linalg::C64::from_polar(1.0, -l * t));
            let matrix = basis
                .iter()
                .map(|xn| {
                    let evolved = u.apply(xn);
                    basis
                        .iter()
                        .map(|xm| inner(xm, &evolved).norm_sqr())
                        .collect()
                })
                .collect();
            ProbeRow { t, matrix }
        })
        .collect();

    let mut exponents = Vec::new();
    for from in 0..d {
        for to in (0..d).filter(|&m| m != from) {
            let points: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.matrix[from][to] >= FIT_NOISE_FLOOR)
                .map(|r| (r.t.ln(), r.matrix[from][to].ln()))
                .collect();
            exponents.push(ExponentFit {
                from,
                to,
                exponent: least_squares_slope(&points),
                points_used: points.len(),
            });
        }
    }
    Ok(CmoProbe {
        labels: x.labels().to_vec(),
        first,
        rows,
        exponents,
    })
}

fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// One measurement in a sequence: optional free evolution, then a projective
/// measurement of `observable`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementStep {
    observable: Observable,
    wait_before: f64,
    hamiltonian: Option<ComplexMatrix>,
}

impl MeasurementStep {
    /// Measurement with no delay after the previous one.
    pub fn immediate(observable: Observable) -> Self {
        Self {
            observable,
            wait_before: 0.0,
            hamiltonian: None,
        }
    }

    /// Measurement after evolving for `wait` under `hamiltonian`. A Hamiltonian
    /// is required iff `wait > 0`.
    pub fn new(
        observable: Observable,
        wait_before: f64,
        hamiltonian: Option<ComplexMatrix>,
    ) -> Result<Self> {
        if !(wait_before.is_finite() && wait_before >= 0.0) {
            return Err(Error::InvalidStep(format!(
                "wait {wait_before} must be finite and nonnegative"
            )));
        }
        match (&hamiltonian, wait_before > 0.0) {
            (None, true) => {
                return Err(Error::InvalidStep(
                    "a positive wait needs a hamiltonian".into(),
                ))
            }
            (Some(_), false) => {
                return Err(Error::InvalidStep(
                    "a hamiltonian is only meaningful with a positive wait".into(),
                ))
            }
            (Some(h), true) => {
                h.check_dim(observable.dim())?;
                linalg::eigh(h)?;
            }
            (None, false) => {}
        }
        Ok(Self {
            observable,
            wait_before,
            hamiltonian,
        })
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn wait_before(&self) -> f64 {
        self.wait_before
    }

    pub fn hamiltonian(&self) -> Option<&ComplexMatrix> {
        self.hamiltonian.as_ref()
    }

    fn propagator(&self) -> Result<Option<ComplexMatrix>> {
        match &self.hamiltonian {
            Some(h) if self.wait_before > 0.0 => {
                Ok(Some(linalg::unitary_exp(h, self.wait_before)?))
            }
            _ => Ok(None),
        }
    }
}

/// Sampled outcome sequences of a measurement protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Outcome labels of each step's observable, ascending.
    pub step_labels: Vec<Vec<f64>>,
    /// `outcomes[shot][step]` is the sampled outcome index.
    pub outcomes: Vec<Vec<usize>>,
    /// Counts of each outcome-index tuple.
    pub empirical_joint: BTreeMap<Vec<usize>, u64>,
    pub shots: u64,
}

impl MeasurementRecord {
    pub fn steps(&self) -> usize {
        self.step_labels.len()
    }

    /// Outcome labels (rather than indices) of one shot.
    pub fn shot_labels(&self, shot: usize) -> Vec<f64> {
        self.outcomes[shot]
            .iter()
            .enumerate()
            .map(|(step, &n)| self.step_labels[step][n])
            .collect()
    }

    /// Relative outcome frequencies of one step.
    pub fn marginal(&self, step: usize) -> Result<OutcomeDistribution> {
        if step >= self.steps() {
            return Err(Error::IndexOutOfRange {
                index: step,
                len: self.steps(),
            });
        }
        let labels = self.step_labels[step].clone();
        let mut counts = vec![0_u64; labels.len()];
        for (key, &count) in &self.empirical_joint {
            counts[key[step]] += count;
        }
        let probs = counts
            .iter()
            .map(|&c| c as f64 / self.shots as f64)
            .collect();
        OutcomeDistribution::new(labels, probs)
    }

    /// Fraction of shots in which steps `a` and `b` returned the same label.
    pub fn agreement(&self, a: usize, b: usize) -> f64 {
        let same = self
            .outcomes
            .iter()
            .filter(|o| self.step_labels[a][o[a]] == self.step_labels[b][o[b]])
            .count();
        same as f64 / self.shots as f64
    }
}

/// Exact per-step sampling tables. After the first measurement the state is
/// an eigenvector of the previous observable, so each later step is fully
/// described by a transition matrix indexed by the previous outcome.
struct SamplingPlan {
    first: Vec<f64>,
    transitions: Vec<Vec<Vec<f64>>>,
}

impl SamplingPlan {
    fn new(rho: &DensityMatrix, steps: &[MeasurementStep]) -> Result<Self> {
        let head = &steps[0];
        let start = match (head.hamiltonian(), head.wait_before()) {
            (Some(h), t) if t > 0.0 => evolve(rho, h, t)?,
            _ => rho.clone(),
        };
        let first = cumulative(born_distribution(&start, head.observable())?.probs());
        let mut transitions = Vec::with_capacity(steps.len() - 1);
        for pair in steps.windows(2) {
            let (prev, next) = (pair[0].observable(), pair[1].observable());
            next.matrix().check_dim(prev.dim())?;
            let u = pair[1].propagator()?;
            let table = (0..prev.dim())
                .map(|n| {
                    let mut psi = prev.eigenvector(n);
                    if let Some(u) = &u {
                        psi = u.apply(&psi);
                    }
                    let probs: Vec<f64> = (0..next.dim())
                        .map(|m| inner(&next.eigenvector(m), &psi).norm_sqr())
                        .collect();
                    cumulative(&probs)
                })
                .collect();
            transitions.push(table);
        }
        Ok(Self { first, transitions })
    }

    fn sample_shot(&self, seed: u64, shot: u64) -> Vec<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        let mut outcome = inverse_cdf(&self.first, rng.gen());
        let mut path = Vec::with_capacity(self.transitions.len() + 1);
        path.push(outcome);
        for table in &self.transitions {
            outcome = inverse_cdf(&table[outcome], rng.gen());
            path.push(outcome);
        }
        path
    }
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// First index with `u < cdf[i]`; falls back to the last outcome with
/// positive mass when rounding leaves the total just below 1.
fn inverse_cdf(cdf: &[f64], u: f64) -> usize {
    if let Some(i) = cdf.iter().position(|&c| u < c) {
        return i;
    }
    let mut prev = 0.0;
    let mut last = cdf.len() - 1;
    for (i, &c) in cdf.iter().enumerate() {
        if c > prev {
            last = i;
        }
        prev = c;
    }
    last
}

/// Simulates `shots` independent runs of `steps` starting from `rho`.
///
/// Each shot draws from its own ChaCha8 stream keyed by `(seed, shot index)`,
/// so the record does not depend on how shots are distributed over workers.
pub fn sample_records(
    rho: &DensityMatrix,
    steps: &[MeasurementStep],
    seed: u64,
    shots: u64,
) -> Result<MeasurementRecord> {
    sample_records_sharded(rho, steps, seed, shots, 1)
}

/// [`sample_records`] with shots split over up to `workers` threads.
pub fn sample_records_sharded(
    rho: &DensityMatrix,
    steps: &[MeasurementStep],
    seed: u64,
    shots: u64,
    workers: usize,
) -> Result<MeasurementRecord> {
    if steps.is_empty() {
        return Err(Error::InvalidStep("no measurement steps".into()));
    }
    if shots == 0 {
        return Err(Error::NoShots);
    }
    steps[0].observable().matrix().check_dim(rho.dim())?;
    let plan = SamplingPlan::new(rho, steps)?;

    let workers = workers.clamp(1, shots as usize) as u64;
    let chunk = shots.div_ceil(workers);
    let outcomes: Vec<Vec<usize>> = if workers == 1 {
        (0..shots).map(|s| plan.sample_shot(seed, s)).collect()
    } else {
        thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let plan = &plan;
                    let range = (w * chunk).min(shots)..((w + 1) * chunk).min(shots);
                    scope
                        .spawn(move || range.map(|s| plan.sample_shot(seed, s)).collect::<Vec<_>>())
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("sampling worker panicked"))
                .collect()
        })
    };

    let mut empirical_joint = BTreeMap::new();
    for path in &outcomes {
        *empirical_joint.entry(path.clone()).or_insert(0) += 1;
    }
    Ok(MeasurementRecord {
        step_labels: steps
            .iter()
            .map(|s| s.observable().labels().to_vec())
            .collect(),
        outcomes,
        empirical_joint,
        shots,
    })
}
