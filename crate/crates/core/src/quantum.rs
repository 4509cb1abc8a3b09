//! Validated quantum states and observables, the Born rule, projective
//! collapse, dephasing and unitary evolution.
//!
//! All validation happens in the constructors. Once a [`DensityMatrix`] or an
//! [`Observable`] exists, the operations below assume its invariants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, inner, ComplexMatrix, SpectralDecomposition, C64};
use crate::tolerance;

/// Hermitian, unit-trace, positive semidefinite operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, trace and positivity. Eigenvalues in
    /// `(-τ_psd, 0)` are accepted as-is.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let spectral = eigh(&matrix)?;
        let trace = matrix.trace();
        if (trace.re - 1.0).abs() > tolerance::TRACE || trace.im.abs() > tolerance::TRACE {
            return Err(Error::InvalidTrace { trace: trace.re });
        }
        let min_eigenvalue = spectral.eigenvalues()[0];
        if min_eigenvalue < -tolerance::PSD {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
        })
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) nonzero vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm = inner(psi, psi).re.sqrt();
        if psi.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidTrace { trace: norm * norm });
        }
        let unit: Vec<C64> = psi.iter().map(|z| z / norm).collect();
        Ok(Self::trusted(ComplexMatrix::outer(&unit, &unit)))
    }

    /// `I / d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::trusted(ComplexMatrix::identity(dim).scale(C64::new(1.0 / dim as f64, 0.0)))
    }

    /// Diagonal state from a probability vector.
    pub fn from_probabilities(probs: &[f64]) -> Result<Self> {
        let diag: Vec<C64> = probs.iter().map(|&p| C64::new(p, 0.0)).collect();
        Self::new(ComplexMatrix::from_diagonal(&diag))
    }

    /// Skips validation for matrices that are states by construction.
    pub(crate) fn trusted(matrix: ComplexMatrix) -> Self {
        Self {
            matrix: matrix.hermitian_part(),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    /// Matrix elements `⟨xₘ|ρ|xₙ⟩` in the eigenbasis of `observable`.
    pub fn in_basis(&self, observable: &Observable) -> Result<ComplexMatrix> {
        self.check_dim(observable)?;
        let v = observable.spectral().eigenvectors();
        Ok(&(&v.dagger() * &self.matrix) * v)
    }

    fn check_dim(&self, observable: &Observable) -> Result<()> {
        observable.matrix().check_dim(self.dim())
    }
}

/// Non-degenerate Hermitian operator together with its spectral decomposition.
///
/// Outcome index `n` refers to the `n`-th eigenvalue in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: ComplexMatrix,
    spectral: SpectralDecomposition,
}

impl Observable {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let spectral = eigh(&matrix)?;
        if spectral.is_degenerate() {
            return Err(Error::Degenerate {
                gap: spectral.min_gap(),
            });
        }
        Ok(Self {
            matrix: matrix.hermitian_part(),
            spectral,
        })
    }

    /// Observable with the given real outcome labels on the given orthonormal
    /// basis (columns of `basis`). Labels must ascend strictly; they are kept
    /// exactly rather than recomputed from the assembled matrix.
    pub fn from_eigenbasis(labels: &[f64], basis: &ComplexMatrix) -> Result<Self> {
        basis.check_dim(labels.len())?;
        let d = labels.len();
        if let Some(k) = labels.iter().position(|l| !l.is_finite()) {
            return Err(Error::NonFinite { row: k, col: k });
        }
        let spectral = SpectralDecomposition::from_parts(labels.to_vec(), basis.clone());
        if labels.windows(2).any(|w| w[1] <= w[0]) || spectral.is_degenerate() {
            return Err(Error::Degenerate {
                gap: spectral.min_gap(),
            });
        }
        let drift = (&(&basis.dagger() * basis) - &ComplexMatrix::identity(d)).max_abs();
        if drift > tolerance::UNITARY {
            return Err(Error::InvalidParams(format!(
                "basis is not orthonormal (max |V†V - I| = {drift:.3e})"
            )));
        }
        Ok(Self {
            matrix: spectral.reconstruct().hermitian_part(),
            spectral,
        })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn spectral(&self) -> &SpectralDecomposition {
        &self.spectral
    }

    /// Possible measurement outcomes, ascending.
    pub fn labels(&self) -> &[f64] {
        self.spectral.eigenvalues()
    }

    pub fn eigenvector(&self, n: usize) -> Vec<C64> {
        self.spectral.eigenvector(n)
    }

    pub fn check_index(&self, n: usize) -> Result<()> {
        if n < self.dim() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: n,
                len: self.dim(),
            })
        }
    }

    /// Index of the outcome whose label is closest to `label`.
    pub fn index_of(&self, label: f64) -> usize {
        self.labels()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - label).abs().total_cmp(&(b.1 - label).abs()))
            .map(|(i, _)| i)
            .expect("observables have at least one outcome")
    }

    /// `|xₙ⟩⟨xₙ|`.
    pub fn projector(&self, n: usize) -> Result<ComplexMatrix> {
        self.check_index(n)?;
        let v = self.eigenvector(n);
        Ok(ComplexMatrix::outer(&v, &v))
    }

    /// `tr(ρ X)`.
    pub fn expectation(&self, rho: &DensityMatrix) -> Result<f64> {
        rho.check_dim(self)?;
        Ok((&self.matrix * rho.matrix()).trace().re)
    }

    /// `⟨X²⟩ - ⟨X⟩²` evaluated on the operator level.
    pub fn variance(&self, rho: &DensityMatrix) -> Result<f64> {
        rho.check_dim(self)?;
        let square = &self.matrix * &self.matrix;
        let mean = self.expectation(rho)?;
        Ok((&square * rho.matrix()).trace().re - mean * mean)
    }
}

/// Probability vector over an observable's outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    labels: Vec<f64>,
    probs: Vec<f64>,
}

impl OutcomeDistribution {
    /// Clamps entries in `(-1e-12, 0)` to zero and renormalizes; rejects
    /// anything further from a probability vector.
    pub fn new(labels: Vec<f64>, mut probs: Vec<f64>) -> Result<Self> {
        if labels.len() != probs.len() {
            return Err(Error::DimMismatch {
                expected: labels.len(),
                found: probs.len(),
            });
        }
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        for (i, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -tolerance::PROBABILITY_FLOOR {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} at outcome {i}"
                )));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tolerance::PROBABILITY_SUM {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}"
            )));
        }
        for p in probs.iter_mut() {
            *p /= total;
        }
        Ok(Self { labels, probs })
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.probs[n]
    }

    pub fn mean(&self) -> f64 {
        self.labels
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| x * p)
            .sum()
    }

    /// Two-pass variance of the labels.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.labels
            .iter()
            .zip(&self.probs)
            .map(|(x, p)| p * (x - mean).powi(2))
            .sum()
    }

    /// `½ Σ |p - q|`.
    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// Born rule: `P(xₙ) = ⟨xₙ|ρ|xₙ⟩`.
pub fn born_distribution(rho: &DensityMatrix, x: &Observable) -> Result<OutcomeDistribution> {
    rho.check_dim(x)?;
    let probs = (0..x.dim())
        .map(|n| {
            let v = x.eigenvector(n);
            rho.matrix().sandwich(&v, &v).re
        })
        .collect();
    OutcomeDistribution::new(x.labels().to_vec(), probs)
}

/// Post-measurement state `|xₙ⟩⟨xₙ|` for outcome index `n`.
pub fn collapse(x: &Observable, n: usize) -> Result<DensityMatrix> {
    Ok(DensityMatrix::trusted(x.projector(n)?))
}

/// Incoherent ensemble of collapsed states, `Σₙ P(xₙ) |xₙ⟩⟨xₙ|`.
pub fn dephase(rho: &DensityMatrix, x: &Observable) -> Result<DensityMatrix> {
    let dist = born_distribution(rho, x)?;
    let diag: Vec<C64> = dist.probs().iter().map(|&p| C64::new(p, 0.0)).collect();
    let v = x.spectral().eigenvectors();
    let sigma = &(v * &ComplexMatrix::from_diagonal(&diag)) * &v.dagger();
    Ok(DensityMatrix::trusted(sigma))
}

/// Schrödinger evolution `U ρ U†` with `U = exp(-iHt)`.
pub fn evolve(rho: &DensityMatrix, hamiltonian: &ComplexMatrix, t: f64) -> Result<DensityMatrix> {
    hamiltonian.check_dim(rho.dim())?;
    if !t.is_finite() {
        return Err(Error::InvalidStep(format!(
            "evolution time {t} is not finite"
        )));
    }
    let u = linalg::unitary_exp(hamiltonian, t)?;
    Ok(DensityMatrix::trusted(&(&u * rho.matrix()) * &u.dagger()))
}

/// Outcome of [`verify_cmo_implies_collapse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseCheck {
    /// `1 - ⟨xₙ|ρ'|xₙ⟩`.
    pub diag_deficit: f64,
    /// `max_{k≠n} |⟨xₖ|ρ'|xₙ⟩|`.
    pub max_offdiag: f64,
    /// `‖ρ' - |xₙ⟩⟨xₙ|‖₁`.
    pub trace_dist_to_projector: f64,
    pub passes_bound: bool,
}

/// Slack added to each bound in [`verify_cmo_implies_collapse`] to absorb rounding.
pub const COLLAPSE_BOUND_SLACK: f64 = 1e-12;

/// Checks how close a post-measurement state is to the projector onto
/// outcome `n`, given that the repeated measurement reproduces `n` up to
/// probability deficit `delta`.
///
/// Positivity forces `|ρ'ₙₖ|² ≤ ρ'ₙₙ ρ'ₖₖ ≤ δ`, so every coherence involving
/// `n` is at most `√δ`, and the trace distance to the projector is at most
/// `2√δ + δ`. `passes_bound` holds iff the deficit is within `delta` and both
/// bounds hold.
pub fn verify_cmo_implies_collapse(
    rho_prime: &DensityMatrix,
    x: &Observable,
    n: usize,
    delta: f64,
) -> Result<CollapseCheck> {
    x.check_index(n)?;
    let in_basis = rho_prime.in_basis(x)?;
    let diag_deficit = 1.0 - in_basis[(n, n)].re;
    let max_offdiag = (0..x.dim())
        .filter(|&k| k != n)
        .map(|k| in_basis[(k, n)].norm())
        .fold(0.0, f64::max);
    let trace_dist_to_projector = linalg::trace_norm(&(rho_prime.matrix() - &x.projector(n)?))?;
    let root = delta.max(0.0).sqrt();
    let passes_bound = diag_deficit <= delta + COLLAPSE_BOUND_SLACK
        && max_offdiag <= root + COLLAPSE_BOUND_SLACK
        && trace_dist_to_projector <= 2.0 * root + delta + COLLAPSE_BOUND_SLACK;
    Ok(CollapseCheck {
        diag_deficit,
        max_offdiag,
        trace_dist_to_projector,
        passes_bound,
    })
}
