//! Certifying and quantifying coherence through its measurable effect on a
//! second measurement.
//!
//! A first measurement of `X` replaces `ρ` by its dephased ensemble `σ`.
//! Classically the statistics of a second observable `Y` would not notice;
//! quantum mechanically they do whenever `ρ` carries coherences in the `X`
//! basis and `Y` does not commute with `X`. The quantities here measure that
//! difference at the level of variances, total probabilities and the trace
//! norm of `ρ - σ`.

mod qubit;

pub use qubit::{qubit_oracle, qubit_state, qubit_x, qubit_y, QubitClosedForms, QubitParams};

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, eigh, ComplexMatrix, C64};
use crate::protocols::{
    conditional_second_distribution, direct_distribution, post_measurement_distribution,
    total_probability_residual,
};
use crate::quantum::{born_distribution, dephase, DensityMatrix, Observable};
use crate::tolerance;

/// Both sides of the total-variance comparison for `Y` with and without a
/// prior measurement of `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceGap {
    /// `E_{P(x)}[V_{P'(y|x)}[y]] + V_{P(x)}[E_{P'(y|x)}[y]]`.
    pub lhs: f64,
    /// `V_{P(y)}[y]`, the variance of `Y` on the unmeasured state.
    pub rhs: f64,
    /// `lhs - rhs`; nonzero certifies coherence.
    pub gap: f64,
    /// `⟨(ΔY)²⟩` on the dephased state, which must equal `lhs`.
    pub dephased_variance: f64,
}

pub fn variance_gap(rho: &DensityMatrix, x: &Observable, y: &Observable) -> Result<VarianceGap> {
    y.matrix().check_dim(x.dim())?;
    let first = born_distribution(rho, x)?;
    let mut expected_variance = 0.0;
    let mut means = Vec::with_capacity(x.dim());
    for (n, &pn) in first.probs().iter().enumerate() {
        let cond = conditional_second_distribution(x, y, n)?;
        expected_variance += pn * cond.variance();
        means.push(cond.mean());
    }
    let grand: f64 = first.probs().iter().zip(&means).map(|(p, m)| p * m).sum();
    let variance_of_means: f64 = first
        .probs()
        .iter()
        .zip(&means)
        .map(|(p, m)| p * (m - grand).powi(2))
        .sum();
    let lhs = expected_variance + variance_of_means;
    let rhs = direct_distribution(rho, y)?.variance();
    let dephased_variance = born_distribution(&dephase(rho, x)?, y)?.variance();
    debug_assert!(
        (lhs - dephased_variance).abs() <= 1e-10 * lhs.abs().max(1.0),
        "conditional decomposition {lhs} disagrees with dephased variance {dephased_variance}"
    );
    Ok(VarianceGap {
        lhs,
        rhs,
        gap: lhs - rhs,
        dephased_variance,
    })
}

/// `‖ρ - σ‖₁` with `σ` the dephased state.
pub fn trace_distance_to_dephased(rho: &DensityMatrix, x: &Observable) -> Result<f64> {
    let sigma = dephase(rho, x)?;
    linalg::trace_norm(&(rho.matrix() - sigma.matrix()))
}

/// Every off-diagonal element of `ρ` in the eigenbasis of `X` is at most `tol`.
pub fn is_incoherent(rho: &DensityMatrix, x: &Observable, tol: f64) -> Result<bool> {
    Ok(rho.in_basis(x)?.max_off_diagonal() <= tol)
}

/// Angular resolution of the qubit observable search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularGrid {
    pub phi_points: usize,
    pub theta_points: usize,
    /// Target interval width of the golden-section refinement, in radians.
    pub refine_to: f64,
}

impl Default for AngularGrid {
    fn default() -> Self {
        Self {
            phi_points: 181,
            theta_points: 91,
            refine_to: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationalResult {
    /// `max Σ_y |P(y) - P'(y)|` over the searched observables.
    pub value: f64,
    /// Maximizing azimuth in `[0, 2π)`.
    pub phi: f64,
    /// Maximizing polar angle in `[0, π]`.
    pub theta: f64,
}

/// Total-probability violation `Σ_y |P(y) - P'(y)|` for the qubit
/// observable with angles `(θ, φ)`.
pub fn qubit_violation(rho: &DensityMatrix, x: &Observable, theta: f64, phi: f64) -> Result<f64> {
    let y = qubit_y(theta, phi);
    Ok(total_probability_residual(rho, x, &y)?
        .iter()
        .map(|r| r.abs())
        .sum())
}

/// `Σ± |tr(Π± Δ)|` with `Π± = (I ± ŷ(θ, φ))/2` the spectral projectors of the
/// qubit observable and `Δ = ρ - σ`. Since `P(y±) - P'(y±) = tr(Π± Δ)`, this
/// is [`qubit_violation`] without an eigendecomposition per evaluation.
fn projected_violation(delta: &ComplexMatrix, theta: f64, phi: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    // tr(Δ ŷ) for ŷ = [[-c, s e^{-iφ}], [s e^{iφ}, c]]
    let y_expectation = -c * delta[(0, 0)].re
        + c * delta[(1, 1)].re
        + (delta[(0, 1)] * C64::from_polar(s, phi)).re
        + (delta[(1, 0)] * C64::from_polar(s, -phi)).re;
    let trace = delta.trace().re;
    (0.5 * (trace + y_expectation)).abs() + (0.5 * (trace - y_expectation)).abs()
}

/// Maximizes the total-probability violation over all qubit observables
/// (up to scale and shifts by the identity): a grid over `φ ∈ [0, 2π]`,
/// `θ ∈ [0, π]`, then one golden-section pass in `θ` and one in `φ` around
/// the best grid point.
///
/// Grid ties go to the lexicographically smallest `(θ, φ)`.
pub fn variational_trace_distance(
    rho: &DensityMatrix,
    x: &Observable,
    grid: AngularGrid,
) -> Result<VariationalResult> {
    if x.dim() != 2 {
        return Err(Error::UnsupportedDimension(x.dim()));
    }
    x.matrix().check_dim(rho.dim())?;
    if grid.phi_points < 2 || grid.theta_points < 2 {
        return Err(Error::InvalidGrid(
            "angular grid needs at least 2 points per axis".into(),
        ));
    }
    let phi_step = TAU / (grid.phi_points - 1) as f64;
    let theta_step = PI / (grid.theta_points - 1) as f64;

    let sigma = dephase(rho, x)?;
    let delta = rho.matrix() - sigma.matrix();
    let objective = |theta: f64, phi: f64| projected_violation(&delta, theta, phi);

    let mut best = VariationalResult {
        value: f64::NEG_INFINITY,
        phi: 0.0,
        theta: 0.0,
    };
    for j in 0..grid.theta_points {
        let theta = j as f64 * theta_step;
        for k in 0..grid.phi_points {
            let phi = k as f64 * phi_step;
            let value = objective(theta, phi);
            if value > best.value {
                best = VariationalResult { value, phi, theta };
            }
        }
    }

    let lo = (best.theta - theta_step).max(0.0);
    let hi = (best.theta + theta_step).min(PI);
    let theta = golden_section_max(|t| objective(t, best.phi), lo, hi, grid.refine_to);
    let value = objective(theta, best.phi);
    if value > best.value {
        best = VariationalResult {
            value,
            theta,
            ..best
        };
    }
    let phi = golden_section_max(
        |f| objective(best.theta, f),
        best.phi - phi_step,
        best.phi + phi_step,
        grid.refine_to,
    );
    let value = objective(best.theta, phi);
    if value > best.value {
        best = VariationalResult { value, phi, ..best };
    }
    best.phi = best.phi.rem_euclid(TAU);
    Ok(best)
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let ratio = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// An observable whose total-probability violation equals the trace distance.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceWitness {
    pub observable: Observable,
    /// `P(yₘ) - P'(yₘ)` per outcome.
    pub residual: Vec<f64>,
    /// `Σₘ |P(yₘ) - P'(yₘ)|`.
    pub violation: f64,
}

/// Builds the second measurement that best exposes the collapse: the
/// eigenbasis of `ρ - σ`, labeled `0, 1, …, d-1`. Its outcome probabilities
/// differ by exactly the eigenvalues of `ρ - σ`, so the violation saturates
/// the trace norm in any dimension.
pub fn coherence_witness(rho: &DensityMatrix, x: &Observable) -> Result<CoherenceWitness> {
    let sigma = dephase(rho, x)?;
    let difference = eigh(&(rho.matrix() - sigma.matrix()))?;
    let labels: Vec<f64> = (0..x.dim()).map(|k| k as f64).collect();
    let observable = Observable::from_eigenbasis(&labels, difference.eigenvectors())?;
    let residual = total_probability_residual(rho, x, &observable)?;
    let violation = residual.iter().map(|r| r.abs()).sum();
    Ok(CoherenceWitness {
        observable,
        residual,
        violation,
    })
}

/// Summary verdict on whether a state is coherent with respect to `X`, probed
/// with second measurement `Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub variance_lhs: f64,
    pub variance_rhs: f64,
    pub variance_gap: f64,
    pub trace_distance: f64,
    /// `max_m |P(yₘ) - P'(yₘ)|`.
    pub max_total_prob_violation: f64,
    /// Largest coherence `|⟨xₘ|ρ|xₙ⟩|`, `m ≠ n`.
    pub max_coherence: f64,
    /// All of the above are within `tolerance_used`.
    pub incoherent: bool,
    pub tolerance_used: f64,
}

pub fn coherence_audit(
    rho: &DensityMatrix,
    x: &Observable,
    y: &Observable,
    tolerance: f64,
) -> Result<CoherenceReport> {
    let gap = variance_gap(rho, x, y)?;
    let trace_distance = trace_distance_to_dephased(rho, x)?;
    let max_total_prob_violation = total_probability_residual(rho, x, y)?
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()));
    let max_coherence = rho.in_basis(x)?.max_off_diagonal();
    let incoherent = [
        gap.gap.abs(),
        trace_distance,
        max_total_prob_violation,
        max_coherence,
    ]
    .iter()
    .all(|&v| v <= tolerance);
    Ok(CoherenceReport {
        variance_lhs: gap.lhs,
        variance_rhs: gap.rhs,
        variance_gap: gap.gap,
        trace_distance,
        max_total_prob_violation,
        max_coherence,
        incoherent,
        tolerance_used: tolerance,
    })
}

/// [`coherence_audit`] at the default threshold.
pub fn coherence_audit_default(
    rho: &DensityMatrix,
    x: &Observable,
    y: &Observable,
) -> Result<CoherenceReport> {
    coherence_audit(rho, x, y, tolerance::COHERENCE_THRESHOLD)
}

/// `P'(y)` from the qubit pipeline, for comparison with [`qubit_oracle`].
pub fn qubit_pipeline(params: &QubitParams) -> Result<QubitClosedForms> {
    let rho = params.state()?;
    let x = qubit_x();
    let y = params.second_observable();
    let direct = direct_distribution(&rho, &y)?;
    let post = post_measurement_distribution(&rho, &x, &y)?;
    let optimum = qubit_y(PI / 2.0, -params.gamma().arg());
    Ok(QubitClosedForms {
        p_direct: [direct.prob(0), direct.prob(1)],
        p_post: [post.prob(0), post.prob(1)],
        residual: direct.prob(1) - post.prob(1),
        trace_distance: trace_distance_to_dephased(&rho, &x)?,
        variance_gap_at_optimum: variance_gap(&rho, &x, &optimum)?.gap,
    })
}
