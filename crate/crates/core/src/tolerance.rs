//! Numerical tolerances shared by the validation layer.
//!
//! Every check that accepts or rejects an input reads its threshold from here.

/// Max entry of `|M - M†|`, relative to `max(1, max |M_ij|)`.
pub const HERMITIAN: f64 = 1e-10;

/// Allowed deviation of a state's trace from 1.
pub const TRACE: f64 = 1e-10;

/// Eigenvalues of a state may dip this far below zero.
pub const PSD: f64 = 1e-10;

/// Frobenius error of `V†V - I` for eigenvector matrices and `U†U - I` for propagators.
pub const UNITARY: f64 = 1e-10;

/// Frobenius error of `V Λ V† - M`, relative to the Frobenius norm of `M`.
pub const RECONSTRUCTION: f64 = 1e-9;

/// Relative eigenvalue gap below which an observable counts as degenerate.
pub const DEGENERACY: f64 = 1e-8;

/// Probabilities in `(-PROBABILITY_FLOOR, 0)` are clamped to zero.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Allowed deviation of a probability vector's sum from 1.
pub const PROBABILITY_SUM: f64 = 1e-10;

/// Default absolute threshold separating numerical noise from coherence.
pub const COHERENCE_THRESHOLD: f64 = 1e-8;

/// Probability mass treated as an impossible conditioning event.
pub const ZERO_EVENT: f64 = 1e-15;
