//! # collapse-lab
//!
//! Simulation of sequential projective measurements and of their classical
//! configuration-space analog.
//!
//! The crate shows numerically that demanding repeatable outcomes for an
//! immediately repeated measurement forces the post-measurement state to be
//! the eigenprojector of the observed outcome, and it measures how far a
//! quantum state departs from classical statistics: a classical system obeys
//! the laws of total probability and total variance exactly, while a quantum
//! state with coherences in the basis of the first measurement violates them
//! for a non-commuting second measurement.
//!
//! - [`linalg`]: dense complex matrices, Jacobi eigensolver, propagators, trace norm.
//! - [`quantum`]: states, observables, Born rule, collapse, dephasing, evolution.
//! - [`protocols`]: two-measurement distributions, short-delay probe, record sampler.
//! - [`classical`]: finite classical systems with permutation flows.
//! - [`coherence`]: variance gap, trace distance, qubit closed forms.

#![forbid(unsafe_code)]

pub mod classical;
pub mod coherence;
pub mod error;
pub mod linalg;
pub mod protocols;
pub mod quantum;
pub mod random;
pub mod tolerance;

pub use classical::{ClassicalSystem, Flow, PointSet};
pub use coherence::{CoherenceReport, QubitClosedForms, QubitParams};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, SpectralDecomposition, C64};
pub use protocols::{MeasurementRecord, MeasurementStep};
pub use quantum::{DensityMatrix, Observable, OutcomeDistribution};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
