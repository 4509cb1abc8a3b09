//! The two-level worked example: parametrized state and observables plus
//! closed-form values for every derived quantity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};
use crate::quantum::{DensityMatrix, Observable};

/// Qubit state `(p, γ)` and second-observable angles `(θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitParams {
    p: f64,
    gamma: C64,
    theta: f64,
    phi: f64,
}

impl QubitParams {
    pub fn new(p: f64, gamma: C64, theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParams(format!("p = {p} is outside [0, 1]")));
        }
        if !(gamma.re.is_finite() && gamma.im.is_finite()) || gamma.norm() > 1.0 + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "|gamma| = {} exceeds 1",
                gamma.norm()
            )));
        }
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidParams("angles must be finite".into()));
        }
        Ok(Self {
            p,
            gamma,
            theta,
            phi,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn gamma(&self) -> C64 {
        self.gamma
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn state(&self) -> Result<DensityMatrix> {
        qubit_state(self.p, self.gamma)
    }

    pub fn second_observable(&self) -> Observable {
        qubit_y(self.theta, self.phi)
    }
}

/// `[[1-p, √(p(1-p)) γ], [√(p(1-p)) γ*, p]]`.
pub fn qubit_state(p: f64, gamma: C64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParams(format!("p = {p} is outside [0, 1]")));
    }
    let coherence = gamma * (p * (1.0 - p)).sqrt();
    DensityMatrix::new(ComplexMatrix::from_rows(vec![
        vec![C64::new(1.0 - p, 0.0), coherence],
        vec![coherence.conj(), C64::new(p, 0.0)],
    ])?)
}

/// `diag(-1, 1)`.
pub fn qubit_x() -> Observable {
    qubit_y(0.0, 0.0)
}

/// `cos θ · diag(-1, 1) + sin θ · [[0, e^{-iφ}], [e^{iφ}, 0]]`, outcomes ±1.
///
/// Eigenvectors are `(cos θ/2, -e^{iφ} sin θ/2)` for `-1` and
/// `(sin θ/2, e^{iφ} cos θ/2)` for `+1`.
pub fn qubit_y(theta: f64, phi: f64) -> Observable {
    let (s, c) = (theta / 2.0).sin_cos();
    let e = C64::from_polar(1.0, phi);
    let basis = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => C64::new(c, 0.0),
        (1, 0) => -e * s,
        (0, 1) => C64::new(s, 0.0),
        _ => e * c,
    });
    Observable::from_eigenbasis(&[-1.0, 1.0], &basis)
        .expect("the qubit eigenbasis is orthonormal for every angle")
}

/// Closed-form values for a [`QubitParams`]. Pairs are ordered by ascending
/// outcome label, i.e. `[y = -1, y = +1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitClosedForms {
    pub p_direct: [f64; 2],
    pub p_post: [f64; 2],
    /// `P(y=+1) - P'(y=+1)`.
    pub residual: f64,
    pub trace_distance: f64,
    /// Variance gap at `φ = -arg γ`, `θ = π/2`.
    pub variance_gap_at_optimum: f64,
}

pub fn qubit_oracle(params: &QubitParams) -> QubitClosedForms {
    let QubitParams {
        p,
        gamma,
        theta,
        phi,
    } = *params;
    let post_plus = (1.0 + (2.0 * p - 1.0) * theta.cos()) / 2.0;
    let post_minus = (1.0 - (2.0 * p - 1.0) * theta.cos()) / 2.0;
    let interference =
        (gamma * C64::from_polar(1.0, phi)).re * (p * (1.0 - p)).sqrt() * theta.sin();
    QubitClosedForms {
        p_direct: [post_minus - interference, post_plus + interference],
        p_post: [post_minus, post_plus],
        residual: interference,
        trace_distance: 2.0 * gamma.norm() * (p * (1.0 - p)).sqrt(),
        variance_gap_at_optimum: 4.0 * gamma.norm_sqr() * p * (1.0 - p),
    }
}
