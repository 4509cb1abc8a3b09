//! Finite classical statistical systems.
//!
//! A configuration space `{0, …, N-1}` carries a probability distribution and
//! two labelings that play the role of the outcomes of a first and a second
//! measurement. Time evolution is a permutation-valued flow that is the
//! identity at `t = 0`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance;

/// A set of configuration points.
pub type PointSet = BTreeSet<usize>;

/// Piecewise-constant permutation flow. `flow(t)` is the identity for
/// `t < breakpoints[0].0` and the permutation of the last breakpoint not
/// exceeding `t` otherwise. All breakpoints are strictly positive, so
/// `flow(0)` is always the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    breakpoints: Vec<(f64, Vec<usize>)>,
}

impl Flow {
    pub fn identity() -> Self {
        Self {
            breakpoints: Vec::new(),
        }
    }

    /// Identity below `threshold`, `permutation` from `threshold` on.
    pub fn switch_at(threshold: f64, permutation: Vec<usize>) -> Result<Self> {
        Self::piecewise(vec![(threshold, permutation)])
    }

    pub fn piecewise(mut breakpoints: Vec<(f64, Vec<usize>)>) -> Result<Self> {
        breakpoints.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (t, perm) in &breakpoints {
            if !(t.is_finite() && *t > 0.0) {
                return Err(Error::InvalidSystem(format!(
                    "flow breakpoint {t} must be positive"
                )));
            }
            check_permutation(perm)?;
        }
        if breakpoints.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidSystem("duplicate flow breakpoint".into()));
        }
        Ok(Self { breakpoints })
    }

    /// Permutation at time `t`, or `None` for the identity.
    pub fn at(&self, t: f64) -> Option<&[usize]> {
        self.breakpoints
            .iter()
            .rev()
            .find(|(start, _)| *start <= t)
            .map(|(_, p)| p.as_slice())
    }

    /// Image of `set` under `flow(t)`.
    pub fn image(&self, set: &PointSet, t: f64) -> PointSet {
        match self.at(t) {
            None => set.clone(),
            Some(perm) => set.iter().map(|&i| perm[i]).collect(),
        }
    }

    fn check_size(&self, n: usize) -> Result<()> {
        match self.breakpoints.iter().find(|(_, p)| p.len() != n) {
            Some((_, p)) => Err(Error::InvalidSystem(format!(
                "flow permutation has length {}, space has {n} points",
                p.len()
            ))),
            None => Ok(()),
        }
    }
}

fn check_permutation(perm: &[usize]) -> Result<()> {
    let mut seen = vec![false; perm.len()];
    for &i in perm {
        if i >= perm.len() || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidSystem(format!(
                "{perm:?} is not a permutation"
            )));
        }
    }
    Ok(())
}

/// Finite configuration space with a distribution, two outcome labelings and
/// a flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalSystem {
    distribution: Vec<f64>,
    x_labels: Vec<f64>,
    y_labels: Vec<f64>,
    flow: Flow,
}

impl ClassicalSystem {
    pub fn new(
        distribution: Vec<f64>,
        x_labels: Vec<f64>,
        y_labels: Vec<f64>,
        flow: Flow,
    ) -> Result<Self> {
        let n = distribution.len();
        if n == 0 {
            return Err(Error::InvalidSystem("empty configuration space".into()));
        }
        if x_labels.len() != n || y_labels.len() != n {
            return Err(Error::InvalidSystem(format!(
                "{n} points but {} first and {} second labels",
                x_labels.len(),
                y_labels.len()
            )));
        }
        if let Some(p) = distribution.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidSystem(format!("probability {p} is negative")));
        }
        let total: f64 = distribution.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidSystem(format!(
                "distribution sums to {total}"
            )));
        }
        if x_labels.iter().chain(&y_labels).any(|l| !l.is_finite()) {
            return Err(Error::InvalidSystem("labels must be finite".into()));
        }
        flow.check_size(n)?;
        Ok(Self {
            distribution,
            x_labels,
            y_labels,
            flow,
        })
    }

    pub fn size(&self) -> usize {
        self.distribution.len()
    }

    pub fn distribution(&self) -> &[f64] {
        &self.distribution
    }

    pub fn x_labels(&self) -> &[f64] {
        &self.x_labels
    }

    pub fn y_labels(&self) -> &[f64] {
        &self.y_labels
    }

    pub fn flow(&self) -> &Flow {
        &self.flow
    }

    pub fn probability(&self, set: &PointSet) -> f64 {
        set.iter().map(|&i| self.distribution[i]).sum()
    }

    /// Cells `{Xₙ}` of the first labeling, ascending by label.
    pub fn x_cells(&self) -> Vec<(f64, PointSet)> {
        cells(&self.x_labels)
    }

    /// Cells `{Yₘ}` of the second labeling, ascending by label.
    pub fn y_cells(&self) -> Vec<(f64, PointSet)> {
        cells(&self.y_labels)
    }

    /// Same system with points renamed by `perm` (point `i` becomes `perm[i]`).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm)?;
        if perm.len() != self.size() {
            return Err(Error::DimMismatch {
                expected: self.size(),
                found: perm.len(),
            });
        }
        let permute = |v: &[f64]| {
            let mut out = vec![0.0; v.len()];
            for (i, &x) in v.iter().enumerate() {
                out[perm[i]] = x;
            }
            out
        };
        let mut inverse = vec![0; perm.len()];
        for (i, &j) in perm.iter().enumerate() {
            inverse[j] = i;
        }
        let flow = Flow {
            breakpoints: self
                .flow
                .breakpoints
                .iter()
                .map(|(t, p)| (*t, (0..p.len()).map(|j| perm[p[inverse[j]]]).collect()))
                .collect(),
        };
        Ok(Self {
            distribution: permute(&self.distribution),
            x_labels: permute(&self.x_labels),
            y_labels: permute(&self.y_labels),
            flow,
        })
    }
}

fn cells(labels: &[f64]) -> Vec<(f64, PointSet)> {
    let mut distinct: Vec<f64> = labels.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    distinct
        .into_iter()
        .map(|l| {
            let set = labels
                .iter()
                .enumerate()
                .filter(|(_, &x)| x == l)
                .map(|(i, _)| i)
                .collect();
            (l, set)
        })
        .collect()
}

/// `P(A ∩ B) / P(B)`.
pub fn conditional_probability(sys: &ClassicalSystem, a: &PointSet, b: &PointSet) -> Result<f64> {
    if let Some(&i) = a.iter().chain(b).find(|&&i| i >= sys.size()) {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: sys.size(),
        });
    }
    let pb = sys.probability(b);
    if pb <= tolerance::ZERO_EVENT {
        return Err(Error::ZeroConditioningEvent);
    }
    let joint: f64 = a.intersection(b).map(|&i| sys.distribution[i]).sum();
    Ok(joint / pb)
}

/// Conditional matrices `matrix[n][m] = P(Xₘ | Xₙ⁽ᵗ⁾)` of a repeated first
/// measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCmoCheck {
    pub labels: Vec<f64>,
    /// Matrix at `t = 0`.
    pub at_zero: Vec<Vec<f64>>,
    pub rows: Vec<(f64, Vec<Vec<f64>>)>,
}

impl ClassicalCmoCheck {
    pub fn at_zero_is_identity(&self) -> bool {
        self.at_zero.iter().enumerate().all(|(n, row)| {
            row.iter()
                .enumerate()
                .all(|(m, &v)| v == if n == m { 1.0 } else { 0.0 })
        })
    }
}

pub fn classical_cmo_check(sys: &ClassicalSystem, t_grid: &[f64]) -> Result<ClassicalCmoCheck> {
    if let Some(t) = t_grid.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(Error::InvalidGrid(format!("delay {t} is not positive")));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidGrid("delays must descend strictly".into()));
    }
    let cells = sys.x_cells();
    let matrix_at = |t: f64| -> Result<Vec<Vec<f64>>> {
        cells
            .iter()
            .map(|(_, xn)| {
                let moved = sys.flow.image(xn, t);
                cells
                    .iter()
                    .map(|(_, xm)| conditional_probability(sys, xm, &moved))
                    .collect()
            })
            .collect()
    };
    let at_zero = matrix_at(0.0)?;
    let rows = t_grid
        .iter()
        .map(|&t| Ok((t, matrix_at(t)?)))
        .collect::<Result<_>>()?;
    Ok(ClassicalCmoCheck {
        labels: cells.iter().map(|c| c.0).collect(),
        at_zero,
        rows,
    })
}

/// Residuals `P(Yₘ) - Σₙ P(Xₙ) P(Yₘ|Xₙ)` in ascending `Y` label order.
pub fn total_probability_check(sys: &ClassicalSystem) -> Result<Vec<f64>> {
    let x_cells = sys.x_cells();
    sys.y_cells()
        .iter()
        .map(|(_, ym)| {
            let mut total = 0.0;
            for (_, xn) in &x_cells {
                total += sys.probability(xn) * conditional_probability(sys, ym, xn)?;
            }
            Ok(sys.probability(ym) - total)
        })
        .collect()
}

/// Both sides of the law of total variance for the second labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TotalVarianceCheck {
    /// `V_{P(Y)}[Y]`.
    pub lhs: f64,
    /// `E_{P(X)}[V_{P(Y|X)}[Y]] + V_{P(X)}[E_{P(Y|X)}[Y]]`.
    pub rhs: f64,
    pub residual: f64,
}

pub fn total_variance_check(sys: &ClassicalSystem) -> Result<TotalVarianceCheck> {
    let all: PointSet = (0..sys.size()).collect();
    let (_, lhs) = conditional_moments(sys, &all)?;

    let mut weights = Vec::new();
    let mut means = Vec::new();
    let mut expected_variance = 0.0;
    for (_, xn) in sys.x_cells() {
        let pn = sys.probability(&xn);
        let (mean, var) = conditional_moments(sys, &xn)?;
        expected_variance += pn * var;
        weights.push(pn);
        means.push(mean);
    }
    let grand: f64 = weights.iter().zip(&means).map(|(w, m)| w * m).sum();
    let variance_of_means: f64 = weights
        .iter()
        .zip(&means)
        .map(|(w, m)| w * (m - grand).powi(2))
        .sum();
    let rhs = expected_variance + variance_of_means;
    Ok(TotalVarianceCheck {
        lhs,
        rhs,
        residual: lhs - rhs,
    })
}

/// Mean and variance of the `Y` labels conditioned on `cell`.
fn conditional_moments(sys: &ClassicalSystem, cell: &PointSet) -> Result<(f64, f64)> {
    let mass = sys.probability(cell);
    if mass <= tolerance::ZERO_EVENT {
        return Err(Error::ZeroConditioningEvent);
    }
    let mean = cell
        .iter()
        .map(|&i| sys.distribution[i] * sys.y_labels[i])
        .sum::<f64>()
        / mass;
    let var = cell
        .iter()
        .map(|&i| sys.distribution[i] * (sys.y_labels[i] - mean).powi(2))
        .sum::<f64>()
        / mass;
    Ok((mean, var))
}
