//! Independent reference computations used by the integration tests. Nothing
//! here calls into the eigensolver or the measurement pipeline.

#![allow(dead_code, clippy::needless_range_loop)]

use collapse_lab::{ComplexMatrix, C64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Number of eigenvalues of Hermitian `m` strictly below `shift`, from the
/// signs of the pivots of `m - shift·I` (Sylvester's law of inertia).
pub fn count_below(m: &ComplexMatrix, shift: f64) -> usize {
    let d = m.dim();
    let mut a: Vec<Vec<C64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    m[(i, j)]
                        - if i == j {
                            C64::new(shift, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                })
                .collect()
        })
        .collect();
    let scale = 1e-300_f64.max(1e-18 * m.max_abs());
    let mut negatives = 0;
    for k in 0..d {
        let mut pivot = a[k][k].re;
        if pivot.abs() < scale {
            pivot = scale;
        }
        if pivot < 0.0 {
            negatives += 1;
        }
        for i in k + 1..d {
            let factor = a[i][k] / pivot;
            for j in k + 1..d {
                let update = factor * a[k][j];
                a[i][j] -= update;
            }
        }
    }
    negatives
}

/// Eigenvalues of a Hermitian matrix by bisection on inertia counts.
pub fn bisection_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let d = m.dim();
    let bound = m.frobenius_norm() + 1.0;
    (0..d)
        .map(|k| {
            // k-th smallest: smallest s with count_below(s) > k
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(m, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo < 1e-15 * bound {
                    break;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}

/// `Σ_{k<terms} (-iHt)^k / k!`.
pub fn taylor_exp(h: &ComplexMatrix, t: f64, terms: usize) -> ComplexMatrix {
    let generator = h.scale(C64::new(0.0, -t));
    let mut term = ComplexMatrix::identity(h.dim());
    let mut total = term.clone();
    for k in 1..terms {
        term = (&term * &generator).scale(C64::new(1.0 / k as f64, 0.0));
        total = &total + &term;
    }
    total
}

/// `exp(-iHt)` by scaling and squaring a 20-term series, for larger `‖H‖t`.
pub fn series_exp(h: &ComplexMatrix, t: f64) -> ComplexMatrix {
    let norm = h.frobenius_norm() * t.abs();
    let squarings = (norm.max(1.0).log2().ceil() as u32) + 4;
    let mut u = taylor_exp(h, t / f64::from(1u32 << squarings), 20);
    for _ in 0..squarings {
        u = &u * &u;
    }
    u
}

pub fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).max_abs()
}

/// `⟨u|M|v⟩` by explicit triple loop.
pub fn contract(u: &[C64], m: &ComplexMatrix, v: &[C64]) -> C64 {
    let d = u.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += u[i].conj() * m[(i, j)] * v[j];
        }
    }
    acc
}
