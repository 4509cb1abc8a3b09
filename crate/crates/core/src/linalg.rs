//! Dense complex matrices, a cyclic Jacobi eigensolver for Hermitian input,
//! unitary propagators and the trace norm.
//!
//! Everything here works on small, exact-shape square matrices stored row-major.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tolerance;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from rows, checking shape and finiteness.
    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::EmptyMatrix);
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    row: r,
                    expected: dim,
                    found: row.len(),
                });
            }
            for (c, z) in row.into_iter().enumerate() {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                data.push(z);
            }
        }
        Ok(Self { dim, data })
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        assert_eq!(u.len(), v.len(), "outer product of unequal lengths");
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> impl Iterator<Item = &[C64]> {
        self.data.chunks(self.dim)
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self[(i, i)]).collect()
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest magnitude among entries off the main diagonal.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    best = best.max(self[(i, j)].norm());
                }
            }
        }
        best
    }

    fn off_diagonal_norm_sqr(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if i != j {
                    acc += self[(i, j)].norm_sqr();
                }
            }
        }
        acc
    }

    /// `max |M_ij - conj(M_ji)| / max(1, max |M_ij|)`.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst / self.max_abs().max(1.0)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= tolerance::HERMITIAN
    }

    /// `M v`.
    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim, "vector length mismatch");
        self.rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `⟨u| M |v⟩`.
    pub fn sandwich(&self, u: &[C64], v: &[C64]) -> C64 {
        inner(u, &self.apply(v))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn check_dim(&self, expected: usize) -> Result<()> {
        if self.dim == expected {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                expected,
                found: self.dim,
            })
        }
    }

    fn rotate_columns(&mut self, p: usize, q: usize, c: f64, s: f64, phase_conj: C64) {
        for k in 0..self.dim {
            let akp = self[(k, p)];
            let akq = self[(k, q)];
            self[(k, p)] = akp * c - akq * phase_conj * s;
            self[(k, q)] = akp * s + akq * phase_conj * c;
        }
    }

    fn rotate_rows(&mut self, p: usize, q: usize, c: f64, s: f64, phase: C64) {
        for k in 0..self.dim {
            let apk = self[(p, k)];
            let aqk = self[(q, k)];
            self[(p, k)] = apk * c - aqk * phase * s;
            self[(q, k)] = apk * s + aqk * phase * c;
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for row in self.rows() {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix product of unequal dimensions");
        let d = self.dim;
        let mut out = ComplexMatrix::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix sum of unequal dimensions");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix difference of unequal dimensions");
        ComplexMatrix {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

/// `⟨u|v⟩`, conjugating the left argument.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    assert_eq!(u.len(), v.len(), "inner product of unequal lengths");
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (as columns) of a
/// Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    eigenvalues: Vec<f64>,
    eigenvectors: ComplexMatrix,
}

impl SpectralDecomposition {
    /// Caller guarantees ascending eigenvalues and orthonormal columns.
    pub(crate) fn from_parts(eigenvalues: Vec<f64>, eigenvectors: ComplexMatrix) -> Self {
        Self {
            eigenvalues,
            eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &ComplexMatrix {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, n: usize) -> Vec<C64> {
        self.eigenvectors.column(n)
    }

    /// `V Λ V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_spectrum(|l| C64::new(l, 0.0))
    }

    /// `V f(Λ) V†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let d = self.dim();
        let v = &self.eigenvectors;
        let fl: Vec<C64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(d, |i, j| {
            (0..d).map(|k| v[(i, k)] * fl[k] * v[(j, k)].conj()).sum()
        })
    }

    /// Smallest gap between consecutive eigenvalues (infinite for d = 1).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Degeneracy threshold: `τ_deg · max(spectral range, max |λ|)`.
    pub fn degeneracy_threshold(&self) -> f64 {
        let lo = self.eigenvalues.first().copied().unwrap_or(0.0);
        let hi = self.eigenvalues.last().copied().unwrap_or(0.0);
        let scale = (hi - lo).max(lo.abs()).max(hi.abs());
        tolerance::DEGENERACY * scale
    }

    pub fn is_degenerate(&self) -> bool {
        self.dim() > 1 && self.min_gap() <= self.degeneracy_threshold()
    }
}

/// Hermitian eigendecomposition by cyclic complex Jacobi rotations.
///
/// Eigenvalues come back ascending. Each eigenvector is phase-fixed so that
/// its largest-magnitude component (lowest row on ties) is real and positive.
pub fn eigh(m: &ComplexMatrix) -> Result<SpectralDecomposition> {
    let residual = m.hermiticity_residual();
    if residual > tolerance::HERMITIAN {
        return Err(Error::NotHermitian { residual });
    }
    let d = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(d);
    let norm_sqr = a.frobenius_norm().powi(2);
    let max_sweeps = 100 * d * d;

    let mut converged = false;
    for sweep in 0..max_sweeps {
        let off = a.off_diagonal_norm_sqr();
        if off == 0.0 || off <= 1e-40 * norm_sqr {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let g = 100.0 * mag;
                if sweep > 3 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let phase = apq / mag;
                let theta = (aqq - app) / (2.0 * mag);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sign = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sign / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a.rotate_columns(p, q, c, s, phase.conj());
                a.rotate_rows(p, q, c, s, phase);
                v.rotate_columns(p, q, c, s, phase.conj());
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
    if !converged && a.off_diagonal_norm_sqr() > 1e-40 * norm_sqr {
        return Err(Error::NoConvergence { sweeps: max_sweeps });
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut eigenvectors = ComplexMatrix::zeros(d);
    for (col, &src) in order.iter().enumerate() {
        let mut vec = v.column(src);
        fix_phase(&mut vec);
        for (row, z) in vec.into_iter().enumerate() {
            eigenvectors[(row, col)] = z;
        }
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn fix_phase(vec: &mut [C64]) {
    let largest = vec.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if largest == 0.0 {
        return;
    }
    let pivot = vec
        .iter()
        .position(|z| z.norm() >= largest * (1.0 - 1e-12))
        .expect("some component attains the maximum");
    let phase = vec[pivot].conj() / vec[pivot].norm();
    for z in vec.iter_mut() {
        *z *= phase;
    }
    vec[pivot] = C64::new(vec[pivot].re, 0.0);
}

/// `exp(-i H t)` through the spectral decomposition of `H`.
pub fn unitary_exp(h: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    let spectral = eigh(h)?;
    Ok(spectral.map_spectrum(|l| C64::from_polar(1.0, -l * t)))
}

/// Sum of absolute eigenvalues of a Hermitian matrix.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(m)?.eigenvalues().iter().map(|l| l.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let err = (a - b).frobenius_norm();
        assert!(err <= tol, "matrices differ by {err:e}\n{a:?}\n{b:?}");
    }

    fn check_invariants(m: &ComplexMatrix, sd: &SpectralDecomposition) {
        let v = sd.eigenvectors();
        let d = m.dim();
        assert_close(
            &(&v.dagger() * v),
            &ComplexMatrix::identity(d),
            tolerance::UNITARY,
        );
        let rec = (&sd.reconstruct() - m).frobenius_norm() / m.frobenius_norm().max(1.0);
        assert!(
            rec < tolerance::RECONSTRUCTION,
            "reconstruction error {rec:e}"
        );
        assert!(sd.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eigh_diagonal_observable() {
        let m = ComplexMatrix::from_real_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let sd = eigh(&m).unwrap();
        assert_eq!(sd.eigenvalues(), &[-1.0, 1.0]);
        assert_close(sd.eigenvectors(), &ComplexMatrix::identity(2), 0.0);
    }

    #[test]
    fn eigh_identity() {
        let m = ComplexMatrix::identity(3);
        let sd = eigh(&m).unwrap();
        assert_eq!(sd.eigenvalues(), &[1.0, 1.0, 1.0]);
        check_invariants(&m, &sd);
        assert!(sd.is_degenerate());
    }

    #[test]
    fn eigh_pauli_x() {
        // characteristic polynomial λ² - 1: eigenvectors (1, -1)/√2 and (1, 1)/√2
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let sd = eigh(&m).unwrap();
        assert!((sd.eigenvalues()[0] + 1.0).abs() < 1e-15);
        assert!((sd.eigenvalues()[1] - 1.0).abs() < 1e-15);
        let minus = sd.eigenvector(0);
        let plus = sd.eigenvector(1);
        // phase convention: tie broken toward row 0, made real positive
        assert!((minus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((minus[1] - c(-FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((plus[0] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        assert!((plus[1] - c(FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigh_complex_hermitian() {
        let m = ComplexMatrix::from_rows(vec![
            vec![c(2.0, 0.0), c(0.5, -1.0), c(0.0, 0.3)],
            vec![c(0.5, 1.0), c(-1.0, 0.0), c(0.7, 0.2)],
            vec![c(0.0, -0.3), c(0.7, -0.2), c(0.4, 0.0)],
        ])
        .unwrap();
        let sd = eigh(&m).unwrap();
        check_invariants(&m, &sd);
        let tr: f64 = sd.eigenvalues().iter().sum();
        assert!((tr - 1.4).abs() < 1e-12);
        for n in 0..3 {
            let v = sd.eigenvector(n);
            let pivot = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap()
                .0;
            assert_eq!(v[pivot].im, 0.0);
            assert!(v[pivot].re > 0.0);
        }
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]).unwrap();
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn from_rows_validates_shape() {
        assert_eq!(ComplexMatrix::from_rows(vec![]), Err(Error::EmptyMatrix));
        let ragged = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0]]);
        assert!(matches!(ragged, Err(Error::NotSquare { row: 1, .. })));
        let nan = ComplexMatrix::from_real_rows(&[&[f64::NAN]]);
        assert_eq!(nan, Err(Error::NonFinite { row: 0, col: 0 }));
    }

    #[test]
    fn unitary_exp_at_zero_is_identity() {
        let h = ComplexMatrix::from_rows(vec![
            vec![c(0.3, 0.0), c(1.0, 2.0)],
            vec![c(1.0, -2.0), c(-0.7, 0.0)],
        ])
        .unwrap();
        assert_close(
            &unitary_exp(&h, 0.0).unwrap(),
            &ComplexMatrix::identity(2),
            1e-14,
        );
    }

    #[test]
    fn unitary_exp_diagonal_at_pi() {
        let h = ComplexMatrix::from_real_rows(&[&[-1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let u = unitary_exp(&h, PI).unwrap();
        assert_close(&u, &ComplexMatrix::identity(2).scale(c(-1.0, 0.0)), 1e-14);
    }

    #[test]
    fn trace_norm_examples() {
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3)).unwrap(), 0.0);
        let z = C64::from_polar(0.5, 0.9);
        let m = ComplexMatrix::from_rows(vec![vec![c(0.0, 0.0), z], vec![z.conj(), c(0.0, 0.0)]])
            .unwrap();
        assert!((trace_norm(&m).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degeneracy_uses_absolute_scale() {
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0 + 1e-12]]).unwrap();
        assert!(eigh(&m).unwrap().is_degenerate());
        let m = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0 + 1e-6]]).unwrap();
        assert!(!eigh(&m).unwrap().is_degenerate());
        assert!(eigh(&ComplexMatrix::zeros(2)).unwrap().is_degenerate());
        assert!(!eigh(&ComplexMatrix::zeros(1)).unwrap().is_degenerate());
    }
}
