//! Random instances for property tests, benchmarks and randomized scenarios.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::classical::{ClassicalSystem, Flow};
use crate::linalg::{ComplexMatrix, C64};
use crate::quantum::{DensityMatrix, Observable};

fn complex<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Hermitian matrix with entries of magnitude up to `scale`.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(dim, |_, _| complex(rng) * scale);
    g.hermitian_part()
}

/// Normalized vector with uniformly random complex components.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| complex(rng)).collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-3 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// `G G† / tr(G G†)` for a random `dim × rank` matrix `G`; full rank when
/// `rank = dim`.
pub fn density_matrix_of_rank<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    rank: usize,
) -> DensityMatrix {
    let columns: Vec<Vec<C64>> = (0..rank.max(1)).map(|_| unit_vector(rng, dim)).collect();
    let weights: Vec<f64> = columns.iter().map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = ComplexMatrix::zeros(dim);
    for (col, w) in columns.iter().zip(&weights) {
        m = &m + &ComplexMatrix::outer(col, col).scale(C64::new(w / total, 0.0));
    }
    DensityMatrix::new(m).expect("a convex mixture of pure states is a state")
}

pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    density_matrix_of_rank(rng, dim, dim)
}

/// Pure state `|ψ⟩⟨ψ|`.
pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DensityMatrix {
    DensityMatrix::pure(&unit_vector(rng, dim)).expect("unit vectors are valid states")
}

/// Random non-degenerate observable.
pub fn observable<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Observable {
    loop {
        if let Ok(obs) = Observable::new(hermitian(rng, dim, 1.0)) {
            if obs.spectral().min_gap() > 1e-3 {
                return obs;
            }
        }
    }
}

/// Random system on `size` points with up to `max_cells` cells per labeling.
/// Every cell carries positive probability, and the flow switches to a random
/// permutation at `t = 1`.
pub fn classical_system<R: Rng + ?Sized>(
    rng: &mut R,
    size: usize,
    max_cells: usize,
) -> ClassicalSystem {
    let weights: Vec<f64> = (0..size).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut distribution: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let drift = 1.0 - distribution.iter().sum::<f64>();
    distribution[0] += drift;

    let labeling = |rng: &mut R| {
        let cells = rng.gen_range(1..=max_cells.clamp(1, size));
        let values: Vec<f64> = (0..cells).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mut labels: Vec<f64> = (0..size)
            .map(|i| {
                if i < cells {
                    values[i]
                } else {
                    values[rng.gen_range(0..cells)]
                }
            })
            .collect();
        labels.shuffle(rng);
        labels
    };
    let x_labels = labeling(rng);
    let y_labels = labeling(rng);
    let mut perm: Vec<usize> = (0..size).collect();
    perm.shuffle(rng);
    let flow = Flow::switch_at(1.0, perm).expect("shuffled indices form a permutation");
    ClassicalSystem::new(distribution, x_labels, y_labels, flow)
        .expect("generated systems are valid")
}
