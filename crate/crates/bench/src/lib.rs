//! Fixed, seeded inputs shared by the benchmarks.

use collapse_lab::{random, ComplexMatrix, DensityMatrix, Observable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn hermitian(dim: usize, seed: u64) -> ComplexMatrix {
    random::hermitian(&mut rng(seed), dim, 1.0)
}

pub fn state_and_observable(dim: usize, seed: u64) -> (DensityMatrix, Observable) {
    let mut r = rng(seed);
    let rho = random::density_matrix(&mut r, dim);
    let x = random::observable(&mut r, dim);
    (rho, x)
}
