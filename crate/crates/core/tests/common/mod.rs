#![allow(dead_code)]

use cur_deim::DenseMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DenseMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

/// Orthonormal basis from the Q factor of a Gaussian matrix.
pub fn orthonormal(rows: usize, cols: usize, seed: u64) -> DenseMatrix {
    gaussian(rows, cols, seed).qr().q()
}
