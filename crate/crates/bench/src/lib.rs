//! Shared fixtures for the criterion benches.

use aomp_core::signal::{gen_instance, gen_matrix};
use aomp_core::{Ensemble, Matrix, SparseInstance};

/// A Gaussian `k`-sparse problem on an `m x n` matrix, seeded.
pub fn problem(n: usize, m: usize, k: usize, seed: u64) -> (Matrix, SparseInstance) {
    let phi = gen_matrix(m, n, seed).expect("valid shape").phi;
    let inst = gen_instance(n, k, Ensemble::Gaussian, seed, &phi).expect("valid sparsity");
    (phi, inst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_consistent() {
        let (phi, inst) = problem(64, 32, 5, 1);
        assert_eq!(phi.shape(), (32, 64));
        assert_eq!(inst.k(), 5);
        assert!((&phi * &inst.x - &inst.y).norm() < 1e-12);
    }
}
