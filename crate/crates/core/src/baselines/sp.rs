use std::time::Instant;

use super::check_dims;
use crate::astar::DEFAULT_EPSILON;
use crate::error::{input, Error, Result};
use crate::linalg::{correlations, top_indices, IncrementalFactorization, Matrix, Vector};
use crate::output::{RecoveryOutput, SearchStats};

/// Subspace pursuit.
///
/// Start from the `K` atoms most correlated with `y`. Each iteration merges
/// the `K` atoms most correlated with the residue, projects onto the union
/// of at most `2K` atoms, keeps the `K` largest coefficients and reprojects.
/// The iteration stops as soon as the residue norm fails to decrease, after
/// `max_iter` rounds, or when `||r|| <= 1e-6 ||y||`.
pub fn sp_recover(phi: &Matrix, y: &Vector, k: usize, max_iter: usize) -> Result<RecoveryOutput> {
    check_dims(phi, y)?;
    if k == 0 || 2 * k > phi.nrows() || k > phi.ncols() {
        return input(format!(
            "subspace pursuit needs 1 <= K <= M/2, got K={k}, M={}",
            phi.nrows()
        ));
    }
    let start = Instant::now();
    let threshold = DEFAULT_EPSILON * y.norm();
    let mut stats = SearchStats::default();

    let initial = correlations(phi, y)?;
    let mut support = top_indices(initial.as_slice(), k, &[])?;
    support.sort_unstable();
    let mut fact = match IncrementalFactorization::from_support(phi, y, &support) {
        Ok(f) => f,
        Err(Error::SingularSupport { .. }) => {
            stats.singular_skips += 1;
            IncrementalFactorization::new(y)
        }
        Err(e) => return Err(e),
    };

    while stats.iterations < max_iter && fact.residue_norm() > threshold && !fact.is_empty() {
        stats.iterations += 1;
        let scores = correlations(phi, fact.residue())?;
        let extra_count = k.min(phi.ncols() - fact.len());
        let extra = top_indices(scores.as_slice(), extra_count, fact.support())?;
        let mut merged = fact.support().to_vec();
        merged.extend(extra);
        let wide = match IncrementalFactorization::from_support(phi, y, &merged) {
            Ok(f) => f,
            Err(Error::SingularSupport { .. }) => {
                stats.singular_skips += 1;
                break;
            }
            Err(e) => return Err(e),
        };
        let magnitudes: Vec<f64> = wide.coefficients().iter().map(|c| c.abs()).collect();
        let mut keep: Vec<usize> = top_indices(&magnitudes, k, &[])?
            .into_iter()
            .map(|i| merged[i])
            .collect();
        keep.sort_unstable();
        let next = match IncrementalFactorization::from_support(phi, y, &keep) {
            Ok(f) => f,
            Err(Error::SingularSupport { .. }) => {
                stats.singular_skips += 1;
                break;
            }
            Err(e) => return Err(e),
        };
        if next.residue_norm() >= fact.residue_norm() {
            break;
        }
        fact = next;
    }

    let mut out = RecoveryOutput::assemble(
        "SP",
        phi,
        y,
        fact.support().to_vec(),
        &fact.coefficients(),
        DEFAULT_EPSILON,
        stats,
    );
    out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    #[test]
    fn identity_exact() {
        let phi = Matrix::identity(8, 8);
        let y = combo(&phi, &[(0, 2.0), (5, -1.0), (6, 0.5)]);
        let out = sp_recover(&phi, &y, 3, 10).unwrap();
        assert_eq!(out.support, vec![0, 5, 6]);
        assert!(out.residue_norm < 1e-12);
    }

    #[test]
    fn zero_observation() {
        let phi = orthonormal8();
        let out = sp_recover(&phi, &Vector::zeros(8), 2, 10).unwrap();
        assert!(out.coefficients.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn toy_matches_best_support() {
        // exhaustive best-K support oracle over all C(6, 2) pairs
        let phi = toy();
        // needs one swap round: the initial top-2 correlations are not {0, 2}
        let y = combo(&phi, &[(0, 1.0), (2, -0.7)]);
        let mut best = (f64::INFINITY, vec![]);
        for a in 0..6 {
            for b in a + 1..6 {
                let cols = phi.select_columns(&[a, b]);
                let z = (cols.transpose() * &cols)
                    .lu()
                    .solve(&(cols.transpose() * &y))
                    .unwrap();
                let r = (&y - cols * z).norm();
                if r < best.0 {
                    best = (r, vec![a, b]);
                }
            }
        }
        let out = sp_recover(&phi, &y, 2, 20).unwrap();
        assert_eq!(out.sorted_support(), best.1);
        assert_eq!(out.stats.iterations, 1);
        assert!(out.residue_norm < 1e-10);
    }

    #[test]
    fn sparsity_bound_enforced() {
        assert!(sp_recover(&toy(), &Vector::zeros(4), 3, 10).is_err());
    }
}
