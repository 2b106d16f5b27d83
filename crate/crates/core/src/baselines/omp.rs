use std::time::Instant;

use super::check_dims;
use crate::error::{input, Error, Result};
use crate::linalg::{correlations, top_indices, IncrementalFactorization, Matrix, Vector};
use crate::output::{RecoveryOutput, SearchStats};

/// Orthogonal matching pursuit: add the atom most correlated with the
/// residue, reproject, repeat until `||r|| <= epsilon ||y||` or `max_iter`
/// atoms are selected. A dependent atom stops the iteration.
pub fn omp_recover(
    phi: &Matrix,
    y: &Vector,
    epsilon: f64,
    max_iter: usize,
) -> Result<RecoveryOutput> {
    check_dims(phi, y)?;
    if max_iter > phi.nrows() {
        return input(format!("max_iter {max_iter} exceeds M = {}", phi.nrows()));
    }
    let start = Instant::now();
    let threshold = epsilon * y.norm();
    let mut fact = IncrementalFactorization::new(y);
    let mut stats = SearchStats::default();
    while fact.len() < max_iter.min(phi.ncols()) && fact.residue_norm() > threshold {
        let scores = correlations(phi, fact.residue())?;
        let next = top_indices(scores.as_slice(), 1, fact.support())?[0];
        stats.iterations += 1;
        match fact.append(phi, next) {
            Ok(()) => {}
            Err(Error::SingularSupport { .. }) => {
                stats.singular_skips += 1;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut out = RecoveryOutput::assemble(
        "OMP",
        phi,
        y,
        fact.support().to_vec(),
        &fact.coefficients(),
        epsilon,
        stats,
    );
    out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}
