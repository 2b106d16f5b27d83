use std::time::Instant;

use super::check_dims;
use crate::error::{input, Error, Result};
use crate::linalg::{correlations, top_indices, IncrementalFactorization, Matrix, Vector};
use crate::output::{RecoveryOutput, SearchStats};

/// Forward-backward pursuit.
///
/// Each iteration adds the `alpha` atoms most correlated with the residue,
/// projects, drops the `beta` atoms with the smallest coefficient
/// magnitudes and reprojects, so the support grows by `alpha - beta` per
/// iteration. Stops when `||r|| <= epsilon ||y||`, after `max_iter`
/// iterations, or when the forward step would exceed `M` atoms.
pub fn fbp_recover(
    phi: &Matrix,
    y: &Vector,
    alpha: usize,
    beta: usize,
    epsilon: f64,
    max_iter: usize,
) -> Result<RecoveryOutput> {
    check_dims(phi, y)?;
    if !(alpha > beta && beta >= 1) {
        return input(format!(
            "FBP needs alpha > beta >= 1, got alpha={alpha}, beta={beta}"
        ));
    }
    let start = Instant::now();
    let (m, n) = phi.shape();
    let threshold = epsilon * y.norm();
    let mut stats = SearchStats::default();
    let mut fact = IncrementalFactorization::new(y);

    while stats.iterations < max_iter
        && fact.residue_norm() > threshold
        && fact.len() + alpha <= m.min(n)
    {
        stats.iterations += 1;
        let scores = correlations(phi, fact.residue())?;
        let forward = top_indices(scores.as_slice(), alpha, fact.support())?;
        let mut wide = fact.clone();
        let mut singular = false;
        for j in forward {
            match wide.append(phi, j) {
                Ok(()) => {}
                Err(Error::SingularSupport { .. }) => {
                    stats.singular_skips += 1;
                    singular = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if singular {
            break;
        }
        let magnitudes: Vec<f64> = wide.coefficients().iter().map(|c| -c.abs()).collect();
        // the beta smallest magnitudes are the top-beta of the negated values
        let dropped = top_indices(&magnitudes, beta, &[])?;
        let kept: Vec<usize> = wide
            .support()
            .iter()
            .enumerate()
            .filter(|(i, _)| !dropped.contains(i))
            .map(|(_, &j)| j)
            .collect();
        fact = IncrementalFactorization::from_support(phi, y, &kept)?;
    }

    let mut out = RecoveryOutput::assemble(
        "FBP",
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

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::*;

    fn lstsq(phi: &Matrix, y: &Vector, s: &[usize]) -> (Vector, Vector) {
        let a = phi.select_columns(s);
        let z = (a.transpose() * &a)
            .lu()
            .solve(&(a.transpose() * y))
            .unwrap();
        let r = y - a * &z;
        (z, r)
    }

    #[test]
    fn orthonormal_one_sparse() {
        let phi = orthonormal8();
        let y = combo(&phi, &[(5, -1.5)]);
        let out = fbp_recover(&phi, &y, 2, 1, 1e-6, 10).unwrap();
        assert_eq!(out.support, vec![5]);
        assert!(out.residue_norm < 1e-12);
    }

    #[test]
    fn zero_observation() {
        let out = fbp_recover(&toy(), &Vector::zeros(4), 2, 1, 1e-6, 10).unwrap();
        assert!(out.support.is_empty());
    }

    #[test]
    fn toy_two_iteration_replay() {
        let phi = toy();
        let y = combo(&phi, &[(0, 1.0), (4, 0.7), (5, -0.4)]);
        // hand replay with alpha = 2, beta = 1
        let mut support: Vec<usize> = Vec::new();
        let mut r = y.clone();
        for _ in 0..2 {
            let mut order: Vec<usize> = (0..6).filter(|j| !support.contains(j)).collect();
            order.sort_by(|&a, &b| {
                phi.column(b)
                    .dot(&r)
                    .abs()
                    .total_cmp(&phi.column(a).dot(&r).abs())
                    .then(a.cmp(&b))
            });
            let mut wide = support.clone();
            wide.extend(&order[..2]);
            let (z, _) = lstsq(&phi, &y, &wide);
            let drop = (0..wide.len())
                .min_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs()))
                .unwrap();
            wide.remove(drop);
            support = wide;
            r = lstsq(&phi, &y, &support).1;
        }
        let out = fbp_recover(&phi, &y, 2, 1, 0.0, 2).unwrap();
        assert_eq!(out.support, support);
        assert!((out.residue_norm - r.norm()).abs() < 1e-12);
    }

    #[test]
    fn parameter_checks() {
        assert!(fbp_recover(&toy(), &Vector::zeros(4), 1, 1, 1e-6, 1).is_err());
        assert!(fbp_recover(&toy(), &Vector::zeros(4), 2, 0, 1e-6, 1).is_err());
    }
}
