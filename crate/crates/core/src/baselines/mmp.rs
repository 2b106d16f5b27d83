use std::time::Instant;

use super::check_dims;
use crate::astar::DEFAULT_EPSILON;
use crate::error::{input, Error, Result};
use crate::linalg::{correlations, top_indices, IncrementalFactorization, Matrix, Vector};
use crate::output::{RecoveryOutput, SearchStats};

/// Depth-first multipath matching pursuit.
///
/// Walks the tree in which every node branches into the `L` atoms most
/// correlated with its residue (descending correlation, ties by ascending
/// index), depth first, down to `K` atoms. A node is a leaf when it has `K`
/// atoms or its residue is below `1e-6 ||y||`. The walk stops at the first
/// leaf meeting the residue test or after `max_paths` leaves, and returns
/// the leaf with the smallest residue. Supports reached through different
/// orders are not deduplicated.
pub fn mmp_df_recover(
    phi: &Matrix,
    y: &Vector,
    k: usize,
    branching: usize,
    max_paths: usize,
) -> Result<RecoveryOutput> {
    check_dims(phi, y)?;
    if k == 0 || k > phi.nrows().min(phi.ncols()) {
        return input(format!("MMP-DF needs 1 <= K <= min(M, N), got K={k}"));
    }
    if branching == 0 || max_paths == 0 {
        return input("MMP-DF needs L >= 1 and max_paths >= 1");
    }
    let start = Instant::now();
    let mut walk = Walk {
        phi,
        k,
        branching,
        max_paths,
        threshold: DEFAULT_EPSILON * y.norm(),
        leaves: 0,
        best: None,
        done: false,
        stats: SearchStats::default(),
    };
    walk.visit(IncrementalFactorization::new(y))?;
    let best = walk
        .best
        .take()
        .unwrap_or_else(|| IncrementalFactorization::new(y));
    let mut stats = walk.stats;
    stats.paths_opened = walk.leaves;
    let mut out = RecoveryOutput::assemble(
        "MMP-DF",
        phi,
        y,
        best.support().to_vec(),
        &best.coefficients(),
        DEFAULT_EPSILON,
        stats,
    );
    out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}

struct Walk<'a> {
    phi: &'a Matrix,
    k: usize,
    branching: usize,
    max_paths: usize,
    threshold: f64,
    leaves: usize,
    best: Option<IncrementalFactorization>,
    done: bool,
    stats: SearchStats,
}

impl Walk<'_> {
    fn visit(&mut self, node: IncrementalFactorization) -> Result<()> {
        if self.done {
            return Ok(());
        }
        let norm = node.residue_norm();
        if node.len() == self.k || norm <= self.threshold {
            self.leaves += 1;
            if self.best.as_ref().is_none_or(|b| norm < b.residue_norm()) {
                self.best = Some(node);
            }
            self.done = norm <= self.threshold || self.leaves >= self.max_paths;
            return Ok(());
        }
        self.stats.iterations += 1;
        let scores = correlations(self.phi, node.residue())?;
        let count = self.branching.min(self.phi.ncols() - node.len());
        for atom in top_indices(scores.as_slice(), count, node.support())? {
            if self.done {
                break;
            }
            self.stats.nodes_expanded += 1;
            match node.with_column(self.phi, atom) {
                Ok(child) => self.visit(child)?,
                Err(Error::SingularSupport { .. }) => self.stats.singular_skips += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::*;
    use super::super::omp_recover;
    use super::*;

    /// Independent DFS with normal-equation projections; returns leaves in
    /// visiting order as (support, residue norm).
    fn dfs_oracle(phi: &Matrix, y: &Vector, k: usize, l: usize) -> Vec<(Vec<usize>, f64)> {
        fn rec(
            phi: &Matrix,
            y: &Vector,
            k: usize,
            l: usize,
            s: Vec<usize>,
            out: &mut Vec<(Vec<usize>, f64)>,
        ) {
            let r = if s.is_empty() {
                y.clone()
            } else {
                let a = phi.select_columns(&s);
                let z = (a.transpose() * &a)
                    .lu()
                    .solve(&(a.transpose() * y))
                    .unwrap();
                y - a * z
            };
            if s.len() == k {
                out.push((s, r.norm()));
                return;
            }
            let mut order: Vec<usize> = (0..phi.ncols()).filter(|j| !s.contains(j)).collect();
            order.sort_by(|&a, &b| {
                phi.column(b)
                    .dot(&r)
                    .abs()
                    .total_cmp(&phi.column(a).dot(&r).abs())
                    .then(a.cmp(&b))
            });
            for &j in order.iter().take(l) {
                let mut next = s.clone();
                next.push(j);
                rec(phi, y, k, l, next, out);
            }
        }
        let mut out = Vec::new();
        rec(phi, y, k, l, Vec::new(), &mut out);
        out
    }

    #[test]
    fn single_branch_is_omp() {
        let phi = toy();
        let y = combo(&phi, &[(1, 0.5), (3, 1.0), (5, -0.2)]);
        let mmp = mmp_df_recover(&phi, &y, 3, 1, 50).unwrap();
        let omp = omp_recover(&phi, &y, 0.0, 3).unwrap();
        assert_eq!(mmp.support, omp.support);
    }

    #[test]
    fn exact_one_sparse() {
        let phi = orthonormal8();
        let y = combo(&phi, &[(4, 2.0)]);
        let out = mmp_df_recover(&phi, &y, 1, 6, 200).unwrap();
        assert_eq!(out.support, vec![4]);
        assert_eq!(out.stats.paths_opened, 1);
    }

    #[test]
    fn toy_against_exhaustive_dfs() {
        let phi = toy();
        // y outside every 2-column span so no early stop
        let y = Vector::from_vec(vec![0.3, -1.0, 0.8, 0.25]);
        let leaves = dfs_oracle(&phi, &y, 2, 2);
        assert_eq!(leaves.len(), 4);
        let first3 = &leaves[..3];
        let expected = first3.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let out = mmp_df_recover(&phi, &y, 2, 2, 3).unwrap();
        assert_eq!(out.support, expected.0);
        assert_eq!(out.stats.paths_opened, 3);
        assert!((out.residue_norm - expected.1).abs() < 1e-12);
    }

    #[test]
    fn first_branch_contains_omp_path() {
        let phi = crate::signal::gen_matrix(12, 30, 4).unwrap().phi;
        let inst =
            crate::signal::gen_instance(30, 4, crate::signal::Ensemble::Gaussian, 9, &phi).unwrap();
        let omp = omp_recover(&phi, &inst.y, 0.0, 4).unwrap();
        let first = mmp_df_recover(&phi, &inst.y, 4, 30, 1).unwrap();
        assert_eq!(first.support, omp.support);
    }
}
