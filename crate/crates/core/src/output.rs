use serde::{Deserialize, Serialize};

use crate::linalg::{scatter, Matrix, Vector};

/// Why a solver stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// `||y - Phi x_hat|| <= epsilon ||y||`.
    ResidueMet,
    /// No path (or iteration budget) remained; the best available estimate is
    /// returned.
    AllComplete,
}

/// Counters collected while solving. Baselines fill only the fields that
/// apply to them.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    /// Select/expand rounds, or solver iterations for the baselines.
    pub iterations: usize,
    /// Candidate paths inserted into the search tree.
    pub paths_opened: usize,
    /// Candidate children evaluated (one projection each).
    pub nodes_expanded: usize,
    /// Candidates discarded because an equal support already existed.
    pub equivalent_hits: usize,
    /// Candidates discarded because their columns were linearly dependent.
    pub singular_skips: usize,
    /// Invariant violations found by the optional search audit.
    pub audit_violations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecoveryOutput {
    pub solver: String,
    /// Selected atoms in the order they were chosen.
    pub support: Vec<usize>,
    /// Dense estimate of length `N`, zero off the support.
    pub coefficients: Vec<f64>,
    pub residue_norm: f64,
    pub reason: TerminationReason,
    /// False when an iterative baseline diverged.
    pub converged: bool,
    pub stats: SearchStats,
    pub wall_time_ms: f64,
}

impl RecoveryOutput {
    /// Assembles an output from a support and its least-squares values. The
    /// residue is recomputed from the dense estimate and the reason follows
    /// from the residue test.
    pub(crate) fn assemble(
        solver: impl Into<String>,
        phi: &Matrix,
        y: &Vector,
        support: Vec<usize>,
        values: &[f64],
        epsilon: f64,
        stats: SearchStats,
    ) -> Self {
        let x = scatter(phi.ncols(), &support, values);
        let residue_norm = (y - phi * &x).norm();
        let reason = if residue_norm <= epsilon * y.norm() {
            TerminationReason::ResidueMet
        } else {
            TerminationReason::AllComplete
        };
        Self {
            solver: solver.into(),
            support,
            coefficients: x.iter().copied().collect(),
            residue_norm,
            reason,
            converged: true,
            stats,
            wall_time_ms: 0.0,
        }
    }

    pub fn estimate(&self) -> Vector {
        Vector::from_column_slice(&self.coefficients)
    }

    pub fn sorted_support(&self) -> Vec<usize> {
        let mut s = self.support.clone();
        s.sort_unstable();
        s
    }

    /// Equality on everything except wall time.
    pub fn same_result(&self, other: &Self) -> bool {
        self.solver == other.solver
            && self.support == other.support
            && self.coefficients == other.coefficients
            && self.residue_norm == other.residue_norm
            && self.reason == other.reason
            && self.converged == other.converged
            && self.stats == other.stats
    }
}
