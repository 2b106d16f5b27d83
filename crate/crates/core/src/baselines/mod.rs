//! Greedy comparison solvers.

mod fbp;
mod iht;
mod mmp;
mod omp;
mod sp;

pub use fbp::fbp_recover;
pub use iht::iht_recover;
pub use mmp::mmp_df_recover;
pub use omp::omp_recover;
pub use sp::sp_recover;

use serde::{Deserialize, Serialize};

use crate::astar::DEFAULT_EPSILON;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::output::RecoveryOutput;

/// Parameters for one baseline run. `K`-dependent solvers take the sparsity
/// at call time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum BaselineConfig {
    /// Runs to `epsilon` or `max_iter` atoms (default `K`).
    Omp {
        epsilon: f64,
        max_iter: Option<usize>,
    },
    Sp {
        max_iter: usize,
    },
    Iht {
        step: f64,
        max_iter: usize,
    },
    /// `alpha`/`beta` of `None` means `round(0.2 M)` and `alpha - 1`.
    Fbp {
        alpha: Option<usize>,
        beta: Option<usize>,
        epsilon: f64,
        max_iter: usize,
    },
    MmpDf {
        branching: usize,
        max_paths: usize,
    },
}

impl BaselineConfig {
    pub fn omp() -> Self {
        BaselineConfig::Omp {
            epsilon: DEFAULT_EPSILON,
            max_iter: None,
        }
    }

    pub fn sp() -> Self {
        BaselineConfig::Sp { max_iter: 100 }
    }

    pub fn iht() -> Self {
        BaselineConfig::Iht {
            step: 1.0,
            max_iter: 500,
        }
    }

    pub fn fbp() -> Self {
        BaselineConfig::Fbp {
            alpha: None,
            beta: None,
            epsilon: DEFAULT_EPSILON,
            max_iter: 1000,
        }
    }

    pub fn mmp_df() -> Self {
        BaselineConfig::MmpDf {
            branching: 6,
            max_paths: 200,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BaselineConfig::Omp { .. } => "OMP",
            BaselineConfig::Sp { .. } => "SP",
            BaselineConfig::Iht { .. } => "IHT",
            BaselineConfig::Fbp { .. } => "FBP",
            BaselineConfig::MmpDf { .. } => "MMP-DF",
        }
    }

    /// Runs the solver for a `k`-sparse target.
    pub fn recover(&self, phi: &Matrix, y: &Vector, k: usize) -> Result<RecoveryOutput> {
        match *self {
            BaselineConfig::Omp { epsilon, max_iter } => {
                omp_recover(phi, y, epsilon, max_iter.unwrap_or(k).min(phi.nrows()))
            }
            BaselineConfig::Sp { max_iter } => sp_recover(phi, y, k, max_iter),
            BaselineConfig::Iht { step, max_iter } => iht_recover(phi, y, k, step, max_iter),
            BaselineConfig::Fbp {
                alpha,
                beta,
                epsilon,
                max_iter,
            } => {
                let alpha = alpha.unwrap_or_else(|| default_fbp_alpha(phi.nrows()));
                let beta = beta.unwrap_or(alpha.saturating_sub(1));
                fbp_recover(phi, y, alpha, beta, epsilon, max_iter)
            }
            BaselineConfig::MmpDf {
                branching,
                max_paths,
            } => mmp_df_recover(phi, y, k, branching, max_paths),
        }
    }
}

/// `round(0.2 M)`, at least 2 so that `beta = alpha - 1 >= 1`.
pub fn default_fbp_alpha(m: usize) -> usize {
    ((0.2 * m as f64).round() as usize).max(2)
}

pub(crate) fn check_dims(phi: &Matrix, y: &Vector) -> Result<()> {
    if phi.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: phi.nrows(),
            actual: y.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::linalg::{Matrix, Vector};

    /// A fixed 4x6 matrix with distinct, generic columns.
    pub fn toy() -> Matrix {
        Matrix::from_row_slice(
            4,
            6,
            &[
                0.9, 0.1, -0.3, 0.5, 0.2, -0.7, //
                0.2, 0.8, 0.4, -0.1, 0.6, 0.3, //
                -0.1, 0.3, 0.7, 0.6, -0.5, 0.2, //
                0.4, -0.2, 0.2, 0.3, 0.4, 0.6,
            ],
        )
    }

    /// Orthonormal 8x8 matrix (a scaled Hadamard).
    pub fn orthonormal8() -> Matrix {
        let mut h = Matrix::from_element(1, 1, 1.0);
        for _ in 0..3 {
            let n = h.nrows();
            let mut next = Matrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                for j in 0..n {
                    next[(i, j)] = h[(i, j)];
                    next[(i, j + n)] = h[(i, j)];
                    next[(i + n, j)] = h[(i, j)];
                    next[(i + n, j + n)] = -h[(i, j)];
                }
            }
            h = next;
        }
        h / 8f64.sqrt()
    }

    pub fn combo(phi: &Matrix, atoms: &[(usize, f64)]) -> Vector {
        let mut y = Vector::zeros(phi.nrows());
        for &(j, v) in atoms {
            y += phi.column(j) * v;
        }
        y
    }
}
