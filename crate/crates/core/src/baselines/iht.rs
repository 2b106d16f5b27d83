use std::time::Instant;

use super::check_dims;
use crate::astar::DEFAULT_EPSILON;
use crate::error::{input, Result};
use crate::linalg::{top_indices, Matrix, Vector};
use crate::output::{RecoveryOutput, SearchStats};

/// Iterative hard thresholding, `x <- H_K(x + step * Phi^T (y - Phi x))`.
///
/// Columns are used as given (no normalization). The iteration stops after
/// `max_iter` rounds, when the residue stalls, or when it drops below
/// `1e-6 ||y||`. A residue ten times larger than `||y||` marks the run as
/// diverged (`converged = false`).
pub fn iht_recover(
    phi: &Matrix,
    y: &Vector,
    k: usize,
    step: f64,
    max_iter: usize,
) -> Result<RecoveryOutput> {
    check_dims(phi, y)?;
    if step.is_nan() || step <= 0.0 {
        return input(format!("step must be positive, got {step}"));
    }
    if k == 0 || k > phi.ncols() {
        return input(format!("need 1 <= K <= N, got K={k}"));
    }
    let start = Instant::now();
    let y_norm = y.norm();
    let threshold = DEFAULT_EPSILON * y_norm;
    let mut stats = SearchStats::default();
    let mut x = Vector::zeros(phi.ncols());
    let mut residue = y.clone();
    let mut previous = y_norm;
    let mut converged = true;
    let mut support: Vec<usize> = Vec::new();

    while stats.iterations < max_iter && previous > threshold {
        stats.iterations += 1;
        let proxy = &x + phi.tr_mul(&residue) * step;
        let magnitudes: Vec<f64> = proxy.iter().map(|v| v.abs()).collect();
        support = top_indices(&magnitudes, k, &[])?;
        support.sort_unstable();
        x.fill(0.0);
        for &j in &support {
            x[j] = proxy[j];
        }
        residue = y - phi * &x;
        let now = residue.norm();
        if now > 10.0 * y_norm {
            converged = false;
            break;
        }
        if (previous - now).abs() <= 1e-12 * y_norm {
            break;
        }
        previous = now;
    }

    let values: Vec<f64> = support.iter().map(|&j| x[j]).collect();
    let mut out = RecoveryOutput::assemble("IHT", phi, y, support, &values, DEFAULT_EPSILON, stats);
    out.converged = converged;
    out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}
