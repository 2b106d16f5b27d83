//! Multiplicative path cost models.
//!
//! Both models take the per-prefix residue-norm history of a path,
//! `[||r_0||, ||r_1||, ..., ||r_l||]` with `||r_0|| = ||y||`, and extrapolate
//! the residue the path would reach after `kmax - l` further nodes.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum CostModel {
    /// Fixed decay `alpha` per unexplored node, `0 < alpha < 1`.
    Mul { alpha: f64 },
    /// Decay `alpha * ||r_l|| / ||r_{l-1}||` per unexplored node, `0 < alpha <= 1`.
    #[serde(rename = "amul")]
    AMul { alpha: f64 },
}

impl CostModel {
    pub fn alpha(&self) -> f64 {
        match *self {
            CostModel::Mul { alpha } | CostModel::AMul { alpha } => alpha,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CostModel::Mul { .. } => "Mul",
            CostModel::AMul { .. } => "AMul",
        }
    }

    pub fn evaluate(&self, history: &[f64], kmax: usize) -> f64 {
        match *self {
            CostModel::Mul { alpha } => cost_mul(history, kmax, alpha),
            CostModel::AMul { alpha } => cost_amul(history, kmax, alpha),
        }
    }
}

fn remaining(history: &[f64], kmax: usize) -> i32 {
    let length = history.len().saturating_sub(1);
    debug_assert!(length <= kmax, "path longer than kmax");
    (kmax - length) as i32
}

/// `alpha^(kmax - l) * ||r_l||`.
pub fn cost_mul(history: &[f64], kmax: usize, alpha: f64) -> f64 {
    let last = *history.last().expect("empty residue history");
    if last == 0.0 {
        return 0.0;
    }
    alpha.powi(remaining(history, kmax)) * last
}

/// `(alpha * ||r_l|| / ||r_{l-1}||)^(kmax - l) * ||r_l||`; zero once the
/// previous residue has vanished.
pub fn cost_amul(history: &[f64], kmax: usize, alpha: f64) -> f64 {
    let l = history.len() - 1;
    assert!(l >= 1, "AMul cost needs at least one selected atom");
    let (prev, last) = (history[l - 1], history[l]);
    if prev == 0.0 || last == 0.0 {
        return 0.0;
    }
    (alpha * last / prev).powi(remaining(history, kmax)) * last
}
