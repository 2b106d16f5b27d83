use serde::{Deserialize, Serialize};

use super::cost::CostModel;
use crate::error::{input, Error, Result};

/// Default residue termination ratio.
pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `kmax` equals the sparsity of the problem.
    SparsityBased,
    /// `kmax` exceeds the sparsity; the residue test decides.
    ResidueBased,
}

/// Parameters of one best-first search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AompConfig {
    /// Paths of length one opened at initialization (I).
    pub initial_paths: usize,
    /// Children explored per expansion (B).
    pub branching: usize,
    /// Maximum number of live paths (P).
    pub max_paths: usize,
    /// Maximum path length; a path of this length is complete.
    pub kmax: usize,
    /// Stop once `||r|| <= epsilon ||y||`.
    pub epsilon: f64,
    pub cost: CostModel,
    pub termination: Termination,
    /// Check the search invariants after every expansion and count violations.
    pub audit: bool,
    /// Select the best path among all paths and stop when it is complete,
    /// instead of selecting among incomplete paths only. Kept for A/B runs.
    pub legacy_selection: bool,
}

impl Default for AompConfig {
    fn default() -> Self {
        Self::amul_e(55)
    }
}

impl AompConfig {
    fn base(kmax: usize, cost: CostModel, termination: Termination) -> Self {
        Self {
            initial_paths: 3,
            branching: 2,
            max_paths: 200,
            kmax,
            epsilon: DEFAULT_EPSILON,
            cost,
            termination,
            audit: false,
            legacy_selection: false,
        }
    }

    /// Mul cost with alpha 0.8, paths limited to the sparsity `k`.
    pub fn mul_k(k: usize) -> Self {
        Self::base(k, CostModel::Mul { alpha: 0.8 }, Termination::SparsityBased)
    }

    /// Mul cost with alpha 0.9 and residue-based termination.
    pub fn mul_e(kmax: usize) -> Self {
        Self::base(
            kmax,
            CostModel::Mul { alpha: 0.9 },
            Termination::ResidueBased,
        )
    }

    /// AMul cost with alpha 0.97 and residue-based termination.
    pub fn amul_e(kmax: usize) -> Self {
        Self::base(
            kmax,
            CostModel::AMul { alpha: 0.97 },
            Termination::ResidueBased,
        )
    }

    pub fn with_shape(mut self, initial_paths: usize, branching: usize, max_paths: usize) -> Self {
        self.initial_paths = initial_paths;
        self.branching = branching;
        self.max_paths = max_paths;
        self
    }

    pub fn with_audit(mut self, audit: bool) -> Self {
        self.audit = audit;
        self
    }

    /// Name in the `<cost>-A*OMP<K|e>` convention.
    pub fn label(&self) -> String {
        let suffix = match self.termination {
            Termination::SparsityBased => "K",
            Termination::ResidueBased => "e",
        };
        format!("{}-A*OMP{}", self.cost.name(), suffix)
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_paths == 0 || self.branching == 0 {
            return input("initial_paths and branching must be at least 1");
        }
        if self.max_paths < self.initial_paths {
            return input(format!(
                "max_paths ({}) must be at least initial_paths ({})",
                self.max_paths, self.initial_paths
            ));
        }
        if self.kmax == 0 {
            return input("kmax must be at least 1");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return input(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            ));
        }
        match self.cost {
            CostModel::Mul { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                input(format!("Mul alpha must lie in (0, 1), got {alpha}"))
            }
            CostModel::AMul { alpha } if !(alpha > 0.0 && alpha <= 1.0) => {
                input(format!("AMul alpha must lie in (0, 1], got {alpha}"))
            }
            _ => Ok(()),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
