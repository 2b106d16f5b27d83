//! Solver names to fully specified solvers.

use anyhow::{bail, Result};
use aomp_core::experiments::{KmaxRule, SolverSpec};
use aomp_core::{AompConfig, BaselineConfig, CostModel};

use crate::config::{parse_kmax, SearchSection, SolverName};

impl SolverName {
    /// File-name safe form, e.g. `amul-e`.
    pub fn slug(self) -> &'static str {
        match self {
            SolverName::AmulE => "amul-e",
            SolverName::MulE => "mul-e",
            SolverName::MulK => "mul-k",
            SolverName::Hybrid => "hybrid",
            SolverName::Omp => "omp",
            SolverName::Sp => "sp",
            SolverName::Iht => "iht",
            SolverName::Fbp => "fbp",
            SolverName::MmpDf => "mmp-df",
        }
    }
}

/// Builds one solver. `search` must already hold the resolved `kmax`; it
/// applies to the residue-terminated searches, while `mul-k` always stops
/// at the sparsity. Unset fields keep each solver's own defaults.
pub fn build(name: SolverName, search: &SearchSection) -> Result<SolverSpec> {
    let kmax = match &search.kmax {
        Some(text) => parse_kmax(text)?,
        None => bail!("kmax is not resolved"),
    };
    let spec = match name {
        SolverName::AmulE => SolverSpec::Aomp {
            config: tune(AompConfig::amul_e(1), search),
            kmax,
        },
        SolverName::MulE => SolverSpec::Aomp {
            config: tune(AompConfig::mul_e(1), search),
            kmax,
        },
        SolverName::MulK => SolverSpec::Aomp {
            config: tune(AompConfig::mul_k(1), search),
            kmax: KmaxRule::Sparsity,
        },
        SolverName::Hybrid => SolverSpec::Hybrid {
            config: tune(AompConfig::amul_e(1), search),
            kmax,
        },
        SolverName::Omp => {
            let mut c = BaselineConfig::omp();
            if let (BaselineConfig::Omp { epsilon, .. }, Some(e)) = (&mut c, search.epsilon) {
                *epsilon = e;
            }
            SolverSpec::baseline(c)
        }
        SolverName::Sp => SolverSpec::baseline(BaselineConfig::sp()),
        SolverName::Iht => SolverSpec::baseline(BaselineConfig::iht()),
        SolverName::Fbp => {
            let mut c = BaselineConfig::fbp();
            if let (BaselineConfig::Fbp { epsilon, .. }, Some(e)) = (&mut c, search.epsilon) {
                *epsilon = e;
            }
            SolverSpec::baseline(c)
        }
        SolverName::MmpDf => {
            let mut c = BaselineConfig::mmp_df();
            if let BaselineConfig::MmpDf {
                branching,
                max_paths,
            } = &mut c
            {
                *branching = search.branching.unwrap_or(*branching);
                *max_paths = search.max_paths.unwrap_or(*max_paths);
            }
            SolverSpec::baseline(c)
        }
    };
    if let SolverSpec::Aomp { config, .. } | SolverSpec::Hybrid { config, .. } = &spec {
        config.validate()?;
    }
    Ok(spec)
}

fn tune(mut config: AompConfig, search: &SearchSection) -> AompConfig {
    config.initial_paths = search.initial_paths.unwrap_or(config.initial_paths);
    config.branching = search.branching.unwrap_or(config.branching);
    config.max_paths = search.max_paths.unwrap_or(config.max_paths);
    config.epsilon = search.epsilon.unwrap_or(config.epsilon);
    config.audit = search.audit.unwrap_or(config.audit);
    if let Some(a) = search.alpha {
        config.cost = match config.cost {
            CostModel::Mul { .. } => CostModel::Mul { alpha: a },
            CostModel::AMul { .. } => CostModel::AMul { alpha: a },
        };
    }
    config
}

pub fn build_all(names: &[SolverName], search: &SearchSection) -> Result<Vec<SolverSpec>> {
    if names.is_empty() {
        bail!("no solver selected");
    }
    names.iter().map(|&n| build(n, search)).collect()
}
