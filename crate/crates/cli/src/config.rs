//! Run configuration: a TOML file merged under command-line flags.
//!
//! Precedence is flags, then the file, then built-in defaults. A command
//! first fills every field it uses, and the filled file is saved with the
//! run so that `--config <run>/resolved.toml` repeats it.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aomp_core::experiments::KmaxRule;
use aomp_core::Ensemble;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    /// AMul cost, residue-based termination.
    AmulE,
    /// Mul cost, residue-based termination.
    MulE,
    /// Mul cost, paths limited to the sparsity.
    MulK,
    /// OMP first, AMul search on failure.
    Hybrid,
    Omp,
    Sp,
    Iht,
    Fbp,
    MmpDf,
}

/// Overrides for the best-first search solvers.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub initial_paths: Option<usize>,
    pub branching: Option<usize>,
    pub max_paths: Option<usize>,
    /// A number, `k` (the sparsity) or `rho-max`.
    pub kmax: Option<String>,
    pub alpha: Option<f64>,
    pub epsilon: Option<f64>,
    pub audit: Option<bool>,
}

pub fn parse_kmax(text: &str) -> Result<KmaxRule> {
    match text {
        "k" | "K" => Ok(KmaxRule::Sparsity),
        "rho-max" => Ok(KmaxRule::RhoMax),
        n => Ok(KmaxRule::Fixed(n.parse().with_context(|| {
            format!("kmax must be a number, `k` or `rho-max`, got `{n}`")
        })?)),
    }
}

/// Random problem shape shared by recover, sweep and bench.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub k: Option<usize>,
    pub ensemble: Option<Ensemble>,
    pub trials: Option<usize>,
    pub matrix_std: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverSection {
    /// Instance JSON; the matrix is regenerated from its seed.
    pub instance: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub k_min: Option<usize>,
    pub k_max: Option<usize>,
    pub k_step: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub n: Option<usize>,
    pub lambdas: Option<Vec<f64>>,
    pub rhos: Option<Vec<f64>>,
    pub trials: Option<usize>,
    pub ensemble: Option<Ensemble>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImageSection {
    /// 8-bit PGM; a synthetic picture when unset.
    pub input: Option<PathBuf>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub redraw_per_block: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RipSection {
    pub m: Option<usize>,
    pub n: Option<usize>,
    /// Use the `n x n` identity instead of a random matrix.
    pub identity: Option<bool>,
    /// Text matrix, one row per line, entries separated by commas or spaces.
    pub matrix: Option<PathBuf>,
    pub matrix_std: Option<f64>,
    pub lmax: Option<usize>,
    pub k: Option<usize>,
    pub b: Option<usize>,
    pub kmax: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub solvers: Option<Vec<SolverName>>,
    pub search: SearchSection,
    pub problem: ProblemSection,
    pub recover: RecoverSection,
    pub sweep: SweepSection,
    pub phase: PhaseSection,
    pub image: ImageSection,
    pub rip: RipSection,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// `flag`, else `file`, else `default`, writing the winner back to `file`.
pub fn pick<T: Clone>(flag: Option<T>, file: &mut Option<T>, default: T) -> T {
    let value = flag.or_else(|| file.clone()).unwrap_or(default);
    *file = Some(value.clone());
    value
}

/// Like [`pick`] for settings without a default.
pub fn pick_opt<T: Clone>(flag: Option<T>, file: &mut Option<T>) -> Option<T> {
    if flag.is_some() {
        *file = flag;
    }
    file.clone()
}

/// Parses `a,b,c` or a range `start:stop:step` (inclusive, with a small
/// tolerance on the end point).
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad range `{text}`"))?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if step.is_nan() || step <= 0.0 {
            bail!("range step must be positive in `{text}`");
        }
        let count = ((stop - start) / step + 1e-9).floor();
        if count < 0.0 {
            return Ok(Vec::new());
        }
        // round away accumulated binary noise
        return Ok((0..=count as usize)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    text.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .with_context(|| format!("bad number `{p}` in `{text}`"))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0.1,0.5").unwrap(), vec![0.1, 0.5]);
        assert_eq!(parse_grid("0.1:0.3:0.1").unwrap(), vec![0.1, 0.2, 0.3]);
        assert_eq!(parse_grid("0.05:1:0.05").unwrap().len(), 20);
        assert!(parse_grid("").unwrap().is_empty());
        assert!(parse_grid("1:0:0.1").unwrap().is_empty());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn precedence() {
        let mut file = Some(3);
        assert_eq!(pick(Some(5), &mut file, 1), 5);
        assert_eq!(file, Some(5));
        let mut file = Some(3);
        assert_eq!(pick(None, &mut file, 1), 3);
        let mut file = None;
        assert_eq!(pick(None, &mut file, 1), 1);
        assert_eq!(file, Some(1));
    }

    #[test]
    fn kmax_forms() {
        assert_eq!(parse_kmax("k").unwrap(), KmaxRule::Sparsity);
        assert_eq!(parse_kmax("rho-max").unwrap(), KmaxRule::RhoMax);
        assert_eq!(parse_kmax("20").unwrap(), KmaxRule::Fixed(20));
        assert!(parse_kmax("many").is_err());
    }

    #[test]
    fn file_round_trip() {
        let mut cfg = FileConfig {
            seed: Some(4),
            solvers: Some(vec![SolverName::AmulE, SolverName::MmpDf]),
            ..Default::default()
        };
        cfg.search.kmax = Some("rho-max".into());
        cfg.phase.lambdas = Some(vec![0.2, 0.4]);
        let text = cfg.to_toml().unwrap();
        assert_eq!(toml::from_str::<FileConfig>(&text).unwrap(), cfg);
        assert!(toml::from_str::<FileConfig>("sed = 1").is_err());
        assert!(toml::from_str::<FileConfig>("solvers = [\"amul-e\", \"omp\"]").is_ok());
    }
}
