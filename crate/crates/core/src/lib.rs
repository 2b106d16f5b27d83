//! Sparse recovery by best-first tree search.
//!
//! - [`linalg`]: correlations, deterministic top-k and incremental QR projection.
//! - [`signal`]: seeded measurement matrices and sparse instances.
//! - [`astar`]: the A*OMP search engine, its cost models and trie.
//! - [`baselines`]: OMP, SP, IHT, FBP and MMP-DF.
//! - [`rip`]: brute-force restricted isometry constants and recovery-condition checks.
//! - [`experiments`]: batch runs, phase transitions and block image recovery.

pub mod astar;
pub mod baselines;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod output;
pub mod rip;
pub mod signal;

pub use astar::{aomp_recover, hybrid_recover, AompConfig, CostModel, Termination};
pub use baselines::BaselineConfig;
pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
pub use output::{RecoveryOutput, SearchStats, TerminationReason};
pub use signal::{Ensemble, SparseInstance};
