//! Best-first (A*) orthogonal matching pursuit.
//!
//! The search keeps at most `P` candidate supports in a [`SearchTrie`],
//! repeatedly expands the cheapest incomplete one by its `B` best children,
//! and stops as soon as some candidate explains `y` to within
//! `epsilon ||y||`. Path costs come from a [`CostModel`] so that paths of
//! different lengths can be compared.

mod config;
mod cost;
mod path;
mod search;
mod trie;

pub use config::{AompConfig, Termination, DEFAULT_EPSILON};
pub use cost::{cost_amul, cost_mul, CostModel};
pub use path::PathState;
pub use search::{
    aomp_recover, correlation_priority, hybrid_recover, init_search, init_with_priority,
    AompSearch, ExpansionReport, SearchStart,
};
pub use trie::SearchTrie;
