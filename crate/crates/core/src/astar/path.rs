use std::cmp::Ordering;

use crate::linalg::{IncrementalFactorization, Vector};

/// One support hypothesis in the search tree.
#[derive(Debug, Clone)]
pub struct PathState {
    pub(crate) fact: IncrementalFactorization,
    /// `||r_0|| = ||y||, ||r_1||, ..., ||r_l||`.
    pub(crate) history: Vec<f64>,
    pub(crate) cost: f64,
    /// Support as priority ranks, sorted ascending. Filled in by the trie.
    pub(crate) canonical: Vec<u32>,
    /// Expanded without producing any child; never selected again.
    pub(crate) exhausted: bool,
}

impl PathState {
    pub(crate) fn new(fact: IncrementalFactorization, history: Vec<f64>, cost: f64) -> Self {
        debug_assert_eq!(fact.len() + 1, history.len());
        Self {
            fact,
            history,
            cost,
            canonical: Vec::new(),
            exhausted: false,
        }
    }

    /// Selected atoms in selection order.
    pub fn support(&self) -> &[usize] {
        self.fact.support()
    }

    pub fn len(&self) -> usize {
        self.fact.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fact.is_empty()
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn residue_history(&self) -> &[f64] {
        &self.history
    }

    pub fn residue(&self) -> &Vector {
        self.fact.residue()
    }

    pub fn residue_norm(&self) -> f64 {
        *self.history.last().expect("history is never empty")
    }

    pub fn is_complete(&self, kmax: usize) -> bool {
        self.len() >= kmax
    }

    pub fn factorization(&self) -> &IncrementalFactorization {
        &self.fact
    }

    /// Total order used for best/worst selection: cost, then length, then
    /// canonical support.
    pub(crate) fn order(&self, other: &Self) -> Ordering {
        self.cost
            .total_cmp(&other.cost)
            .then(self.len().cmp(&other.len()))
            .then_with(|| self.canonical.cmp(&other.canonical))
    }
}
