//! Prefix tree over canonically ordered supports.
//!
//! Every atom gets a fixed priority rank for the lifetime of a search. A
//! support is stored as the sequence of its ranks sorted ascending, so two
//! paths that selected the same atoms in different orders end on the same
//! node, and equivalence is a single walk from the root. Paths that share
//! high-priority atoms share the corresponding prefix nodes.

use std::collections::HashSet;

use super::path::PathState;

const ROOT: usize = 0;

#[derive(Debug, Clone)]
struct Node {
    rank: u32,
    parent: usize,
    /// Sorted by rank.
    children: Vec<(u32, usize)>,
    /// Slot of the live path ending here.
    terminal: Option<usize>,
}

/// Live paths of one search, at most `capacity` of them.
#[derive(Debug, Clone)]
pub struct SearchTrie {
    /// `rank[atom]`, 0 = highest priority.
    rank: Vec<u32>,
    nodes: Vec<Node>,
    free_nodes: Vec<usize>,
    slots: Vec<Option<PathState>>,
    /// Node holding each slot's terminal marker.
    slot_node: Vec<usize>,
    live: usize,
}

impl SearchTrie {
    /// `priority` lists every atom from highest to lowest priority.
    pub fn new(priority: &[usize], capacity: usize) -> Self {
        let mut rank = vec![u32::MAX; priority.len()];
        for (r, &atom) in priority.iter().enumerate() {
            rank[atom] = r as u32;
        }
        assert!(
            rank.iter().all(|&r| r != u32::MAX),
            "priority must be a permutation of the atoms"
        );
        Self {
            rank,
            nodes: vec![Node {
                rank: u32::MAX,
                parent: ROOT,
                children: Vec::new(),
                terminal: None,
            }],
            free_nodes: Vec::new(),
            slots: vec![None; capacity],
            slot_node: vec![ROOT; capacity],
            live: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn live(&self) -> usize {
        self.live
    }

    pub fn is_full(&self) -> bool {
        self.live == self.slots.len()
    }

    /// Number of allocated nodes, root included.
    pub fn node_count(&self) -> usize {
        self.nodes.len() - self.free_nodes.len()
    }

    pub fn rank_of(&self, atom: usize) -> u32 {
        self.rank[atom]
    }

    pub fn canonical(&self, support: &[usize]) -> Vec<u32> {
        let mut c: Vec<u32> = support.iter().map(|&a| self.rank[a]).collect();
        c.sort_unstable();
        c
    }

    pub fn path(&self, slot: usize) -> Option<&PathState> {
        self.slots[slot].as_ref()
    }

    pub(crate) fn path_mut(&mut self, slot: usize) -> Option<&mut PathState> {
        self.slots[slot].as_mut()
    }

    pub fn paths(&self) -> impl Iterator<Item = (usize, &PathState)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.as_ref().map(|p| (i, p)))
    }

    pub fn first_free_slot(&self) -> Option<usize> {
        self.slots.iter().position(Option::is_none)
    }

    fn child(&self, node: usize, rank: u32) -> Option<usize> {
        let children = &self.nodes[node].children;
        children
            .binary_search_by_key(&rank, |&(r, _)| r)
            .ok()
            .map(|i| children[i].1)
    }

    fn find(&self, canonical: &[u32]) -> Option<usize> {
        canonical
            .iter()
            .try_fold(ROOT, |node, &r| self.child(node, r))
    }

    /// True when a live path holds exactly this set of atoms.
    pub fn contains(&self, support: &[usize]) -> bool {
        self.find(&self.canonical(support))
            .is_some_and(|n| self.nodes[n].terminal.is_some())
    }

    fn alloc(&mut self, rank: u32, parent: usize) -> usize {
        let node = Node {
            rank,
            parent,
            children: Vec::new(),
            terminal: None,
        };
        match self.free_nodes.pop() {
            Some(id) => {
                self.nodes[id] = node;
                id
            }
            None => {
                self.nodes.push(node);
                self.nodes.len() - 1
            }
        }
    }

    /// Stores `path` in `slot`, which must be empty and whose support must
    /// not be present yet.
    pub fn insert_at(&mut self, slot: usize, mut path: PathState) {
        assert!(self.slots[slot].is_none(), "slot {slot} is occupied");
        path.canonical = self.canonical(path.support());
        let mut node = ROOT;
        for &r in &path.canonical {
            node = match self.child(node, r) {
                Some(c) => c,
                None => {
                    let c = self.alloc(r, node);
                    let children = &mut self.nodes[node].children;
                    let at = children.partition_point(|&(cr, _)| cr < r);
                    children.insert(at, (r, c));
                    c
                }
            };
        }
        assert!(
            self.nodes[node].terminal.is_none(),
            "equivalent path already present"
        );
        self.nodes[node].terminal = Some(slot);
        self.slot_node[slot] = node;
        self.slots[slot] = Some(path);
        self.live += 1;
    }

    /// Removes the path in `slot` and releases nodes no longer on any path.
    pub fn remove(&mut self, slot: usize) -> Option<PathState> {
        let path = self.slots[slot].take()?;
        self.live -= 1;
        let mut node = self.slot_node[slot];
        self.nodes[node].terminal = None;
        while node != ROOT
            && self.nodes[node].children.is_empty()
            && self.nodes[node].terminal.is_none()
        {
            let parent = self.nodes[node].parent;
            let rank = self.nodes[node].rank;
            let siblings = &mut self.nodes[parent].children;
            if let Ok(i) = siblings.binary_search_by_key(&rank, |&(r, _)| r) {
                siblings.remove(i);
            }
            self.free_nodes.push(node);
            node = parent;
        }
        Some(path)
    }

    /// Swaps the path in `slot` for `path`.
    pub fn replace(&mut self, slot: usize, path: PathState) -> Option<PathState> {
        let old = self.remove(slot);
        self.insert_at(slot, path);
        old
    }

    /// Checks the structural invariants and returns a description of each
    /// violation found.
    pub fn audit(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.live > self.capacity() {
            problems.push(format!(
                "{} live paths exceed capacity {}",
                self.live,
                self.capacity()
            ));
        }
        let counted = self.slots.iter().filter(|s| s.is_some()).count();
        if counted != self.live {
            problems.push(format!(
                "live counter {} but {} occupied slots",
                self.live, counted
            ));
        }
        let mut seen = HashSet::new();
        for (slot, path) in self.paths() {
            let mut set = path.support().to_vec();
            set.sort_unstable();
            if !seen.insert(set) {
                problems.push(format!("slot {slot} duplicates another live support"));
            }
            let canonical = self.canonical(path.support());
            if canonical != path.canonical {
                problems.push(format!("slot {slot} canonical form is stale"));
            }
            if canonical.windows(2).any(|w| w[0] >= w[1]) {
                problems.push(format!("slot {slot} support has repeated atoms"));
            }
            // walk back from the terminal node
            let mut ranks = Vec::new();
            let mut node = self.slot_node[slot];
            if self.nodes[node].terminal != Some(slot) {
                problems.push(format!("slot {slot} terminal marker missing"));
            }
            while node != ROOT {
                ranks.push(self.nodes[node].rank);
                node = self.nodes[node].parent;
            }
            ranks.reverse();
            if ranks != canonical {
                problems.push(format!("slot {slot} trie path differs from its support"));
            }
        }
        problems
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{IncrementalFactorization, Matrix, Vector};
    use proptest::prelude::*;

    fn path(phi: &Matrix, y: &Vector, support: &[usize]) -> PathState {
        let fact = IncrementalFactorization::from_support(phi, y, support).unwrap();
        let history = vec![1.0; support.len() + 1];
        PathState::new(fact, history, 0.0)
    }

    fn fixture() -> (Matrix, Vector) {
        let phi = crate::signal::gen_matrix(6, 8, 11).unwrap().phi;
        (phi, Vector::from_element(6, 1.0))
    }

    #[test]
    fn equivalence_is_order_insensitive() {
        let (phi, y) = fixture();
        let mut trie = SearchTrie::new(&[3, 1, 0, 2, 4, 5, 6, 7], 4);
        trie.insert_at(0, path(&phi, &y, &[2, 5, 1]));
        assert!(trie.contains(&[1, 2, 5]));
        assert!(trie.contains(&[5, 1, 2]));
        // a prefix of a stored path is not itself a live path
        assert!(!trie.contains(&[1, 2]));
        assert!(!trie.contains(&[1, 2, 4]));
    }

    #[test]
    fn shared_prefixes_and_cleanup() {
        let (phi, y) = fixture();
        let mut trie = SearchTrie::new(&(0..8).collect::<Vec<_>>(), 4);
        trie.insert_at(0, path(&phi, &y, &[0, 1, 2]));
        trie.insert_at(1, path(&phi, &y, &[0, 1, 3]));
        // root + 0 + 1 + {2, 3}
        assert_eq!(trie.node_count(), 5);
        trie.remove(0);
        assert_eq!(trie.node_count(), 4);
        assert!(!trie.contains(&[0, 1, 2]));
        assert!(trie.contains(&[0, 1, 3]));
        trie.remove(1);
        assert_eq!(trie.node_count(), 1);
        assert!(trie.audit().is_empty());
    }

    #[test]
    fn prefix_path_keeps_nodes() {
        let (phi, y) = fixture();
        let mut trie = SearchTrie::new(&(0..8).collect::<Vec<_>>(), 4);
        trie.insert_at(0, path(&phi, &y, &[0]));
        trie.insert_at(1, path(&phi, &y, &[0, 4]));
        trie.remove(1);
        assert!(trie.contains(&[0]));
        assert_eq!(trie.node_count(), 2);
        assert!(trie.audit().is_empty());
    }

    #[test]
    #[should_panic(expected = "equivalent path")]
    fn duplicate_insert_panics() {
        let (phi, y) = fixture();
        let mut trie = SearchTrie::new(&(0..8).collect::<Vec<_>>(), 4);
        trie.insert_at(0, path(&phi, &y, &[0, 4]));
        trie.insert_at(1, path(&phi, &y, &[4, 0]));
    }

    proptest! {
        #[test]
        fn random_insert_remove_keeps_invariants(ops in proptest::collection::vec((0usize..6, proptest::collection::btree_set(0usize..8, 1..5)), 1..60)) {
            let (phi, y) = fixture();
            let mut trie = SearchTrie::new(&[7, 6, 5, 4, 3, 2, 1, 0], 6);
            let mut model: Vec<Option<Vec<usize>>> = vec![None; 6];
            for (slot, set) in ops {
                let support: Vec<usize> = set.into_iter().collect();
                if model[slot].is_some() {
                    trie.remove(slot);
                    model[slot] = None;
                } else if !trie.contains(&support) {
                    trie.insert_at(slot, path(&phi, &y, &support));
                    model[slot] = Some(support);
                }
                prop_assert!(trie.audit().is_empty());
                for s in model.iter().flatten() {
                    prop_assert!(trie.contains(s));
                }
                prop_assert_eq!(trie.live(), model.iter().flatten().count());
            }
        }
    }
}
