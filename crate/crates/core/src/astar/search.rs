//! The best-first search loop: initialization, best-path selection and
//! expansion with equivalent-path and tree-size pruning.

use std::time::Instant;

use super::config::AompConfig;
use super::path::PathState;
use super::trie::SearchTrie;
use crate::baselines::omp_recover;
use crate::error::{input, Error, Result};
use crate::linalg::{correlations, top_indices, IncrementalFactorization, Matrix, Vector};
use crate::output::{RecoveryOutput, SearchStats, TerminationReason};

/// What happened during one expansion.
#[derive(Debug, Clone, Default)]
pub struct ExpansionReport {
    /// Atoms selected as children, best first.
    pub children: Vec<usize>,
    pub inserted: usize,
    pub equivalent_hits: usize,
    pub singular_skips: usize,
    /// A child met the residue criterion and ends the search.
    pub terminated: Option<PathState>,
}

/// Result of [`init_search`].
#[derive(Debug)]
pub enum SearchStart<'a> {
    Running(AompSearch<'a>),
    /// `y = 0` or an initial path already meets the residue criterion.
    Finished(RecoveryOutput),
}

/// A search in progress over a fixed `(phi, y, config)`.
#[derive(Debug)]
pub struct AompSearch<'a> {
    phi: &'a Matrix,
    y: &'a Vector,
    config: AompConfig,
    trie: SearchTrie,
    threshold: f64,
    stats: SearchStats,
}

/// Atoms ordered by descending `|<phi_j, y>|`, ties by ascending index.
pub fn correlation_priority(phi: &Matrix, y: &Vector) -> Result<Vec<usize>> {
    let c = correlations(phi, y)?;
    top_indices(c.as_slice(), c.len(), &[])
}

fn check_problem(phi: &Matrix, y: &Vector, config: &AompConfig) -> Result<()> {
    config.validate()?;
    if phi.nrows() != y.len() {
        return Err(Error::Dimension {
            expected: phi.nrows(),
            actual: y.len(),
        });
    }
    let (m, n) = phi.shape();
    if config.initial_paths > n {
        return input(format!(
            "initial_paths {} exceeds N = {n}",
            config.initial_paths
        ));
    }
    if config.kmax > m.min(n) {
        return input(format!(
            "kmax {} exceeds min(M, N) = {}",
            config.kmax,
            m.min(n)
        ));
    }
    Ok(())
}

/// Opens the `I` best single-atom paths with trie priorities taken from the
/// correlations with `y`.
pub fn init_search<'a>(
    phi: &'a Matrix,
    y: &'a Vector,
    config: &AompConfig,
) -> Result<SearchStart<'a>> {
    check_problem(phi, y, config)?;
    let priority = correlation_priority(phi, y)?;
    init_with_priority(phi, y, config, &priority)
}

/// As [`init_search`] with an explicit trie priority (highest first).
pub fn init_with_priority<'a>(
    phi: &'a Matrix,
    y: &'a Vector,
    config: &AompConfig,
    priority: &[usize],
) -> Result<SearchStart<'a>> {
    check_problem(phi, y, config)?;
    if priority.len() != phi.ncols() {
        return input("trie priority must rank every atom");
    }
    let y_norm = y.norm();
    let threshold = config.epsilon * y_norm;
    let label = config.label();
    if y_norm == 0.0 {
        return Ok(SearchStart::Finished(RecoveryOutput::assemble(
            label,
            phi,
            y,
            Vec::new(),
            &[],
            config.epsilon,
            SearchStats::default(),
        )));
    }

    let mut search = AompSearch {
        phi,
        y,
        config: config.clone(),
        trie: SearchTrie::new(priority, config.max_paths),
        threshold,
        stats: SearchStats::default(),
    };
    let scores = correlations(phi, y)?;
    let root = IncrementalFactorization::new(y);
    let first = top_indices(scores.as_slice(), config.initial_paths, &[])?;
    for atom in first {
        search.stats.nodes_expanded += 1;
        let fact = match root.with_column(phi, atom) {
            Ok(f) => f,
            Err(Error::SingularSupport { .. }) => {
                search.stats.singular_skips += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let path = search.make_path(fact, vec![y_norm]);
        if path.residue_norm() <= threshold {
            return Ok(SearchStart::Finished(
                search.finish(&path, TerminationReason::ResidueMet),
            ));
        }
        let slot = search.trie.first_free_slot().expect("I <= P");
        search.trie.insert_at(slot, path);
        search.stats.paths_opened += 1;
    }
    search.audit_now(None);
    Ok(SearchStart::Running(search))
}

impl<'a> AompSearch<'a> {
    pub fn trie(&self) -> &SearchTrie {
        &self.trie
    }

    pub fn config(&self) -> &AompConfig {
        &self.config
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    fn make_path(&self, fact: IncrementalFactorization, mut history: Vec<f64>) -> PathState {
        history.push(fact.residue_norm());
        let cost = self.config.cost.evaluate(&history, self.config.kmax);
        PathState::new(fact, history, cost)
    }

    /// Slot of the minimum-cost incomplete path, or `None` when every live
    /// path is complete.
    pub fn select_best_incomplete(&self) -> Option<usize> {
        let kmax = self.config.kmax;
        self.trie
            .paths()
            .filter(|(_, p)| !p.is_complete(kmax) && !p.exhausted)
            .min_by(|a, b| a.1.order(b.1))
            .map(|(slot, _)| slot)
    }

    fn select_best_any(&self) -> Option<usize> {
        self.trie
            .paths()
            .min_by(|a, b| a.1.order(b.1))
            .map(|(slot, _)| slot)
    }

    /// Next slot to overwrite: a free slot if any, else the worst live path.
    fn replacement_target(&self) -> usize {
        if let Some(free) = self.trie.first_free_slot() {
            return free;
        }
        self.trie
            .paths()
            .max_by(|a, b| a.1.order(b.1))
            .map(|(slot, _)| slot)
            .expect("a full trie has paths")
    }

    /// Expands the path in `slot` by its `B` best children.
    ///
    /// The expanded path is replaced by its first admissible child. Each
    /// further child replaces the current worst path (or fills a free slot)
    /// if it is strictly cheaper. Children equal as sets to a live path are
    /// dropped. A child meeting the residue criterion ends the expansion
    /// immediately.
    pub fn expand(&mut self, slot: usize) -> Result<ExpansionReport> {
        let parent = self
            .trie
            .path(slot)
            .cloned()
            .ok_or_else(|| Error::Input(format!("slot {slot} is empty")))?;
        if parent.is_complete(self.config.kmax) {
            return input("cannot expand a complete path");
        }
        let scores = correlations(self.phi, parent.residue())?;
        let n = self.phi.ncols();
        let count = self.config.branching.min(n - parent.len());
        let children = top_indices(scores.as_slice(), count, parent.support())?;
        if self.config.audit {
            self.check_orthogonal(&parent, scores.as_slice(), &children);
        }

        let mut report = ExpansionReport {
            children: children.clone(),
            ..Default::default()
        };
        let mut parent_replaced = false;
        let mut target = slot;
        for atom in children {
            self.stats.nodes_expanded += 1;
            let fact = match parent.fact.with_column(self.phi, atom) {
                Ok(f) => f,
                Err(Error::SingularSupport { .. }) => {
                    self.stats.singular_skips += 1;
                    report.singular_skips += 1;
                    continue;
                }
                Err(e) => return Err(e),
            };
            let candidate = self.make_path(fact, parent.history.clone());
            if candidate.residue_norm() <= self.threshold {
                report.terminated = Some(candidate);
                return Ok(report);
            }
            if self.trie.contains(candidate.support()) {
                self.stats.equivalent_hits += 1;
                report.equivalent_hits += 1;
            } else {
                let accept = if !parent_replaced {
                    true
                } else {
                    match self.trie.path(target) {
                        None => true,
                        Some(worst) => candidate.cost < worst.cost,
                    }
                };
                if accept {
                    if self.trie.path(target).is_some() {
                        self.trie.replace(target, candidate);
                    } else {
                        self.trie.insert_at(target, candidate);
                    }
                    parent_replaced = true;
                    self.stats.paths_opened += 1;
                    report.inserted += 1;
                }
            }
            if parent_replaced {
                target = self.replacement_target();
            }
        }
        if !parent_replaced {
            if let Some(p) = self.trie.path_mut(slot) {
                p.exhausted = true;
            }
        }
        debug_assert!(self.trie.live() <= self.config.max_paths);
        Ok(report)
    }

    /// Runs select/expand to termination.
    pub fn run(mut self) -> Result<RecoveryOutput> {
        loop {
            let best = if self.config.legacy_selection {
                match self.legacy_pick() {
                    Some(slot) => slot,
                    None => break,
                }
            } else {
                match self.select_best_incomplete() {
                    Some(slot) => slot,
                    None => break,
                }
            };
            self.stats.iterations += 1;
            let report = self.expand(best)?;
            self.audit_now(Some(&report));
            if let Some(done) = report.terminated {
                return Ok(self.finish(&done, TerminationReason::ResidueMet));
            }
        }
        Ok(match self.select_best_any() {
            Some(slot) => {
                let best = self.trie.path(slot).expect("live slot").clone();
                self.finish(&best, TerminationReason::AllComplete)
            }
            None => RecoveryOutput::assemble(
                self.config.label(),
                self.phi,
                self.y,
                Vec::new(),
                &[],
                self.config.epsilon,
                self.stats.clone(),
            ),
        })
    }

    /// Best path among all paths; `None` once that path is complete.
    fn legacy_pick(&self) -> Option<usize> {
        let kmax = self.config.kmax;
        let slot = self
            .trie
            .paths()
            .filter(|(_, p)| p.is_complete(kmax) || !p.exhausted)
            .min_by(|a, b| a.1.order(b.1))
            .map(|(s, _)| s)?;
        (!self.trie.path(slot)?.is_complete(kmax)).then_some(slot)
    }

    fn finish(&self, path: &PathState, reason: TerminationReason) -> RecoveryOutput {
        let mut out = RecoveryOutput::assemble(
            self.config.label(),
            self.phi,
            self.y,
            path.support().to_vec(),
            &path.fact.coefficients(),
            self.config.epsilon,
            self.stats.clone(),
        );
        // The reported reason follows the search, the residue is recomputed
        // from the estimate; they agree up to rounding at the threshold.
        out.reason = reason;
        out
    }

    fn check_orthogonal(&mut self, parent: &PathState, scores: &[f64], children: &[usize]) {
        let y_norm = self.y.norm();
        for &j in parent.support() {
            let col = self.phi.column(j).norm();
            if scores[j] > 1e-10 * y_norm * col.max(1.0) {
                self.stats.audit_violations += 1;
            }
            if children.contains(&j) {
                self.stats.audit_violations += 1;
            }
        }
    }

    /// Invariant violations in the current state.
    pub fn audit_violations(&self) -> Vec<String> {
        let mut problems = self.trie.audit();
        let kmax = self.config.kmax;
        if self.trie.live() > self.config.max_paths {
            problems.push("live paths exceed P".into());
        }
        let slack = 1e-12 * self.y.norm();
        for (slot, p) in self.trie.paths() {
            let recomputed = self.config.cost.evaluate(&p.history, kmax);
            if (recomputed - p.cost).abs() > 1e-12 * recomputed.abs().max(1.0) {
                problems.push(format!("slot {slot} cost differs from its history"));
            }
            if p.history.len() != p.len() + 1 || p.len() > kmax {
                problems.push(format!("slot {slot} length/history mismatch"));
            }
            if p.history.windows(2).any(|w| w[1] > w[0] + slack) {
                problems.push(format!("slot {slot} residue history increases"));
            }
        }
        problems
    }

    fn audit_now(&mut self, _report: Option<&ExpansionReport>) {
        if !self.config.audit {
            return;
        }
        let problems = self.audit_violations();
        debug_assert!(
            problems.is_empty(),
            "search invariants violated: {problems:?}"
        );
        self.stats.audit_violations += problems.len();
    }
}

/// Best-first search recovery of `y ~ phi x`.
pub fn aomp_recover(phi: &Matrix, y: &Vector, config: &AompConfig) -> Result<RecoveryOutput> {
    let start = Instant::now();
    let mut out = match init_search(phi, y, config)? {
        SearchStart::Finished(out) => out,
        SearchStart::Running(search) => search.run()?,
    };
    out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}

/// Runs OMP for `k` atoms first and falls back to the best-first search only
/// when OMP leaves a residue above `epsilon ||y||`. The fallback ranks trie
/// nodes by OMP's selection order, then by correlation with `y`.
pub fn hybrid_recover(
    phi: &Matrix,
    y: &Vector,
    config: &AompConfig,
    k: usize,
) -> Result<RecoveryOutput> {
    let start = Instant::now();
    check_problem(phi, y, config)?;
    let omp = omp_recover(phi, y, config.epsilon, k.min(phi.nrows()))?;
    let mut out = if omp.reason == TerminationReason::ResidueMet {
        let mut o = omp;
        o.solver = "Hybrid/OMP".into();
        o
    } else {
        let mut priority = omp.support.clone();
        let mut taken = vec![false; phi.ncols()];
        for &j in &priority {
            taken[j] = true;
        }
        priority.extend(
            correlation_priority(phi, y)?
                .into_iter()
                .filter(|&j| !taken[j]),
        );
        let mut o = match init_with_priority(phi, y, config, &priority)? {
            SearchStart::Finished(o) => o,
            SearchStart::Running(search) => search.run()?,
        };
        o.solver = format!("Hybrid/{}", config.label());
        o
    };
    out.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(out)
}
