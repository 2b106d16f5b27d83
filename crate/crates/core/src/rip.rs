//! Brute-force restricted isometry constants and numerical evaluation of the
//! recovery conditions that depend on them.
//!
//! `delta_L` is the smallest `d` with `(1 - d)|x|^2 <= |Phi x|^2 <= (1 + d)|x|^2`
//! for every `L`-sparse `x`. It is computed exactly by enumerating all
//! supports of size `L`, so only small matrices are practical.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::SymmetricEigen;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::linalg::{Matrix, Vector};

/// Largest number of supports `ric_bruteforce` will enumerate.
pub const SUBSET_BUDGET: u128 = 10_000_000;

/// Asymmetry of a Gram submatrix above which the input is rejected.
const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Deviation of the spectrum of a symmetric matrix from 1.
fn isometry_deviation(gram: Matrix) -> f64 {
    let eig = SymmetricEigen::new(gram);
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    (hi - 1.0).max(1.0 - lo)
}

/// Advances `combo` (strictly increasing, values below `n`) to the next
/// combination in lexicographic order; false when exhausted.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Exact `delta_L` of `phi`, maximised over every support of size `l`.
///
/// The work is split by the smallest index of the support and merged with a
/// max-reduction, so the result does not depend on the thread count.
pub fn ric_bruteforce(phi: &Matrix, l: usize) -> Result<f64> {
    let n = phi.ncols();
    if l == 0 || l > n {
        return input(format!("support size must lie in 1..={n}, got {l}"));
    }
    let required = binomial(n, l);
    if required > SUBSET_BUDGET {
        return Err(Error::Budget {
            n,
            l,
            required,
            limit: SUBSET_BUDGET,
        });
    }
    let gram = phi.transpose() * phi;
    let asym = (&gram - gram.transpose()).amax();
    if asym > SYMMETRY_TOLERANCE {
        return input(format!("Gram matrix asymmetric by {asym:e}"));
    }
    log::debug!("delta_{l}: enumerating {required} supports of {n} atoms");
    let done = AtomicUsize::new(0);
    let firsts = n - l + 1;
    let delta = (0..firsts)
        .into_par_iter()
        .map(|first| {
            let mut worst = 0.0f64;
            // tail offsets relative to first + 1
            let mut tail: Vec<usize> = (0..l - 1).collect();
            let mut support = vec![first; l];
            loop {
                for (s, t) in support[1..].iter_mut().zip(&tail) {
                    *s = first + 1 + t;
                }
                let sub = Matrix::from_fn(l, l, |a, b| gram[(support[a], support[b])]);
                worst = worst.max(isometry_deviation(sub));
                if !next_combination(&mut tail, n - first - 1) {
                    break;
                }
            }
            let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
            log::trace!("delta_{l}: {finished}/{firsts} leading indices done");
            worst
        })
        .reduce(|| 0.0, f64::max);
    Ok(delta)
}

/// Restricted isometry constants of one matrix, keyed by support size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicTable {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub deltas: BTreeMap<usize, f64>,
}

impl RicTable {
    /// Brute-forces `delta_1..=delta_lmax`. Fails before any enumeration if
    /// some order is over the subset budget.
    pub fn compute(phi: &Matrix, lmax: usize) -> Result<Self> {
        let n = phi.ncols();
        if let Some(l) = (1..=lmax.min(n)).find(|&l| binomial(n, l) > SUBSET_BUDGET) {
            return Err(Error::Budget {
                n,
                l,
                required: binomial(n, l),
                limit: SUBSET_BUDGET,
            });
        }
        let mut deltas = BTreeMap::new();
        for l in 1..=lmax {
            deltas.insert(l, ric_bruteforce(phi, l)?);
        }
        Ok(Self {
            m: phi.nrows(),
            n: phi.ncols(),
            deltas,
        })
    }

    /// A table from known constants, e.g. for exercising the checks.
    pub fn from_deltas(m: usize, n: usize, deltas: impl IntoIterator<Item = (usize, f64)>) -> Self {
        Self {
            m,
            n,
            deltas: deltas.into_iter().collect(),
        }
    }

    pub fn get(&self, l: usize) -> Result<f64> {
        self.deltas
            .get(&l)
            .copied()
            .ok_or(Error::MissingConstant(l))
    }

    pub fn max_order(&self) -> usize {
        self.deltas.keys().next_back().copied().unwrap_or(0)
    }

    /// True when the constants are nonnegative and nondecreasing in `L`.
    pub fn is_monotone(&self) -> bool {
        let values: Vec<f64> = self.deltas.values().copied().collect();
        values.iter().all(|&d| d >= 0.0) && values.windows(2).all(|w| w[0] <= w[1])
    }
}

/// Which term of `min(sqrt(B) / (sqrt(K - n_c) + sqrt(B)), 1/2)` is active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundBranch {
    Ratio,
    Half,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepBound {
    /// `min(ratio, 1/2)`.
    pub value: f64,
    /// `sqrt(B) / (sqrt(K - n_c) + sqrt(B))`.
    pub ratio: f64,
    pub branch: BoundBranch,
}

fn ratio_bound(k: usize, b: usize, nc: usize) -> f64 {
    let sb = (b as f64).sqrt();
    sb / (((k - nc) as f64).sqrt() + sb)
}

/// RIC bound under which expanding a path with `n_c` correct atoms adds at
/// least one more correct atom among its `B` best children.
pub fn theorem1_bound(k: usize, b: usize, nc: usize) -> Result<StepBound> {
    if b == 0 {
        return input("B must be at least 1");
    }
    if nc >= k {
        return input(format!("n_c ({nc}) must be below K ({k})"));
    }
    let ratio = ratio_bound(k, b, nc);
    let (value, branch) = if ratio <= 0.5 {
        (ratio, BoundBranch::Ratio)
    } else {
        (0.5, BoundBranch::Half)
    };
    Ok(StepBound {
        value,
        ratio,
        branch,
    })
}

/// Outcome of the overall guarantee for every `K`-sparse signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallCheck {
    pub k: usize,
    pub b: usize,
    /// Measured `delta_{K+B}`.
    pub delta: f64,
    pub bound: StepBound,
    /// `1 / (sqrt(K) + 1)`, the `B = 1` case that matches OMP.
    pub omp_bound: f64,
    /// `delta < bound.value`.
    pub pass: bool,
}

/// `delta_{K+B} < sqrt(B) / (sqrt(K) + sqrt(B))`, strict.
pub fn theorem2_check(ric: &RicTable, k: usize, b: usize) -> Result<OverallCheck> {
    let bound = theorem1_bound(k, b, 0)?;
    let delta = ric.get(k + b)?;
    Ok(OverallCheck {
        k,
        b,
        delta,
        bound,
        omp_bound: 1.0 / ((k as f64).sqrt() + 1.0),
        pass: delta < bound.value,
    })
}

/// Outcome of the condition on one expanded path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnlineCheck {
    pub k: usize,
    pub b: usize,
    pub nc: usize,
    pub nf: usize,
    pub kmax: usize,
    /// `K + n_f <= Kmax`.
    pub length_ok: bool,
    /// Measured `delta_{K+n_f+B}`; not needed once the length clause fails.
    pub delta: Option<f64>,
    pub bound: StepBound,
    pub pass: bool,
}

/// `K + n_f <= Kmax` and `delta_{K+n_f+B} < sqrt(B) / (sqrt(K - n_c) + sqrt(B))`.
/// With `n_c = n_f = 0` this is the overall check.
pub fn theorem3_check(
    ric: &RicTable,
    k: usize,
    b: usize,
    nc: usize,
    nf: usize,
    kmax: usize,
) -> Result<OnlineCheck> {
    let bound = theorem1_bound(k, b, nc)?;
    let length_ok = k + nf <= kmax;
    let delta = if length_ok {
        Some(ric.get(k + nf + b)?)
    } else {
        None
    };
    Ok(OnlineCheck {
        k,
        b,
        nc,
        nf,
        kmax,
        length_ok,
        delta,
        bound,
        pass: delta.is_some_and(|d| d < bound.value),
    })
}

/// Lower bound `(8K + 4 sqrt(BK) - 4B) / 9` on the correct atoms of a path,
/// valid when `K >= (3 + 2 sqrt(B))^2`.
pub fn nc_lower_bound(k: usize, b: usize) -> (bool, f64) {
    let (kf, bf) = (k as f64, b as f64);
    let valid = kf >= (3.0 + 2.0 * bf.sqrt()).powi(2);
    let bound = (8.0 * kf + 4.0 * (bf * kf).sqrt() - 4.0 * bf) / 9.0;
    (valid, bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditOutcome {
    Pass,
    Fail,
    /// Both constants are zero; the strict inequality cannot hold.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicAudit {
    pub k: usize,
    pub b: usize,
    /// `delta_{K+B}`.
    pub lhs: f64,
    /// `delta_{3 ceil(K/2)} / 3`.
    pub rhs: f64,
    pub outcome: AuditOutcome,
}

/// Audits `delta_{K+B} > delta_{3 ceil(K/2)} / 3` on a measured table.
pub fn lemma4_audit(ric: &RicTable, k: usize, b: usize) -> Result<RicAudit> {
    if k == 0 || b == 0 {
        return input("K and B must be at least 1");
    }
    let lhs = ric.get(k + b)?;
    let rhs = ric.get(3 * k.div_ceil(2))? / 3.0;
    let outcome = if lhs == 0.0 && rhs == 0.0 {
        AuditOutcome::Degenerate
    } else if lhs > rhs {
        AuditOutcome::Pass
    } else {
        AuditOutcome::Fail
    };
    Ok(RicAudit {
        k,
        b,
        lhs,
        rhs,
        outcome,
    })
}

/// Range of `delta_{K+n_f+B}` where the online condition holds although the
/// overall one cannot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub k: usize,
    pub b: usize,
    pub nc: usize,
    pub nf: usize,
    /// `[3 sqrt(B) / (sqrt(K) + sqrt(B)), sqrt(B) / (sqrt(K - n_c) + sqrt(B))]`,
    /// `None` when empty.
    pub interval: Option<(f64, f64)>,
    /// Why the window is empty.
    pub reason: Option<String>,
    /// Measured `delta_{K+n_f+B}`, if the table has it.
    pub delta: Option<f64>,
    pub delta_inside: bool,
}

pub fn theorem5_window(ric: &RicTable, k: usize, b: usize, nc: usize, nf: usize) -> Window {
    let delta = ric.get(k + nf + b).ok();
    let mut window = Window {
        k,
        b,
        nc,
        nf,
        interval: None,
        reason: None,
        delta,
        delta_inside: false,
    };
    let (valid, lower) = nc_lower_bound(k, b);
    let reason = if b == 0 {
        Some("B must be at least 1".to_string())
    } else if nc >= k {
        Some(format!("n_c ({nc}) must be below K ({k})"))
    } else if !valid {
        Some(format!("K = {k} is below (3 + 2 sqrt(B))^2"))
    } else if nf + b > k.div_ceil(2) {
        Some(format!(
            "n_f + B = {} exceeds ceil(K/2) = {}",
            nf + b,
            k.div_ceil(2)
        ))
    } else if (nc as f64) < lower {
        Some(format!("n_c = {nc} is below the required {lower:.4}"))
    } else {
        None
    };
    if reason.is_some() {
        window.reason = reason;
        return window;
    }
    let sb = (b as f64).sqrt();
    let left = 3.0 * sb / ((k as f64).sqrt() + sb);
    let right = ratio_bound(k, b, nc);
    if left > right {
        window.reason = Some(format!("left end {left:.6} exceeds right end {right:.6}"));
        return window;
    }
    window.interval = Some((left, right));
    window.delta_inside = delta.is_some_and(|d| left <= d && d <= right);
    window
}

/// `|Phi_I^T Phi_I z|` for `z` supported on `set`.
pub fn restricted_gram_norm(phi: &Matrix, set: &[usize], z: &Vector) -> f64 {
    let sub = phi.select_columns(set);
    (sub.transpose() * (&sub * z)).norm()
}

/// `|Phi_I^T Phi_J z|` for disjoint `i` and `j`, `z` supported on `j`.
pub fn cross_gram_norm(phi: &Matrix, i: &[usize], j: &[usize], z: &Vector) -> f64 {
    let a = phi.select_columns(i);
    let b = phi.select_columns(j);
    (a.transpose() * (&b * z)).norm()
}

/// One entry of a [`RipReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum ConditionCheck {
    Overall(OverallCheck),
    Online(OnlineCheck),
    Audit(RicAudit),
    Window(Window),
    NcLowerBound {
        k: usize,
        b: usize,
        valid: bool,
        bound: f64,
    },
}

/// Serialized as `{M, N, deltas, checks}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RipReport {
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub deltas: BTreeMap<usize, f64>,
    pub checks: Vec<ConditionCheck>,
}

impl RipReport {
    /// Runs every check whose constants the table holds for sparsity `k` and
    /// branching `b`. `kmax` bounds the online checks.
    pub fn evaluate(table: RicTable, k: usize, b: usize, kmax: usize) -> Self {
        let mut checks = Vec::new();
        if let Ok(c) = theorem2_check(&table, k, b) {
            checks.push(ConditionCheck::Overall(c));
        }
        for nc in 0..k {
            for nf in 0..=kmax.saturating_sub(k) {
                if let Ok(c) = theorem3_check(&table, k, b, nc, nf, kmax) {
                    if c.delta.is_some() {
                        checks.push(ConditionCheck::Online(c));
                    }
                }
            }
        }
        if let Ok(a) = lemma4_audit(&table, k, b) {
            checks.push(ConditionCheck::Audit(a));
        }
        let (valid, bound) = nc_lower_bound(k, b);
        checks.push(ConditionCheck::NcLowerBound { k, b, valid, bound });
        if valid {
            let nc = (bound.ceil() as usize).min(k.saturating_sub(1));
            checks.push(ConditionCheck::Window(theorem5_window(&table, k, b, nc, 0)));
        }
        Self {
            m: table.m,
            n: table.n,
            deltas: table.deltas,
            checks,
        }
    }

    pub fn table(&self) -> RicTable {
        RicTable::from_deltas(self.m, self.n, self.deltas.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gen_matrix_with_std, stream};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn random_phi(m: usize, n: usize, seed: u64) -> Matrix {
        gen_matrix_with_std(m, n, seed, 1.0 / (m as f64).sqrt())
            .unwrap()
            .phi
    }

    /// Closed-form eigenvalues of `[[a, b], [b, c]]`.
    fn pair_oracle(phi: &Matrix) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..phi.ncols() {
            for j in i + 1..phi.ncols() {
                let a = phi.column(i).norm_squared();
                let c = phi.column(j).norm_squared();
                let b = phi.column(i).dot(&phi.column(j));
                let mean = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                worst = worst.max((mean + rad - 1.0).max(1.0 - (mean - rad)));
            }
        }
        worst
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(12, 2), 66);
        assert_eq!(binomial(20, 10), 184_756);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(500, 250), u128::MAX);
    }

    #[test]
    fn combinations_enumerate_all() {
        let mut c = vec![0, 1, 2];
        let mut count = 1;
        while next_combination(&mut c, 6) {
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            count += 1;
        }
        assert_eq!(count, 20);
    }

    #[test]
    fn identity_is_perfect_isometry() {
        let phi = Matrix::identity(6, 6);
        for l in 1..=6 {
            assert_eq!(ric_bruteforce(&phi, l).unwrap(), 0.0);
        }
    }

    #[test]
    fn repeated_column_breaks_two_rip() {
        let mut phi = random_phi(5, 7, 3);
        let col = phi.column(1).normalize();
        phi.set_column(1, &col);
        phi.set_column(4, &col);
        assert!(ric_bruteforce(&phi, 2).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn pairs_match_closed_form() {
        for seed in 0..5 {
            let phi = random_phi(8, 12, seed);
            assert_relative_eq!(
                ric_bruteforce(&phi, 2).unwrap(),
                pair_oracle(&phi),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn single_atoms_are_column_norms() {
        let phi = random_phi(6, 9, 8);
        let expected = phi
            .column_iter()
            .map(|c| (c.norm_squared() - 1.0).abs())
            .fold(0.0, f64::max);
        assert_relative_eq!(ric_bruteforce(&phi, 1).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn guard_refuses_large_enumerations() {
        let phi = Matrix::zeros(2, 60);
        match ric_bruteforce(&phi, 10) {
            Err(Error::Budget { required, .. }) => assert_eq!(required, binomial(60, 10)),
            other => panic!("expected budget error, got {other:?}"),
        }
        assert!(ric_bruteforce(&phi, 0).is_err());
        // the table stops before computing the cheap orders
        match RicTable::compute(&Matrix::zeros(2, 40), 8) {
            Err(Error::Budget { l, .. }) => assert_eq!(l, 7),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn table_is_monotone_and_sandwiches_hold() {
        let phi = random_phi(8, 12, 21);
        let table = RicTable::compute(&phi, 5).unwrap();
        assert!(table.is_monotone());
        let mut rng = stream(99, 7);
        for _ in 0..100 {
            let set = [0, 3, 7];
            let z = Vector::from_fn(3, |_, _| rng.sample::<f64, _>(StandardNormal));
            let d = table.get(3).unwrap();
            let g = restricted_gram_norm(&phi, &set, &z);
            assert!(g <= (1.0 + d) * z.norm() + 1e-12);
            assert!(g >= (1.0 - d) * z.norm() - 1e-12);
            let zj = z.rows(0, 2).into_owned();
            let c = cross_gram_norm(&phi, &[1, 5], &[2, 9], &zj);
            assert!(c <= table.get(4).unwrap() * zj.norm() + 1e-12);
        }
    }

    #[test]
    fn step_bound_arithmetic() {
        let b = theorem1_bound(1, 1, 0).unwrap();
        assert_eq!(b.value, 0.5);
        let b = theorem1_bound(4, 4, 0).unwrap();
        assert_eq!(b.value, 0.5);
        assert_eq!(b.branch, BoundBranch::Ratio);
        let b = theorem1_bound(10, 2, 9).unwrap();
        assert_eq!(b.branch, BoundBranch::Half);
        assert_relative_eq!(b.ratio, 2f64.sqrt() / (1.0 + 2f64.sqrt()), epsilon = 1e-15);
        let values: Vec<f64> = (0..10)
            .map(|nc| theorem1_bound(10, 2, nc).unwrap().value)
            .collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        assert!(theorem1_bound(3, 1, 3).is_err());
    }

    #[test]
    fn overall_check_is_strict() {
        let at = RicTable::from_deltas(4, 8, [(4, 0.5)]);
        let c = theorem2_check(&at, 2, 2).unwrap();
        assert_eq!(c.bound.value, 0.5);
        assert!(!c.pass);
        let below = RicTable::from_deltas(4, 8, [(4, 0.4999)]);
        assert!(theorem2_check(&below, 2, 2).unwrap().pass);
        assert_relative_eq!(c.omp_bound, 1.0 / (2f64.sqrt() + 1.0));
        assert!(matches!(
            theorem2_check(&below, 3, 2),
            Err(Error::MissingConstant(5))
        ));
    }

    #[test]
    fn identity_passes_overall_check() {
        let table = RicTable::compute(&Matrix::identity(6, 6), 4).unwrap();
        for (k, b) in [(1, 1), (2, 2), (3, 1)] {
            assert!(theorem2_check(&table, k, b).unwrap().pass);
        }
    }

    #[test]
    fn online_check_reduces_and_respects_length() {
        let table = RicTable::compute(&random_phi(6, 9, 4), 4).unwrap();
        for (k, b) in [(1, 1), (2, 1), (2, 2), (3, 1)] {
            let overall = theorem2_check(&table, k, b).unwrap();
            let online = theorem3_check(&table, k, b, 0, 0, k).unwrap();
            assert_eq!(overall.pass, online.pass);
            assert_eq!(Some(overall.delta), online.delta);
        }
        let long = theorem3_check(&table, 3, 1, 0, 2, 4).unwrap();
        assert!(!long.length_ok && !long.pass && long.delta.is_none());
    }

    #[test]
    fn nc_bound_values() {
        assert_eq!(nc_lower_bound(49, 4), (true, 48.0));
        assert!(!nc_lower_bound(48, 4).0);
        assert_eq!(nc_lower_bound(25, 1), (true, 24.0));
    }

    #[test]
    fn audit_outcomes() {
        let id = RicTable::compute(&Matrix::identity(6, 6), 6).unwrap();
        assert_eq!(
            lemma4_audit(&id, 4, 2).unwrap().outcome,
            AuditOutcome::Degenerate
        );
        let table = RicTable::compute(&random_phi(10, 20, 5), 6).unwrap();
        let a = lemma4_audit(&table, 4, 2).unwrap();
        assert_eq!(a.outcome, AuditOutcome::Pass);
        assert_relative_eq!(a.rhs, a.lhs / 3.0);
        assert!(lemma4_audit(&table, 6, 1).is_err());
    }

    #[test]
    fn windows() {
        let empty = RicTable::from_deltas(1, 1, []);
        let w = theorem5_window(&empty, 25, 1, 24, 0);
        assert_eq!(w.interval, Some((0.5, 0.5)));
        assert!(w.delta.is_none() && !w.delta_inside);
        let w = theorem5_window(&empty, 36, 1, 34, 0);
        assert!(w.interval.is_none());
        assert!(w.reason.unwrap().contains("below the required"));
        let w = theorem5_window(&empty, 25, 1, 20, 0);
        assert!(w.interval.is_none());
        let w = theorem5_window(&empty, 16, 1, 15, 0);
        assert!(w.reason.unwrap().contains("(3 + 2 sqrt(B))^2"));
        let inside = RicTable::from_deltas(1, 1, [(26, 0.5)]);
        assert!(theorem5_window(&inside, 25, 1, 24, 0).delta_inside);
    }

    #[test]
    fn report_json_shape() {
        let table = RicTable::compute(&Matrix::identity(6, 6), 3).unwrap();
        let report = RipReport::evaluate(table, 1, 1, 2);
        let v: serde_json::Value = serde_json::to_value(&report).unwrap();
        assert_eq!(v["M"], 6);
        assert_eq!(v["N"], 6);
        assert_eq!(v["deltas"]["2"], 0.0);
        assert!(v["checks"]
            .as_array()
            .unwrap()
            .iter()
            .any(|c| c["check"] == "overall"));
        let back: RipReport = serde_json::from_value(v).unwrap();
        assert_eq!(back, report);
    }
}
