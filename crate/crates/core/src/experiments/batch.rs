//! Seeded, paired recovery trials and their aggregates.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::astar::{aomp_recover, hybrid_recover, AompConfig};
use crate::baselines::BaselineConfig;
use crate::error::{input, Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::output::RecoveryOutput;
use crate::signal::{default_std_dev, gen_instance, gen_matrix_with_std, trial_seed, Ensemble};

/// Relative error at or below which a trial counts as exact recovery.
pub const EXACT_TOLERANCE: f64 = 1e-2;

/// How the path length limit of a search is chosen for a problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "snake_case")]
pub enum KmaxRule {
    Fixed(usize),
    /// `Kmax = K`.
    Sparsity,
    /// `max(round((0.5 + 0.5 M/N) M), K + 1)`, capped at `M`.
    RhoMax,
}

impl KmaxRule {
    pub fn resolve(self, k: usize, m: usize, n: usize) -> usize {
        match self {
            KmaxRule::Fixed(v) => v,
            KmaxRule::Sparsity => k,
            KmaxRule::RhoMax => {
                let lambda = m as f64 / n as f64;
                let rho_max = 0.5 + 0.5 * lambda;
                ((rho_max * m as f64).round() as usize).max(k + 1).min(m)
            }
        }
    }
}

/// A solver with everything but the problem fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverSpec {
    Aomp {
        config: AompConfig,
        kmax: KmaxRule,
    },
    /// OMP first, best-first search only when OMP fails.
    Hybrid {
        config: AompConfig,
        kmax: KmaxRule,
    },
    Baseline {
        config: BaselineConfig,
    },
}

impl SolverSpec {
    pub fn aomp(config: AompConfig) -> Self {
        let kmax = KmaxRule::Fixed(config.kmax);
        SolverSpec::Aomp { config, kmax }
    }

    pub fn hybrid(config: AompConfig) -> Self {
        let kmax = KmaxRule::Fixed(config.kmax);
        SolverSpec::Hybrid { config, kmax }
    }

    pub fn baseline(config: BaselineConfig) -> Self {
        SolverSpec::Baseline { config }
    }

    /// Mul cost, `Kmax = K`.
    pub fn mul_k() -> Self {
        SolverSpec::Aomp {
            config: AompConfig::mul_k(1),
            kmax: KmaxRule::Sparsity,
        }
    }

    pub fn label(&self) -> String {
        match self {
            SolverSpec::Aomp { config, .. } => config.label(),
            SolverSpec::Hybrid { config, .. } => format!("Hybrid-{}", config.label()),
            SolverSpec::Baseline { config } => config.label().to_string(),
        }
    }

    /// Search configuration for a `k`-sparse problem on `phi`.
    pub fn resolved(&self, k: usize, m: usize, n: usize) -> Option<AompConfig> {
        match self {
            SolverSpec::Aomp { config, kmax } | SolverSpec::Hybrid { config, kmax } => {
                let mut c = config.clone();
                c.kmax = kmax.resolve(k, m, n);
                Some(c)
            }
            SolverSpec::Baseline { .. } => None,
        }
    }

    pub fn solve(&self, phi: &Matrix, y: &Vector, k: usize) -> Result<RecoveryOutput> {
        let (m, n) = phi.shape();
        match self {
            SolverSpec::Aomp { .. } => {
                aomp_recover(phi, y, &self.resolved(k, m, n).expect("search config"))
            }
            SolverSpec::Hybrid { .. } => {
                hybrid_recover(phi, y, &self.resolved(k, m, n).expect("search config"), k)
            }
            SolverSpec::Baseline { config } => config.recover(phi, y, k),
        }
    }
}

/// Problem shape and seeding of one batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSetup {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ensemble: Ensemble,
    pub trials: usize,
    pub base_seed: u64,
    /// Standard deviation of the matrix entries; `1/N` when unset.
    pub matrix_std: Option<f64>,
    /// Worker threads; the global pool when unset. Use 1 for timing runs.
    pub jobs: Option<usize>,
}

impl BatchSetup {
    pub fn new(
        n: usize,
        m: usize,
        k: usize,
        ensemble: Ensemble,
        trials: usize,
        base_seed: u64,
    ) -> Self {
        Self {
            n,
            m,
            k,
            ensemble,
            trials,
            base_seed,
            matrix_std: None,
            jobs: None,
        }
    }

    pub fn with_jobs(mut self, jobs: usize) -> Self {
        self.jobs = Some(jobs);
        self
    }

    pub fn trial_seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.trials as u64).map(|t| trial_seed(self.base_seed, t))
    }

    fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return input("trials must be at least 1");
        }
        if self.m == 0 || self.n == 0 || self.k == 0 || self.k > self.n {
            return input(format!(
                "need 1 <= K <= N and M >= 1, got N={}, M={}, K={}",
                self.n, self.m, self.k
            ));
        }
        Ok(())
    }
}

/// One solver on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub solver: String,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ensemble: Ensemble,
    pub exact: bool,
    /// `||x - x_hat|| / ||x||`; 1 when the solver failed.
    pub rel_err: f64,
    /// Solver time only, instance generation excluded.
    pub time_ms: f64,
    /// Sorted recovered support.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub support: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// Search invariant violations seen by an audited solver.
    #[serde(default, skip_serializing_if = "is_zero")]
    pub audit_violations: usize,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

/// CSV row layout; the JSON-lines form carries the full record.
#[derive(Serialize)]
struct CsvRow<'a> {
    solver: &'a str,
    seed: u64,
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    ensemble: Ensemble,
    exact: bool,
    rel_err: f64,
    time_ms: f64,
}

impl<'a> From<&'a TrialRecord> for CsvRow<'a> {
    fn from(r: &'a TrialRecord) -> Self {
        CsvRow {
            solver: &r.solver,
            seed: r.seed,
            n: r.n,
            m: r.m,
            k: r.k,
            ensemble: r.ensemble,
            exact: r.exact,
            rel_err: r.rel_err,
            time_ms: r.time_ms,
        }
    }
}

/// Per-solver summary, recomputable from the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub solver: String,
    pub trials: usize,
    pub exact_rate: f64,
    pub anmse: f64,
    pub mean_time_ms: f64,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialBatchResult {
    pub setup: BatchSetup,
    /// Trial-major: all solvers for trial 0, then trial 1, ...
    pub records: Vec<TrialRecord>,
    pub aggregates: Vec<Aggregate>,
}

impl TrialBatchResult {
    pub fn aggregate(&self, solver: &str) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.solver == solver)
    }

    pub fn records_for<'a>(
        &'a self,
        solver: &'a str,
    ) -> impl Iterator<Item = &'a TrialRecord> + 'a {
        self.records.iter().filter(move |r| r.solver == solver)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records_csv(&self.records, out)
    }

    pub fn write_jsonl<W: Write>(&self, out: W) -> Result<()> {
        write_jsonl(&self.records, out)
    }
}

/// Writes records with the header `solver,seed,N,M,K,ensemble,exact,rel_err,time_ms`.
pub fn write_records_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow::from(r)).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON document per line.
pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut out: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Input(format!("csv: {other:?}")),
    }
}

/// Squared relative error, `None` (with a warning) for a zero reference.
pub fn normalized_sq_error(x: &Vector, estimate: &Vector) -> Option<f64> {
    let norm = x.norm_squared();
    if norm == 0.0 {
        log::warn!("zero-norm reference vector excluded from ANMSE");
        return None;
    }
    Some((x - estimate).norm_squared() / norm)
}

/// Mean of squared relative errors, given the relative errors.
pub fn anmse(rel_errors: &[f64]) -> Result<f64> {
    if rel_errors.is_empty() {
        return input("ANMSE of an empty set");
    }
    Ok(rel_errors.iter().map(|e| e * e).sum::<f64>() / rel_errors.len() as f64)
}

pub fn aggregate(solver: &str, records: &[&TrialRecord]) -> Aggregate {
    let trials = records.len();
    let errors: Vec<f64> = records.iter().map(|r| r.rel_err).collect();
    let count = trials.max(1) as f64;
    Aggregate {
        solver: solver.to_string(),
        trials,
        exact_rate: records.iter().filter(|r| r.exact).count() as f64 / count,
        anmse: anmse(&errors).unwrap_or(0.0),
        mean_time_ms: records.iter().map(|r| r.time_ms).sum::<f64>() / count,
        failures: records.iter().filter(|r| r.error.is_some()).count(),
    }
}

fn run_trial(
    solvers: &[SolverSpec],
    labels: &[String],
    setup: &BatchSetup,
    seed: u64,
) -> Result<Vec<TrialRecord>> {
    let std_dev = setup.matrix_std.unwrap_or_else(|| default_std_dev(setup.n));
    let phi = gen_matrix_with_std(setup.m, setup.n, seed, std_dev)?.phi;
    let inst = gen_instance(setup.n, setup.k, setup.ensemble, seed, &phi)?;
    let x_norm = inst.x.norm();
    Ok(solvers
        .iter()
        .zip(labels)
        .map(|(solver, label)| {
            let start = Instant::now();
            let result = solver.solve(&phi, &inst.y, setup.k);
            let time_ms = start.elapsed().as_secs_f64() * 1e3;
            let mut record = TrialRecord {
                solver: label.clone(),
                seed,
                n: setup.n,
                m: setup.m,
                k: setup.k,
                ensemble: setup.ensemble,
                exact: false,
                rel_err: 1.0,
                time_ms,
                support: Vec::new(),
                error: None,
                audit_violations: 0,
            };
            match result {
                Ok(out) => {
                    record.rel_err = (&inst.x - out.estimate()).norm() / x_norm;
                    record.exact = record.rel_err <= EXACT_TOLERANCE;
                    record.support = out.sorted_support();
                    record.audit_violations = out.stats.audit_violations;
                }
                Err(e) => {
                    log::warn!("{label} failed on seed {seed}: {e}");
                    record.error = Some(e.to_string());
                }
            }
            record
        })
        .collect())
}

/// Runs every solver on the same `trials` seeded instances.
///
/// Records depend only on the setup, never on the thread count; wall times
/// are measured around each solver call.
pub fn run_batch(solvers: &[SolverSpec], setup: &BatchSetup) -> Result<TrialBatchResult> {
    setup.validate()?;
    if solvers.is_empty() {
        return input("no solvers given");
    }
    let labels: Vec<String> = solvers.iter().map(SolverSpec::label).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return input(format!("solver label {l} appears twice"));
        }
    }
    let seeds: Vec<u64> = setup.trial_seeds().collect();
    let work = || -> Result<Vec<Vec<TrialRecord>>> {
        seeds
            .par_iter()
            .map(|&seed| run_trial(solvers, &labels, setup, seed))
            .collect()
    };
    let per_trial = match setup.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Input(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    let aggregates = labels
        .iter()
        .map(|l| {
            aggregate(
                l,
                &records
                    .iter()
                    .filter(|r| &r.solver == l)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    Ok(TrialBatchResult {
        setup: setup.clone(),
        records,
        aggregates,
    })
}

/// One batch per sparsity; `K` enters the trial seeds so each sparsity gets
/// its own instances.
pub fn sweep_k(
    solvers: &[SolverSpec],
    template: &BatchSetup,
    ks: impl IntoIterator<Item = usize>,
) -> Result<Vec<TrialBatchResult>> {
    ks.into_iter()
        .map(|k| {
            let mut setup = template.clone();
            setup.k = k;
            setup.base_seed = trial_seed(template.base_seed, k as u64);
            run_batch(solvers, &setup)
        })
        .collect()
}

/// Writes `K,solver,trials,exact_rate,anmse,mean_time_ms,failures`.
pub fn write_sweep_csv<W: Write>(sweep: &[TrialBatchResult], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "K",
        "solver",
        "trials",
        "exact_rate",
        "anmse",
        "mean_time_ms",
        "failures",
    ])
    .map_err(csv_error)?;
    for batch in sweep {
        for a in &batch.aggregates {
            w.write_record([
                batch.setup.k.to_string(),
                a.solver.clone(),
                a.trials.to_string(),
                a.exact_rate.to_string(),
                a.anmse.to_string(),
                a.mean_time_ms.to_string(),
                a.failures.to_string(),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}
