//! Empirical phase transitions: success rate over the `(lambda = M/N,
//! rho = K/M)` plane and the 50% crossing per `lambda`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::batch::{csv_error, run_batch, BatchSetup, SolverSpec};
use crate::error::{input, Result};
use crate::signal::{trial_seed, Ensemble};

/// Direction of a censored crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Censor {
    /// Success stays below 50% over the whole tested range.
    Low,
    /// Success stays above 50% over the whole tested range.
    High,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    Logistic,
    /// Monotone (isotonic) fit, used when the likelihood has no finite maximum.
    Isotonic,
    /// Every cell succeeded or every cell failed; nothing was fitted.
    Degenerate,
}

/// One 50% crossing estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub rho_star: Option<f64>,
    pub censored: Option<Censor>,
    pub method: FitMethod,
    /// `(intercept, slope)` of `logit p = a + b rho` when the logistic fit was used.
    pub logistic: Option<(f64, f64)>,
}

/// Success counts at one abscissa.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialPoint {
    pub rho: f64,
    pub successes: usize,
    pub trials: usize,
}

const NEWTON_ITERATIONS: usize = 100;
/// A slope beyond this (in centred units) means the maximum is at infinity.
const SLOPE_LIMIT: f64 = 1e4;

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Newton iterations on the binomial log-likelihood of `logit p = a + b rho`.
/// Returns `None` when they diverge.
pub fn logistic_mle(points: &[BinomialPoint]) -> Option<(f64, f64)> {
    let total: f64 = points.iter().map(|p| p.trials as f64).sum();
    if total == 0.0 {
        return None;
    }
    let centre = points.iter().map(|p| p.rho * p.trials as f64).sum::<f64>() / total;
    let (mut a, mut b) = (0.0f64, 0.0f64);
    for _ in 0..NEWTON_ITERATIONS {
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for p in points {
            let t = p.rho - centre;
            let n = p.trials as f64;
            let mu = sigmoid(a + b * t);
            let resid = p.successes as f64 - n * mu;
            let w = n * mu * (1.0 - mu);
            g0 += resid;
            g1 += resid * t;
            h00 += w;
            h01 += w * t;
            h11 += w * t * t;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det.is_finite() && det > 1e-300) {
            return None;
        }
        let da = (h11 * g0 - h01 * g1) / det;
        let db = (h00 * g1 - h01 * g0) / det;
        a += da;
        b += db;
        if !(a.is_finite() && b.is_finite()) || b.abs() > SLOPE_LIMIT {
            return None;
        }
        if da.abs() < 1e-10 && db.abs() < 1e-10 {
            return Some((a - b * centre, b));
        }
    }
    None
}

/// Weighted pool-adjacent-violators fit that is nonincreasing in `rho`.
/// `points` must be sorted by `rho`.
pub fn isotonic_decreasing(points: &[BinomialPoint]) -> Vec<f64> {
    // blocks of (weighted mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::new();
    for p in points {
        let w = (p.trials as f64).max(f64::MIN_POSITIVE);
        let mut block = (p.successes as f64 / w, w, 1);
        while let Some(&(mean, weight, count)) = blocks.last() {
            if mean >= block.0 {
                break;
            }
            blocks.pop();
            let total = weight + block.1;
            block = (
                (mean * weight + block.0 * block.1) / total,
                total,
                count + block.2,
            );
        }
        blocks.push(block);
    }
    blocks
        .into_iter()
        .flat_map(|(mean, _, count)| std::iter::repeat_n(mean, count))
        .collect()
}

/// True when one `rho` threshold splits successes from failures, with at
/// most one mixed point on it. The likelihood maximum is then at infinity.
fn separable(points: &[BinomialPoint]) -> bool {
    let fold = |pick: fn(&BinomialPoint) -> bool, init: f64, f: fn(f64, f64) -> f64| {
        points
            .iter()
            .filter(|p| pick(p))
            .fold(init, |acc, p| f(acc, p.rho))
    };
    let has_success = |p: &BinomialPoint| p.successes > 0;
    let has_failure = |p: &BinomialPoint| p.successes < p.trials;
    let success_max = fold(has_success, f64::NEG_INFINITY, f64::max);
    let success_min = fold(has_success, f64::INFINITY, f64::min);
    let failure_max = fold(has_failure, f64::NEG_INFINITY, f64::max);
    let failure_min = fold(has_failure, f64::INFINITY, f64::min);
    success_max <= failure_min || failure_max <= success_min
}

fn isotonic_crossing(points: &[BinomialPoint]) -> Crossing {
    let fit = isotonic_decreasing(points);
    let censored = |c| Crossing {
        rho_star: None,
        censored: Some(c),
        method: FitMethod::Isotonic,
        logistic: None,
    };
    if fit[0] < 0.5 {
        return censored(Censor::Low);
    }
    for i in 0..fit.len() - 1 {
        if fit[i] >= 0.5 && fit[i + 1] < 0.5 {
            let t = (fit[i] - 0.5) / (fit[i] - fit[i + 1]);
            return Crossing {
                rho_star: Some(points[i].rho + t * (points[i + 1].rho - points[i].rho)),
                censored: None,
                method: FitMethod::Isotonic,
                logistic: None,
            };
        }
    }
    censored(Censor::High)
}

/// 50% crossing of the success probability as a function of `rho`.
///
/// Fits a two-parameter logistic model by maximum likelihood. When the
/// data are separable (the maximum lies at infinity) or the fitted slope is
/// not negative, falls back to the crossing of an isotonic fit. A crossing
/// outside the tested range is censored.
pub fn fit_crossing(points: &[BinomialPoint]) -> Result<Crossing> {
    if points.is_empty() {
        return input("no points to fit");
    }
    let mut points = points.to_vec();
    points.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    let successes: usize = points.iter().map(|p| p.successes).sum();
    let trials: usize = points.iter().map(|p| p.trials).sum();
    if successes == 0 || successes == trials {
        return Ok(Crossing {
            rho_star: None,
            censored: Some(if successes == 0 {
                Censor::Low
            } else {
                Censor::High
            }),
            method: FitMethod::Degenerate,
            logistic: None,
        });
    }
    let (lo, hi) = (points[0].rho, points[points.len() - 1].rho);
    let fitted = if separable(&points) {
        None
    } else {
        logistic_mle(&points)
    };
    match fitted {
        Some((a, b)) if b < 0.0 => {
            let rho = -a / b;
            let (rho_star, censored) = if rho < lo {
                (None, Some(Censor::Low))
            } else if rho > hi {
                (None, Some(Censor::High))
            } else {
                (Some(rho), None)
            };
            Ok(Crossing {
                rho_star,
                censored,
                method: FitMethod::Logistic,
                logistic: Some((a, b)),
            })
        }
        _ => Ok(isotonic_crossing(&points)),
    }
}

/// Grid and seeding of a phase-transition run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSetup {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambdas: Vec<f64>,
    pub rhos: Vec<f64>,
    pub trials: usize,
    pub ensemble: Ensemble,
    pub base_seed: u64,
    pub jobs: Option<usize>,
}

impl PhaseSetup {
    fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.rhos.is_empty() {
            return input("lambda and rho grids must be nonempty");
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(0.1..=0.9).contains(*l)) {
            return input(format!("lambda {l} outside [0.1, 0.9]"));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return input(format!("rho {r} outside (0, 1]"));
        }
        if self.trials == 0 {
            return input("trials must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseCell {
    pub lambda: f64,
    /// Requested grid value.
    pub rho: f64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Path length limit used by a search solver, if any.
    pub kmax: Option<usize>,
    pub successes: usize,
    pub trials: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub lambda: f64,
    #[serde(rename = "M")]
    pub m: usize,
    pub crossing: Crossing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionCurve {
    pub solver: String,
    pub setup: PhaseSetup,
    pub points: Vec<PhasePoint>,
    pub cells: Vec<PhaseCell>,
}

impl PhaseTransitionCurve {
    pub fn point(&self, lambda: f64) -> Option<&PhasePoint> {
        self.points
            .iter()
            .find(|p| (p.lambda - lambda).abs() < 1e-12)
    }

    /// Cells whose rate exceeds the rate at a smaller `rho` in the same
    /// column by more than `slack`.
    pub fn monotonicity_violations(&self, slack: f64) -> Vec<&PhaseCell> {
        let mut bad = Vec::new();
        for &lambda in &self.setup.lambdas {
            let mut column: Vec<&PhaseCell> =
                self.cells.iter().filter(|c| c.lambda == lambda).collect();
            column.sort_by(|a, b| a.rho.total_cmp(&b.rho));
            let mut lowest = f64::INFINITY;
            for c in column {
                if c.rate > lowest + slack {
                    bad.push(c);
                }
                lowest = lowest.min(c.rate);
            }
        }
        bad
    }

    /// `lambda,rho_star,censored,trials`; `rho_star` is empty when censored.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "rho_star", "censored", "trials"])
            .map_err(csv_error)?;
        for p in &self.points {
            let censored = match p.crossing.censored {
                None => "",
                Some(Censor::Low) => "low",
                Some(Censor::High) => "high",
            };
            w.write_record([
                p.lambda.to_string(),
                p.crossing
                    .rho_star
                    .map(|r| r.to_string())
                    .unwrap_or_default(),
                censored.to_string(),
                self.setup.trials.to_string(),
            ])
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Full cell grid.
    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for c in &self.cells {
            w.serialize(c).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs `solver` on every `(lambda, rho)` cell and fits the 50% crossing per
/// `lambda`. `M = round(lambda N)`, `K = max(round(rho M), 1)`; the fit uses
/// the realised `K/M`.
pub fn phase_transition(solver: &SolverSpec, setup: &PhaseSetup) -> Result<PhaseTransitionCurve> {
    setup.validate()?;
    let mut cells = Vec::new();
    let mut points = Vec::new();
    for (li, &lambda) in setup.lambdas.iter().enumerate() {
        let m = ((lambda * setup.n as f64).round() as usize).max(1);
        let mut fit_points = Vec::new();
        for (ri, &rho) in setup.rhos.iter().enumerate() {
            let k = ((rho * m as f64).round() as usize).clamp(1, m);
            let mut batch = BatchSetup::new(
                setup.n,
                m,
                k,
                setup.ensemble,
                setup.trials,
                trial_seed(trial_seed(setup.base_seed, li as u64), ri as u64),
            );
            batch.jobs = setup.jobs;
            let result = run_batch(std::slice::from_ref(solver), &batch)?;
            let successes = result.records.iter().filter(|r| r.exact).count();
            log::debug!("lambda {lambda} rho {rho}: {successes}/{}", setup.trials);
            cells.push(PhaseCell {
                lambda,
                rho,
                m,
                k,
                kmax: solver.resolved(k, m, setup.n).map(|c| c.kmax),
                successes,
                trials: setup.trials,
                rate: successes as f64 / setup.trials as f64,
            });
            fit_points.push(BinomialPoint {
                rho: k as f64 / m as f64,
                successes,
                trials: setup.trials,
            });
        }
        points.push(PhasePoint {
            lambda,
            m,
            crossing: fit_crossing(&fit_points)?,
        });
    }
    Ok(PhaseTransitionCurve {
        solver: solver.label(),
        setup: setup.clone(),
        points,
        cells,
    })
}
