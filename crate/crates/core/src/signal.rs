//! Seeded generation of measurement matrices and sparse test instances.
//!
//! Every random quantity is drawn from a ChaCha8 stream keyed by
//! `(seed, purpose)`, so the matrix and the signal of one trial never share
//! random numbers even when they share a seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::linalg::{Matrix, Vector};

const STREAM_MATRIX: u64 = 1;
const STREAM_SUPPORT: u64 = 2;
const STREAM_VALUES: u64 = 3;

/// Independent random stream for one `(seed, purpose)` pair.
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose);
    rng
}

/// Per-trial seed derived from a batch seed (splitmix64 finalizer).
pub fn trial_seed(base: u64, trial: u64) -> u64 {
    let mut z = base
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(trial.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Distribution of the nonzero entries of a sparse signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ensemble {
    /// Standard normal.
    Gaussian,
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// Constant amplitude, random sign.
    Cars,
}

impl Ensemble {
    pub const ALL: [Ensemble; 3] = [Ensemble::Gaussian, Ensemble::Uniform, Ensemble::Cars];

    pub fn name(self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Uniform => "uniform",
            Ensemble::Cars => "cars",
        }
    }

    fn draw(self, rng: &mut ChaCha8Rng) -> f64 {
        loop {
            let v = match self {
                Ensemble::Gaussian => StandardNormal.sample(rng),
                Ensemble::Uniform => rng.random_range(-1.0..=1.0),
                Ensemble::Cars => {
                    if rng.random::<bool>() {
                        1.0
                    } else {
                        -1.0
                    }
                }
            };
            if v != 0.0 {
                return v;
            }
        }
    }
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Ensemble::Gaussian),
            "uniform" => Ok(Ensemble::Uniform),
            "cars" => Ok(Ensemble::Cars),
            other => input(format!("unknown ensemble '{other}'")),
        }
    }
}

/// A random measurement matrix with the parameters that produced it.
#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    pub phi: Matrix,
    pub seed: u64,
    pub std_dev: f64,
    pub distribution: &'static str,
}

/// Default entry standard deviation for an `M x N` matrix: `1/N`.
pub fn default_std_dev(n: usize) -> f64 {
    1.0 / n as f64
}

/// I.i.d. zero-mean Gaussian entries with standard deviation `1/N`.
pub fn gen_matrix(m: usize, n: usize, seed: u64) -> Result<MeasurementEnsemble> {
    gen_matrix_with_std(m, n, seed, default_std_dev(n))
}

pub fn gen_matrix_with_std(
    m: usize,
    n: usize,
    seed: u64,
    std_dev: f64,
) -> Result<MeasurementEnsemble> {
    if m == 0 || n == 0 {
        return input(format!("matrix dimensions must be positive, got {m}x{n}"));
    }
    let normal = Normal::new(0.0, std_dev)
        .map_err(|e| Error::Input(format!("standard deviation {std_dev}: {e}")))?;
    let mut rng = stream(seed, STREAM_MATRIX);
    // filled column by column
    let phi = Matrix::from_iterator(m, n, (0..m * n).map(|_| normal.sample(&mut rng)));
    Ok(MeasurementEnsemble {
        phi,
        seed,
        std_dev,
        distribution: "gaussian",
    })
}

/// Ground-truth sparse vector and its noiseless observation.
#[derive(Debug, Clone)]
pub struct SparseInstance {
    pub seed: u64,
    pub ensemble: Ensemble,
    /// Sorted ascending.
    pub support: Vec<usize>,
    pub x: Vector,
    pub y: Vector,
}

impl SparseInstance {
    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn m(&self) -> usize {
        self.y.len()
    }

    pub fn record(&self) -> InstanceRecord {
        InstanceRecord {
            seed: self.seed,
            m: self.m(),
            n: self.n(),
            k: self.k(),
            ensemble: self.ensemble,
            support: self.support.clone(),
            values: self.support.iter().map(|&j| self.x[j]).collect(),
        }
    }
}

/// Draws a `K`-sparse signal on a uniformly random support and observes it
/// through `phi`.
pub fn gen_instance(
    n: usize,
    k: usize,
    ensemble: Ensemble,
    seed: u64,
    phi: &Matrix,
) -> Result<SparseInstance> {
    if k == 0 || k > n {
        return input(format!(
            "sparsity must satisfy 1 <= K <= N, got K={k}, N={n}"
        ));
    }
    if phi.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            actual: phi.ncols(),
        });
    }
    let mut support = index::sample(&mut stream(seed, STREAM_SUPPORT), n, k).into_vec();
    support.sort_unstable();
    let mut values_rng = stream(seed, STREAM_VALUES);
    let mut x = Vector::zeros(n);
    for &j in &support {
        x[j] = ensemble.draw(&mut values_rng);
    }
    let y = phi * &x;
    Ok(SparseInstance {
        seed,
        ensemble,
        support,
        x,
        y,
    })
}

/// Replayable JSON form of an instance. The matrix is regenerated from
/// `gen_matrix(M, N, seed)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub seed: u64,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub ensemble: Ensemble,
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl InstanceRecord {
    /// Rebuilds the instance against `phi`, recomputing `y = phi x`.
    pub fn to_instance(&self, phi: &Matrix) -> Result<SparseInstance> {
        if self.support.len() != self.k || self.values.len() != self.k {
            return input("record support/values length differs from K");
        }
        if phi.nrows() != self.m || phi.ncols() != self.n {
            return input(format!(
                "record is {}x{} but matrix is {}x{}",
                self.m,
                self.n,
                phi.nrows(),
                phi.ncols()
            ));
        }
        let mut x = Vector::zeros(self.n);
        for (&j, &v) in self.support.iter().zip(&self.values) {
            if j >= self.n {
                return input(format!("support index {j} out of range"));
            }
            x[j] = v;
        }
        let mut support = self.support.clone();
        support.sort_unstable();
        support.dedup();
        if support.len() != self.k {
            return input("record support has duplicate indices");
        }
        Ok(SparseInstance {
            seed: self.seed,
            ensemble: self.ensemble,
            support,
            y: phi * &x,
            x,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_is_deterministic() {
        let a = gen_matrix(10, 20, 42).unwrap();
        let b = gen_matrix(10, 20, 42).unwrap();
        assert_eq!(a.phi, b.phi);
        let c = gen_matrix(10, 20, 43).unwrap();
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn matrix_std_dev_is_one_over_n() {
        let e = gen_matrix(100, 256, 7).unwrap();
        let n = e.phi.len() as f64;
        let mean = e.phi.sum() / n;
        let var = e.phi.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let target = 1.0 / 256.0;
        assert!(
            (var.sqrt() - target).abs() < 0.1 * target,
            "std {}",
            var.sqrt()
        );
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(gen_matrix(0, 4, 1).is_err());
    }

    #[test]
    fn instance_ensembles() {
        let phi = gen_matrix(20, 40, 1).unwrap().phi;
        for seed in 0..20 {
            let cars = gen_instance(40, 8, Ensemble::Cars, seed, &phi).unwrap();
            assert!(cars.support.iter().all(|&j| cars.x[j].abs() == 1.0));
            let uni = gen_instance(40, 8, Ensemble::Uniform, seed, &phi).unwrap();
            assert!(uni
                .support
                .iter()
                .all(|&j| uni.x[j].abs() <= 1.0 && uni.x[j] != 0.0));
            let gau = gen_instance(40, 8, Ensemble::Gaussian, seed, &phi).unwrap();
            assert_eq!(gau.x.iter().filter(|v| **v != 0.0).count(), 8);
            assert_eq!(gau.y, &phi * &gau.x);
        }
    }

    #[test]
    fn instance_boundaries() {
        let phi = gen_matrix(5, 6, 1).unwrap().phi;
        assert!(gen_instance(6, 0, Ensemble::Gaussian, 1, &phi).is_err());
        assert!(gen_instance(6, 7, Ensemble::Gaussian, 1, &phi).is_err());
        let full = gen_instance(6, 6, Ensemble::Gaussian, 1, &phi).unwrap();
        assert_eq!(full.support, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn instance_is_deterministic() {
        let phi = gen_matrix(16, 32, 3).unwrap().phi;
        let a = gen_instance(32, 5, Ensemble::Gaussian, 99, &phi).unwrap();
        let b = gen_instance(32, 5, Ensemble::Gaussian, 99, &phi).unwrap();
        assert_eq!(a.support, b.support);
        assert_eq!(a.x, b.x);
    }

    #[test]
    fn record_replays() {
        let phi = gen_matrix(16, 32, 5).unwrap().phi;
        let inst = gen_instance(32, 4, Ensemble::Uniform, 5, &phi).unwrap();
        let json = serde_json::to_string(&inst.record()).unwrap();
        assert!(json.contains("\"M\":16") && json.contains("\"ensemble\":\"uniform\""));
        let back: InstanceRecord = serde_json::from_str(&json).unwrap();
        let again = back.to_instance(&phi).unwrap();
        assert_eq!(again.x, inst.x);
        assert_eq!(again.y, inst.y);
    }

    #[test]
    fn trial_seeds_differ() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|t| trial_seed(1, t)).collect();
        assert_eq!(seeds.len(), 1000);
    }
}
