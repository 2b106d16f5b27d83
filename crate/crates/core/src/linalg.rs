//! Dense kernels shared by every solver: atom correlations, deterministic
//! top-k selection and least-squares projection through an append-only QR
//! factorization.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};

use crate::error::{input, Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// A column whose orthogonalized norm falls below this fraction of its
/// original norm is treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// `|<phi_j, r>|` for every column `j`. Columns are not normalized.
pub fn correlations(phi: &Matrix, r: &Vector) -> Result<Vector> {
    if phi.nrows() != r.len() {
        return Err(Error::Dimension {
            expected: phi.nrows(),
            actual: r.len(),
        });
    }
    Ok(phi.tr_mul(r).map(f64::abs))
}

/// Orders scores descending, breaking ties by ascending index.
#[inline]
pub(crate) fn rank_order(scores: &[f64], a: usize, b: usize) -> Ordering {
    scores[b].total_cmp(&scores[a]).then(a.cmp(&b))
}

/// The `count` indices outside `exclude` with the largest scores, sorted by
/// descending score with ties broken by ascending index.
pub fn top_indices(scores: &[f64], count: usize, exclude: &[usize]) -> Result<Vec<usize>> {
    let mut excluded = vec![false; scores.len()];
    for &j in exclude {
        if j >= scores.len() {
            return input(format!("excluded index {j} out of range {}", scores.len()));
        }
        excluded[j] = true;
    }
    let mut candidates: Vec<usize> = (0..scores.len()).filter(|&j| !excluded[j]).collect();
    if count > candidates.len() {
        return input(format!(
            "requested {count} indices but only {} are selectable",
            candidates.len()
        ));
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if count < candidates.len() {
        candidates.select_nth_unstable_by(count - 1, |&a, &b| rank_order(scores, a, b));
        candidates.truncate(count);
    }
    candidates.sort_unstable_by(|&a, &b| rank_order(scores, a, b));
    Ok(candidates)
}

/// Least-squares coefficients and residue of `y` on a set of columns.
#[derive(Debug, Clone)]
pub struct Projection {
    pub coefficients: Vec<f64>,
    pub residue: Vector,
}

/// Orthogonal projection of `y` onto the span of `phi[:, support]`.
pub fn project(y: &Vector, phi: &Matrix, support: &[usize]) -> Result<Projection> {
    let fact = IncrementalFactorization::from_support(phi, y, support)?;
    Ok(Projection {
        coefficients: fact.coefficients(),
        residue: fact.residue().clone(),
    })
}

/// Append-only thin QR of the selected columns together with the running
/// residue `r = y - Q Q^T y`.
///
/// Columns are orthogonalized with modified Gram-Schmidt followed by one
/// reorthogonalization pass.
#[derive(Debug, Clone)]
pub struct IncrementalFactorization {
    support: Vec<usize>,
    rows: usize,
    /// Orthonormal basis, column-major `rows x len`.
    q: Vec<f64>,
    /// Upper-triangular factor packed by column: column `k` holds `k + 1` entries.
    r: Vec<f64>,
    /// `Q^T y`.
    qty: Vec<f64>,
    residue: Vector,
}

impl IncrementalFactorization {
    pub fn new(y: &Vector) -> Self {
        Self {
            support: Vec::new(),
            rows: y.len(),
            q: Vec::new(),
            r: Vec::new(),
            qty: Vec::new(),
            residue: y.clone(),
        }
    }

    pub fn from_support(phi: &Matrix, y: &Vector, support: &[usize]) -> Result<Self> {
        if phi.nrows() != y.len() {
            return Err(Error::Dimension {
                expected: phi.nrows(),
                actual: y.len(),
            });
        }
        let mut fact = Self::new(y);
        for &j in support {
            fact.append(phi, j)?;
        }
        Ok(fact)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn residue(&self) -> &Vector {
        &self.residue
    }

    pub fn residue_norm(&self) -> f64 {
        self.residue.norm()
    }

    pub fn q_column(&self, k: usize) -> &[f64] {
        &self.q[k * self.rows..(k + 1) * self.rows]
    }

    /// Appends column `index` of `phi`, updating the basis and residue.
    ///
    /// On a dependent column the factorization is left unchanged.
    pub fn append(&mut self, phi: &Matrix, index: usize) -> Result<()> {
        if phi.nrows() != self.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                actual: phi.nrows(),
            });
        }
        if index >= phi.ncols() {
            return input(format!("column {index} out of range {}", phi.ncols()));
        }
        if self.support.contains(&index) || self.support.len() >= self.rows {
            return Err(Error::SingularSupport { index });
        }
        let l = self.support.len();
        let column = phi.column(index);
        let original = column.norm();
        let mut v: Vec<f64> = column.iter().copied().collect();
        let mut rcol = vec![0.0; l + 1];
        for _pass in 0..2 {
            for (k, rk) in rcol.iter_mut().enumerate().take(l) {
                let qk = &self.q[k * self.rows..(k + 1) * self.rows];
                let c = dot(qk, &v);
                axpy(-c, qk, &mut v);
                *rk += c;
            }
        }
        let norm = dot(&v, &v).sqrt();
        if original == 0.0 || norm.is_nan() || norm < RANK_TOLERANCE * original {
            return Err(Error::SingularSupport { index });
        }
        v.iter_mut().for_each(|x| *x /= norm);
        rcol[l] = norm;

        let proj = dot(&v, self.residue.as_slice());
        axpy(-proj, &v, self.residue.as_mut_slice());

        self.q.extend_from_slice(&v);
        self.r.extend_from_slice(&rcol);
        self.qty.push(proj);
        self.support.push(index);
        Ok(())
    }

    /// A copy of `self` extended by column `index`.
    pub fn with_column(&self, phi: &Matrix, index: usize) -> Result<Self> {
        let mut next = self.clone();
        next.append(phi, index)?;
        Ok(next)
    }

    /// Least-squares coefficients in support order, from `R z = Q^T y`.
    pub fn coefficients(&self) -> Vec<f64> {
        let l = self.support.len();
        let mut z = self.qty.clone();
        for i in (0..l).rev() {
            let mut acc = z[i];
            for (j, zj) in z.iter().enumerate().take(l).skip(i + 1) {
                acc -= self.r_entry(i, j) * zj;
            }
            z[i] = acc / self.r_entry(i, i);
        }
        z
    }

    fn r_entry(&self, i: usize, j: usize) -> f64 {
        // column j starts at j(j+1)/2
        self.r[j * (j + 1) / 2 + i]
    }

    /// Largest deviation of `Q^T Q` from the identity.
    pub fn orthogonality_error(&self) -> f64 {
        let l = self.support.len();
        let mut worst: f64 = 0.0;
        for a in 0..l {
            for b in a..l {
                let g = dot(self.q_column(a), self.q_column(b));
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Dense length-`n` vector with `values` placed at `support`.
pub fn scatter(n: usize, support: &[usize], values: &[f64]) -> Vector {
    let mut x = Vector::zeros(n);
    for (&j, &v) in support.iter().zip(values) {
        x[j] = v;
    }
    x
}
