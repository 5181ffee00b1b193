//! Dense symmetric matrices, cyclic Jacobi eigenvalues and PSD certification.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for eigenvalue convergence and PSD checks.
pub const DEFAULT_TOL: f64 = 1e-9;

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal {off_diagonal:e})")]
    NoConvergence { sweeps: usize, off_diagonal: f64 },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Symmetric matrix stored as its packed upper triangle (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymMatrix {
    n: usize,
    upper: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        Self {
            n,
            upper: vec![0.0; n * (n + 1) / 2],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    /// The all-ones matrix `e e^T`.
    pub fn ones(n: usize) -> Self {
        Self::from_fn(n, |_, _| 1.0)
    }

    /// Builds from `f(i, j)` evaluated on `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds from full rows; fails unless the input is square and exactly symmetric.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(LinalgError::Dimension("expected a non-empty square matrix".into()));
        }
        for i in 0..n {
            for j in 0..i {
                if rows[i][j] != rows[j][i] {
                    return Err(LinalgError::Dimension(format!("entry ({i}, {j}) breaks symmetry")));
                }
            }
        }
        Ok(Self::from_fn(n, |i, j| rows[i][j]))
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.n - i * (i + 1) / 2 + j
    }

    pub fn order(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.upper[self.offset(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let k = self.offset(i, j);
        self.upper[k] = value;
    }

    pub fn add_to(&mut self, i: usize, j: usize, value: f64) {
        let k = self.offset(i, j);
        self.upper[k] += value;
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let v = self.get(i, j);
                s += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        s.sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            upper: self.upper.iter().map(|v| v * factor).collect(),
        }
    }

    /// `self + factor * other`.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Self {
        assert_eq!(self.n, other.n, "order mismatch");
        Self {
            n: self.n,
            upper: self
                .upper
                .iter()
                .zip(&other.upper)
                .map(|(a, b)| a + factor * b)
                .collect(),
        }
    }

    /// `P A P^T` where `perm[i]` is the source index of row/column `i`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        Self::from_fn(self.n, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Eigenvalues of `a`, ascending, by cyclic-by-row Jacobi rotations.
///
/// Iterates until the largest off-diagonal magnitude is at most
/// `tol * max(1, ||a||_F)`.
pub fn jacobi_eigenvalues(a: &SymMatrix, tol: f64) -> Result<Vec<f64>, LinalgError> {
    if !(tol > 0.0) {
        return Err(LinalgError::BadTolerance(tol));
    }
    let n = a.order();
    let mut m = a.to_rows();
    let threshold = tol * a.frobenius_norm().max(1.0);

    let max_off = |m: &[Vec<f64>]| {
        let mut best = 0.0f64;
        for (i, row) in m.iter().enumerate() {
            for v in &row[i + 1..] {
                best = best.max(v.abs());
            }
        }
        best
    };

    let mut sweeps = 0;
    loop {
        let off = max_off(&m);
        if off <= threshold {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NoConvergence {
                sweeps,
                off_diagonal: off,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                // theta == 0 gives signum 1 and t == 1, the 45-degree rotation.
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = m[r][p];
                    let arq = m[r][q];
                    m[r][p] = c * arp - s * arq;
                    m[r][q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = m[p][r];
                    let aqr = m[q][r];
                    m[p][r] = c * apr - s * aqr;
                    m[q][r] = s * apr + c * aqr;
                }
                m[p][q] = 0.0;
                m[q][p] = 0.0;
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    eig.sort_by(|x, y| x.total_cmp(y));
    Ok(eig)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub psd: bool,
    pub min_eigenvalue: f64,
    /// The threshold `-tol * max(1, ||a||_F)` that `min_eigenvalue` was compared against.
    pub threshold: f64,
}

/// PSD test: `lambda_min >= -tol * max(1, ||a||_F)`.
pub fn is_psd(a: &SymMatrix, tol: f64) -> Result<PsdCheck, LinalgError> {
    if !(tol >= 0.0) {
        return Err(LinalgError::BadTolerance(tol));
    }
    let eig = jacobi_eigenvalues(a, if tol > 0.0 { tol } else { DEFAULT_TOL })?;
    let threshold = -tol * a.frobenius_norm().max(1.0);
    let min_eigenvalue = eig[0];
    Ok(PsdCheck {
        psd: min_eigenvalue >= threshold,
        min_eigenvalue,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn eigenvalue_examples() {
        assert_close(&jacobi_eigenvalues(&SymMatrix::identity(3), 1e-12).unwrap(), &[1.0; 3], 1e-12);
        assert_close(&jacobi_eigenvalues(&SymMatrix::ones(3), 1e-12).unwrap(), &[0.0, 0.0, 3.0], 1e-10);
        let m = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert_close(&jacobi_eigenvalues(&m, 1e-12).unwrap(), &[1.0, 3.0], 1e-12);
    }

    // 2Z - ee^T with Z = I + t (ee^T - I): eigenvalues 2 - 2t (twice) and 4t - 1.
    fn misdo_block(t: f64) -> SymMatrix {
        let z = SymMatrix::identity(3).add_scaled(&SymMatrix::ones(3).add_scaled(&SymMatrix::identity(3), -1.0), t);
        z.scaled(2.0).add_scaled(&SymMatrix::ones(3), -1.0)
    }

    #[test]
    fn psd_examples() {
        let at_quarter = is_psd(&misdo_block(0.25), DEFAULT_TOL).unwrap();
        assert!(at_quarter.psd);
        assert!(at_quarter.min_eigenvalue.abs() < 1e-9);

        let at_fifth = is_psd(&misdo_block(0.2), DEFAULT_TOL).unwrap();
        assert!(!at_fifth.psd);
        assert!((at_fifth.min_eigenvalue + 0.2).abs() < 1e-9);

        assert!(is_psd(&SymMatrix::zeros(3), DEFAULT_TOL).unwrap().psd);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(matches!(
            jacobi_eigenvalues(&SymMatrix::identity(2), 0.0),
            Err(LinalgError::BadTolerance(_))
        ));
        assert!(matches!(is_psd(&SymMatrix::identity(2), -1.0), Err(LinalgError::BadTolerance(_))));
    }

    #[test]
    fn from_rows_rejects_asymmetric() {
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).is_err());
        assert!(SymMatrix::from_rows(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn packed_indexing_is_symmetric() {
        let mut m = SymMatrix::zeros(4);
        m.set(3, 1, 5.0);
        assert_eq!(m.get(1, 3), 5.0);
        m.add_to(1, 3, 1.0);
        assert_eq!(m.get(3, 1), 6.0);
        assert_eq!(m.trace(), 0.0);
    }
}
