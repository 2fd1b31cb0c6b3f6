//! Dense complex LU with partial pivoting.
//!
//! Used for the small global systems of the radial oracle and as an
//! independent reference for the sparse solver.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseError {
    #[error("matrix is singular to working precision at pivot {0}")]
    Singular(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    pub n: usize,
    pub data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] += v;
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * x[j]).sum()).collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j).norm()).sum::<f64>()).fold(0.0, f64::max)
    }
}

/// LU factors `P A = L U` stored in place.
#[derive(Clone, Debug)]
pub struct DenseLu {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factor(mut a: DenseMatrix) -> Result<Self, DenseError> {
        let n = a.n;
        let scale = a.norm_inf().max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n).map(|i| (i, a.get(i, k).norm())).fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if !(best > f64::EPSILON * 1e-3 * scale) {
                return Err(DenseError::Singular(k));
            }
            if p != k {
                for j in 0..n {
                    a.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let inv = 1.0 / a.get(k, k);
            for i in k + 1..n {
                let f = a.get(i, k) * inv;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                a.set(i, k, f);
                for j in k + 1..n {
                    let v = a.get(k, j);
                    a.data[i * n + j] -= f * v;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>, DenseError> {
        let n = self.lu.n;
        if b.len() != n {
            return Err(DenseError::Dimension(format!("rhs has length {} for n = {n}", b.len())));
        }
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        Ok(x)
    }

    /// Infinity-norm condition estimate from the explicit inverse.
    pub fn condition_inf(&self, a_norm_inf: f64) -> f64 {
        let n = self.lu.n;
        let mut inv_norm: f64 = 0.0;
        let mut rows = vec![0.0; n];
        for j in 0..n {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            let col = self.solve(&e).expect("dimension matches");
            for (i, v) in col.iter().enumerate() {
                rows[i] += v.norm();
            }
        }
        for r in rows {
            inv_norm = inv_norm.max(r);
        }
        a_norm_inf * inv_norm
    }
}

/// Solve `A x = b` densely.
pub fn dense_solve(a: DenseMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, DenseError> {
    DenseLu::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_pivoting_system() {
        let mut a = DenseMatrix::zeros(3);
        let rows = [[c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0), c(0.0, -1.0)], [c(3.0, 0.0), c(1.0, 1.0), c(2.0, 0.0)]];
        for i in 0..3 {
            for j in 0..3 {
                a.set(i, j, rows[i][j]);
            }
        }
        let x = vec![c(1.0, 2.0), c(-1.0, 0.5), c(0.0, 3.0)];
        let b = a.mul_vec(&x);
        let y = dense_solve(a, &b).unwrap();
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).norm() < 1e-14);
        }
    }

    #[test]
    fn singular_reports_pivot() {
        let mut a = DenseMatrix::zeros(2);
        a.set(0, 0, c(1.0, 0.0));
        a.set(0, 1, c(2.0, 0.0));
        a.set(1, 0, c(2.0, 0.0));
        a.set(1, 1, c(4.0, 0.0));
        assert_eq!(DenseLu::factor(a).unwrap_err(), DenseError::Singular(1));
    }
}
