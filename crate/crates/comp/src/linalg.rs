//! Small dense linear-algebra helpers: partial-pivot LU, Cholesky,
//! least squares via normal equations, and a 1-norm condition estimate.
//!
//! Everything here operates on the desk-scale matrices of this crate
//! (latent and feature dimensions in the tens), so plain O(n^3) loops
//! on row-major `Vec<f64>` are the right tool.

use crate::tensor::{Tensor, TensorError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular or ill-conditioned (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive definite (pivot {pivot:.3e} at {index})")]
    NotPositiveDefinite { pivot: f64, index: usize },
}

impl From<LinalgError> for TensorError {
    fn from(e: LinalgError) -> Self {
        TensorError::Invalid(e.to_string())
    }
}

/// LU decomposition with partial pivoting, stored in-place.
pub struct Lu {
    lu: Vec<f64>,
    piv: Vec<usize>,
    n: usize,
}

pub fn lu_factor(a: &[f64], n: usize) -> Result<Lu, LinalgError> {
    if a.len() != n * n {
        return Err(LinalgError::Dimension(format!(
            "expected {}x{} matrix, got {} entries",
            n,
            n,
            a.len()
        )));
    }
    let mut lu = a.to_vec();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut pmax = lu[k * n + k].abs();
        for i in (k + 1)..n {
            let v = lu[i * n + k].abs();
            if v > pmax {
                pmax = v;
                p = i;
            }
        }
        if pmax == 0.0 {
            return Err(LinalgError::Singular { cond: f64::INFINITY });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            piv.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            for j in (k + 1)..n {
                lu[i * n + j] -= f * lu[k * n + j];
            }
        }
    }
    Ok(Lu { lu, piv, n })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

/// Inverse via LU; columns solved one by one.
pub fn inverse(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    let lu = lu_factor(a, n)?;
    let mut inv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = lu.solve(&e);
        e[j] = 0.0;
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(inv)
}

fn norm_1(a: &[f64], n: usize) -> f64 {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// 1-norm condition number ||A||_1 ||A^-1||_1.
pub fn cond_1(a: &[f64], n: usize) -> Result<f64, LinalgError> {
    let inv = inverse(a, n)?;
    Ok(norm_1(a, n) * norm_1(&inv, n))
}

pub fn mat_mul(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            for j in 0..m {
                out[i * m + j] += ail * b[l * m + j];
            }
        }
    }
    out
}

pub fn transpose(a: &[f64], n: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[j * n + i] = a[i * m + j];
        }
    }
    out
}

/// Least squares min ||A x - b|| for A [n,k] (full column rank), solved via
/// the normal equations; `b` may have multiple right-hand sides [n,m].
pub fn least_squares(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Result<Vec<f64>, LinalgError> {
    let at = transpose(a, n, k);
    let ata = mat_mul(&at, a, k, n, k);
    let atb = mat_mul(&at, b, k, n, m);
    let lu = lu_factor(&ata, k)?;
    let mut x = vec![0.0; k * m];
    let mut col = vec![0.0; k];
    for j in 0..m {
        for i in 0..k {
            col[i] = atb[i * m + j];
        }
        let sol = lu.solve(&col);
        for i in 0..k {
            x[i * m + j] = sol[i];
        }
    }
    Ok(x)
}

/// Cholesky factor L (lower) of a symmetric positive-definite matrix.
pub fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>, LinalgError> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(LinalgError::NotPositiveDefinite { pivot: s, index: i });
                }
                l[i * n + j] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves L L^T x = b given the Cholesky factor L.
pub fn cholesky_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        for j in 0..i {
            y[i] -= l[i * n + j] * y[j];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            y[i] -= l[j * n + i] * y[j];
        }
        y[i] /= l[i * n + i];
    }
    y
}

/// log det of L L^T given the Cholesky factor L.
pub fn cholesky_log_det(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| 2.0 * l[i * n + i].ln()).sum()
}

/// Row-major matrix product of two [`Tensor`]s outside any tape.
pub fn tensor_mat_mul(a: &Tensor, b: &Tensor) -> Result<Tensor, TensorError> {
    if a.cols() != b.rows() {
        return Err(TensorError::ShapeMismatch {
            op: "tensor_mat_mul",
            lhs: a.shape().to_vec(),
            rhs: b.shape().to_vec(),
        });
    }
    let out = mat_mul(a.data(), b.data(), a.rows(), a.cols(), b.cols());
    Tensor::matrix(a.rows(), b.cols(), out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_small_system() {
        // [[2,1],[1,3]] x = [3,5] -> x = [4/5, 7/5]
        let lu = lu_factor(&[2.0, 1.0, 1.0, 3.0], 2).unwrap();
        let x = lu.solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-12);
        assert!((x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn inverse_round_trip() {
        let a = [3.0, 1.0, -1.0, 0.5, 2.0, 0.0, 1.0, -1.0, 4.0];
        let inv = inverse(&a, 3).unwrap();
        let prod = mat_mul(&a, &inv, 3, 3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod[i * 3 + j] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        assert!(lu_factor(&[1.0, 2.0, 2.0, 4.0], 2).is_err());
    }

    #[test]
    fn least_squares_exact_on_consistent_system() {
        // A = [[1,0],[0,1],[1,1]], b = A·[2,-1]
        let a = [1.0, 0.0, 0.0, 1.0, 1.0, 1.0];
        let b = [2.0, -1.0, 1.0];
        let x = least_squares(&a, &b, 3, 2, 1).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_agrees_with_lu_solve() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, -0.2, 0.5, -0.2, 2.0];
        let l = cholesky(&a, 3).unwrap();
        let b = [1.0, 2.0, 3.0];
        let x1 = cholesky_solve(&l, &b, 3);
        let x2 = lu_factor(&a, 3).unwrap().solve(&b);
        for (u, v) in x1.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
