//! Minimal dense matrix support for the small systems this crate solves
//! (Gram matrices up to ~a dozen columns, covariance factorizations).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = Self::zeros(idx.len(), self.cols);
        for (r, &i) in idx.iter().enumerate() {
            out.row_mut(r).copy_from_slice(self.row(i));
        }
        out
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Cholesky factor of a symmetric positive *semi*definite matrix: pivots
/// within `tol` of zero produce a zero column, so rank-deficient inputs
/// (including the all-zero matrix) factor exactly. Returns an error on
/// significantly negative pivots.
pub fn cholesky_psd(a: &Mat, tol: f64) -> Result<Mat> {
    if a.rows() != a.cols() {
        return Err(Error::Shape("cholesky needs a square matrix".into()));
    }
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d > tol * scale {
            let root = d.sqrt();
            l.set(j, j, root);
            for i in j + 1..n {
                let mut s = a.get(i, j);
                for k in 0..j {
                    s -= l.get(i, k) * l.get(j, k);
                }
                l.set(i, j, s / root);
            }
        } else if d >= -tol * scale * 16.0 {
            // Semidefinite direction: zero column.
            for i in j..n {
                l.set(i, j, 0.0);
            }
        } else {
            return Err(Error::Validation(format!(
                "matrix is not positive semidefinite (pivot {d:.3e} at {j})"
            )));
        }
    }
    Ok(l)
}

/// Solves the symmetric positive definite system `A X = B` by Cholesky,
/// returning the solution and the factor's diagonal condition proxy
/// `(max diag / min diag)^2`. Errors on non-PD input.
pub fn solve_spd(a: &Mat, b: &Mat) -> Result<(Mat, f64)> {
    if a.rows() != a.cols() || a.rows() != b.rows() {
        return Err(Error::Shape("solve_spd dimension mismatch".into()));
    }
    let n = a.rows();
    let scale = a.max_abs().max(1.0);
    let mut l = Mat::zeros(n, n);
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0f64;
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l.get(j, k) * l.get(j, k);
        }
        if d <= 1e-14 * scale {
            return Err(Error::Fit(format!(
                "normal equations not positive definite (pivot {d:.3e})"
            )));
        }
        let root = d.sqrt();
        dmin = dmin.min(root);
        dmax = dmax.max(root);
        l.set(j, j, root);
        for i in j + 1..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, s / root);
        }
    }
    // Forward/back substitution per right-hand-side column.
    let mut x = b.clone();
    for col in 0..b.cols() {
        for i in 0..n {
            let mut s = x.get(i, col);
            for k in 0..i {
                s -= l.get(i, k) * x.get(k, col);
            }
            x.set(i, col, s / l.get(i, i));
        }
        for i in (0..n).rev() {
            let mut s = x.get(i, col);
            for k in i + 1..n {
                s -= l.get(k, i) * x.get(k, col);
            }
            x.set(i, col, s / l.get(i, i));
        }
    }
    let cond = (dmax / dmin).powi(2);
    Ok((x, cond))
}
