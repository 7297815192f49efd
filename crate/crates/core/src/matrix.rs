//! Dense row-major `f64` matrices.

use std::ops::{Deref, Index, IndexMut};

use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::BadMatrixData {
                rows,
                cols,
                len: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// The `d x p` matrix whose columns are the first `p` standard basis vectors.
    pub fn basis_columns(d: usize, p: usize) -> Self {
        let mut m = Matrix::zeros(d, p);
        for i in 0..d.min(p) {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally sized rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Matrix {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Matrix::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: idx.len(),
            cols: self.cols,
            data,
        }
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// `self * other`, each output entry accumulated in ascending inner index.
    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::dims(
                "matmul",
                format!("{} inner rows", self.cols),
                other.rows,
            ));
        }
        let inner = self.cols;
        let mut out = Matrix::zeros(self.rows, other.cols);
        let cols = other.cols;
        crate::par::for_each_row_mut(&mut out.data, cols, |i, row| {
            let lhs = &self.data[i * inner..(i + 1) * inner];
            for (j, slot) in row.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (m, &l) in lhs.iter().enumerate() {
                    acc += l * other.data[m * cols + j];
                }
                *slot = acc;
            }
        });
        Ok(out)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    fn zip_with(&self, other: &Matrix, op: &'static str, f: impl Fn(f64, f64) -> f64) -> Result<Matrix> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                op,
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Sum of the diagonal; panics on non-square input.
    pub fn trace(&self) -> f64 {
        assert_eq!(self.rows, self.cols, "trace of a non-square matrix");
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute difference between `self[(i, j)]` and `self[(j, i)]`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols.min(self.rows) {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Row-stochastic `n x k` responsibilities.
///
/// Produced by the E-step solvers; [`AssignmentMatrix::new`] validates an
/// arbitrary matrix against the simplex constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentMatrix(Matrix);

impl AssignmentMatrix {
    /// Tolerance on row sums accepted by [`AssignmentMatrix::new`].
    pub const ROW_SUM_TOL: f64 = 1e-9;

    pub fn new(m: Matrix) -> Result<Self> {
        for i in 0..m.rows() {
            let row = m.row(i);
            if let Some(j) = row.iter().position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
                return Err(Error::InvalidAssignment { row: i, col: j });
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > Self::ROW_SUM_TOL {
                return Err(Error::ZeroAllowedMass { row: i });
            }
        }
        Ok(AssignmentMatrix(m))
    }

    pub(crate) fn from_matrix_unchecked(m: Matrix) -> Self {
        AssignmentMatrix(m)
    }

    /// One-hot rows from per-row column choices.
    pub fn one_hot(choices: &[usize], k: usize) -> Self {
        let mut m = Matrix::zeros(choices.len(), k);
        for (i, &j) in choices.iter().enumerate() {
            m[(i, j)] = 1.0;
        }
        AssignmentMatrix(m)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// `max_i |sum_j A_ij - 1|`.
    pub fn row_sum_residual(&self) -> f64 {
        row_sum_residual(&self.0)
    }

    /// Column index of the largest entry per row (lowest index on ties).
    pub fn argmax_rows(&self) -> Vec<usize> {
        self.0
            .row_iter()
            .map(|row| {
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

impl Deref for AssignmentMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

pub(crate) fn row_sum_residual(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}
