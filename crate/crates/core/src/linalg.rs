//! Minimal dense row-major matrix.
//!
//! Every dot product in the crate goes through [`dot`] or [`split_dot`], which
//! accumulate left to right in a single accumulator. With that ordering a
//! split product evaluated on a degenerate interval rounds to exactly the same
//! value as the plain product, which keeps centroid evaluations bit-identical
//! to the concrete forward pass.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_len, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            check_len(format!("row {} of matrix", i + 1), n_cols, row.len())?;
            data.extend(row);
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data,
        })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len("row-major matrix data", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact(0) panics; a matrix with no columns has only empty rows
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise `max(M, 0)`.
    pub fn positive_part(&self) -> Self {
        self.map(|v| v.max(0.0))
    }

    /// Elementwise `min(M, 0)`.
    pub fn negative_part(&self) -> Self {
        self.map(|v| v.min(0.0))
    }

    /// Stacks `self` on top of `other`.
    pub fn vstack(&self, other: &Matrix) -> Result<Self> {
        check_len("vstack column count", self.cols, other.cols)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &Matrix) -> Result<Self> {
        check_len("hstack row count", self.rows, other.rows)?;
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for i in 0..self.rows {
            data.extend_from_slice(self.row(i));
            data.extend_from_slice(other.row(i));
        }
        Ok(Self {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// `W x + b`.
    pub fn affine(&self, x: &[f64], b: &[f64]) -> Result<Vec<f64>> {
        check_len("matrix-vector product input", self.cols, x.len())?;
        check_len("bias", self.rows, b.len())?;
        Ok(self.iter_rows().zip(b).map(|(row, &bi)| dot(row, x) + bi).collect())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Sequential dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `pos · hi + neg · lo` accumulated term by term in the same order as [`dot`].
#[inline]
pub fn split_dot(pos: &[f64], neg: &[f64], hi: &[f64], lo: &[f64]) -> f64 {
    debug_assert!(pos.len() == neg.len() && pos.len() == hi.len() && pos.len() == lo.len());
    let mut acc = 0.0;
    for j in 0..pos.len() {
        acc += pos[j] * hi[j] + neg[j] * lo[j];
    }
    acc
}

#[inline]
pub fn relu(v: f64) -> f64 {
    v.max(0.0)
}

pub fn relu_vec(v: &mut [f64]) {
    for x in v {
        *x = relu(*x);
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter_rows())
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_dot_on_degenerate_input_matches_dot_bitwise() {
        let w: [f64; 5] = [0.1, -0.7, 3.3, -1e-3, 2.5];
        let x = [1.7, 0.3, -2.2, 9.1, 0.001];
        let pos: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
        let neg: Vec<f64> = w.iter().map(|v| v.min(0.0)).collect();
        assert_eq!(dot(&w, &x).to_bits(), split_dot(&pos, &neg, &x, &x).to_bits());
    }

    #[test]
    fn stacking() {
        let a = Matrix::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        let b = Matrix::from_rows(vec![vec![3.0, 4.0]]).unwrap();
        assert_eq!(a.vstack(&b).unwrap().to_rows(), vec![vec![1.0, 2.0], vec![3.0, 4.0]]);
        assert_eq!(a.hstack(&b).unwrap().to_rows(), vec![vec![1.0, 2.0, 3.0, 4.0]]);
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
