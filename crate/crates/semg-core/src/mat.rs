//! Minimal dense row-major matrix used for channels, joints, and distortions.
//!
//! Alphabets here are small (hundreds of instances, a handful of labels), so a
//! flat `Vec<f64>` with explicit strides is all that is needed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major `rows x cols` matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::DimensionMismatch("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::DimensionMismatch("matrix needs at least one column".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch(format!(
                "ragged rows: expected {cols} columns, found {}",
                bad.len()
            )));
        }
        let data = rows.into_iter().flatten().collect();
        Ok(Mat {
            rows: 0,
            cols,
            data,
        }
        .with_rows_from_len())
    }

    fn with_rows_from_len(mut self) -> Self {
        self.rows = self.data.len() / self.cols;
        self
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
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

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Checks every entry with `pred`, returning the first offending index.
    pub fn check_entries(&self, pred: impl Fn(f64) -> bool) -> Option<(usize, usize, f64)> {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let v = self.get(i, j);
                if !pred(v) {
                    return Some((i, j, v));
                }
            }
        }
        None
    }
}
