use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An n×d sample, one observation per row, stored row-major.
///
/// Every entry is finite and both dimensions are at least one; the
/// constructors enforce this so downstream code never rechecks it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ObservationMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Shape(format!(
                "need at least one row and one column, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values cannot fill a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or_else(|| Error::Shape("no rows".into()))?;
        let cols = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// New matrix made of the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            if i >= self.rows {
                return Err(Error::InvalidArgument(format!(
                    "row index {i} out of range for {} rows",
                    self.rows
                )));
            }
            data.extend_from_slice(self.row(i));
        }
        Self::new(idx.len(), self.cols, data)
    }

    /// Rows of `self` followed by rows of `other`.
    pub fn vstack(&self, other: &Self) -> Result<Self> {
        check_same_dim(self, other)?;
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Self::new(self.rows + other.rows, self.cols, data)
    }

    /// Adds `v` to every row.
    pub fn shifted(&self, v: &[f64]) -> Result<Self> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                left: self.cols,
                right: v.len(),
            });
        }
        let data = self
            .data
            .chunks_exact(self.cols)
            .flat_map(|r| r.iter().zip(v).map(|(a, b)| a + b))
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    /// Multiplies every entry by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * factor).collect(),
        )
    }

    /// Multiplies row `i` by `factors[i]`.
    pub fn row_scaled(&self, factors: &[f64]) -> Result<Self> {
        if factors.len() != self.rows {
            return Err(Error::InvalidArgument(format!(
                "{} row factors for {} rows",
                factors.len(),
                self.rows
            )));
        }
        let data = self
            .data
            .chunks_exact(self.cols)
            .zip(factors)
            .flat_map(|(r, f)| r.iter().map(move |v| v * f))
            .collect();
        Self::new(self.rows, self.cols, data)
    }

    /// Per-coordinate means over observations.
    pub fn column_means(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.iter_rows() {
            add_assign(&mut mean, r);
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|v| *v /= n);
        mean
    }

    /// Copy with the column means subtracted.
    pub fn centered(&self) -> Self {
        let mean = self.column_means();
        let data = self
            .data
            .chunks_exact(self.cols)
            .flat_map(|r| r.iter().zip(&mean).map(|(a, b)| a - b))
            .collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Symmetric n×n matrix of row inner products, row-major.
    pub fn gram(&self) -> Vec<f64> {
        let n = self.rows;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }

    /// m×n matrix of inner products between rows of `self` and rows of `other`.
    pub fn cross_gram(&self, other: &Self) -> Vec<f64> {
        let (m, n) = (self.rows, other.rows);
        let mut k = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                k[i * n + j] = dot(self.row(i), other.row(j));
            }
        }
        k
    }
}

pub(crate) fn check_same_dim(x: &ObservationMatrix, y: &ObservationMatrix) -> Result<()> {
    if x.cols != y.cols {
        Err(Error::DimensionMismatch {
            left: x.cols,
            right: y.cols,
        })
    } else {
        Ok(())
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub(crate) fn add_assign(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a += b);
}

#[inline]
pub(crate) fn sub_assign(acc: &mut [f64], v: &[f64]) {
    acc.iter_mut().zip(v).for_each(|(a, b)| *a -= b);
}
