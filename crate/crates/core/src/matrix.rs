//! Small dense square matrices, row major.
//!
//! Dimensions are asset counts (a handful at most), so naive O(d^2) kernels
//! beat pulling in a linear-algebra dependency.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be positive".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(SquareMatrix { dim, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn scalar(x: f64) -> Self {
        SquareMatrix { dim: 1, data: vec![x] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| self.data[i * self.dim..(i + 1) * self.dim].to_vec())
            .collect()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok((0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect())
    }

    /// self * self^T, the covariance of increments driven by this matrix.
    pub fn gram(&self) -> SquareMatrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                data[i * d + j] = (0..d).map(|k| self.get(i, k) * self.get(j, k)).sum();
            }
        }
        SquareMatrix { dim: d, data }
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// max_ij |a_ij - a_ji|; zero iff symmetric.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// sum_ij a_ij b_ij.
    pub fn frobenius_inner(&self, other: &SquareMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// Lower-triangular L with L L^T = self, accepting semidefinite inputs
    /// (zero pivots allowed when the rest of their column vanishes).
    pub fn cholesky(&self) -> Result<SquareMatrix> {
        let n = self.dim;
        let scale = (0..n).map(|i| self.get(i, i).abs()).fold(1.0f64, f64::max);
        let tol = 1e-12 * scale;
        if self.max_asymmetry() > tol {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric (asymmetry {})",
                self.max_asymmetry()
            )));
        }
        let mut l = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s < -tol {
                        return Err(Error::InvalidInput(format!(
                            "matrix is not positive semidefinite (pivot {s} at {i})"
                        )));
                    }
                    l[i * n + i] = s.max(0.0).sqrt();
                } else {
                    let d = l[j * n + j];
                    if d > 0.0 {
                        l[i * n + j] = s / d;
                    } else if s.abs() <= tol {
                        l[i * n + j] = 0.0;
                    } else {
                        return Err(Error::InvalidInput(format!(
                            "matrix is not positive semidefinite (column {j} escapes its null pivot)"
                        )));
                    }
                }
            }
        }
        SquareMatrix::from_row_major(n, l)
    }
}

impl Serialize for SquareMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SquareMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SquareMatrix::from_rows(&rows).map_err(|e| D::Error::custom(e.to_string()))
    }
}
