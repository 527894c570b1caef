//! Kernel functions between feature rows.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelSpec {
    Linear,
    /// `exp(-|x - y|^2 / s^2)` with standard deviation `s > 0`.
    Gaussian { s: f64 },
    /// Sum of element-wise minima; requires non-negative features.
    HistogramIntersection,
}

impl KernelSpec {
    pub fn tag(&self) -> u8 {
        match self {
            KernelSpec::Linear => 0,
            KernelSpec::Gaussian { .. } => 1,
            KernelSpec::HistogramIntersection => 2,
        }
    }
}

/// Kernel matrix between the rows of `a` and the rows of `b`.
pub fn kernel_matrix(spec: &KernelSpec, a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.ncols(),
            got: b.ncols(),
        });
    }
    match spec {
        KernelSpec::Linear => Ok(a.dot(&b.t())),
        KernelSpec::Gaussian { s } => {
            if *s <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "gaussian kernel needs s > 0, got {s}"
                )));
            }
            let cross = a.dot(&b.t());
            let a_norms: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&r)).collect();
            let b_norms: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&r)).collect();
            let inv_s2 = 1.0 / (s * s);
            let mut out = cross;
            for (i, mut row) in out.rows_mut().into_iter().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    let d2 = (a_norms[i] + b_norms[j] - 2.0 * *v).max(0.0);
                    *v = (-d2 * inv_s2).exp();
                }
            }
            Ok(out)
        }
        KernelSpec::HistogramIntersection => {
            if a.iter().any(|&v| v < 0.0) || b.iter().any(|&v| v < 0.0) {
                return Err(Error::NegativeHistogram);
            }
            let mut out = Array2::zeros((a.nrows(), b.nrows()));
            for (i, ra) in a.rows().into_iter().enumerate() {
                for (j, rb) in b.rows().into_iter().enumerate() {
                    out[[i, j]] = ra.iter().zip(rb.iter()).map(|(x, y)| x.min(*y)).sum();
                }
            }
            Ok(out)
        }
    }
}
