//! PCA whitening: projection onto eigenvectors scaled by inverse square
//! root eigenvalues, so training outputs have identity covariance.

use crate::encoding::pca::{fix_signs, symmetric_eig_desc};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2, Axis};

const EIGENVALUE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct Whitener {
    pub mean: Array1<f64>,
    /// `d x D_w`; column j is `v_j / sqrt(lambda_j)`.
    pub transform: Array2<f64>,
}

impl Whitener {
    pub fn input_dim(&self) -> usize {
        self.transform.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.transform.ncols()
    }

    pub fn apply(&self, rows: &ArrayView2<f64>) -> Result<Array2<f64>> {
        if rows.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: rows.ncols(),
            });
        }
        Ok((rows - &self.mean).dot(&self.transform))
    }
}

/// Fits a whitening transform with `d_out` output coordinates.
///
/// When the feature dimension exceeds the sample count the eigenproblem is
/// solved on the `n x n` Gram matrix instead of the `d x d` covariance
/// (both routes produce the same transform up to the shared sign
/// convention). Eigenvalues are floored at 1e-8 before inversion.
pub fn whiten_fit(features: &ArrayView2<f64>, d_out: usize) -> Result<Whitener> {
    let (n, d) = features.dim();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, have: n });
    }
    let max_dim = d.min(n - 1);
    if d_out == 0 || d_out > max_dim {
        return Err(Error::InvalidArgument(format!(
            "whiten dimension {d_out} outside [1, {max_dim}] for {n}x{d} data"
        )));
    }
    let mean = features.mean_axis(Axis(0)).expect("non-empty");
    let centered = features - &mean;

    let mut transform = if d <= n {
        let cov = centered.t().dot(&centered) / (n as f64 - 1.0);
        let (eigenvalues, mut basis) = symmetric_eig_desc(&cov, d_out);
        for (j, mut col) in basis.columns_mut().into_iter().enumerate() {
            let lambda = eigenvalues[j].max(EIGENVALUE_FLOOR);
            col.mapv_inplace(|v| v / lambda.sqrt());
        }
        basis
    } else {
        // Gram route: C v = lambda v with v = X^T u / sqrt((n-1) lambda)
        let gram = centered.dot(&centered.t()) / (n as f64 - 1.0);
        let (eigenvalues, u) = symmetric_eig_desc(&gram, d_out);
        let mut basis = Array2::zeros((d, d_out));
        for j in 0..d_out {
            let lambda = eigenvalues[j].max(EIGENVALUE_FLOOR);
            let uj = u.column(j);
            let vj = centered.t().dot(&uj);
            let scale = 1.0 / ((n as f64 - 1.0).sqrt() * lambda);
            let mut col = basis.column_mut(j);
            col.assign(&vj);
            col.mapv_inplace(|v| v * scale);
        }
        basis
    };

    // the sign convention commutes with the positive 1/sqrt(lambda)
    // scaling, so fixing it on the final transform covers both routes
    fix_signs(&mut transform);
    Ok(Whitener { mean, transform })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, d), |_| rng.gen_range(-2.0..2.0))
    }

    fn covariance(rows: &Array2<f64>) -> Array2<f64> {
        let mean = rows.mean_axis(Axis(0)).unwrap();
        let c = rows - &mean;
        c.t().dot(&c) / (rows.nrows() as f64 - 1.0)
    }

    #[test]
    fn training_output_covariance_is_identity() {
        let data = random(120, 10, 1).dot(&random(10, 10, 2));
        let w = whiten_fit(&data.view(), 10).unwrap();
        let z = w.apply(&data.view()).unwrap();
        let cov = covariance(&z);
        for i in 0..10 {
            for j in 0..10 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (cov[[i, j]] - expect).abs() < 1e-6,
                    "cov[{i},{j}] = {}",
                    cov[[i, j]]
                );
            }
        }
    }

    #[test]
    fn gram_route_matches_covariance_route() {
        // 12 samples of dimension 30 forces the Gram path; compare with the
        // covariance path on the transposed-problem equivalent data
        let data = random(12, 30, 3);
        let w = whiten_fit(&data.view(), 5).unwrap();
        let z = w.apply(&data.view()).unwrap();
        let cov = covariance(&z);
        for i in 0..5 {
            for j in 0..5 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((cov[[i, j]] - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn isotropic_input_is_rotation_and_scale() {
        let data = random(4000, 3, 4);
        let w = whiten_fit(&data.view(), 3).unwrap();
        // columns of the transform must be mutually orthogonal
        let gram = w.transform.t().dot(&w.transform);
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    let cos = gram[[i, j]] / (gram[[i, i]] * gram[[j, j]]).sqrt();
                    assert!(cos.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn dimension_limits_enforced() {
        let data = random(10, 5, 5);
        assert!(whiten_fit(&data.view(), 6).is_err());
        assert!(whiten_fit(&data.view(), 0).is_err());
        let one = random(1, 5, 6);
        assert!(whiten_fit(&one.view(), 1).is_err());
    }
}
