//! PCA for decorrelating regional features before vocabulary training.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2, Axis};

/// Mean plus an orthonormal basis of the top principal directions,
/// eigenvalue-descending. Column signs follow the convention that each
/// column's largest-magnitude entry is positive.
#[derive(Debug, Clone)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// `d x D`, orthonormal columns.
    pub basis: Array2<f64>,
    /// Eigenvalues matching the basis columns.
    pub eigenvalues: Array1<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Fits the top-`d_out` eigenvectors of the sample covariance.
pub fn fit_pca(regions: &ArrayView2<f64>, d_out: usize) -> Result<PcaModel> {
    let (n, d) = regions.dim();
    if d_out == 0 || d_out > d {
        return Err(Error::InvalidArgument(format!(
            "pca dimension {d_out} outside [1, {d}]"
        )));
    }
    if n <= d_out {
        return Err(Error::TooFewSamples { need: d_out + 1, have: n });
    }
    let mean = regions.mean_axis(Axis(0)).expect("non-empty");
    let centered = regions - &mean;
    let cov = centered.t().dot(&centered) / (n as f64 - 1.0);

    let (eigenvalues, mut basis) = symmetric_eig_desc(&cov, d_out);
    fix_signs(&mut basis);
    Ok(PcaModel {
        mean,
        basis,
        eigenvalues,
    })
}

/// Dense symmetric eigendecomposition, top `take` pairs by descending
/// eigenvalue.
pub(crate) fn symmetric_eig_desc(matrix: &Array2<f64>, take: usize) -> (Array1<f64>, Array2<f64>) {
    let d = matrix.nrows();
    let na = nalgebra::DMatrix::from_fn(d, d, |r, c| matrix[[r, c]]);
    let eig = na.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let take = take.min(d);
    let eigenvalues = Array1::from_iter(order[..take].iter().map(|&i| eig.eigenvalues[i]));
    let mut basis = Array2::zeros((d, take));
    for (col, &i) in order[..take].iter().enumerate() {
        for row in 0..d {
            basis[[row, col]] = eig.eigenvectors[(row, i)];
        }
    }
    (eigenvalues, basis)
}

pub(crate) fn fix_signs(basis: &mut Array2<f64>) {
    for mut col in basis.columns_mut() {
        let mut best = 0usize;
        let mut best_abs = 0.0f64;
        for (i, &v) in col.iter().enumerate() {
            if v.abs() > best_abs {
                best_abs = v.abs();
                best = i;
            }
        }
        if col[best] < 0.0 {
            col.mapv_inplace(|v| -v);
        }
    }
}

/// Projects rows into the PCA space: `(row - mean) . basis`.
pub fn transform_pca(model: &PcaModel, regions: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if regions.ncols() != model.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            got: regions.ncols(),
        });
    }
    let centered = regions - &model.mean;
    Ok(centered.dot(&model.basis))
}
