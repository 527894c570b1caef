//! Direct encoder formulas: Fisher differences, BoW counts, VLAD
//! residuals, all computed with plain per-region loops.

use ndarray::{Array1, Array2};

/// Soft assignment of one region to each diagonal Gaussian, computed in
/// plain density space (adequate for small test dimensions).
pub fn soft_assign(
    weights: &Array1<f64>,
    means: &Array2<f64>,
    variances: &Array2<f64>,
    region: &[f64],
) -> Vec<f64> {
    let k = weights.len();
    let d = region.len();
    let mut dens = vec![0f64; k];
    for c in 0..k {
        let mut val = weights[c];
        for j in 0..d {
            let var = variances[[c, j]];
            let diff = region[j] - means[[c, j]];
            val *= (-diff * diff / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt();
        }
        dens[c] = val;
    }
    let total: f64 = dens.iter().sum();
    dens.iter().map(|&v| v / total).collect()
}

/// Fisher vector straight from the definition, layout
/// `[phi1_1, phi2_1, ..., phi1_K, phi2_K]`.
pub fn fisher_vector(
    weights: &Array1<f64>,
    means: &Array2<f64>,
    variances: &Array2<f64>,
    regions: &Array2<f64>,
) -> Vec<f64> {
    let k = weights.len();
    let d = means.ncols();
    let r = regions.nrows();
    let mut out = vec![0f64; 2 * k * d];
    for c in 0..k {
        for j in 0..d {
            let sigma = variances[[c, j]].sqrt();
            let mut sum1 = 0.0;
            let mut sum2 = 0.0;
            for p in 0..r {
                let alpha = soft_assign(weights, means, variances, regions.row(p).to_slice().unwrap());
                let u = (regions[[p, j]] - means[[c, j]]) / sigma;
                sum1 += alpha[c] * u;
                sum2 += alpha[c] * (u * u - 1.0);
            }
            out[2 * c * d + j] = sum1 / (r as f64 * weights[c].sqrt());
            out[(2 * c + 1) * d + j] = sum2 / (r as f64 * (2.0 * weights[c]).sqrt());
        }
    }
    out
}

fn nearest(centroids: &Array2<f64>, row: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, center) in centroids.rows().into_iter().enumerate() {
        let d: f64 = center
            .iter()
            .zip(row)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

/// Exhaustive nearest-centroid count histogram, L1-normalized.
pub fn bow_vector(centroids: &Array2<f64>, regions: &Array2<f64>) -> Vec<f64> {
    let mut hist = vec![0f64; centroids.nrows()];
    for row in regions.rows() {
        hist[nearest(centroids, row.to_slice().unwrap())] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    hist.iter().map(|&v| v / total).collect()
}

/// Residual accumulation with per-block then global L2 normalization.
pub fn vlad_vector(centroids: &Array2<f64>, regions: &Array2<f64>) -> Vec<f64> {
    let k = centroids.nrows();
    let d = centroids.ncols();
    let mut acc = vec![0f64; k * d];
    for row in regions.rows() {
        let c = nearest(centroids, row.to_slice().unwrap());
        for j in 0..d {
            acc[c * d + j] += row[j] - centroids[[c, j]];
        }
    }
    for c in 0..k {
        let norm = acc[c * d..(c + 1) * d]
            .iter()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            for v in acc[c * d..(c + 1) * d].iter_mut() {
                *v /= norm;
            }
        }
    }
    let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for v in acc.iter_mut() {
            *v /= norm;
        }
    }
    acc
}

/// Dual objective `J = lin - 1/2 sum_ij c_i c_j K_eta(i,j)` with the
/// locally combined kernel expanded inline; `eta` is `n x P`. Used for
/// finite-difference gradient checks with the coefficients held fixed.
pub fn combined_dual_objective(
    kernels: &[Array2<f64>],
    eta: &Array2<f64>,
    coef: &[f64],
    linear_term: f64,
) -> f64 {
    let n = coef.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut k_eta = 0.0;
            for (r, k) in kernels.iter().enumerate() {
                k_eta += eta[[i, r]] * k[[i, j]] * eta[[j, r]];
            }
            quad += coef[i] * coef[j] * k_eta;
        }
    }
    linear_term - 0.5 * quad
}

/// Softmax gate values for every sample from raw parameters.
pub fn gate_values(v: &[Vec<f64>], v0: &[f64], z: &[Array2<f64>]) -> Array2<f64> {
    let p = v.len();
    let n = z[0].nrows();
    let mut out = Array2::zeros((n, p));
    for i in 0..n {
        let logits: Vec<f64> = (0..p)
            .map(|r| {
                z[r].row(i)
                    .iter()
                    .zip(&v[r])
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    + v0[r]
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        for r in 0..p {
            out[[i, r]] = exps[r] / total;
        }
    }
    out
}
