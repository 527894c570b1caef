//! Cyclic Jacobi eigendecomposition for small symmetric matrices.

use ndarray::Array2;

/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// eigenvector `i` is column `i`. Signs follow the convention that each
/// column's largest-magnitude entry is positive.
pub fn symmetric_eigen(matrix: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = matrix.nrows();
    let mut a = matrix.clone();
    let mut v: Array2<f64> = Array2::eye(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off < 1e-24 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let cos = 1.0 / (t * t + 1.0).sqrt();
                let sin = t * cos;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = cos * akp - sin * akq;
                    a[[k, q]] = sin * akp + cos * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = cos * apk - sin * aqk;
                    a[[q, k]] = sin * apk + cos * aqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = cos * vkp - sin * vkq;
                    v[[k, q]] = sin * vkp + cos * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[[y, y]].total_cmp(&a[[x, x]]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &i) in order.iter().enumerate() {
        let mut best = 0usize;
        let mut best_abs = 0.0;
        for r in 0..n {
            if v[[r, i]].abs() > best_abs {
                best_abs = v[[r, i]].abs();
                best = r;
            }
        }
        let flip = if v[[best, i]] < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[[r, col]] = flip * v[[r, i]];
        }
    }
    (eigenvalues, vectors)
}

/// Whitening transform from the Jacobi decomposition of the sample
/// covariance: columns `v_j / sqrt(max(lambda_j, 1e-8))`.
pub fn whitening_transform(rows: &Array2<f64>, d_out: usize) -> (Vec<f64>, Array2<f64>) {
    let n = rows.nrows();
    let d = rows.ncols();
    let mut mean = vec![0f64; d];
    for row in rows.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = Array2::zeros((d, d));
    for row in rows.rows() {
        for i in 0..d {
            for j in 0..d {
                cov[[i, j]] += (row[i] - mean[i]) * (row[j] - mean[j]);
            }
        }
    }
    cov /= n as f64 - 1.0;
    let (eigenvalues, vectors) = symmetric_eigen(&cov);
    let mut transform = Array2::zeros((d, d_out));
    for j in 0..d_out {
        let scale = 1.0 / eigenvalues[j].max(1e-8).sqrt();
        for r in 0..d {
            transform[[r, j]] = vectors[[r, j]] * scale;
        }
    }
    (mean, transform)
}
