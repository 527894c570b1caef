//! Per-sample softmax gate over modalities, and the gradient of the dual
//! objective with respect to its parameters.

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

/// Softmax gating `eta_r(x) = softmax_r(<v_r, z_r> + v_r0)` over the
/// whitened per-modality features of a sample.
#[derive(Debug, Clone)]
pub struct GatingModel {
    pub v: Vec<Array1<f64>>,
    pub v0: Vec<f64>,
}

impl GatingModel {
    /// Zero-initialized gate: uniform `eta = 1/P` everywhere.
    pub fn uniform(dims: &[usize]) -> Self {
        GatingModel {
            v: dims.iter().map(|&d| Array1::zeros(d)).collect(),
            v0: vec![0.0; dims.len()],
        }
    }

    pub fn modalities(&self) -> usize {
        self.v.len()
    }

    /// Gate values for one sample (one whitened feature view per modality).
    /// Computed with max-subtraction; always a probability vector.
    pub fn eval(&self, sample: &[ArrayView1<f64>]) -> Result<Array1<f64>> {
        let p = self.modalities();
        if sample.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sample.len(),
            });
        }
        let mut logits = Array1::zeros(p);
        for r in 0..p {
            if sample[r].len() != self.v[r].len() {
                return Err(Error::DimensionMismatch {
                    expected: self.v[r].len(),
                    got: sample[r].len(),
                });
            }
            logits[r] = self.v[r].dot(&sample[r]) + self.v0[r];
        }
        Ok(softmax(&logits))
    }

    /// Gate values for every training sample; rows are samples, columns
    /// modalities. `z[r]` holds modality r's whitened features row-wise.
    pub fn eval_batch(&self, z: &[Array2<f64>]) -> Result<Array2<f64>> {
        let p = self.modalities();
        let n = z.first().map(|m| m.nrows()).unwrap_or(0);
        let mut out = Array2::zeros((n, p));
        for i in 0..n {
            let sample: Vec<ArrayView1<f64>> = z.iter().map(|m| m.row(i)).collect();
            let eta = self.eval(&sample)?;
            out.row_mut(i).assign(&eta);
        }
        Ok(out)
    }
}

fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.mapv(|v| (v - max).exp());
    let sum = out.sum();
    out.mapv_inplace(|v| v / sum);
    out
}

/// Locally combined kernel: `K_eta[i, j] = sum_r eta[i, r] K_r[i, j]
/// eta[j, r]`.
pub fn combined_kernel(kernels: &[Array2<f64>], eta: &ArrayView2<f64>) -> Result<Array2<f64>> {
    let p = kernels.len();
    if eta.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: eta.ncols(),
        });
    }
    let n = eta.nrows();
    for k in kernels {
        if k.dim() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: k.nrows(),
            });
        }
    }
    let mut out = Array2::zeros((n, n));
    for (r, k) in kernels.iter().enumerate() {
        for i in 0..n {
            let ei = eta[[i, r]];
            if ei == 0.0 {
                continue;
            }
            for j in 0..n {
                out[[i, j]] += ei * k[[i, j]] * eta[[j, r]];
            }
        }
    }
    Ok(out)
}

/// Gradient of the dual objective `J = lin - 1/2 sum_ij c_i c_j K_eta(i,j)`
/// with respect to every `v_r` and `v_r0`, holding the dual coefficients
/// `c` fixed (`c_i = alpha_i y_i` for SVC, `alpha+ - alpha-` for SVR; the
/// linear terms do not depend on the gate).
///
/// Derived by pushing the softmax Jacobian through `K_eta`:
///
/// ```text
/// dJ/dv_m0 = -sum_i (T_mi - eta_mi S_i)
/// dJ/dv_m  = -sum_i (T_mi - eta_mi S_i) z_mi
/// T_mi = c_i eta_mi sum_j c_j K_m(i,j) eta_mj
/// S_i  = c_i sum_j c_j K_eta(i,j)
/// ```
pub fn gating_gradient(
    kernels: &[Array2<f64>],
    z: &[Array2<f64>],
    eta: &ArrayView2<f64>,
    coef: &[f64],
) -> Result<(Vec<Array1<f64>>, Vec<f64>)> {
    let p = kernels.len();
    let n = coef.len();
    if eta.dim() != (n, p) {
        return Err(Error::DimensionMismatch {
            expected: n * p,
            got: eta.len(),
        });
    }
    let k_eta = combined_kernel(kernels, eta)?;
    let mut s = vec![0f64; n];
    for i in 0..n {
        let mut acc = 0.0;
        for j in 0..n {
            acc += coef[j] * k_eta[[i, j]];
        }
        s[i] = coef[i] * acc;
    }

    let mut grad_v = Vec::with_capacity(p);
    let mut grad_v0 = Vec::with_capacity(p);
    for m in 0..p {
        let km = &kernels[m];
        let mut g0 = 0.0;
        let mut gv = Array1::<f64>::zeros(z[m].ncols());
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += coef[j] * km[[i, j]] * eta[[j, m]];
            }
            let t = coef[i] * eta[[i, m]] * acc;
            let weight = -(t - eta[[i, m]] * s[i]);
            g0 += weight;
            gv.scaled_add(weight, &z[m].row(i));
        }
        grad_v.push(gv);
        grad_v0.push(g0);
    }
    Ok((grad_v, grad_v0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_parameters_give_uniform_gate() {
        let g = GatingModel::uniform(&[3, 2]);
        let a = array![0.4, -1.0, 2.0];
        let b = array![5.0, 5.0];
        let eta = g.eval(&[a.view(), b.view()]).unwrap();
        assert!((eta[0] - 0.5).abs() < 1e-12);
        assert!((eta[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gate_is_probability_vector_and_shift_invariant() {
        let mut g = GatingModel::uniform(&[2, 2, 2]);
        g.v[0] = array![1.0, -2.0];
        g.v[1] = array![0.5, 0.5];
        g.v[2] = array![-1.0, 3.0];
        g.v0 = vec![0.3, -0.7, 0.1];
        let z = [array![0.2, 0.4], array![-1.0, 2.0], array![0.0, 0.1]];
        let eta = g.eval(&[z[0].view(), z[1].view(), z[2].view()]).unwrap();
        assert!((eta.sum() - 1.0).abs() < 1e-12);
        assert!(eta.iter().all(|&e| e > 0.0));

        // adding a constant to every bias leaves the gate unchanged
        let mut g2 = g.clone();
        for v0 in g2.v0.iter_mut() {
            *v0 += 13.5;
        }
        let eta2 = g2.eval(&[z[0].view(), z[1].view(), z[2].view()]).unwrap();
        for r in 0..3 {
            assert!((eta[r] - eta2[r]).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_kernel_degenerate_cases() {
        let k = array![[2.0, 1.0], [1.0, 2.0]];
        // P = 1 with eta = 1 reproduces the kernel
        let eta = array![[1.0], [1.0]];
        let out = combined_kernel(&[k.clone()], &eta.view()).unwrap();
        assert_eq!(out, k);
        // uniform gates over two identical kernels halve it
        let eta = array![[0.5, 0.5], [0.5, 0.5]];
        let out = combined_kernel(&[k.clone(), k.clone()], &eta.view()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((out[[i, j]] - k[[i, j]] / 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn combined_kernel_preserves_psd() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let n = 6;
            let kernels: Vec<Array2<f64>> = (0..2)
                .map(|_| {
                    let a = Array2::from_shape_fn((n, 4), |_| rng.gen_range(-1.0..1.0));
                    a.dot(&a.t())
                })
                .collect();
            let mut eta = Array2::from_shape_fn((n, 2), |_| rng.gen_range(0.01..1.0));
            for mut row in eta.rows_mut() {
                let s = row.sum();
                row.mapv_inplace(|v| v / s);
            }
            let k_eta = combined_kernel(&kernels, &eta.view()).unwrap();
            let min_eig = crate::fusion::min_eigenvalue(&k_eta);
            assert!(min_eig >= -1e-8, "combined kernel lost PSD: {min_eig}");
        }
    }

    #[test]
    fn single_modality_gradient_is_zero() {
        let k = array![[2.0, 0.5], [0.5, 1.0]];
        let z = array![[1.0, 2.0], [3.0, 4.0]];
        let eta = array![[1.0], [1.0]];
        let (gv, gv0) = gating_gradient(&[k], &[z], &eta.view(), &[0.7, -0.7]).unwrap();
        assert!(gv[0].iter().all(|&v| v == 0.0));
        assert_eq!(gv0[0], 0.0);
    }

    #[test]
    fn symmetric_modalities_get_equal_gradients() {
        let k = array![[2.0, 0.5], [0.5, 1.0]];
        let z = array![[1.0], [0.5]];
        let eta = array![[0.5, 0.5], [0.5, 0.5]];
        let (gv, gv0) =
            gating_gradient(&[k.clone(), k.clone()], &[z.clone(), z.clone()], &eta.view(), &[1.0, -1.0])
                .unwrap();
        assert!((gv0[0] - gv0[1]).abs() < 1e-12);
        assert!((gv[0][0] - gv[1][0]).abs() < 1e-12);
    }
}
