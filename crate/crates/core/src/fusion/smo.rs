//! Sequential two-coordinate ascent for SVC and epsilon-SVR duals.
//!
//! Both problems are solved through one canonical box QP,
//!
//! ```text
//! min  1/2 b' Q b + p' b    s.t.  y' b = 0,  0 <= b_t <= C,  y_t = +-1
//! ```
//!
//! with maximal-violating-pair working-set selection and the classic
//! two-variable analytic update. For SVC, `b = alpha`, `Q = (y y') . K`,
//! `p = -1`. For SVR the 2n variables stack `alpha+` then `alpha-` with
//! signs `+1`/`-1`, `Q_st = y_s y_t K(s mod n, t mod n)` and
//! `p = [eps - y; eps + y]`.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView2};

pub const KKT_TOL: f64 = 1e-6;
pub const MAX_PASSES: usize = 100_000;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SvcSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// Dual objective at the solution (the maximized form).
    pub objective: f64,
    pub passes: usize,
}

#[derive(Debug, Clone)]
pub struct SvrSolution {
    pub alpha_pos: Vec<f64>,
    pub alpha_neg: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub passes: usize,
}

fn check_symmetric(k: &ArrayView2<f64>) -> Result<()> {
    let n = k.nrows();
    if n != k.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.ncols(),
        });
    }
    let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((k[[i, j]] - k[[j, i]]).abs());
        }
    }
    if worst > 1e-8 * scale {
        return Err(Error::AsymmetricKernel(worst));
    }
    Ok(())
}

/// Soft-margin SVC dual: `max sum(a) - 1/2 a' (yy'.K) a`, `0 <= a <= C`,
/// `y' a = 0`. Returns the alphas, the bias of the decision function
/// `f(x) = sum_i a_i y_i K(x, x_i) + b`, and the dual objective.
pub fn solve_svc_dual(kernel: &ArrayView2<f64>, y: &[f64], c: f64) -> Result<SvcSolution> {
    check_symmetric(kernel)?;
    let n = y.len();
    if n != kernel.nrows() {
        return Err(Error::DimensionMismatch {
            expected: kernel.nrows(),
            got: n,
        });
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::DegenerateLabels("svc labels must be +-1".into()));
    }
    if c <= 0.0 {
        return Err(Error::InvalidArgument("C must be positive".into()));
    }
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            q[[i, j]] = y[i] * y[j] * kernel[[i, j]];
        }
    }
    let p = vec![-1.0; n];
    let state = solve_box_qp(&q, &p, y, c);
    let objective = -state.min_objective(&q, &p);
    Ok(SvcSolution {
        alpha: state.beta,
        bias: -state.rho,
        objective,
        passes: state.passes,
    })
}

/// Epsilon-SVR dual in the standard form: `max sum_i y_i (a+ - a-)_i
/// - eps sum_i (a+ + a-)_i - 1/2 (a+ - a-)' K (a+ - a-)`, box `[0, C]`,
/// `sum (a+ - a-) = 0`. The regression function is
/// `f(x) = sum_i (a+ - a-)_i K(x, x_i) + b`.
pub fn solve_svr_dual(kernel: &ArrayView2<f64>, y: &[f64], c: f64, eps: f64) -> Result<SvrSolution> {
    check_symmetric(kernel)?;
    let n = y.len();
    if n != kernel.nrows() {
        return Err(Error::DimensionMismatch {
            expected: kernel.nrows(),
            got: n,
        });
    }
    if c <= 0.0 || eps < 0.0 {
        return Err(Error::InvalidArgument("need C > 0 and eps >= 0".into()));
    }
    let m = 2 * n;
    let mut q = Array2::zeros((m, m));
    let mut signs = vec![0f64; m];
    let mut p = vec![0f64; m];
    for s in 0..m {
        signs[s] = if s < n { 1.0 } else { -1.0 };
        p[s] = if s < n { eps - y[s] } else { eps + y[s - n] };
    }
    for s in 0..m {
        for t in 0..m {
            q[[s, t]] = signs[s] * signs[t] * kernel[[s % n, t % n]];
        }
    }
    let state = solve_box_qp(&q, &p, &signs, c);
    let objective = -state.min_objective(&q, &p);
    Ok(SvrSolution {
        alpha_pos: state.beta[..n].to_vec(),
        alpha_neg: state.beta[n..].to_vec(),
        bias: -state.rho,
        objective,
        passes: state.passes,
    })
}

struct QpState {
    beta: Vec<f64>,
    rho: f64,
    passes: usize,
}

impl QpState {
    fn min_objective(&self, q: &Array2<f64>, p: &[f64]) -> f64 {
        let n = self.beta.len();
        let mut quad = 0.0;
        for i in 0..n {
            if self.beta[i] == 0.0 {
                continue;
            }
            let mut acc = 0.0;
            for j in 0..n {
                acc += q[[i, j]] * self.beta[j];
            }
            quad += self.beta[i] * acc;
        }
        let lin: f64 = p.iter().zip(&self.beta).map(|(a, b)| a * b).sum();
        0.5 * quad + lin
    }
}

fn in_up(y: f64, beta: f64, c: f64) -> bool {
    (y > 0.0 && beta < c) || (y < 0.0 && beta > 0.0)
}

fn in_low(y: f64, beta: f64, c: f64) -> bool {
    (y > 0.0 && beta > 0.0) || (y < 0.0 && beta < c)
}

fn solve_box_qp(q: &Array2<f64>, p: &[f64], y: &[f64], c: f64) -> QpState {
    let n = p.len();
    let mut beta = vec![0f64; n];
    let mut grad = p.to_vec();
    let mut passes = 0usize;

    while passes < MAX_PASSES {
        // maximal violating pair
        let mut i = usize::MAX;
        let mut i_val = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut j_val = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(y[t], beta[t], c) && v > i_val {
                i_val = v;
                i = t;
            }
            if in_low(y[t], beta[t], c) && v < j_val {
                j_val = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || i_val - j_val <= KKT_TOL {
            break;
        }
        passes += 1;

        let old_i = beta[i];
        let old_j = beta[j];
        if y[i] != y[j] {
            let mut quad = q[[i, i]] + q[[j, j]] + 2.0 * q[[i, j]];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = beta[i] - beta[j];
            beta[i] += delta;
            beta[j] += delta;
            if diff > 0.0 {
                if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = diff;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = -diff;
            }
            if diff > 0.0 {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = c - diff;
                }
            } else if beta[j] > c {
                beta[j] = c;
                beta[i] = c + diff;
            }
        } else {
            let mut quad = q[[i, i]] + q[[j, j]] - 2.0 * q[[i, j]];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = beta[i] + beta[j];
            beta[i] -= delta;
            beta[j] += delta;
            if sum > c {
                if beta[i] > c {
                    beta[i] = c;
                    beta[j] = sum - c;
                }
            } else if beta[j] < 0.0 {
                beta[j] = 0.0;
                beta[i] = sum;
            }
            if sum > c {
                if beta[j] > c {
                    beta[j] = c;
                    beta[i] = sum - c;
                }
            } else if beta[i] < 0.0 {
                beta[i] = 0.0;
                beta[j] = sum;
            }
        }
        let di = beta[i] - old_i;
        let dj = beta[j] - old_j;
        if di != 0.0 || dj != 0.0 {
            for t in 0..n {
                grad[t] += q[[t, i]] * di + q[[t, j]] * dj;
            }
        }
    }

    // bias from free variables, else the midpoint of the KKT bounds
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if beta[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if beta[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    };
    QpState { beta, rho, passes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn two_point_max_margin() {
        // points x = -1 (y = -1) and x = +1 (y = +1), linear kernel
        let k = array![[1.0, -1.0], [-1.0, 1.0]];
        let sol = solve_svc_dual(&k.view(), &[-1.0, 1.0], 10.0).unwrap();
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9, "alpha = {:?}", sol.alpha);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!(sol.bias.abs() < 1e-9);
        assert!((sol.objective - 0.5).abs() < 1e-9);
    }

    #[test]
    fn svc_kkt_residuals() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let c = 5.0;
        let x = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-1.0..1.0));
        let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let k = x.dot(&x.t());
        let sol = solve_svc_dual(&k.view(), &y, c).unwrap();
        // equality constraint
        let eq: f64 = sol.alpha.iter().zip(&y).map(|(a, yy)| a * yy).sum();
        assert!(eq.abs() < 1e-6);
        for i in 0..n {
            assert!((-1e-9..=c + 1e-9).contains(&sol.alpha[i]));
            let f: f64 = (0..n).map(|j| sol.alpha[j] * y[j] * k[[i, j]]).sum::<f64>() + sol.bias;
            let margin = y[i] * f;
            if sol.alpha[i] < 1e-9 {
                assert!(margin >= 1.0 - 1e-4, "margin {margin} at zero alpha");
            } else if sol.alpha[i] < c - 1e-9 {
                assert!((margin - 1.0).abs() < 1e-4, "free sv margin {margin}");
            }
        }
    }

    #[test]
    fn svr_constant_labels_inside_tube() {
        let n = 6;
        let k = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 2.0 } else { 0.5 });
        let y = vec![3.25; n];
        let sol = solve_svr_dual(&k.view(), &y, 10.0, 0.1).unwrap();
        assert!(sol.alpha_pos.iter().all(|&a| a.abs() < 1e-12));
        assert!(sol.alpha_neg.iter().all(|&a| a.abs() < 1e-12));
        assert!((sol.bias - 3.25).abs() < 1e-9, "bias {}", sol.bias);
    }

    #[test]
    fn svr_fits_line_within_tube() {
        // 1-D data y = x on {-1, 0, 1}, linear kernel
        let x = [-1.0, 0.0, 1.0];
        let y = vec![-1.0, 0.0, 1.0];
        let k = Array2::from_shape_fn((3, 3), |(i, j)| x[i] * x[j]);
        let eps = 0.1;
        let sol = solve_svr_dual(&k.view(), &y, 100.0, eps).unwrap();
        let eq: f64 = sol
            .alpha_pos
            .iter()
            .zip(&sol.alpha_neg)
            .map(|(p, m)| p - m)
            .sum();
        assert!(eq.abs() < 1e-6);
        for i in 0..3 {
            let f: f64 = (0..3)
                .map(|j| (sol.alpha_pos[j] - sol.alpha_neg[j]) * k[[i, j]])
                .sum::<f64>()
                + sol.bias;
            assert!((f - y[i]).abs() <= eps + 1e-6, "pred {f} vs {}", y[i]);
        }
    }

    #[test]
    fn asymmetric_kernel_rejected() {
        let k = array![[1.0, 0.5], [0.2, 1.0]];
        assert!(matches!(
            solve_svc_dual(&k.view(), &[1.0, -1.0], 1.0),
            Err(Error::AsymmetricKernel(_))
        ));
    }

    #[test]
    fn bad_labels_rejected() {
        let k = array![[1.0, 0.0], [0.0, 1.0]];
        assert!(solve_svc_dual(&k.view(), &[1.0, 0.5], 1.0).is_err());
    }
}
