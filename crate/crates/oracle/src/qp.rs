//! Exact box-QP oracle by active-set enumeration.
//!
//! Solves `min 1/2 b' Q b + p' b` subject to `y' b = 0`, `0 <= b <= C` by
//! enumerating every lower/upper/free state combination, solving the
//! stationarity system for the free block plus the equality multiplier,
//! and keeping the best primal-feasible candidate. The true optimum's
//! active set is among the combinations, so the minimum over feasible
//! candidates is the global optimum. Exponential, fine for n <= 10.

use ndarray::Array2;

pub struct QpSolution {
    pub beta: Vec<f64>,
    pub objective_min: f64,
}

pub fn solve_box_qp(q: &Array2<f64>, p: &[f64], y: &[f64], c: f64) -> QpSolution {
    let n = p.len();
    let mut best: Option<QpSolution> = None;
    let states = 3usize.pow(n as u32);
    for mut code in 0..states {
        let mut state = vec![0u8; n]; // 0 lower, 1 upper, 2 free
        for slot in state.iter_mut() {
            *slot = (code % 3) as u8;
            code /= 3;
        }
        if let Some(beta) = candidate(q, p, y, c, &state) {
            let obj = objective(q, p, &beta);
            if best.as_ref().map(|b| obj < b.objective_min).unwrap_or(true) {
                best = Some(QpSolution {
                    beta,
                    objective_min: obj,
                });
            }
        }
    }
    best.expect("beta = 0 is always feasible")
}

fn objective(q: &Array2<f64>, p: &[f64], beta: &[f64]) -> f64 {
    let n = beta.len();
    let mut acc = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += q[[i, j]] * beta[j];
        }
        acc += beta[i] * (0.5 * row + p[i]);
    }
    acc
}

fn candidate(q: &Array2<f64>, p: &[f64], y: &[f64], c: f64, state: &[u8]) -> Option<Vec<f64>> {
    let n = p.len();
    let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
    let mut beta = vec![0f64; n];
    for i in 0..n {
        if state[i] == 1 {
            beta[i] = c;
        }
    }
    let fixed_eq: f64 = (0..n)
        .filter(|&i| state[i] != 2)
        .map(|i| y[i] * beta[i])
        .sum();

    if free.is_empty() {
        return (fixed_eq.abs() < 1e-9).then_some(beta);
    }

    // unknowns: beta_free and the equality multiplier rho
    // rows: stationarity for each free index, then the equality constraint
    let f = free.len();
    let mut a = nalgebra::DMatrix::<f64>::zeros(f + 1, f + 1);
    let mut rhs = nalgebra::DVector::<f64>::zeros(f + 1);
    for (r, &i) in free.iter().enumerate() {
        for (cidx, &j) in free.iter().enumerate() {
            a[(r, cidx)] = q[[i, j]];
        }
        a[(r, f)] = -y[i];
        let mut fixed_part = p[i];
        for j in 0..n {
            if state[j] != 2 {
                fixed_part += q[[i, j]] * beta[j];
            }
        }
        rhs[r] = -fixed_part;
    }
    for (cidx, &j) in free.iter().enumerate() {
        a[(f, cidx)] = y[j];
    }
    rhs[f] = -fixed_eq;

    let solution = a.lu().solve(&rhs)?;
    for (r, &i) in free.iter().enumerate() {
        let v = solution[r];
        if !(0.0 - 1e-9..=c + 1e-9).contains(&v) {
            return None;
        }
        beta[i] = v.clamp(0.0, c);
    }
    let eq: f64 = (0..n).map(|i| y[i] * beta[i]).sum();
    (eq.abs() < 1e-7).then_some(beta)
}
