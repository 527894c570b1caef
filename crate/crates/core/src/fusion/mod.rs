//! Localized multiple-kernel machine fusing the per-modality encoded
//! vectors.
//!
//! Training alternates two steps: with the gate fixed, the locally
//! combined kernel `K_eta(i,j) = sum_r eta_r(i) K_r(i,j) eta_r(j)` feeds a
//! standard SVC/SVR dual solve; with the dual coefficients fixed, the gate
//! parameters take one gradient-descent step on the dual objective
//! (initial rate 0.1, Armijo-style backtracking that halves the rate and
//! rejects any step that increases the objective). Prediction evaluates
//! `f(x) = sum_r eta_r(x) sum_i c_i K_r(z_r(x), z_r(x_i)) eta_r(x_i) + b`
//! on whitened features.

pub mod gating;
pub mod io;
pub mod kernel;
pub mod smo;
pub mod whiten;

pub use gating::{combined_kernel, gating_gradient, GatingModel};
pub use kernel::{kernel_matrix, KernelSpec};
pub use smo::{solve_svc_dual, solve_svr_dual, SvcSolution, SvrSolution};
pub use whiten::{whiten_fit, Whitener};

use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView2};

/// What the machine predicts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Task {
    /// Epsilon-insensitive regression.
    Regression,
    /// Binary classification with labels -1/+1.
    Binary,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub task: Task,
    /// One kernel spec per modality (or one shared spec, see `uniform`).
    pub kernels: Vec<KernelSpec>,
    pub c: f64,
    pub epsilon: f64,
    /// Cap on the whitened dimension; the effective value is
    /// `min(cap, n - 1, d_r)` per modality. `None` means no cap.
    pub whiten_dim: Option<usize>,
    pub max_outer: usize,
    pub initial_lr: f64,
}

impl FitConfig {
    pub fn uniform(task: Task, kernel: KernelSpec, modalities: usize, c: f64, epsilon: f64) -> Self {
        FitConfig {
            task,
            kernels: vec![kernel; modalities],
            c,
            epsilon,
            whiten_dim: None,
            max_outer: 50,
            initial_lr: 0.1,
        }
    }
}

/// Dual variables in task-native form, kept for KKT audits.
#[derive(Debug, Clone)]
pub enum DualVars {
    Svc { alpha: Vec<f64> },
    Svr { alpha_pos: Vec<f64>, alpha_neg: Vec<f64> },
}

/// A trained localized multiple-kernel machine.
#[derive(Debug, Clone)]
pub struct FusionModel {
    pub task: Task,
    pub kernels: Vec<KernelSpec>,
    pub whiteners: Vec<Whitener>,
    pub gating: GatingModel,
    /// Whitened training features per modality (`n x D_w_r`).
    pub support: Vec<Array2<f64>>,
    /// Gate values at the training samples (`n x P`).
    pub support_eta: Array2<f64>,
    /// Signed dual coefficients: `alpha_i y_i` (SVC) or
    /// `alpha+_i - alpha-_i` (SVR).
    pub coef: Vec<f64>,
    pub duals: DualVars,
    pub bias: f64,
    pub labels: Vec<f64>,
    pub c: f64,
    pub epsilon: f64,
    /// Dual objective after every *accepted* outer step (non-increasing).
    pub objective_trace: Vec<f64>,
}

impl FusionModel {
    pub fn modalities(&self) -> usize {
        self.kernels.len()
    }

    /// Decision value / regression output for one sample given as raw
    /// (unwhitened) per-modality feature slices.
    pub fn predict(&self, sample: &[&[f64]]) -> Result<f64> {
        let p = self.modalities();
        if sample.len() != p {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: sample.len(),
            });
        }
        let mut z = Vec::with_capacity(p);
        for r in 0..p {
            let row = ndarray::ArrayView2::from_shape((1, sample[r].len()), sample[r])
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            z.push(self.whiteners[r].apply(&row)?);
        }
        let views: Vec<_> = z.iter().map(|m| m.row(0)).collect();
        let eta = self.gating.eval(&views)?;

        let mut score = self.bias;
        for r in 0..p {
            let k_row = kernel_matrix(&self.kernels[r], &z[r].view(), &self.support[r].view())?;
            let mut acc = 0.0;
            for (i, &c) in self.coef.iter().enumerate() {
                acc += c * k_row[[0, i]] * self.support_eta[[i, r]];
            }
            score += eta[r] * acc;
        }
        Ok(score)
    }

    /// Batch prediction; one row per sample per modality.
    pub fn predict_batch(&self, features: &[Array2<f64>]) -> Result<Vec<f64>> {
        let n = features.first().map(|m| m.nrows()).unwrap_or(0);
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let rows: Vec<&[f64]> = features
                .iter()
                .map(|m| m.row(i).to_slice().expect("contiguous"))
                .collect();
            out.push(self.predict(&rows)?);
        }
        Ok(out)
    }
}

struct DualOutcome {
    coef: Vec<f64>,
    duals: DualVars,
    bias: f64,
    objective: f64,
}

fn solve_task(task: Task, k_eta: &ArrayView2<f64>, labels: &[f64], c: f64, eps: f64) -> Result<DualOutcome> {
    match task {
        Task::Binary => {
            let sol = solve_svc_dual(k_eta, labels, c)?;
            let coef = sol.alpha.iter().zip(labels).map(|(a, y)| a * y).collect();
            Ok(DualOutcome {
                coef,
                duals: DualVars::Svc { alpha: sol.alpha },
                bias: sol.bias,
                objective: sol.objective,
            })
        }
        Task::Regression => {
            let sol = solve_svr_dual(k_eta, labels, c, eps)?;
            let coef = sol
                .alpha_pos
                .iter()
                .zip(&sol.alpha_neg)
                .map(|(p, m)| p - m)
                .collect();
            Ok(DualOutcome {
                coef,
                duals: DualVars::Svr {
                    alpha_pos: sol.alpha_pos,
                    alpha_neg: sol.alpha_neg,
                },
                bias: sol.bias,
                objective: sol.objective,
            })
        }
    }
}

/// Trains the fusion machine on per-modality feature matrices (rows are
/// samples). Deterministic: no randomness is involved, identical inputs
/// produce identical models.
pub fn fit_rlmkl(features: &[Array2<f64>], labels: &[f64], config: &FitConfig) -> Result<FusionModel> {
    let p = features.len();
    if p == 0 || config.kernels.len() != p {
        return Err(Error::InvalidArgument(format!(
            "need one kernel per modality: {} kernels for {p} modalities",
            config.kernels.len()
        )));
    }
    let n = labels.len();
    if n < 2 {
        return Err(Error::TooFewSamples { need: 2, have: n });
    }
    for m in features {
        if m.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: m.nrows(),
            });
        }
    }
    if config.task == Task::Binary {
        let pos = labels.iter().filter(|&&y| y == 1.0).count();
        let neg = labels.iter().filter(|&&y| y == -1.0).count();
        if pos + neg != n || pos == 0 || neg == 0 {
            return Err(Error::DegenerateLabels(
                "binary task needs both +1 and -1 labels".into(),
            ));
        }
    }

    // whiten each modality
    let mut whiteners = Vec::with_capacity(p);
    let mut z = Vec::with_capacity(p);
    for m in features {
        let cap = config.whiten_dim.unwrap_or(usize::MAX);
        let d_out = m.ncols().min(n - 1).min(cap).max(1);
        let w = whiten_fit(&m.view(), d_out)?;
        z.push(w.apply(&m.view())?);
        whiteners.push(w);
    }
    let kernels_fixed: Vec<Array2<f64>> = config
        .kernels
        .iter()
        .zip(&z)
        .map(|(spec, zr)| kernel_matrix(spec, &zr.view(), &zr.view()))
        .collect::<Result<_>>()?;

    let dims: Vec<usize> = z.iter().map(|m| m.ncols()).collect();
    let mut gate = GatingModel::uniform(&dims);

    let eval = |gate: &GatingModel| -> Result<(Array2<f64>, DualOutcome)> {
        let eta = gate.eval_batch(&z)?;
        let k_eta = combined_kernel(&kernels_fixed, &eta.view())?;
        let outcome = solve_task(config.task, &k_eta.view(), labels, config.c, config.epsilon)?;
        Ok((eta, outcome))
    };

    let (mut eta, mut current) = eval(&gate)?;
    let mut trace = vec![current.objective];
    let mut lr = config.initial_lr;

    for _ in 0..config.max_outer {
        let (grad_v, grad_v0) = gating_gradient(&kernels_fixed, &z, &eta.view(), &current.coef)?;
        let grad_norm: f64 = grad_v
            .iter()
            .map(|g| g.dot(g))
            .sum::<f64>()
            + grad_v0.iter().map(|g| g * g).sum::<f64>();
        if grad_norm.sqrt() < 1e-12 {
            break;
        }

        // backtracking step on the gate with the Armijo sufficient-decrease
        // rule; a step that fails it halves the rate and is retried
        let mut accepted = false;
        while lr >= 1e-8 {
            let mut candidate = gate.clone();
            for r in 0..p {
                candidate.v[r].scaled_add(-lr, &grad_v[r]);
                candidate.v0[r] -= lr * grad_v0[r];
            }
            let (eta_new, outcome_new) = eval(&candidate)?;
            if outcome_new.objective <= current.objective - 1e-4 * lr * grad_norm {
                let rel_change = (current.objective - outcome_new.objective)
                    / current.objective.abs().max(1.0);
                gate = candidate;
                eta = eta_new;
                current = outcome_new;
                trace.push(current.objective);
                accepted = true;
                if rel_change < 1e-4 {
                    lr = 0.0; // converged
                }
                break;
            }
            lr /= 2.0;
        }
        if !accepted || lr == 0.0 || lr < 1e-8 {
            break;
        }
    }

    Ok(FusionModel {
        task: config.task,
        kernels: config.kernels.clone(),
        whiteners,
        gating: gate,
        support: z,
        support_eta: eta,
        coef: current.coef,
        duals: current.duals,
        bias: current.bias,
        labels: labels.to_vec(),
        c: config.c,
        epsilon: config.epsilon,
        objective_trace: trace,
    })
}

/// One-vs-one multiclass wrapper: one binary machine per class pair,
/// majority vote with signed-margin then lowest-id tie-breaking.
#[derive(Debug, Clone)]
pub struct OvoModel {
    pub classes: Vec<i64>,
    /// `(class_a, class_b, machine)` with `a < b`; the machine labels
    /// class `a` as +1 and class `b` as -1.
    pub machines: Vec<(i64, i64, FusionModel)>,
}

pub fn ovo_fit(features: &[Array2<f64>], labels: &[i64], config: &FitConfig) -> Result<OvoModel> {
    let mut classes: Vec<i64> = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::DegenerateLabels(format!(
            "one-vs-one needs at least 2 classes, got {classes:?}"
        )));
    }
    let mut machines = Vec::new();
    for ai in 0..classes.len() {
        for bi in ai + 1..classes.len() {
            let (a, b) = (classes[ai], classes[bi]);
            let index: Vec<usize> = labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == a || l == b)
                .map(|(i, _)| i)
                .collect();
            let pair_labels: Vec<f64> = index
                .iter()
                .map(|&i| if labels[i] == a { 1.0 } else { -1.0 })
                .collect();
            let pair_features: Vec<Array2<f64>> = features
                .iter()
                .map(|m| {
                    let mut sub = Array2::zeros((index.len(), m.ncols()));
                    for (row, &i) in index.iter().enumerate() {
                        sub.row_mut(row).assign(&m.row(i));
                    }
                    sub
                })
                .collect();
            let mut cfg = config.clone();
            cfg.task = Task::Binary;
            machines.push((a, b, fit_rlmkl(&pair_features, &pair_labels, &cfg)?));
        }
    }
    Ok(OvoModel { classes, machines })
}

pub fn ovo_predict(model: &OvoModel, sample: &[&[f64]]) -> Result<i64> {
    let mut votes: std::collections::BTreeMap<i64, (usize, f64)> = model
        .classes
        .iter()
        .map(|&c| (c, (0usize, 0f64)))
        .collect();
    for (a, b, machine) in &model.machines {
        let score = machine.predict(sample)?;
        if score >= 0.0 {
            let e = votes.get_mut(a).unwrap();
            e.0 += 1;
        } else {
            let e = votes.get_mut(b).unwrap();
            e.0 += 1;
        }
        votes.get_mut(a).unwrap().1 += score;
        votes.get_mut(b).unwrap().1 -= score;
    }
    let mut best = model.classes[0];
    let mut best_votes = 0usize;
    let mut best_margin = f64::NEG_INFINITY;
    for (&class, &(v, margin)) in &votes {
        let better = v > best_votes
            || (v == best_votes && margin > best_margin)
            || (v == best_votes && margin == best_margin && class < best);
        if better {
            best = class;
            best_votes = v;
            best_margin = margin;
        }
    }
    Ok(best)
}

/// Smallest eigenvalue of a symmetric matrix (test helper for PSD checks).
pub fn min_eigenvalue(matrix: &Array2<f64>) -> f64 {
    let (eigenvalues, _) = crate::encoding::pca::symmetric_eig_desc(matrix, matrix.nrows());
    eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Direct single-kernel decision function used for degeneracy checks:
/// `f(x) = sum_i coef_i K(x, x_i) + b`.
pub fn single_kernel_decision(
    spec: &KernelSpec,
    support: &ArrayView2<f64>,
    coef: &[f64],
    bias: f64,
    sample: &ArrayView2<f64>,
) -> Result<Array1<f64>> {
    let k = kernel_matrix(spec, sample, support)?;
    let mut out = Array1::zeros(sample.nrows());
    for i in 0..sample.nrows() {
        let mut acc = bias;
        for (j, &c) in coef.iter().enumerate() {
            acc += c * k[[i, j]];
        }
        out[i] = acc;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn blob_features(n: usize, seed: u64) -> (Vec<Array2<f64>>, Vec<f64>) {
        // modality 1 separates the labels, modality 2 is pure noise
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let signal = Array2::from_shape_fn((n, 3), |(i, _)| {
            labels[i] * 2.0 + rng.gen_range(-0.5..0.5)
        });
        let noise = Array2::from_shape_fn((n, 3), |_| rng.gen_range(-2.0..2.0));
        (vec![signal, noise], labels)
    }

    #[test]
    fn p1_reduces_to_single_kernel_machine() {
        let (features, labels) = blob_features(24, 5);
        let single = vec![features[0].clone()];
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 1, 10.0, 0.1);
        let model = fit_rlmkl(&single, &labels, &config).unwrap();

        // plain SVM on the same whitened kernel
        let z = model.whiteners[0].apply(&single[0].view()).unwrap();
        let k = kernel_matrix(&KernelSpec::Linear, &z.view(), &z.view()).unwrap();
        let sol = solve_svc_dual(&k.view(), &labels, 10.0).unwrap();
        let coef: Vec<f64> = sol.alpha.iter().zip(&labels).map(|(a, y)| a * y).collect();
        let direct = single_kernel_decision(
            &KernelSpec::Linear,
            &z.view(),
            &coef,
            sol.bias,
            &z.view(),
        )
        .unwrap();
        let fused = model.predict_batch(&single).unwrap();
        for (a, b) in fused.iter().zip(direct.iter()) {
            assert!((a - b).abs() < 1e-6, "P=1 mismatch: {a} vs {b}");
        }
        // training accuracy is perfect on separated blobs
        for (f, y) in fused.iter().zip(&labels) {
            assert!(f.signum() == *y);
        }
    }

    #[test]
    fn gating_prefers_signal_modality() {
        let (features, labels) = blob_features(40, 6);
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 2, 10.0, 0.1);
        let model = fit_rlmkl(&features, &labels, &config).unwrap();
        let mean_eta_signal = model.support_eta.column(0).mean().unwrap();
        assert!(
            mean_eta_signal > 0.5,
            "gate should favor the informative modality, got {mean_eta_signal}"
        );
    }

    #[test]
    fn objective_trace_is_monotone_under_line_search() {
        let (features, labels) = blob_features(30, 7);
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 2, 5.0, 0.1);
        let model = fit_rlmkl(&features, &labels, &config).unwrap();
        for w in model.objective_trace.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0),
                "accepted step increased the objective: {} -> {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn dual_constraints_hold_on_trained_model() {
        let (features, labels) = blob_features(20, 8);
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Gaussian { s: 10.0 }, 2, 3.0, 0.1);
        let model = fit_rlmkl(&features, &labels, &config).unwrap();
        match &model.duals {
            DualVars::Svc { alpha } => {
                let eq: f64 = alpha.iter().zip(&labels).map(|(a, y)| a * y).sum();
                assert!(eq.abs() < 1e-6);
                assert!(alpha.iter().all(|&a| (-1e-9..=3.0 + 1e-9).contains(&a)));
            }
            _ => panic!("expected SVC duals"),
        }
    }

    #[test]
    fn regression_on_two_modalities() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let n = 30;
        let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64 * 4.0).collect();
        let m1 = Array2::from_shape_fn((n, 2), |(i, j)| {
            if j == 0 { t[i] } else { rng.gen_range(-0.1..0.1) }
        });
        let m2 = Array2::from_shape_fn((n, 2), |_| rng.gen_range(-1.0..1.0));
        let config = FitConfig::uniform(Task::Regression, KernelSpec::Linear, 2, 10.0, 0.1);
        let model = fit_rlmkl(&[m1.clone(), m2.clone()], &t, &config).unwrap();
        let preds = model.predict_batch(&[m1, m2]).unwrap();
        let err: f64 =
            preds.iter().zip(&t).map(|(p, y)| (p - y).abs()).sum::<f64>() / n as f64;
        assert!(err < 0.5, "train MAE {err}");
        // equality constraint
        match &model.duals {
            DualVars::Svr { alpha_pos, alpha_neg } => {
                let eq: f64 = alpha_pos.iter().zip(alpha_neg).map(|(p, m)| p - m).sum();
                assert!(eq.abs() < 1e-6);
            }
            _ => panic!("expected SVR duals"),
        }
    }

    #[test]
    fn ovo_three_classes() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(10);
        let n = 60;
        let labels: Vec<i64> = (0..n).map(|i| (i % 3) as i64).collect();
        let centers = [[0.0, 0.0], [6.0, 0.0], [0.0, 6.0]];
        let m1 = Array2::from_shape_fn((n, 2), |(i, j)| {
            centers[labels[i] as usize][j] + rng.gen_range(-0.6..0.6)
        });
        let m2 = Array2::from_shape_fn((n, 2), |(i, j)| {
            centers[labels[i] as usize][1 - j] * 0.5 + rng.gen_range(-0.8..0.8)
        });
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 2, 10.0, 0.1);
        let model = ovo_fit(&[m1.clone(), m2.clone()], &labels, &config).unwrap();
        assert_eq!(model.machines.len(), 3);
        let mut hits = 0usize;
        for i in 0..n {
            let rows: Vec<&[f64]> = vec![
                m1.row(i).to_slice().unwrap(),
                m2.row(i).to_slice().unwrap(),
            ];
            if ovo_predict(&model, &rows).unwrap() == labels[i] {
                hits += 1;
            }
        }
        assert!(hits as f64 / n as f64 >= 0.95, "ovo accuracy {hits}/{n}");
    }

    #[test]
    fn ovo_two_classes_matches_binary() {
        let (features, labels) = blob_features(20, 11);
        let int_labels: Vec<i64> = labels.iter().map(|&y| if y > 0.0 { 1 } else { 0 }).collect();
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 2, 10.0, 0.1);
        let model = ovo_fit(&features, &int_labels, &config).unwrap();
        assert_eq!(model.machines.len(), 1);
        for i in 0..20 {
            let rows: Vec<&[f64]> = features
                .iter()
                .map(|m| m.row(i).to_slice().unwrap())
                .collect();
            let pred = ovo_predict(&model, &rows).unwrap();
            assert_eq!(pred, int_labels[i]);
        }
    }

    #[test]
    fn single_class_rejected() {
        let (features, _) = blob_features(10, 12);
        let labels = vec![1.0; 10];
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 2, 1.0, 0.1);
        assert!(matches!(
            fit_rlmkl(&features, &labels, &config),
            Err(Error::DegenerateLabels(_))
        ));
    }

    #[test]
    fn deterministic_fit() {
        let (features, labels) = blob_features(26, 13);
        let config = FitConfig::uniform(Task::Binary, KernelSpec::Linear, 2, 10.0, 0.1);
        let a = fit_rlmkl(&features, &labels, &config).unwrap();
        let b = fit_rlmkl(&features, &labels, &config).unwrap();
        assert_eq!(a.coef, b.coef);
        assert_eq!(a.bias, b.bias);
        assert_eq!(a.objective_trace, b.objective_trace);
        assert_eq!(a.support_eta, b.support_eta);
    }
}
