//! Diagonal-covariance Gaussian mixture fitted with EM.
//!
//! Initialization is seeded k-means++; the E-step runs in log space; each
//! M-step floors the variances at 1e-6. Training stops when the relative
//! log-likelihood gain drops below 1e-5 or after 200 iterations. The
//! per-iteration total log-likelihood trace is kept on the model so
//! monotonicity can be audited.

use crate::encoding::kmeans::kmeanspp_centers;
use crate::error::{Error, Result};
use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub const VARIANCE_FLOOR: f64 = 1e-6;
const MAX_ITERS: usize = 200;
const REL_TOL: f64 = 1e-5;
const CHUNK: usize = 2048;

#[derive(Debug, Clone)]
pub struct GmmCodebook {
    /// Mixture weights, strictly positive, summing to 1.
    pub weights: Array1<f64>,
    /// `K x D` component means.
    pub means: Array2<f64>,
    /// `K x D` diagonal variances, floored at [`VARIANCE_FLOOR`].
    pub variances: Array2<f64>,
    /// Total log-likelihood after every EM iteration.
    pub log_likelihood_trace: Vec<f64>,
}

impl GmmCodebook {
    pub fn k(&self) -> usize {
        self.means.nrows()
    }

    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// Per-component log-density constants and inverse variances, reused
    /// across E-step and encoding.
    fn log_consts(&self) -> (Array1<f64>, Array2<f64>) {
        let k = self.k();
        let d = self.dim();
        let mut consts = Array1::zeros(k);
        let mut inv_var = Array2::zeros((k, d));
        for c in 0..k {
            let mut acc = self.weights[c].ln();
            for j in 0..d {
                let var = self.variances[[c, j]];
                acc -= 0.5 * (2.0 * std::f64::consts::PI * var).ln();
                inv_var[[c, j]] = 1.0 / var;
            }
            consts[c] = acc;
        }
        (consts, inv_var)
    }
}

struct SuffStats {
    log_likelihood: f64,
    weight_sum: Array1<f64>,
    mean_sum: Array2<f64>,
    sq_sum: Array2<f64>,
}

/// Fits a `k`-component mixture to the rows.
pub fn fit_gmm(rows: &ArrayView2<f64>, k: usize, seed: u64) -> Result<GmmCodebook> {
    let (n, d) = rows.dim();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if n < 10 * k {
        return Err(Error::TooFewSamples { need: 10 * k, have: n });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means = kmeanspp_centers(rows, k, &mut rng);
    let global_mean = rows.mean_axis(Axis(0)).expect("non-empty");
    let mut global_var = Array1::zeros(d);
    for row in rows.rows() {
        for j in 0..d {
            let diff = row[j] - global_mean[j];
            global_var[j] += diff * diff;
        }
    }
    global_var /= n as f64;
    global_var.mapv_inplace(|v| v.max(VARIANCE_FLOOR));

    let mut model = GmmCodebook {
        weights: Array1::from_elem(k, 1.0 / k as f64),
        means,
        variances: Array2::from_shape_fn((k, d), |(_, j)| global_var[j]),
        log_likelihood_trace: Vec::new(),
    };

    let mut prev_ll = f64::NEG_INFINITY;
    for _ in 0..MAX_ITERS {
        let stats = e_step(rows, &model);
        let ll = stats.log_likelihood;
        model.log_likelihood_trace.push(ll);
        m_step(&mut model, &stats, n);
        if prev_ll.is_finite() {
            let gain = (ll - prev_ll) / prev_ll.abs().max(1e-10);
            if gain < REL_TOL {
                break;
            }
        }
        prev_ll = ll;
    }
    Ok(model)
}

/// Deterministic parallel E-step: rows are processed in fixed chunks and
/// the partial sufficient statistics merged in chunk order, so results do
/// not depend on the thread count.
fn e_step(rows: &ArrayView2<f64>, model: &GmmCodebook) -> SuffStats {
    let k = model.k();
    let d = model.dim();
    let (consts, inv_var) = model.log_consts();

    let partials: Vec<SuffStats> = rows
        .axis_chunks_iter(Axis(0), CHUNK)
        .into_par_iter()
        .map(|chunk| {
            let mut stats = SuffStats {
                log_likelihood: 0.0,
                weight_sum: Array1::zeros(k),
                mean_sum: Array2::zeros((k, d)),
                sq_sum: Array2::zeros((k, d)),
            };
            let mut logp = vec![0f64; k];
            for row in chunk.rows() {
                let lse = log_posteriors(model, &consts, &inv_var, &row, &mut logp);
                stats.log_likelihood += lse;
                for c in 0..k {
                    let gamma = (logp[c] - lse).exp();
                    if gamma == 0.0 {
                        continue;
                    }
                    stats.weight_sum[c] += gamma;
                    for j in 0..d {
                        let x = row[j];
                        stats.mean_sum[[c, j]] += gamma * x;
                        stats.sq_sum[[c, j]] += gamma * x * x;
                    }
                }
            }
            stats
        })
        .collect();

    let mut total = SuffStats {
        log_likelihood: 0.0,
        weight_sum: Array1::zeros(k),
        mean_sum: Array2::zeros((k, d)),
        sq_sum: Array2::zeros((k, d)),
    };
    for p in partials {
        total.log_likelihood += p.log_likelihood;
        total.weight_sum += &p.weight_sum;
        total.mean_sum += &p.mean_sum;
        total.sq_sum += &p.sq_sum;
    }
    total
}

/// Fills `logp[c] = log(w_c N(row; mu_c, sigma_c))`, returns logsumexp.
fn log_posteriors(
    model: &GmmCodebook,
    consts: &Array1<f64>,
    inv_var: &Array2<f64>,
    row: &ArrayView1<f64>,
    logp: &mut [f64],
) -> f64 {
    let k = model.k();
    let d = model.dim();
    for c in 0..k {
        let mut quad = 0.0;
        let mu = model.means.row(c);
        let iv = inv_var.row(c);
        for j in 0..d {
            let diff = row[j] - mu[j];
            quad += diff * diff * iv[j];
        }
        logp[c] = consts[c] - 0.5 * quad;
    }
    let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logp.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

fn m_step(model: &mut GmmCodebook, stats: &SuffStats, n: usize) {
    let k = model.k();
    let d = model.dim();
    let mut weight_total = 0.0;
    for c in 0..k {
        let nk = stats.weight_sum[c];
        if nk > 1e-10 {
            for j in 0..d {
                let mean = stats.mean_sum[[c, j]] / nk;
                let var = stats.sq_sum[[c, j]] / nk - mean * mean;
                model.means[[c, j]] = mean;
                model.variances[[c, j]] = var.max(VARIANCE_FLOOR);
            }
        }
        let w = (nk / n as f64).max(1e-12);
        model.weights[c] = w;
        weight_total += w;
    }
    model.weights.mapv_inplace(|w| w / weight_total);
}

/// Soft assignment weights of one region to each component, computed in
/// log space; always sums to 1.
pub fn posteriors(model: &GmmCodebook, region: &ArrayView1<f64>) -> Result<Array1<f64>> {
    if region.len() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            got: region.len(),
        });
    }
    let (consts, inv_var) = model.log_consts();
    let mut logp = vec![0f64; model.k()];
    let lse = log_posteriors(model, &consts, &inv_var, region, &mut logp);
    Ok(Array1::from_iter(logp.iter().map(|&v| (v - lse).exp())))
}

/// Batched posteriors with precomputed constants; one row per region.
pub(crate) fn posterior_matrix(model: &GmmCodebook, regions: &ArrayView2<f64>) -> Array2<f64> {
    let (consts, inv_var) = model.log_consts();
    let mut out = Array2::zeros((regions.nrows(), model.k()));
    let mut logp = vec![0f64; model.k()];
    for (i, row) in regions.rows().into_iter().enumerate() {
        let lse = log_posteriors(model, &consts, &inv_var, &row, &mut logp);
        for (c, &v) in logp.iter().enumerate() {
            out[[i, c]] = (v - lse).exp();
        }
    }
    out
}
