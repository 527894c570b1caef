//! Seeded k-means (k-means++ init, Lloyd iterations). Used for the BoW and
//! VLAD dictionaries and to initialize the GMM.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_ITERS: usize = 100;

#[derive(Debug, Clone)]
pub struct KmeansCodebook {
    /// `K x D` centroids.
    pub centroids: Array2<f64>,
}

impl KmeansCodebook {
    pub fn k(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }
}

pub(crate) fn squared_distance(a: &ArrayView1<f64>, b: &ArrayView1<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Index of the nearest centroid (lowest index wins ties).
pub fn nearest(centroids: &ArrayView2<f64>, row: &ArrayView1<f64>) -> usize {
    let mut best = 0usize;
    let mut best_d = f64::INFINITY;
    for (k, c) in centroids.rows().into_iter().enumerate() {
        let d = squared_distance(&c, row);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// k-means++ seeding: first center uniform, then rows sampled with
/// probability proportional to their squared distance to the nearest
/// chosen center.
pub(crate) fn kmeanspp_centers(rows: &ArrayView2<f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = rows.nrows();
    let d = rows.ncols();
    let mut centers = Array2::zeros((k, d));
    let first = rng.gen_range(0..n);
    centers.row_mut(0).assign(&rows.row(first));
    let mut dist: Vec<f64> = (0..n)
        .map(|i| squared_distance(&rows.row(i), &centers.row(0)))
        .collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let idx = if total > 0.0 {
            WeightedIndex::new(dist.iter().map(|&d| d.max(0.0)))
                .map(|w| w.sample(rng))
                .unwrap_or_else(|_| rng.gen_range(0..n))
        } else {
            rng.gen_range(0..n)
        };
        centers.row_mut(c).assign(&rows.row(idx));
        for (i, slot) in dist.iter_mut().enumerate() {
            let d = squared_distance(&rows.row(i), &centers.row(c));
            if d < *slot {
                *slot = d;
            }
        }
    }
    centers
}

/// Fits `k` centroids to the rows.
pub fn fit_kmeans(rows: &ArrayView2<f64>, k: usize, seed: u64) -> Result<KmeansCodebook> {
    let n = rows.nrows();
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if n < k {
        return Err(Error::TooFewSamples { need: k, have: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = kmeanspp_centers(rows, k, &mut rng);
    let mut assign = vec![usize::MAX; n];
    for _ in 0..MAX_ITERS {
        let mut changed = false;
        for i in 0..n {
            let a = nearest(&centroids.view(), &rows.row(i));
            if a != assign[i] {
                assign[i] = a;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = Array2::<f64>::zeros((k, rows.ncols()));
        let mut counts = vec![0usize; k];
        for i in 0..n {
            let mut row = sums.row_mut(assign[i]);
            row += &rows.row(i);
            counts[assign[i]] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                let mut row = sums.row_mut(c);
                row /= counts[c] as f64;
                centroids.row_mut(c).assign(&sums.row(c));
            }
            // empty clusters keep their previous centroid
        }
    }
    Ok(KmeansCodebook { centroids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::Rng;

    fn two_blobs(seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((80, 2), |(i, _)| {
            let center = if i < 40 { 0.0 } else { 10.0 };
            center + rng.gen_range(-0.5..0.5)
        })
    }

    #[test]
    fn recovers_separated_blobs() {
        let data = two_blobs(1);
        let km = fit_kmeans(&data.view(), 2, 7).unwrap();
        let mut centers: Vec<f64> = km.centroids.column(0).to_vec();
        centers.sort_by(f64::total_cmp);
        assert!((centers[0] - 0.0).abs() < 0.5);
        assert!((centers[1] - 10.0).abs() < 0.5);
    }

    #[test]
    fn deterministic_for_seed() {
        let data = two_blobs(2);
        let a = fit_kmeans(&data.view(), 3, 11).unwrap();
        let b = fit_kmeans(&data.view(), 3, 11).unwrap();
        assert_eq!(a.centroids, b.centroids);
    }

    #[test]
    fn too_few_rows_rejected() {
        let data = Array2::<f64>::zeros((2, 3));
        assert!(fit_kmeans(&data.view(), 5, 0).is_err());
    }
}
