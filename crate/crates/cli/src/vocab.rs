//! Vocabulary training: pool regional features from training images
//! (seeded reservoir subsample), fit PCA, then the GMM and the k-means
//! dictionary on the projected rows.

use gaffe_core::container::FeatureReader;
use gaffe_core::encoding::{fit_gmm, fit_kmeans, fit_pca, transform_pca, Codebook};
use gaffe_core::error::{Error, Result};
use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// Uniform reservoir sample of up to `cap` region rows from the images
/// selected by `train_mask` (`None` pools every image).
pub fn pool_training_rows(
    features_path: &Path,
    train_mask: Option<&[bool]>,
    cap: usize,
    seed: u64,
) -> Result<Array2<f64>> {
    let mut reader = FeatureReader::open(features_path)?;
    let dim = reader.region_dim as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: Vec<f64> = Vec::new();
    let mut pooled = 0usize;
    let mut seen = 0usize;
    let mut image_idx = 0usize;
    while let Some(set) = reader.next_set()? {
        let keep = train_mask.map(|m| m[image_idx]).unwrap_or(true);
        image_idx += 1;
        if !keep {
            continue;
        }
        for row in set.regions.rows() {
            seen += 1;
            if pooled < cap {
                pool.extend(row.iter().map(|&v| v as f64));
                pooled += 1;
            } else {
                let j = rng.gen_range(0..seen);
                if j < cap {
                    for (slot, &v) in pool[j * dim..(j + 1) * dim].iter_mut().zip(row.iter()) {
                        *slot = v as f64;
                    }
                }
            }
        }
    }
    if pooled == 0 {
        return Err(Error::TooFewSamples { need: 1, have: 0 });
    }
    Array2::from_shape_vec((pooled, dim), pool).map_err(|e| Error::Format(e.to_string()))
}

/// Fits the full vocabulary (PCA + GMM + k-means dictionary) for one
/// modality's feature file.
pub fn run_codebook(
    features_path: &Path,
    pca_dim: usize,
    words: usize,
    seed: u64,
    subsample: usize,
    train_mask: Option<&[bool]>,
) -> Result<Codebook> {
    let modality = FeatureReader::open(features_path)?.modality;
    let rows = pool_training_rows(features_path, train_mask, subsample, seed)?;
    let pca = fit_pca(&rows.view(), pca_dim)?;
    let projected = transform_pca(&pca, &rows.view())?;
    let gmm = fit_gmm(&projected.view(), words, seed)?;
    let kmeans = fit_kmeans(&projected.view(), words, seed)?;
    Ok(Codebook {
        modality,
        seed,
        pca,
        gmm,
        kmeans,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use gaffe_core::container::write_feature_file;
    use gaffe_core::descriptor::{DescriptorSet, Modality};

    fn write_random_features(path: &Path, images: usize, rows_each: usize, dim: usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sets: Vec<DescriptorSet> = (0..images)
            .map(|_| {
                let regions =
                    Array2::from_shape_fn((rows_each, dim), |_| rng.gen_range(-1.0f32..1.0));
                DescriptorSet::new(Modality::Scene, regions, vec![rows_each as u32]).unwrap()
            })
            .collect();
        write_feature_file(path, Modality::Scene, dim as u32, &sets).unwrap();
    }

    #[test]
    fn reservoir_respects_cap_and_mask() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.feat");
        write_random_features(&path, 10, 30, 4);
        let all = pool_training_rows(&path, None, 1000, 7).unwrap();
        assert_eq!(all.nrows(), 300);
        let capped = pool_training_rows(&path, None, 50, 7).unwrap();
        assert_eq!(capped.nrows(), 50);
        let mask: Vec<bool> = (0..10).map(|i| i < 3).collect();
        let masked = pool_training_rows(&path, Some(&mask), 1000, 7).unwrap();
        assert_eq!(masked.nrows(), 90);
        // deterministic
        let again = pool_training_rows(&path, None, 50, 7).unwrap();
        assert_eq!(capped, again);
    }

    #[test]
    fn codebook_round_trips_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.feat");
        write_random_features(&path, 10, 50, 6);
        let cb = run_codebook(&path, 3, 4, 9, 10_000, None).unwrap();
        assert_eq!(cb.pca.output_dim(), 3);
        assert_eq!(cb.gmm.k(), 4);
        assert_eq!(cb.kmeans.k(), 4);
        let cb_path = dir.path().join("cb.gacb");
        cb.save(&cb_path).unwrap();
        let back = Codebook::load(&cb_path).unwrap();
        assert_eq!(back.gmm.means, cb.gmm.means);
        assert_eq!(back.seed, 9);
    }

    #[test]
    fn too_many_words_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.feat");
        write_random_features(&path, 2, 20, 4);
        // 40 rows < 10 * 5 words
        assert!(run_codebook(&path, 2, 5, 0, 40, None).is_err());
    }
}
