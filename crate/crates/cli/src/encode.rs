//! Encoding stage: aggregate each image's regional descriptors into one
//! vector with the trained codebook.

use gaffe_core::container::{FeatureReader, FeatureWriter};
use gaffe_core::descriptor::{DescriptorSet, Modality};
use gaffe_core::encoding::{bow_encode, fisher_encode, vlad_encode, Codebook, Encoder};
use gaffe_core::error::{Error, Result};
use ndarray::Array2;
use std::path::Path;

/// Encodes every image in a feature file; `None` marks images with no
/// detections for this modality.
pub fn encode_file(
    features_path: &Path,
    codebook: &Codebook,
    encoder: Encoder,
) -> Result<Vec<Option<Vec<f64>>>> {
    let mut reader = FeatureReader::open(features_path)?;
    if reader.modality != codebook.modality {
        return Err(Error::InvalidArgument(format!(
            "feature file is {}, codebook is {}",
            reader.modality.name(),
            codebook.modality.name()
        )));
    }
    let mut out = Vec::with_capacity(reader.image_count as usize);
    while let Some(set) = reader.next_set()? {
        if set.is_empty() {
            out.push(None);
            continue;
        }
        let encoded = match encoder {
            Encoder::Fisher => fisher_encode(&codebook.gmm, &codebook.pca, &set)?,
            Encoder::Bow => bow_encode(&codebook.kmeans, &codebook.pca, &set)?,
            Encoder::Vlad => vlad_encode(&codebook.kmeans, &codebook.pca, &set)?,
        };
        out.push(Some(encoded.vector));
    }
    Ok(out)
}

/// Persists encoded vectors in the shared container format, one row per
/// image (zero rows marking a missing modality).
pub fn write_encoded(
    path: &Path,
    modality: Modality,
    encoded: &[Option<Vec<f64>>],
) -> Result<()> {
    let dim = encoded
        .iter()
        .flatten()
        .map(|v| v.len())
        .next()
        .ok_or_else(|| Error::NoDetections)?;
    let mut writer = FeatureWriter::create(path, modality, encoded.len() as u32, dim as u32)?;
    for entry in encoded {
        let set = match entry {
            Some(vector) => {
                let row: Vec<f32> = vector.iter().map(|&v| v as f32).collect();
                DescriptorSet::new(
                    modality,
                    Array2::from_shape_vec((1, dim), row).map_err(|e| Error::Format(e.to_string()))?,
                    vec![1],
                )?
            }
            None => DescriptorSet::empty(modality, dim),
        };
        writer.write_set(&set)?;
    }
    writer.finish()
}

/// Loads encoded vectors back from a container written by `write_encoded`.
pub fn read_encoded(path: &Path) -> Result<(Modality, Vec<Option<Vec<f64>>>)> {
    let reader = FeatureReader::open(path)?;
    let modality = reader.modality;
    let sets = reader.read_all()?;
    let mut out = Vec::with_capacity(sets.len());
    for set in sets {
        if set.is_empty() {
            out.push(None);
        } else {
            out.push(Some(set.regions.row(0).iter().map(|&v| v as f64).collect()));
        }
    }
    Ok((modality, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocab::run_codebook;
    use gaffe_core::container::write_feature_file;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn encode_round_trip_with_missing_image() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.feat");
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let mut sets: Vec<DescriptorSet> = (0..8)
            .map(|_| {
                let regions = Array2::from_shape_fn((25, 5), |_| rng.gen_range(-1.0f32..1.0));
                DescriptorSet::new(Modality::Face, regions, vec![25]).unwrap()
            })
            .collect();
        sets[3] = DescriptorSet::empty(Modality::Face, 5);
        write_feature_file(&path, Modality::Face, 5, &sets).unwrap();

        let cb = run_codebook(&path, 2, 3, 4, 10_000, None).unwrap();
        for encoder in [Encoder::Fisher, Encoder::Bow, Encoder::Vlad] {
            let encoded = encode_file(&path, &cb, encoder).unwrap();
            assert_eq!(encoded.len(), 8);
            assert!(encoded[3].is_none());
            let dim = encoded[0].as_ref().unwrap().len();
            assert_eq!(dim, encoder.dim(3, 2));

            let out = dir.path().join(format!("{}.enc", encoder.name()));
            write_encoded(&out, Modality::Face, &encoded).unwrap();
            let (modality, back) = read_encoded(&out).unwrap();
            assert_eq!(modality, Modality::Face);
            assert_eq!(back.len(), 8);
            assert!(back[3].is_none());
            // f32 persistence round-trip
            for (orig, loaded) in encoded.iter().zip(&back) {
                if let (Some(a), Some(b)) = (orig, loaded) {
                    for (x, y) in a.iter().zip(b) {
                        assert!((x - y).abs() <= (*x as f32).abs() as f64 * 1e-6 + 1e-9);
                    }
                }
            }
        }
    }
}
