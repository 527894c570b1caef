//! Feature extraction stage: manifest in, binary feature container out.

use crate::config::PipelineConfig;
use gaffe_core::body::{BodyExtractor, BodyParams};
use gaffe_core::container::FeatureWriter;
use gaffe_core::descriptor::{DescriptorSet, Modality};
use gaffe_core::error::{Error, Result};
use gaffe_core::face::{FaceExtractor, FaceParams, CANONICAL_SIDE};
use gaffe_core::geom::Rect;
use gaffe_core::manifest::GroupImageRecord;
use gaffe_core::raster::{crop_to_canonical, to_gray};
use gaffe_core::scene::{SceneExtractor, SceneParams};
use ndarray::Array2;
use rayon::prelude::*;
use std::path::Path;

pub struct ExtractOutcome {
    pub written: usize,
    /// Images that produced no regions because of a read/decode failure.
    pub failed: Vec<String>,
    /// Images with zero detections for this modality (not an error).
    pub empty: usize,
}

enum AnyExtractor {
    Face(FaceExtractor),
    Body(BodyExtractor),
    Scene(SceneExtractor),
}

impl AnyExtractor {
    fn region_dim(&self) -> usize {
        match self {
            AnyExtractor::Face(e) => e.region_dim(),
            AnyExtractor::Body(e) => e.region_dim(),
            AnyExtractor::Scene(e) => e.region_dim(),
        }
    }
}

fn build_extractor(modality: Modality, config: &PipelineConfig) -> Result<AnyExtractor> {
    Ok(match modality {
        Modality::Face => AnyExtractor::Face(FaceExtractor::new(&FaceParams {
            grid_m: config.face_grid,
            grid_n: config.face_grid,
            overlap: config.face_overlap,
            ..FaceParams::default()
        })?),
        Modality::Body => AnyExtractor::Body(BodyExtractor::new(&BodyParams {
            grid_m: config.body_grid,
            grid_n: config.body_grid,
            overlap: config.body_overlap,
            ..BodyParams::default()
        })?),
        Modality::Scene => AnyExtractor::Scene(SceneExtractor::new(SceneParams {
            superpixels: config.scene_superpixels,
            ratio: config.scene_ratio,
            sift_stride: config.scene_sift_stride,
        })),
    })
}

fn crops_descriptor(
    extractor: &AnyExtractor,
    boxes: &[Rect],
    gray: &image::GrayImage,
) -> Result<DescriptorSet> {
    let modality = match extractor {
        AnyExtractor::Face(_) => Modality::Face,
        _ => Modality::Body,
    };
    let dim = extractor.region_dim();
    if boxes.is_empty() {
        return Ok(DescriptorSet::empty(modality, dim));
    }
    let mut rows: Vec<Array2<f64>> = Vec::with_capacity(boxes.len());
    for &rect in boxes {
        let crop = crop_to_canonical(gray, rect, CANONICAL_SIDE)?;
        let d = match extractor {
            AnyExtractor::Face(e) => e.descriptor(&crop)?,
            AnyExtractor::Body(e) => e.descriptor(&crop)?,
            AnyExtractor::Scene(_) => unreachable!("scene has no crops"),
        };
        rows.push(d);
    }
    let total: usize = rows.iter().map(|r| r.nrows()).sum();
    let mut regions = Array2::<f32>::zeros((total, dim));
    let mut counts = Vec::with_capacity(rows.len());
    let mut offset = 0;
    for block in rows {
        counts.push(block.nrows() as u32);
        for (i, row) in block.rows().into_iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                regions[[offset + i, j]] = v as f32;
            }
        }
        offset += block.nrows();
    }
    DescriptorSet::new(modality, regions, counts)
}

fn extract_one(
    extractor: &AnyExtractor,
    modality: Modality,
    record: &GroupImageRecord,
) -> Result<DescriptorSet> {
    let dynamic = image::open(&record.image_path).map_err(|e| Error::Image {
        path: record.image_path.clone(),
        message: e.to_string(),
    })?;
    let rgb = dynamic.to_rgb8();
    match modality {
        Modality::Scene => {
            let AnyExtractor::Scene(e) = extractor else {
                unreachable!()
            };
            let d = e.extract(&rgb)?;
            let regions = d.mapv(|v| v as f32);
            let counts = if regions.nrows() > 0 {
                vec![regions.nrows() as u32]
            } else {
                Vec::new()
            };
            DescriptorSet::new(Modality::Scene, regions, counts)
        }
        Modality::Face => {
            let gray = to_gray(&rgb);
            crops_descriptor(extractor, &record.face_boxes, &gray)
        }
        Modality::Body => {
            let gray = to_gray(&rgb);
            crops_descriptor(extractor, &record.body_boxes, &gray)
        }
    }
}

/// Extracts one modality for every record, streaming descriptor sets to
/// the container in manifest order. An unreadable image is reported,
/// contributes an empty entry, and the run continues.
pub fn run_extract(
    records: &[GroupImageRecord],
    modality: Modality,
    config: &PipelineConfig,
    out_path: &Path,
) -> Result<ExtractOutcome> {
    let extractor = build_extractor(modality, config)?;
    let dim = extractor.region_dim();
    let mut writer = FeatureWriter::create(out_path, modality, records.len() as u32, dim as u32)?;

    let mut failed = Vec::new();
    let mut empty = 0usize;
    let chunk_size = 16usize;
    let mut done = 0usize;
    for chunk in records.chunks(chunk_size) {
        let results: Vec<Result<DescriptorSet>> = chunk
            .par_iter()
            .map(|record| extract_one(&extractor, modality, record))
            .collect();
        for (record, result) in chunk.iter().zip(results) {
            match result {
                Ok(set) => {
                    if set.is_empty() {
                        empty += 1;
                    }
                    writer.write_set(&set)?;
                }
                Err(err) => {
                    eprintln!(
                        "warning: {} ({}): {err}",
                        record.image_path.display(),
                        modality.name()
                    );
                    failed.push(record.image_path.display().to_string());
                    writer.write_set(&DescriptorSet::empty(modality, dim))?;
                }
            }
        }
        done += chunk.len();
        if done % 64 == 0 || done == records.len() {
            eprintln!("  {} {}/{}", modality.name(), done, records.len());
        }
    }
    writer.finish()?;
    Ok(ExtractOutcome {
        written: records.len(),
        failed,
        empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_synthetic, SynthParams};
    use gaffe_core::container::FeatureReader;
    use gaffe_core::parse_manifest;

    fn small_config() -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.face_grid = 4;
        c.body_grid = 4;
        c.scene_superpixels = 16;
        c
    }

    #[test]
    fn extracts_all_modalities_deterministically() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = gen_synthetic(
            dir.path(),
            &SynthParams {
                n: 20,
                seed: 5,
                classes: None,
            },
        )
        .unwrap();
        let records = parse_manifest(&manifest).unwrap();
        let config = small_config();

        for modality in [Modality::Face, Modality::Body, Modality::Scene] {
            let out_a = dir.path().join(format!("{}_a.feat", modality.name()));
            let out_b = dir.path().join(format!("{}_b.feat", modality.name()));
            let outcome = run_extract(&records, modality, &config, &out_a).unwrap();
            assert_eq!(outcome.written, 20);
            assert!(outcome.failed.is_empty());
            if modality == Modality::Scene {
                assert_eq!(outcome.empty, 0, "scene is never empty");
            }
            run_extract(&records, modality, &config, &out_b).unwrap();
            assert_eq!(
                std::fs::read(&out_a).unwrap(),
                std::fs::read(&out_b).unwrap(),
                "{} extraction not byte-stable",
                modality.name()
            );
            let reader = FeatureReader::open(&out_a).unwrap();
            assert_eq!(reader.image_count, 20);
            let expected_dim = match modality {
                Modality::Face => 885,
                Modality::Body => 1106,
                Modality::Scene => 128,
            };
            assert_eq!(reader.region_dim as usize, expected_dim);
        }
    }

    #[test]
    fn unreadable_image_is_partial_failure() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = gen_synthetic(
            dir.path(),
            &SynthParams {
                n: 20,
                seed: 6,
                classes: None,
            },
        )
        .unwrap();
        let mut records = parse_manifest(&manifest).unwrap();
        // corrupt one image after header validation
        std::fs::write(&records[3].image_path, b"not a png").unwrap();
        let out = dir.path().join("scene.feat");
        let outcome = run_extract(&records, Modality::Scene, &small_config(), &out).unwrap();
        assert_eq!(outcome.failed.len(), 1);
        // container still has all rows
        let sets = FeatureReader::open(&out).unwrap().read_all().unwrap();
        assert_eq!(sets.len(), 20);
        assert!(sets[3].is_empty());
        records.truncate(0);
    }
}
