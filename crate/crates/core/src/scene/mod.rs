//! Scene descriptor: superpixel segmentation of the whole image plus the
//! per-superpixel mean of dense SIFT descriptors.

pub mod lab;
pub mod lsc;
pub mod sift;

pub use lsc::{lsc_segment, lsc_segment_with_ratio, SuperpixelMap};
pub use sift::{dense_sift_field, SiftField};

use crate::error::{Error, Result};
use crate::raster::to_gray;
use image::RgbImage;
use ndarray::Array2;

#[derive(Debug, Clone, Copy)]
pub struct SceneParams {
    /// Requested superpixel count; the result may be smaller after
    /// connectivity enforcement.
    pub superpixels: usize,
    /// Color-versus-spatial balance of the segmentation embedding.
    pub ratio: f64,
    /// SIFT lattice stride; 1 computes every pixel, 2 is the default
    /// 4x-cheaper lattice whose region means are statistically unchanged.
    pub sift_stride: usize,
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams {
            superpixels: 200,
            ratio: lsc::DEFAULT_RATIO,
            sift_stride: 2,
        }
    }
}

/// Mean SIFT descriptor per superpixel; one row per region, 128 columns.
///
/// Region means are taken over the region's lattice members in scanline
/// order. A region that contains no lattice point (possible only for tiny
/// fragments with stride > 1) falls back to averaging per-pixel
/// descriptors over all its member pixels.
pub fn scene_descriptor(
    image: &RgbImage,
    map: &SuperpixelMap,
    stride: usize,
) -> Result<Array2<f64>> {
    let (w, h) = image.dimensions();
    if (map.width(), map.height()) != (w as usize, h as usize) {
        return Err(Error::DimensionMismatch {
            expected: (w as usize) * (h as usize),
            got: map.width() * map.height(),
        });
    }
    let gray = to_gray(image);
    let field = dense_sift_field(&gray, stride)?;

    let dim = sift::DESCRIPTOR_DIM;
    let mut sums = Array2::<f64>::zeros((map.count, dim));
    let mut counts = vec![0u64; map.count];
    for y in (0..h as usize).step_by(stride) {
        for x in (0..w as usize).step_by(stride) {
            let label = map.labels[[y, x]] as usize;
            let row = field.row_of(x, y).expect("lattice point");
            let d = field.descriptors.row(row);
            let mut acc = sums.row_mut(label);
            acc += &d;
            counts[label] += 1;
        }
    }

    // fallback for regions that missed the lattice
    let mut grads: Option<sift::SiftGradients> = None;
    for label in 0..map.count {
        if counts[label] > 0 {
            continue;
        }
        let grads = grads.get_or_insert_with(|| sift::SiftGradients::new(&gray));
        for y in 0..h as usize {
            for x in 0..w as usize {
                if map.labels[[y, x]] as usize == label {
                    let d = sift::sift_at(grads, x, y);
                    let mut acc = sums.row_mut(label);
                    acc += &ndarray::ArrayView1::from(&d[..]);
                    counts[label] += 1;
                }
            }
        }
    }

    for label in 0..map.count {
        if counts[label] > 0 {
            let mut row = sums.row_mut(label);
            row /= counts[label] as f64;
        }
    }
    Ok(sums)
}

/// Reusable scene extractor: segmentation plus region-mean SIFT.
pub struct SceneExtractor {
    pub params: SceneParams,
}

impl SceneExtractor {
    pub fn new(params: SceneParams) -> Self {
        SceneExtractor { params }
    }

    pub fn region_dim(&self) -> usize {
        sift::DESCRIPTOR_DIM
    }

    pub fn extract(&self, image: &RgbImage) -> Result<Array2<f64>> {
        let map = lsc_segment_with_ratio(image, self.params.superpixels, self.params.ratio)?;
        scene_descriptor(image, &map, self.params.sift_stride)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            let v = ((x * 7 + y * 13) % 200) as u8;
            image::Rgb([v, 255 - v, (x % 200) as u8])
        })
    }

    #[test]
    fn rows_match_superpixel_count() {
        let img = textured(64, 48);
        let map = lsc_segment(&img, 8).unwrap();
        let desc = scene_descriptor(&img, &map, 2).unwrap();
        assert_eq!(desc.nrows(), map.count);
        assert_eq!(desc.ncols(), 128);
        assert!(desc.iter().all(|v| v.is_finite()));
        for row in desc.rows() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn constant_image_zero_descriptors() {
        let img = RgbImage::from_pixel(32, 32, image::Rgb([77, 77, 77]));
        let map = lsc_segment(&img, 4).unwrap();
        let desc = scene_descriptor(&img, &map, 1).unwrap();
        assert!(desc.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mean_of_two_pixel_region_is_average() {
        // stride 1: region means must be exact arithmetic means
        let img = textured(24, 24);
        let map = lsc_segment(&img, 4).unwrap();
        let desc = scene_descriptor(&img, &map, 1).unwrap();
        let field = dense_sift_field(&to_gray(&img), 1).unwrap();
        // recompute the mean of region 0 by accumulation
        let mut sum = vec![0f64; 128];
        let mut count = 0u64;
        for y in 0..24 {
            for x in 0..24 {
                if map.labels[[y, x]] == 0 {
                    let row = field.row_of(x, y).unwrap();
                    for (s, v) in sum.iter_mut().zip(field.descriptors.row(row)) {
                        *s += v;
                    }
                    count += 1;
                }
            }
        }
        for (i, s) in sum.iter().enumerate() {
            assert!((desc[[0, i]] - s / count as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn mismatched_map_rejected() {
        let img = textured(32, 32);
        let other = textured(16, 16);
        let map = lsc_segment(&other, 4).unwrap();
        assert!(scene_descriptor(&img, &map, 1).is_err());
    }
}
