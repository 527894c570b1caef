//! Face descriptor: Riesz-filtered volume LBP over an overlapped block grid.
//!
//! Each 128x128 face crop is tiled into overlapping blocks; every block is
//! band-pass filtered with a 5-scale/8-orientation log-Gabor bank combined
//! with the five Riesz components, the resulting response stacks are read
//! as small volumes, and LBP histograms on the three orthogonal planes of
//! each volume are concatenated into one regional vector per block
//! (5 components x 3 planes x 59 uniform bins = 885 values).
//!
//! Filtering happens per block after cropping with the FFT's periodic
//! boundary, so block features are self-contained.

pub mod fft2;
pub mod gabor;
pub mod lbp_top;
pub mod riesz;

pub use gabor::{build_log_gabor_bank, LogGaborBank, LogGaborParams};
pub use lbp_top::{lbp_top, LbpBinning};
pub use riesz::{riesz_transfer, riesz_volumes, RieszEngine, RieszVolumeSet};

use crate::error::{Error, Result};
use crate::geom::{block_grid, Rect};
use crate::raster::gray_to_array;
use image::GrayImage;
use ndarray::{s, Array2};
use rayon::prelude::*;

/// Side length all face and body crops are resized to before gridding.
pub const CANONICAL_SIDE: u32 = 128;

#[derive(Debug, Clone, Copy)]
pub struct FaceParams {
    pub grid_m: u32,
    pub grid_n: u32,
    pub overlap: f64,
    pub gabor: LogGaborParams,
}

impl Default for FaceParams {
    fn default() -> Self {
        FaceParams {
            grid_m: 16,
            grid_n: 16,
            overlap: 0.7,
            gabor: LogGaborParams::default(),
        }
    }
}

/// Reusable face descriptor extractor: owns the block grid, the filter
/// bank and the FFT plans for the block size. Immutable after
/// construction and safe to share across threads.
pub struct FaceExtractor {
    grid: Vec<Rect>,
    engine: RieszEngine,
    binning: LbpBinning,
}

impl FaceExtractor {
    pub fn new(params: &FaceParams) -> Result<Self> {
        let grid = block_grid(CANONICAL_SIDE, params.grid_m, params.grid_n, params.overlap)?;
        let block = grid[0].w;
        if grid.iter().any(|r| r.w != block || r.h != block) {
            return Err(Error::InvalidArgument(
                "face grid must produce square uniform blocks".into(),
            ));
        }
        let bank = build_log_gabor_bank(block as usize, params.gabor)?;
        Ok(FaceExtractor {
            grid,
            engine: RieszEngine::new(&bank)?,
            binning: LbpBinning::Uniform,
        })
    }

    /// Length of one regional vector.
    pub fn region_dim(&self) -> usize {
        riesz::COMPONENTS * 3 * self.binning.bins()
    }

    pub fn block_count(&self) -> usize {
        self.grid.len()
    }

    /// Computes one regional vector per block of a 128x128 grayscale crop.
    pub fn descriptor(&self, face: &GrayImage) -> Result<Array2<f64>> {
        let (w, h) = face.dimensions();
        if (w, h) != (CANONICAL_SIDE, CANONICAL_SIDE) {
            return Err(Error::DimensionMismatch {
                expected: CANONICAL_SIDE as usize,
                got: w.max(h) as usize,
            });
        }
        let pixels = gray_to_array(face);
        let rows: Vec<Vec<f64>> = self
            .grid
            .par_iter()
            .map(|rect| {
                let block = pixels.slice(s![
                    rect.y as usize..rect.y_end() as usize,
                    rect.x as usize..rect.x_end() as usize
                ]);
                let volumes = self.engine.volumes(&block)?;
                let mut feature = Vec::with_capacity(self.region_dim());
                for vol in &volumes.volumes {
                    feature.extend(lbp_top(&vol.view(), 8, 1.0, self.binning)?);
                }
                Ok(feature)
            })
            .collect::<Result<_>>()?;
        let dim = self.region_dim();
        let mut out = Array2::zeros((rows.len(), dim));
        for (i, row) in rows.into_iter().enumerate() {
            out.row_mut(i).assign(&ndarray::ArrayView1::from(&row));
        }
        Ok(out)
    }
}

/// One-shot face descriptor (builds the extractor internally).
pub fn face_descriptor(face: &GrayImage, params: &FaceParams) -> Result<Array2<f64>> {
    FaceExtractor::new(params)?.descriptor(face)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn random_face(seed: u64) -> GrayImage {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        GrayImage::from_fn(128, 128, |_, _| image::Luma([rng.gen::<u8>()]))
    }

    #[test]
    fn default_geometry() {
        let ex = FaceExtractor::new(&FaceParams::default()).unwrap();
        assert_eq!(ex.block_count(), 256);
        assert_eq!(ex.region_dim(), 885);
    }

    #[test]
    fn descriptor_shape_and_determinism() {
        let params = FaceParams {
            grid_m: 3,
            grid_n: 3,
            overlap: 0.5,
            ..FaceParams::default()
        };
        let ex = FaceExtractor::new(&params).unwrap();
        let face = random_face(3);
        let a = ex.descriptor(&face).unwrap();
        let b = ex.descriptor(&face).unwrap();
        assert_eq!(a.dim(), (9, 885));
        assert_eq!(a, b);
        assert!(a.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn intensity_offset_invariance() {
        // LBP codes survive a constant shift; the Riesz volumes only pick
        // up fp noise at DC, far from any histogram tie on random data.
        let params = FaceParams {
            grid_m: 2,
            grid_n: 2,
            overlap: 0.3,
            ..FaceParams::default()
        };
        let ex = FaceExtractor::new(&params).unwrap();
        let face = random_face(17);
        let shifted = GrayImage::from_fn(128, 128, |x, y| {
            image::Luma([face.get_pixel(x, y).0[0].saturating_add(30).min(225)])
        });
        // keep the shift exact: rebuild so no pixel saturates
        let face_low = GrayImage::from_fn(128, 128, |x, y| {
            image::Luma([face.get_pixel(x, y).0[0] % 200])
        });
        let face_high = GrayImage::from_fn(128, 128, |x, y| {
            image::Luma([face_low.get_pixel(x, y).0[0] + 30])
        });
        let _ = shifted;
        let a = ex.descriptor(&face_low).unwrap();
        let b = ex.descriptor(&face_high).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_wrong_size() {
        let ex = FaceExtractor::new(&FaceParams {
            grid_m: 2,
            grid_n: 2,
            overlap: 0.3,
            ..FaceParams::default()
        })
        .unwrap();
        let img = GrayImage::new(64, 64);
        assert!(ex.descriptor(&img).is_err());
    }
}
