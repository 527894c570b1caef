//! Upper-body descriptor: PHOG concatenated with a radius-3 LBP histogram
//! per block, 850 + 256 = 1106 values per regional vector.

pub mod phog;

pub use phog::{phog, PhogParams};

use crate::error::{Error, Result};
use crate::face::CANONICAL_SIDE;
use crate::geom::{block_grid, Rect};
use crate::lbp::accumulate_codes;
use image::GrayImage;
use ndarray::{s, Array2, ArrayView2};
use rayon::prelude::*;

pub const LBP_NEIGHBORS: usize = 8;
pub const LBP_RADIUS: f64 = 3.0;
pub const LBP_BINS: usize = 256;

#[derive(Debug, Clone, Copy)]
pub struct BodyParams {
    pub grid_m: u32,
    pub grid_n: u32,
    pub overlap: f64,
    pub phog: PhogParams,
}

impl Default for BodyParams {
    fn default() -> Self {
        BodyParams {
            grid_m: 16,
            grid_n: 16,
            overlap: 0.7,
            phog: PhogParams::default(),
        }
    }
}

/// Full 256-bin histogram of circular interpolated LBP codes (8 neighbors,
/// radius 3) over the valid interior of one block.
pub fn lbp_hist(block: &ArrayView2<u8>) -> Result<Vec<f64>> {
    let (rows, cols) = block.dim();
    if rows <= 6 || cols <= 6 {
        return Err(Error::InvalidArgument(format!(
            "lbp radius 3 needs a block larger than 6, got {rows}x{cols}"
        )));
    }
    let plane = block.mapv(|v| v as f64);
    let mut hist = vec![0u64; LBP_BINS];
    accumulate_codes(&plane.view(), LBP_NEIGHBORS, LBP_RADIUS, &mut hist)?;
    Ok(hist.into_iter().map(|c| c as f64).collect())
}

/// Block-grid body descriptor extractor.
pub struct BodyExtractor {
    grid: Vec<Rect>,
    phog_params: PhogParams,
}

impl BodyExtractor {
    pub fn new(params: &BodyParams) -> Result<Self> {
        let grid = block_grid(CANONICAL_SIDE, params.grid_m, params.grid_n, params.overlap)?;
        Ok(BodyExtractor {
            grid,
            phog_params: params.phog,
        })
    }

    pub fn region_dim(&self) -> usize {
        self.phog_params.dim() + LBP_BINS
    }

    pub fn block_count(&self) -> usize {
        self.grid.len()
    }

    /// One `[phog | lbp]` row per block of a 128x128 grayscale crop.
    pub fn descriptor(&self, body: &GrayImage) -> Result<Array2<f64>> {
        let (w, h) = body.dimensions();
        if (w, h) != (CANONICAL_SIDE, CANONICAL_SIDE) {
            return Err(Error::DimensionMismatch {
                expected: CANONICAL_SIDE as usize,
                got: w.max(h) as usize,
            });
        }
        let pixels = Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
            body.get_pixel(x as u32, y as u32).0[0]
        });
        let rows: Vec<Vec<f64>> = self
            .grid
            .par_iter()
            .map(|rect| {
                let block = pixels.slice(s![
                    rect.y as usize..rect.y_end() as usize,
                    rect.x as usize..rect.x_end() as usize
                ]);
                let mut feature = phog(&block, &self.phog_params)?;
                feature.extend(lbp_hist(&block)?);
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

/// One-shot body descriptor.
pub fn body_descriptor(body: &GrayImage, params: &BodyParams) -> Result<Array2<f64>> {
    BodyExtractor::new(params)?.descriptor(body)
}
