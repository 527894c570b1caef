//! Pyramid histogram of oriented gradients over a Canny edge mask.
//!
//! Gradients come from the 3x3 Sobel operator (zero at the border). The
//! edge mask is classic Canny: non-maximum suppression along the quantized
//! gradient direction, double threshold at `high = 0.2 * max magnitude`,
//! `low = 0.4 * high`, and hysteresis growing strong edges through weak
//! ones (8-connected). Edge pixels then vote their gradient magnitude into
//! 10 signed-orientation bins ([0, 360) in 36-degree steps) over a spatial
//! pyramid of 1 + 4 + 16 + 64 cells; each pyramid level is L1-normalized
//! separately (a level with no votes stays zero).

use crate::error::{Error, Result};
use ndarray::ArrayView2;

#[derive(Debug, Clone, Copy)]
pub struct PhogParams {
    /// Pyramid levels 0..=levels (level l has 4^l cells).
    pub levels: usize,
    /// Orientation bins over the full signed range.
    pub bins: usize,
}

impl Default for PhogParams {
    fn default() -> Self {
        PhogParams { levels: 3, bins: 10 }
    }
}

impl PhogParams {
    pub fn dim(&self) -> usize {
        self.bins * (0..=self.levels).map(|l| 1usize << (2 * l)).sum::<usize>()
    }
}

pub(crate) struct Gradients {
    pub gx: Vec<i32>,
    pub gy: Vec<i32>,
    pub mag_sq: Vec<i64>,
    pub rows: usize,
    pub cols: usize,
}

pub(crate) fn sobel(block: &ArrayView2<u8>) -> Gradients {
    let (rows, cols) = block.dim();
    let mut gx = vec![0i32; rows * cols];
    let mut gy = vec![0i32; rows * cols];
    let mut mag_sq = vec![0i64; rows * cols];
    for y in 1..rows - 1 {
        for x in 1..cols - 1 {
            let p = |dy: isize, dx: isize| {
                block[[(y as isize + dy) as usize, (x as isize + dx) as usize]] as i32
            };
            let sx = -p(-1, -1) + p(-1, 1) - 2 * p(0, -1) + 2 * p(0, 1) - p(1, -1) + p(1, 1);
            let sy = -p(-1, -1) - 2 * p(-1, 0) - p(-1, 1) + p(1, -1) + 2 * p(1, 0) + p(1, 1);
            let idx = y * cols + x;
            gx[idx] = sx;
            gy[idx] = sy;
            mag_sq[idx] = (sx as i64) * (sx as i64) + (sy as i64) * (sy as i64);
        }
    }
    Gradients {
        gx,
        gy,
        mag_sq,
        rows,
        cols,
    }
}

/// Canny edge mask for the given gradients.
pub(crate) fn canny_mask(g: &Gradients) -> Vec<bool> {
    let (rows, cols) = (g.rows, g.cols);
    let n = rows * cols;
    let max_mag_sq = g.mag_sq.iter().copied().max().unwrap_or(0);
    if max_mag_sq == 0 {
        return vec![false; n];
    }
    let high = 0.2 * (max_mag_sq as f64).sqrt();
    let low = 0.4 * high;

    // non-maximum suppression with exact integer magnitude comparisons
    let mut keep = vec![false; n];
    for y in 1..rows - 1 {
        for x in 1..cols - 1 {
            let idx = y * cols + x;
            let m = g.mag_sq[idx];
            if m == 0 {
                continue;
            }
            let mut angle = (g.gy[idx] as f64).atan2(g.gx[idx] as f64).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let sector = (((angle + 22.5) / 45.0).floor() as usize) % 4;
            let (da, db) = match sector {
                0 => (idx - 1, idx + 1),
                1 => (idx - cols - 1, idx + cols + 1),
                2 => (idx - cols, idx + cols),
                _ => (idx - cols + 1, idx + cols - 1),
            };
            keep[idx] = m >= g.mag_sq[da] && m >= g.mag_sq[db];
        }
    }

    let mut mask = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for idx in 0..n {
        if keep[idx] && (g.mag_sq[idx] as f64).sqrt() >= high {
            mask[idx] = true;
            stack.push(idx);
        }
    }
    // grow through weak edges
    while let Some(idx) = stack.pop() {
        let y = idx / cols;
        let x = idx % cols;
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dy == 0 && dx == 0 {
                    continue;
                }
                let ny = y as isize + dy;
                let nx = x as isize + dx;
                if ny < 0 || nx < 0 || ny >= rows as isize || nx >= cols as isize {
                    continue;
                }
                let nidx = ny as usize * cols + nx as usize;
                if !mask[nidx] && keep[nidx] && (g.mag_sq[nidx] as f64).sqrt() >= low {
                    mask[nidx] = true;
                    stack.push(nidx);
                }
            }
        }
    }
    mask
}

/// Edge-gated pyramid orientation histogram of one grayscale block.
pub fn phog(block: &ArrayView2<u8>, params: &PhogParams) -> Result<Vec<f64>> {
    let (rows, cols) = block.dim();
    if rows < 8 || cols < 8 {
        return Err(Error::InvalidArgument(format!(
            "phog needs a block of at least 8x8, got {rows}x{cols}"
        )));
    }
    if params.bins < 2 {
        return Err(Error::InvalidArgument("phog needs at least 2 bins".into()));
    }
    let g = sobel(block);
    let mask = canny_mask(&g);

    let mut out = Vec::with_capacity(params.dim());
    for level in 0..=params.levels {
        let cells = 1usize << level;
        let mut hist = vec![0f64; cells * cells * params.bins];
        for y in 0..rows {
            for x in 0..cols {
                let idx = y * cols + x;
                if !mask[idx] {
                    continue;
                }
                let mut angle = (g.gy[idx] as f64).atan2(g.gx[idx] as f64).to_degrees();
                if angle < 0.0 {
                    angle += 360.0;
                }
                let bin = (((angle / 360.0) * params.bins as f64).floor() as usize)
                    .min(params.bins - 1);
                let cy = y * cells / rows;
                let cx = x * cells / cols;
                hist[(cy * cells + cx) * params.bins + bin] += (g.mag_sq[idx] as f64).sqrt();
            }
        }
        let sum: f64 = hist.iter().sum();
        if sum > 0.0 {
            for v in hist.iter_mut() {
                *v /= sum;
            }
        }
        out.extend(hist);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn dimension_is_850() {
        assert_eq!(PhogParams::default().dim(), 850);
        let block = Array2::from_shape_fn((24, 24), |(y, x)| ((x * 11 + y * 7) % 251) as u8);
        let v = phog(&block.view(), &PhogParams::default()).unwrap();
        assert_eq!(v.len(), 850);
        assert!(v.iter().all(|&x| x >= 0.0));
    }

    #[test]
    fn constant_block_is_zero() {
        let block = Array2::from_elem((16, 16), 90u8);
        let v = phog(&block.view(), &PhogParams::default()).unwrap();
        assert!(v.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn level_sums_are_unit_or_zero() {
        let block = Array2::from_shape_fn((32, 32), |(y, x)| ((x * x + 3 * y) % 256) as u8);
        let params = PhogParams::default();
        let v = phog(&block.view(), &params).unwrap();
        let mut offset = 0;
        for level in 0..=params.levels {
            let len = (1usize << (2 * level)) * params.bins;
            let sum: f64 = v[offset..offset + len].iter().sum();
            assert!(
                (sum - 1.0).abs() < 1e-9 || sum == 0.0,
                "level {level} sum {sum}"
            );
            offset += len;
        }
    }

    #[test]
    fn horizontal_step_edge_votes_one_bin() {
        // brightness increases downward: gradient points at +y (90 deg)
        let mut data = Array2::from_elem((24, 24), 40u8);
        for y in 12..24 {
            for x in 0..24 {
                data[[y, x]] = 200;
            }
        }
        let params = PhogParams::default();
        let v = phog(&data.view(), &params).unwrap();
        // level 0 histogram: bin floor(90/36) = 2 carries everything,
        // its opposite bin (270 deg -> bin 7) must be empty
        let level0 = &v[..params.bins];
        assert!((level0[2] - 1.0).abs() < 1e-12, "level0 = {level0:?}");
        assert_eq!(level0[7], 0.0);
    }

    #[test]
    fn tiny_block_rejected() {
        let block = Array2::from_elem((4, 4), 0u8);
        assert!(phog(&block.view(), &PhogParams::default()).is_err());
    }
}
