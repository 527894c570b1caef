//! Rectangles and the overlapped block grid used to tile face/body crops.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned pixel rectangle. `w` and `h` are always positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Result<Self> {
        if w == 0 || h == 0 {
            return Err(Error::InvalidArgument(format!(
                "rect {w}x{h} at ({x},{y}) has empty side"
            )));
        }
        Ok(Rect { x, y, w, h })
    }

    /// Right edge, exclusive.
    pub fn x_end(&self) -> u32 {
        self.x + self.w
    }

    /// Bottom edge, exclusive.
    pub fn y_end(&self) -> u32 {
        self.y + self.h
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x_end() <= width && self.y_end() <= height
    }
}

/// Tiles a `side` x `side` image with an `m` x `n` grid of overlapping
/// square-ish blocks.
///
/// The block side along an axis with `m` blocks is
/// `ceil(side / (1 + (m-1)(1-overlap)))` and block origins are the rounded
/// equispaced positions `round(i*(side-b)/(m-1))`, so the first block starts
/// at 0 and the last is flush with the far edge. The achieved overlap
/// approximates the requested ratio.
///
/// Returns the rects in row-major order (rows vary with `m`, columns with
/// `n`). Fails with "grid too fine" when a block side would drop below 3
/// pixels, which is the minimum support any of our descriptors can use.
pub fn block_grid(side: u32, m: u32, n: u32, overlap: f64) -> Result<Vec<Rect>> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument("grid needs m >= 1 and n >= 1".into()));
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidArgument(format!(
            "overlap {overlap} outside [0,1)"
        )));
    }
    if side < m || side < n {
        return Err(Error::InvalidArgument(format!(
            "side {side} smaller than grid {m}x{n}"
        )));
    }
    let b_rows = axis_block(side, m, overlap);
    let b_cols = axis_block(side, n, overlap);
    let b_min = b_rows.min(b_cols);
    if b_min < 3 {
        return Err(Error::GridTooFine { block: b_min });
    }
    let ys = axis_positions(side, m, b_rows);
    let xs = axis_positions(side, n, b_cols);
    let mut rects = Vec::with_capacity((m * n) as usize);
    for &y in &ys {
        for &x in &xs {
            rects.push(Rect {
                x,
                y,
                w: b_cols,
                h: b_rows,
            });
        }
    }
    Ok(rects)
}

fn axis_block(side: u32, m: u32, overlap: f64) -> u32 {
    let denom = 1.0 + (m - 1) as f64 * (1.0 - overlap);
    (side as f64 / denom).ceil() as u32
}

fn axis_positions(side: u32, m: u32, b: u32) -> Vec<u32> {
    if m == 1 {
        return vec![0];
    }
    let span = (side - b) as f64;
    (0..m)
        .map(|i| (i as f64 * span / (m - 1) as f64).round() as u32)
        .collect()
}
