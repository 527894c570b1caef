//! Circular local binary patterns over 2-D planes.
//!
//! Neighbor `p` of a center `(x, y)` sits at angle `2*pi*p/P`, offset
//! `(r*cos, r*sin)` in (column, row) order with rows growing downward.
//! Fractional sample positions are filled by bilinear interpolation and a
//! neighbor counts as set when `sample >= center` (ties encode as 1).

use crate::error::{Error, Result};
use ndarray::ArrayView2;

/// Offsets `(dx, dy)` of the circular neighbor samples. Components within
/// 1e-9 of an integer are snapped to it, so axis-aligned samples read the
/// pixel directly instead of interpolating across a `sin(pi) ~ 1e-16`
/// residue. Shared with test oracles so both sides agree on the geometry.
pub fn circular_offsets(neighbors: usize, radius: f64) -> Vec<(f64, f64)> {
    let snap = |v: f64| {
        if (v - v.round()).abs() < 1e-9 {
            v.round()
        } else {
            v
        }
    };
    (0..neighbors)
        .map(|p| {
            let angle = 2.0 * std::f64::consts::PI * p as f64 / neighbors as f64;
            (snap(radius * angle.cos()), snap(radius * angle.sin()))
        })
        .collect()
}

/// Bilinear sample of `plane` at real coordinates (`x` columns, `y` rows).
/// The caller guarantees the 2x2 support cell is inside the plane.
///
/// Uses the lerp form `p0 + f*(p1 - p0)` in both axes; a constant
/// neighborhood then reproduces the constant exactly, which keeps tie
/// comparisons (`sample >= center`) well defined on flat patches.
#[inline]
pub fn bilinear(plane: &ArrayView2<f64>, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let (xi, yi) = (x0 as usize, y0 as usize);
    if fx == 0.0 && fy == 0.0 {
        return plane[[yi, xi]];
    }
    // an exact-integer axis keeps a zero lerp weight, so reading the base
    // pixel twice is safe and avoids stepping past the edge
    let xj = if fx > 0.0 { xi + 1 } else { xi };
    let yj = if fy > 0.0 { yi + 1 } else { yi };
    let p00 = plane[[yi, xi]];
    let p01 = plane[[yi, xj]];
    let p10 = plane[[yj, xi]];
    let p11 = plane[[yj, xj]];
    let top = p00 + fx * (p01 - p00);
    let bot = p10 + fx * (p11 - p10);
    top + fy * (bot - top)
}

/// Margin of pixels lost on every side of a plane for a given radius.
pub fn interior_margin(radius: f64) -> usize {
    radius.ceil() as usize
}

/// Accumulates the raw LBP code histogram of one plane into `hist`
/// (length `2^neighbors`). Returns the number of coded (interior) pixels.
pub fn accumulate_codes(
    plane: &ArrayView2<f64>,
    neighbors: usize,
    radius: f64,
    hist: &mut [u64],
) -> Result<usize> {
    debug_assert_eq!(hist.len(), 1 << neighbors);
    let (rows, cols) = plane.dim();
    let margin = interior_margin(radius);
    if rows <= 2 * margin || cols <= 2 * margin {
        return Err(Error::InvalidArgument(format!(
            "plane {rows}x{cols} too small for radius {radius}"
        )));
    }
    let offsets = circular_offsets(neighbors, radius);
    let mut coded = 0usize;
    for y in margin..rows - margin {
        for x in margin..cols - margin {
            let center = plane[[y, x]];
            let mut code = 0usize;
            for (p, &(dx, dy)) in offsets.iter().enumerate() {
                let sample = bilinear(plane, x as f64 + dx, y as f64 + dy);
                if sample >= center {
                    code |= 1 << p;
                }
            }
            hist[code] += 1;
            coded += 1;
        }
    }
    Ok(coded)
}

/// Mapping from 8-bit LBP codes to uniform-pattern bins: the 58 codes with
/// at most two circular 0/1 transitions each get their own bin (in numeric
/// order) and everything else shares bin 58, for 59 bins total.
pub struct UniformLut {
    map: [u16; 256],
    pub bins: usize,
}

impl UniformLut {
    pub fn new() -> Self {
        let mut map = [0u16; 256];
        let mut next = 0u16;
        for code in 0..256usize {
            if transitions(code as u8) <= 2 {
                map[code] = next;
                next += 1;
            } else {
                map[code] = u16::MAX; // placeholder, patched below
            }
        }
        debug_assert_eq!(next, 58);
        for slot in map.iter_mut() {
            if *slot == u16::MAX {
                *slot = next;
            }
        }
        UniformLut {
            map,
            bins: next as usize + 1,
        }
    }

    #[inline]
    pub fn bin(&self, code: u8) -> usize {
        self.map[code as usize] as usize
    }

    /// Folds a raw 256-bin histogram into uniform bins.
    pub fn fold(&self, raw: &[u64]) -> Vec<f64> {
        let mut out = vec![0f64; self.bins];
        for (code, &count) in raw.iter().enumerate() {
            out[self.bin(code as u8)] += count as f64;
        }
        out
    }
}

impl Default for UniformLut {
    fn default() -> Self {
        Self::new()
    }
}

fn transitions(code: u8) -> u32 {
    let rotated = code.rotate_left(1);
    (code ^ rotated).count_ones()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn uniform_lut_has_59_bins() {
        let lut = UniformLut::new();
        assert_eq!(lut.bins, 59);
        // all-zeros and all-ones are uniform
        assert_ne!(lut.bin(0b0000_0000), 58);
        assert_ne!(lut.bin(0b1111_1111), 58);
        // 0b01010101 has 8 transitions
        assert_eq!(lut.bin(0b0101_0101), 58);
    }

    #[test]
    fn constant_plane_codes_all_ones() {
        let plane = Array2::from_elem((8, 8), 3.5);
        let mut hist = vec![0u64; 256];
        let coded = accumulate_codes(&plane.view(), 8, 1.0, &mut hist).unwrap();
        assert_eq!(coded, 36);
        assert_eq!(hist[255], 36);
        assert_eq!(hist.iter().sum::<u64>(), 36);
    }

    #[test]
    fn histogram_counts_interior() {
        let plane = Array2::from_shape_fn((10, 7), |(y, x)| ((x * 31 + y * 17) % 11) as f64);
        let mut hist = vec![0u64; 256];
        let coded = accumulate_codes(&plane.view(), 8, 1.0, &mut hist).unwrap();
        assert_eq!(coded, 8 * 5);
        assert_eq!(hist.iter().sum::<u64>(), coded as u64);
    }

    #[test]
    fn shift_invariance() {
        let plane = Array2::from_shape_fn((9, 9), |(y, x)| ((x * 7 + y * 13) % 19) as f64);
        let shifted = plane.mapv(|v| v + 40.0);
        let mut h1 = vec![0u64; 256];
        let mut h2 = vec![0u64; 256];
        accumulate_codes(&plane.view(), 8, 1.0, &mut h1).unwrap();
        accumulate_codes(&shifted.view(), 8, 1.0, &mut h2).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn too_small_plane_errors() {
        let plane = Array2::<f64>::zeros((6, 6));
        let mut hist = vec![0u64; 256];
        assert!(accumulate_codes(&plane.view(), 8, 3.0, &mut hist).is_err());
    }
}
