//! Upright dense SIFT descriptors.
//!
//! For a pixel, the 16x16 neighborhood (offsets -8..7) is split into a
//! 4x4 cell array with 8 orientation bins per cell. Border handling
//! replicates the gradient field: sample positions are clamped into the
//! image and gradients use clamped central differences.
//! Gradient magnitudes are weighted by a Gaussian over the window
//! (sigma = 8, half the window) and distributed with trilinear
//! interpolation across the two neighboring cells per axis and the two
//! neighboring orientation bins. The 128-vector is L2-normalized, clipped
//! at 0.2 and re-normalized; an all-zero window stays zero. There is no
//! dominant-orientation detection, descriptors are upright.

use crate::error::{Error, Result};
use image::GrayImage;
use ndarray::Array2;

pub const WINDOW: usize = 16;
pub const CELLS: usize = 4;
pub const ORIENT_BINS: usize = 8;
pub const DESCRIPTOR_DIM: usize = CELLS * CELLS * ORIENT_BINS;
const CLIP: f64 = 0.2;

/// Per-pixel gradient field with border-replicated central differences.
pub struct GradientField {
    mag: Array2<f64>,
    /// Orientation scaled to [0, 8): `atan2 / (2 pi) * 8`.
    obin: Array2<f64>,
    width: usize,
    height: usize,
}

impl GradientField {
    pub fn new(gray: &GrayImage) -> Self {
        let (w, h) = gray.dimensions();
        let (w, h) = (w as usize, h as usize);
        let at = |x: isize, y: isize| {
            let xc = x.clamp(0, w as isize - 1) as u32;
            let yc = y.clamp(0, h as isize - 1) as u32;
            gray.get_pixel(xc, yc).0[0] as f64
        };
        let mut mag = Array2::zeros((h, w));
        let mut obin = Array2::zeros((h, w));
        for y in 0..h {
            for x in 0..w {
                let gx = (at(x as isize + 1, y as isize) - at(x as isize - 1, y as isize)) / 2.0;
                let gy = (at(x as isize, y as isize + 1) - at(x as isize, y as isize - 1)) / 2.0;
                mag[[y, x]] = (gx * gx + gy * gy).sqrt();
                let mut theta = gy.atan2(gx);
                if theta < 0.0 {
                    theta += 2.0 * std::f64::consts::PI;
                }
                let ob = theta / (2.0 * std::f64::consts::PI) * ORIENT_BINS as f64;
                obin[[y, x]] = if ob >= ORIENT_BINS as f64 { 0.0 } else { ob };
            }
        }
        GradientField {
            mag,
            obin,
            width: w,
            height: h,
        }
    }
}

/// Precomputed window weights shared by every descriptor: the Gaussian
/// envelope and, per window offset, the two (cell, weight) pairs of the
/// spatial trilinear split.
struct WindowTables {
    gauss: [f64; WINDOW * WINDOW],
    cell_splits: [[(isize, f64); 2]; WINDOW],
}

impl WindowTables {
    fn new() -> Self {
        let sigma = WINDOW as f64 / 2.0;
        let mut gauss = [0f64; WINDOW * WINDOW];
        for oy in 0..WINDOW {
            let sy = oy as f64 - 8.0 + 0.5;
            for ox in 0..WINDOW {
                let sx = ox as f64 - 8.0 + 0.5;
                gauss[oy * WINDOW + ox] = (-(sx * sx + sy * sy) / (2.0 * sigma * sigma)).exp();
            }
        }
        let mut cell_splits = [[(0isize, 0f64); 2]; WINDOW];
        for o in 0..WINDOW {
            let s = o as f64 - 8.0 + 0.5;
            let c = (s + 8.0) / 4.0 - 0.5;
            let c0 = c.floor();
            let fc = c - c0;
            cell_splits[o] = [(c0 as isize, 1.0 - fc), (c0 as isize + 1, fc)];
        }
        WindowTables { gauss, cell_splits }
    }
}

/// Computes the descriptor at one pixel from a gradient field.
fn descriptor_at(field: &GradientField, tables: &WindowTables, x: usize, y: usize) -> [f64; DESCRIPTOR_DIM] {
    let mut hist = [0f64; DESCRIPTOR_DIM];
    for oy in 0..WINDOW {
        let py = (y as isize + oy as isize - 8).clamp(0, field.height as isize - 1) as usize;
        for ox in 0..WINDOW {
            let px = (x as isize + ox as isize - 8).clamp(0, field.width as isize - 1) as usize;
            let m = field.mag[[py, px]];
            if m == 0.0 {
                continue;
            }
            let w = m * tables.gauss[oy * WINDOW + ox];
            let ob = field.obin[[py, px]];
            let o0 = ob.floor() as usize;
            let fo = ob - o0 as f64;
            let orient = [(o0 % ORIENT_BINS, 1.0 - fo), ((o0 + 1) % ORIENT_BINS, fo)];
            for &(cy, wy) in &tables.cell_splits[oy] {
                if !(0..CELLS as isize).contains(&cy) || wy == 0.0 {
                    continue;
                }
                for &(cx, wx) in &tables.cell_splits[ox] {
                    if !(0..CELLS as isize).contains(&cx) || wx == 0.0 {
                        continue;
                    }
                    let base = (cy as usize * CELLS + cx as usize) * ORIENT_BINS;
                    for &(obin, wo) in &orient {
                        hist[base + obin] += w * wy * wx * wo;
                    }
                }
            }
        }
    }
    normalize(&mut hist);
    hist
}

fn normalize(hist: &mut [f64; DESCRIPTOR_DIM]) {
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        hist.fill(0.0);
        return;
    }
    for v in hist.iter_mut() {
        *v = (*v / norm).min(CLIP);
    }
    let norm2 = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm2 < 1e-12 {
        hist.fill(0.0);
        return;
    }
    for v in hist.iter_mut() {
        *v /= norm2;
    }
}

/// Dense SIFT over the pixel lattice `(x % stride == 0, y % stride == 0)`.
/// Row `i` of the output corresponds to the `i`-th lattice point in
/// scanline order; `stride == 1` gives the full per-pixel field.
pub struct SiftField {
    pub stride: usize,
    pub descriptors: Array2<f64>,
    lattice_w: usize,
}

impl SiftField {
    /// Descriptor row index for pixel `(x, y)`, when on the lattice.
    pub fn row_of(&self, x: usize, y: usize) -> Option<usize> {
        if x % self.stride == 0 && y % self.stride == 0 {
            Some((y / self.stride) * self.lattice_w + x / self.stride)
        } else {
            None
        }
    }
}

/// Computes the dense SIFT field of a grayscale image.
pub fn dense_sift_field(gray: &GrayImage, stride: usize) -> Result<SiftField> {
    let (w, h) = gray.dimensions();
    if w < WINDOW as u32 || h < WINDOW as u32 {
        return Err(Error::InvalidArgument(format!(
            "dense sift needs at least {WINDOW}x{WINDOW}, got {w}x{h}"
        )));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be >= 1".into()));
    }
    let field = GradientField::new(gray);
    let tables = WindowTables::new();
    let lattice_w = (w as usize).div_ceil(stride);
    let lattice_h = (h as usize).div_ceil(stride);
    let mut descriptors = Array2::zeros((lattice_w * lattice_h, DESCRIPTOR_DIM));
    for ly in 0..lattice_h {
        for lx in 0..lattice_w {
            let d = descriptor_at(&field, &tables, lx * stride, ly * stride);
            descriptors
                .row_mut(ly * lattice_w + lx)
                .assign(&ndarray::ArrayView1::from(&d[..]));
        }
    }
    Ok(SiftField {
        stride,
        descriptors,
        lattice_w,
    })
}

/// Single-pixel descriptor; used as the fallback for superpixels that miss
/// the stride lattice entirely.
pub fn sift_at(field: &GradientField, x: usize, y: usize) -> [f64; DESCRIPTOR_DIM] {
    descriptor_at(field, &WindowTables::new(), x, y)
}

pub use GradientField as SiftGradients;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_gives_zero_descriptors() {
        let img = GrayImage::from_pixel(20, 20, image::Luma([140]));
        let field = dense_sift_field(&img, 1).unwrap();
        assert_eq!(field.descriptors.ncols(), 128);
        assert!(field.descriptors.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn descriptors_have_unit_or_zero_norm() {
        let img = GrayImage::from_fn(24, 24, |x, y| image::Luma([((x * 13 + y * 29) % 251) as u8]));
        let field = dense_sift_field(&img, 2).unwrap();
        for row in field.descriptors.rows() {
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9, "norm {norm}");
            // entries are clipped before the final renormalization, so they
            // stay non-negative and bounded by 1 (not by the clip value)
            assert!(row.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn rotating_gradient_shifts_orientation_mass() {
        // linear ramps: soft binning centers bins at multiples of 45 deg,
        // so a 0-deg gradient lands in bin 0 and a 45-deg one in bin 1
        let a1 = (0.0f64).to_radians();
        let a2 = (45.0f64).to_radians();
        let mk = |a: f64| {
            GrayImage::from_fn(48, 48, |x, y| {
                let v = 100.0 + 2.0 * (x as f64 * a.cos() + y as f64 * a.sin());
                image::Luma([v.round() as u8])
            })
        };
        let f1 = dense_sift_field(&mk(a1), 1).unwrap();
        let f2 = dense_sift_field(&mk(a2), 1).unwrap();
        let r1 = f1.row_of(24, 24).unwrap();
        let r2 = f2.row_of(24, 24).unwrap();
        let d1 = f1.descriptors.row(r1);
        let d2 = f2.descriptors.row(r2);
        // mass per orientation bin, summed over cells
        let mass = |d: ndarray::ArrayView1<f64>| {
            let mut m = [0f64; ORIENT_BINS];
            for (i, v) in d.iter().enumerate() {
                m[i % ORIENT_BINS] += v;
            }
            m
        };
        let m1 = mass(d1);
        let m2 = mass(d2);
        let peak1 = (0..ORIENT_BINS).max_by(|&a, &b| m1[a].total_cmp(&m1[b])).unwrap();
        let peak2 = (0..ORIENT_BINS).max_by(|&a, &b| m2[a].total_cmp(&m2[b])).unwrap();
        assert_eq!((peak1 + 1) % ORIENT_BINS, peak2, "m1={m1:?} m2={m2:?}");
        for o in 0..ORIENT_BINS {
            assert!((m1[o] - m2[(o + 1) % ORIENT_BINS]).abs() < 0.05, "shifted profile differs");
        }
    }

    #[test]
    fn small_image_rejected() {
        let img = GrayImage::new(10, 10);
        assert!(dense_sift_field(&img, 1).is_err());
    }
}
