//! LBP on three orthogonal planes of a volume.
//!
//! The volume has shape `(depth, rows, cols)` = (z, y, x). Codes are
//! collected from the plane families
//!
//! * XY: one plane per z slice, x as columns and y as rows,
//! * XZ: one plane per y value, x as columns and z as rows,
//! * YZ: one plane per x value, y as columns and z as rows,
//!
//! each family accumulating one histogram over all its planes' interior
//! pixels. The three histograms are concatenated in XY, XZ, YZ order.

use crate::error::{Error, Result};
use crate::lbp::{accumulate_codes, UniformLut};
use ndarray::{Array2, ArrayView3};

/// How raw 8-bit codes map to histogram bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbpBinning {
    /// 59 bins: 58 uniform patterns plus one shared non-uniform bin.
    Uniform,
    /// All 256 raw codes.
    Raw,
}

impl LbpBinning {
    pub fn bins(&self) -> usize {
        match self {
            LbpBinning::Uniform => 59,
            LbpBinning::Raw => 256,
        }
    }
}

/// Computes the three-plane LBP histogram of a volume; output length is
/// `3 * bins`. Only the classic 8-neighbor, radius-1 operator is supported.
pub fn lbp_top(
    volume: &ArrayView3<f64>,
    neighbors: usize,
    radius: f64,
    binning: LbpBinning,
) -> Result<Vec<f64>> {
    if neighbors != 8 || radius != 1.0 {
        return Err(Error::InvalidArgument(format!(
            "lbp_top supports 8 neighbors at radius 1, got {neighbors}/{radius}"
        )));
    }
    let (d, h, w) = volume.dim();
    if d < 3 || h < 3 || w < 3 {
        return Err(Error::InvalidArgument(format!(
            "volume {d}x{h}x{w} too small for radius-1 codes"
        )));
    }

    let owned;
    let flat: &[f64] = match volume.to_slice() {
        Some(s) => s,
        None => {
            owned = volume.to_owned();
            owned.as_slice().unwrap()
        }
    };
    let slice_stride = h * w;

    let mut hists = [[0u64; 256]; 3];
    let mut scratch = PlaneScratch::new(h.max(d), w.max(h));

    // XY: one contiguous h x w plane per z slice.
    for z in 0..d {
        plane_codes_r1(&flat[z * slice_stride..][..slice_stride], h, w, &mut hists[0], &mut scratch);
    }
    // XZ: rows = z, cols = x, one plane per y; rows copy contiguously.
    let mut plane = vec![0f64; d * w];
    for y in 0..h {
        for z in 0..d {
            plane[z * w..(z + 1) * w].copy_from_slice(&flat[z * slice_stride + y * w..][..w]);
        }
        plane_codes_r1(&plane, d, w, &mut hists[1], &mut scratch);
    }
    // YZ: rows = z, cols = y, one plane per x; stride-w gather.
    let mut plane = vec![0f64; d * h];
    for x in 0..w {
        for z in 0..d {
            let base = z * slice_stride + x;
            let row = &mut plane[z * h..(z + 1) * h];
            for (y, slot) in row.iter_mut().enumerate() {
                *slot = flat[base + y * w];
            }
        }
        plane_codes_r1(&plane, d, h, &mut hists[2], &mut scratch);
    }

    let mut out = Vec::with_capacity(3 * binning.bins());
    let lut = uniform_lut();
    for hist in &hists {
        match binning {
            LbpBinning::Uniform => out.extend(lut.fold(hist)),
            LbpBinning::Raw => out.extend(hist.iter().map(|&c| c as f64)),
        }
    }
    Ok(out)
}

fn uniform_lut() -> &'static UniformLut {
    static LUT: std::sync::OnceLock<UniformLut> = std::sync::OnceLock::new();
    LUT.get_or_init(UniformLut::new)
}

/// Reference path used to cross-check the sweep implementation: the same
/// histograms via the generic circular sampler.
pub fn lbp_top_generic(
    volume: &ArrayView3<f64>,
    neighbors: usize,
    radius: f64,
    binning: LbpBinning,
) -> Result<Vec<f64>> {
    let (d, h, w) = volume.dim();
    let margin = 2 * crate::lbp::interior_margin(radius);
    if d <= margin || h <= margin || w <= margin {
        return Err(Error::InvalidArgument("volume too small".into()));
    }
    let mut hists = vec![vec![0u64; 1 << neighbors]; 3];
    for z in 0..d {
        let plane = volume.index_axis(ndarray::Axis(0), z).to_owned();
        accumulate_codes(&plane.view(), neighbors, radius, &mut hists[0])?;
    }
    for y in 0..h {
        let plane = Array2::from_shape_fn((d, w), |(z, x)| volume[[z, y, x]]);
        accumulate_codes(&plane.view(), neighbors, radius, &mut hists[1])?;
    }
    for x in 0..w {
        let plane = Array2::from_shape_fn((d, h), |(z, y)| volume[[z, y, x]]);
        accumulate_codes(&plane.view(), neighbors, radius, &mut hists[2])?;
    }
    let lut = UniformLut::new();
    let mut out = Vec::new();
    for hist in &hists {
        match binning {
            LbpBinning::Uniform => out.extend(lut.fold(hist)),
            LbpBinning::Raw => out.extend(hist.iter().map(|&c| c as f64)),
        }
    }
    Ok(out)
}

struct PlaneScratch {
    u: Vec<f64>,
    v: Vec<f64>,
    diag: [Vec<f64>; 4],
    codes: Vec<u8>,
}

impl PlaneScratch {
    fn new(rows: usize, cols: usize) -> Self {
        PlaneScratch {
            u: vec![0.0; rows * cols],
            v: vec![0.0; rows * cols],
            diag: std::array::from_fn(|_| vec![0.0; cols]),
            codes: vec![0; cols],
        }
    }
}

/// Radius-1, 8-neighbor code pass over one plane.
///
/// The four diagonal samples sit at `(+-s, +-s)` with `s = sqrt(2)/2`; they
/// are produced by row-pair interpolation sweeps (`u` holds the rightward
/// lerp of each row, `v` the leftward one) so the inner loop is pure
/// compares. Interpolation uses the same lerp form as [`crate::lbp::bilinear`],
/// `p0 + f*(p1 - p0)`, per axis.
fn plane_codes_r1(
    plane: &[f64],
    rows: usize,
    cols: usize,
    hist: &mut [u64; 256],
    scratch: &mut PlaneScratch,
) {
    debug_assert!(plane.len() >= rows * cols);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let t = 1.0 - s;
    let u = &mut scratch.u[..rows * cols];
    let v = &mut scratch.v[..rows * cols];
    // u[r][c] = row lerp at x = c + s, v[r][c] = row lerp at x = c - s
    for r in 0..rows {
        let row = &plane[r * cols..(r + 1) * cols];
        let urow = &mut u[r * cols..(r + 1) * cols];
        for c in 0..cols - 1 {
            urow[c] = row[c] + s * (row[c + 1] - row[c]);
        }
        let vrow = &mut v[r * cols..(r + 1) * cols];
        for c in 1..cols {
            vrow[c] = row[c - 1] + t * (row[c] - row[c - 1]);
        }
    }
    let codes = &mut scratch.codes[..cols];
    let [d1r, d3r, d5r, d7r] = &mut scratch.diag;
    for r in 1..rows - 1 {
        let above = &plane[(r - 1) * cols..r * cols];
        let here = &plane[r * cols..(r + 1) * cols];
        let below = &plane[(r + 1) * cols..(r + 2) * cols];
        let u_above = &u[(r - 1) * cols..r * cols];
        let u_here = &u[r * cols..(r + 1) * cols];
        let u_below = &u[(r + 1) * cols..(r + 2) * cols];
        let v_above = &v[(r - 1) * cols..r * cols];
        let v_here = &v[r * cols..(r + 1) * cols];
        let v_below = &v[(r + 1) * cols..(r + 2) * cols];
        // neighbor p at angle 2*pi*p/8, (dx, dy) = (cos, sin); vertical
        // lerps of the row sweeps give the four diagonal samples
        for c in 0..cols {
            d1r[c] = u_here[c] + s * (u_below[c] - u_here[c]); // (+s, +s)
            d3r[c] = v_here[c] + s * (v_below[c] - v_here[c]); // (-s, +s)
            d5r[c] = v_above[c] + t * (v_here[c] - v_above[c]); // (-s, -s)
            d7r[c] = u_above[c] + t * (u_here[c] - u_above[c]); // (+s, -s)
        }
        for c in 1..cols - 1 {
            let ctr = here[c];
            let code = (here[c + 1] >= ctr) as u8
                | ((d1r[c] >= ctr) as u8) << 1
                | ((below[c] >= ctr) as u8) << 2
                | ((d3r[c] >= ctr) as u8) << 3
                | ((here[c - 1] >= ctr) as u8) << 4
                | ((d5r[c] >= ctr) as u8) << 5
                | ((above[c] >= ctr) as u8) << 6
                | ((d7r[c] >= ctr) as u8) << 7;
            codes[c] = code;
        }
        for &code in &codes[1..cols - 1] {
            hist[code as usize] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn histogram_sums_match_interior_counts() {
        let vol = Array3::from_shape_fn((6, 7, 8), |(z, y, x)| ((z * 5 + y * 3 + x) % 13) as f64);
        let hist = lbp_top(&vol.view(), 8, 1.0, LbpBinning::Uniform).unwrap();
        assert_eq!(hist.len(), 3 * 59);
        let xy: f64 = hist[..59].iter().sum();
        let xz: f64 = hist[59..118].iter().sum();
        let yz: f64 = hist[118..].iter().sum();
        assert_eq!(xy, (6 * 5 * 6) as f64); // d * (h-2)(w-2)
        assert_eq!(xz, (7 * 4 * 6) as f64); // h * (d-2)(w-2)
        assert_eq!(yz, (8 * 4 * 5) as f64); // w * (d-2)(h-2)
    }

    #[test]
    fn constant_volume_all_ones_code() {
        let vol = Array3::from_elem((5, 5, 5), 2.0);
        let hist = lbp_top(&vol.view(), 8, 1.0, LbpBinning::Raw).unwrap();
        // ties encode as 1 -> code 255 in every plane family
        assert_eq!(hist[255], (5 * 3 * 3) as f64);
        assert_eq!(hist[256 + 255], (5 * 3 * 3) as f64);
        assert_eq!(hist[512 + 255], (5 * 3 * 3) as f64);
        let total: f64 = hist.iter().sum();
        assert_eq!(total, 3.0 * (5 * 3 * 3) as f64);
    }

    #[test]
    fn sweep_path_matches_generic_path() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        for _ in 0..5 {
            let vol = Array3::from_shape_fn((9, 8, 10), |_| rng.gen_range(-4.0..4.0));
            let fast = lbp_top(&vol.view(), 8, 1.0, LbpBinning::Uniform).unwrap();
            let slow = lbp_top_generic(&vol.view(), 8, 1.0, LbpBinning::Uniform).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn rejects_thin_volume() {
        let vol = Array3::<f64>::zeros((2, 8, 8));
        assert!(lbp_top(&vol.view(), 8, 1.0, LbpBinning::Uniform).is_err());
    }
}
