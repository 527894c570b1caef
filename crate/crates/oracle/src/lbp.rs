//! Per-pixel circular LBP and three-plane volume LBP, the slow way.

use ndarray::{Array2, Array3};

/// Neighbor offsets at angle `2 pi p / n`, components snapped to integers
/// when within 1e-9 (axis samples must read pixels exactly).
pub fn offsets(neighbors: usize, radius: f64) -> Vec<(f64, f64)> {
    (0..neighbors)
        .map(|p| {
            let a = 2.0 * std::f64::consts::PI * p as f64 / neighbors as f64;
            let snap = |v: f64| {
                if (v - v.round()).abs() < 1e-9 {
                    v.round()
                } else {
                    v
                }
            };
            (snap(radius * a.cos()), snap(radius * a.sin()))
        })
        .collect()
}

fn sample(plane: &Array2<f64>, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let xi = x0 as usize;
    let yi = y0 as usize;
    if fx == 0.0 && fy == 0.0 {
        return plane[[yi, xi]];
    }
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

/// Raw code histogram over the interior of one plane; ties (`>=`) set the
/// bit.
pub fn lbp_histogram(plane: &Array2<f64>, neighbors: usize, radius: f64) -> Vec<u64> {
    let (rows, cols) = plane.dim();
    let margin = radius.ceil() as usize;
    let offs = offsets(neighbors, radius);
    let mut hist = vec![0u64; 1 << neighbors];
    for y in margin..rows - margin {
        for x in margin..cols - margin {
            let center = plane[[y, x]];
            let mut code = 0usize;
            for (p, &(dx, dy)) in offs.iter().enumerate() {
                if sample(plane, x as f64 + dx, y as f64 + dy) >= center {
                    code |= 1 << p;
                }
            }
            hist[code] += 1;
        }
    }
    hist
}

fn circular_transitions(code: usize, bits: usize) -> usize {
    let mut t = 0;
    for i in 0..bits {
        let a = (code >> i) & 1;
        let b = (code >> ((i + 1) % bits)) & 1;
        if a != b {
            t += 1;
        }
    }
    t
}

/// Folds a raw 256-bin histogram into the 59 uniform-pattern bins
/// (uniform codes in numeric order, then the shared non-uniform bin).
pub fn fold_uniform(raw: &[u64]) -> Vec<f64> {
    let mut bin_of = vec![0usize; 256];
    let mut next = 0usize;
    for code in 0..256 {
        if circular_transitions(code, 8) <= 2 {
            bin_of[code] = next;
            next += 1;
        } else {
            bin_of[code] = usize::MAX;
        }
    }
    let mut out = vec![0f64; next + 1];
    for (code, &count) in raw.iter().enumerate() {
        let b = if bin_of[code] == usize::MAX { next } else { bin_of[code] };
        out[b] += count as f64;
    }
    out
}

/// Volume LBP over the XY, XZ, YZ plane families; volume is `(z, y, x)`.
/// XZ planes put x on columns and z on rows; YZ planes put y on columns
/// and z on rows. Returns the three concatenated histograms, uniform
/// (59 bins) or raw (256).
pub fn lbp_top(volume: &Array3<f64>, neighbors: usize, radius: f64, uniform: bool) -> Vec<f64> {
    let (d, h, w) = volume.dim();
    let mut families: Vec<Vec<u64>> = Vec::new();

    let mut xy = vec![0u64; 1 << neighbors];
    for z in 0..d {
        let plane = Array2::from_shape_fn((h, w), |(y, x)| volume[[z, y, x]]);
        for (slot, v) in xy.iter_mut().zip(lbp_histogram(&plane, neighbors, radius)) {
            *slot += v;
        }
    }
    families.push(xy);

    let mut xz = vec![0u64; 1 << neighbors];
    for y in 0..h {
        let plane = Array2::from_shape_fn((d, w), |(z, x)| volume[[z, y, x]]);
        for (slot, v) in xz.iter_mut().zip(lbp_histogram(&plane, neighbors, radius)) {
            *slot += v;
        }
    }
    families.push(xz);

    let mut yz = vec![0u64; 1 << neighbors];
    for x in 0..w {
        let plane = Array2::from_shape_fn((d, h), |(z, y)| volume[[z, y, x]]);
        for (slot, v) in yz.iter_mut().zip(lbp_histogram(&plane, neighbors, radius)) {
            *slot += v;
        }
    }
    families.push(yz);

    let mut out = Vec::new();
    for hist in families {
        if uniform {
            out.extend(fold_uniform(&hist));
        } else {
            out.extend(hist.iter().map(|&c| c as f64));
        }
    }
    out
}
