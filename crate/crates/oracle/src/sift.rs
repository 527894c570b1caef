//! Naive per-pixel upright SIFT descriptor.

use ndarray::Array2;

const WINDOW: isize = 16;
const CELLS: f64 = 4.0;
const BINS: usize = 8;

fn pixel(image: &Array2<u8>, x: isize, y: isize) -> f64 {
    let (rows, cols) = image.dim();
    let xc = x.clamp(0, cols as isize - 1) as usize;
    let yc = y.clamp(0, rows as isize - 1) as usize;
    image[[yc, xc]] as f64
}

/// 128-vector at one pixel: 16x16 window, 4x4 cells, 8 orientation bins,
/// Gaussian weight sigma = 8, trilinear binning, L2 -> clip 0.2 -> L2.
/// Border handling replicates the gradient field: the sample position is
/// clamped into the image first, then differentiated.
pub fn descriptor(image: &Array2<u8>, x: usize, y: usize) -> Vec<f64> {
    let (rows, cols) = image.dim();
    let sigma = 8.0;
    let mut hist = vec![0f64; 128];
    for oy in 0..WINDOW {
        for ox in 0..WINDOW {
            let px = (x as isize + ox - 8).clamp(0, cols as isize - 1);
            let py = (y as isize + oy - 8).clamp(0, rows as isize - 1);
            let gx = (pixel(image, px + 1, py) - pixel(image, px - 1, py)) / 2.0;
            let gy = (pixel(image, px, py + 1) - pixel(image, px, py - 1)) / 2.0;
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let sx = ox as f64 - 8.0 + 0.5;
            let sy = oy as f64 - 8.0 + 0.5;
            let weight = mag * (-(sx * sx + sy * sy) / (2.0 * sigma * sigma)).exp();

            let mut theta = gy.atan2(gx);
            if theta < 0.0 {
                theta += 2.0 * std::f64::consts::PI;
            }
            let mut ob = theta / (2.0 * std::f64::consts::PI) * BINS as f64;
            if ob >= BINS as f64 {
                ob = 0.0;
            }
            let o0 = ob.floor() as usize;
            let fo = ob - o0 as f64;

            let cx = (sx + 8.0) / CELLS - 0.5;
            let cy = (sy + 8.0) / CELLS - 0.5;
            let cx0 = cx.floor();
            let cy0 = cy.floor();
            let fx = cx - cx0;
            let fy = cy - cy0;
            for (ci, wi) in [(cy0 as isize, 1.0 - fy), (cy0 as isize + 1, fy)] {
                if !(0..4).contains(&ci) || wi == 0.0 {
                    continue;
                }
                for (cj, wj) in [(cx0 as isize, 1.0 - fx), (cx0 as isize + 1, fx)] {
                    if !(0..4).contains(&cj) || wj == 0.0 {
                        continue;
                    }
                    for (bo, wo) in [(o0 % BINS, 1.0 - fo), ((o0 + 1) % BINS, fo)] {
                        hist[(ci as usize * 4 + cj as usize) * BINS + bo] += weight * wi * wj * wo;
                    }
                }
            }
        }
    }
    let norm = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return vec![0.0; 128];
    }
    for v in hist.iter_mut() {
        *v = (*v / norm).min(0.2);
    }
    let norm2 = hist.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm2 < 1e-12 {
        return vec![0.0; 128];
    }
    for v in hist.iter_mut() {
        *v /= norm2;
    }
    hist
}

/// Accumulate-then-divide mean descriptor per labeled region, labels
/// `0..count`, visiting pixels in scanline order on the given stride
/// lattice. Regions without a lattice member average all their pixels.
pub fn region_means(
    image: &Array2<u8>,
    labels: &Array2<u32>,
    count: usize,
    stride: usize,
) -> Array2<f64> {
    let (rows, cols) = image.dim();
    let mut sums = Array2::<f64>::zeros((count, 128));
    let mut counts = vec![0u64; count];
    for y in (0..rows).step_by(stride) {
        for x in (0..cols).step_by(stride) {
            let l = labels[[y, x]] as usize;
            let d = descriptor(image, x, y);
            for (j, v) in d.iter().enumerate() {
                sums[[l, j]] += v;
            }
            counts[l] += 1;
        }
    }
    for l in 0..count {
        if counts[l] == 0 {
            for y in 0..rows {
                for x in 0..cols {
                    if labels[[y, x]] as usize == l {
                        let d = descriptor(image, x, y);
                        for (j, v) in d.iter().enumerate() {
                            sums[[l, j]] += v;
                        }
                        counts[l] += 1;
                    }
                }
            }
        }
        if counts[l] > 0 {
            for j in 0..128 {
                sums[[l, j]] /= counts[l] as f64;
            }
        }
    }
    sums
}
