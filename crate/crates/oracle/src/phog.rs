//! Independent Canny + pyramid orientation histogram.

use ndarray::Array2;

/// Sobel gradients, zero on the border; integer-exact magnitudes squared.
pub fn sobel(block: &Array2<u8>) -> (Array2<i32>, Array2<i32>, Array2<i64>) {
    let (rows, cols) = block.dim();
    let mut gx = Array2::zeros((rows, cols));
    let mut gy = Array2::zeros((rows, cols));
    let mut mag_sq = Array2::zeros((rows, cols));
    for y in 1..rows - 1 {
        for x in 1..cols - 1 {
            let v = |dy: i32, dx: i32| {
                block[[(y as i32 + dy) as usize, (x as i32 + dx) as usize]] as i32
            };
            let sx = v(-1, 1) + 2 * v(0, 1) + v(1, 1) - v(-1, -1) - 2 * v(0, -1) - v(1, -1);
            let sy = v(1, -1) + 2 * v(1, 0) + v(1, 1) - v(-1, -1) - 2 * v(-1, 0) - v(-1, 1);
            gx[[y, x]] = sx;
            gy[[y, x]] = sy;
            mag_sq[[y, x]] = (sx as i64) * (sx as i64) + (sy as i64) * (sy as i64);
        }
    }
    (gx, gy, mag_sq)
}

/// Canny mask: sector-quantized non-maximum suppression, double threshold
/// `high = 0.2 max |g|`, `low = 0.4 high`, hysteresis over 8-neighbors.
pub fn canny(block: &Array2<u8>) -> Array2<bool> {
    let (gx, gy, mag_sq) = sobel(block);
    let (rows, cols) = block.dim();
    let mut mask = Array2::from_elem((rows, cols), false);
    let max_sq = mag_sq.iter().copied().max().unwrap_or(0);
    if max_sq == 0 {
        return mask;
    }
    let high = 0.2 * (max_sq as f64).sqrt();
    let low = 0.4 * high;

    let mut keep = Array2::from_elem((rows, cols), false);
    for y in 1..rows - 1 {
        for x in 1..cols - 1 {
            if mag_sq[[y, x]] == 0 {
                continue;
            }
            let mut angle = (gy[[y, x]] as f64).atan2(gx[[y, x]] as f64).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let sector = (((angle + 22.5) / 45.0).floor() as usize) % 4;
            let (a, b) = match sector {
                0 => ((y, x - 1), (y, x + 1)),
                1 => ((y - 1, x - 1), (y + 1, x + 1)),
                2 => ((y - 1, x), (y + 1, x)),
                _ => ((y - 1, x + 1), (y + 1, x - 1)),
            };
            keep[[y, x]] = mag_sq[[y, x]] >= mag_sq[a] && mag_sq[[y, x]] >= mag_sq[b];
        }
    }

    let mut frontier = Vec::new();
    for y in 0..rows {
        for x in 0..cols {
            if keep[[y, x]] && (mag_sq[[y, x]] as f64).sqrt() >= high {
                mask[[y, x]] = true;
                frontier.push((y, x));
            }
        }
    }
    while let Some((y, x)) = frontier.pop() {
        for dy in -1i32..=1 {
            for dx in -1i32..=1 {
                let ny = y as i32 + dy;
                let nx = x as i32 + dx;
                if ny < 0 || nx < 0 || ny >= rows as i32 || nx >= cols as i32 {
                    continue;
                }
                let (ny, nx) = (ny as usize, nx as usize);
                if !mask[[ny, nx]] && keep[[ny, nx]] && (mag_sq[[ny, nx]] as f64).sqrt() >= low {
                    mask[[ny, nx]] = true;
                    frontier.push((ny, nx));
                }
            }
        }
    }
    mask
}

/// Edge-gated pyramid histogram: `bins` signed-orientation bins over
/// levels 0..=`levels`, each level L1-normalized separately.
pub fn phog(block: &Array2<u8>, levels: usize, bins: usize) -> Vec<f64> {
    let (rows, cols) = block.dim();
    let (gx, gy, mag_sq) = sobel(block);
    let mask = canny(block);
    let mut out = Vec::new();
    for level in 0..=levels {
        let cells = 1usize << level;
        let mut hist = vec![0f64; cells * cells * bins];
        for y in 0..rows {
            for x in 0..cols {
                if !mask[[y, x]] {
                    continue;
                }
                let mut angle = (gy[[y, x]] as f64).atan2(gx[[y, x]] as f64).to_degrees();
                if angle < 0.0 {
                    angle += 360.0;
                }
                let bin = (((angle / 360.0) * bins as f64).floor() as usize).min(bins - 1);
                let cy = y * cells / rows;
                let cx = x * cells / cols;
                hist[(cy * cells + cx) * bins + bin] += (mag_sq[[y, x]] as f64).sqrt();
            }
        }
        let total: f64 = hist.iter().sum();
        if total > 0.0 {
            for v in hist.iter_mut() {
                *v /= total;
            }
        }
        out.extend(hist);
    }
    out
}
