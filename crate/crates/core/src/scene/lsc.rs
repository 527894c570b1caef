//! Superpixel segmentation by weighted kernel k-means in a sinusoidally
//! lifted color-plus-position space.
//!
//! Every pixel maps to a 10-D feature: the CIELAB channels and the two
//! spatial coordinates are each normalized to [0, 1], lifted to a
//! `(cos(pi/2 * t), sin(pi/2 * t))` pair, and scaled (color weight 20 for
//! L, 20 * 2.55 for a/b; spatial weight 20 * ratio). Clustering runs
//! k-means on this embedding with per-pixel weights `w(p) = phi(p) . sum_q
//! phi(q)`, seeds on a regular grid, and a local search window per cluster.
//! A connectivity pass then merges fragments into their largest neighbor
//! until every region is 4-connected, at least a quarter of the mean seed
//! area, and the region count does not exceed the seed count.

use crate::error::{Error, Result};
use crate::scene::lab::srgb_to_lab;
use image::RgbImage;
use ndarray::Array2;
use std::f64::consts::FRAC_PI_2;

pub const DEFAULT_RATIO: f64 = 0.075;
const COLOR_WEIGHT: f64 = 20.0;
const AB_BOOST: f64 = 2.55;
const ITERATIONS: usize = 10;
const DIM: usize = 10;

/// Dense superpixel labeling of one image.
#[derive(Debug, Clone)]
pub struct SuperpixelMap {
    /// Label per pixel, dense in `[0, count)`.
    pub labels: Array2<u32>,
    pub count: usize,
}

impl SuperpixelMap {
    pub fn width(&self) -> usize {
        self.labels.ncols()
    }

    pub fn height(&self) -> usize {
        self.labels.nrows()
    }

    /// Pixel count per label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count];
        for &l in self.labels.iter() {
            sizes[l as usize] += 1;
        }
        sizes
    }

    /// Writes the labeling as a PNG with one arbitrary color per label,
    /// for visual inspection.
    pub fn save_debug_png(&self, path: &std::path::Path) -> Result<()> {
        let mut img = RgbImage::new(self.width() as u32, self.height() as u32);
        for (y, row) in self.labels.rows().into_iter().enumerate() {
            for (x, &l) in row.iter().enumerate() {
                let h = (l as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
                img.put_pixel(
                    x as u32,
                    y as u32,
                    image::Rgb([(h >> 16) as u8, (h >> 32) as u8, (h >> 48) as u8]),
                );
            }
        }
        img.save(path).map_err(|e| Error::Image {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Segments `image` into at most `target_count` superpixels.
pub fn lsc_segment(image: &RgbImage, target_count: usize) -> Result<SuperpixelMap> {
    lsc_segment_with_ratio(image, target_count, DEFAULT_RATIO)
}

pub fn lsc_segment_with_ratio(
    image: &RgbImage,
    target_count: usize,
    ratio: f64,
) -> Result<SuperpixelMap> {
    let (w, h) = image.dimensions();
    let (w, h) = (w as usize, h as usize);
    let n = w * h;
    if target_count == 0 {
        return Err(Error::InvalidArgument("target_count must be >= 1".into()));
    }
    if n < target_count {
        return Err(Error::TooFewSamples {
            need: target_count,
            have: n,
        });
    }

    // seed grid: ny * nx <= target_count
    let ny = (((target_count as f64) * h as f64 / w as f64).sqrt().floor() as usize).max(1);
    let nx = (target_count / ny).max(1);
    let k = nx * ny;

    let features = embed(image, ratio);
    let weights: Vec<f64> = {
        let mut sum = [0f64; DIM];
        for p in 0..n {
            for d in 0..DIM {
                sum[d] += features[p * DIM + d];
            }
        }
        (0..n)
            .map(|p| (0..DIM).map(|d| features[p * DIM + d] * sum[d]).sum())
            .collect()
    };

    // initial labels: nearest grid cell
    let mut labels: Vec<u32> = (0..n)
        .map(|p| {
            let (y, x) = (p / w, p % w);
            let cy = (y * ny / h).min(ny - 1);
            let cx = (x * nx / w).min(nx - 1);
            (cy * nx + cx) as u32
        })
        .collect();

    let step = ((n as f64 / k as f64).sqrt().ceil() as usize).max(1);
    let mut centers = vec![0f64; k * DIM];
    let mut centroids = vec![(0f64, 0f64); k];
    let mut best = vec![f64::INFINITY; n];

    for _ in 0..ITERATIONS {
        // update centers from current labels
        let mut acc = vec![0f64; k * DIM];
        let mut wsum = vec![0f64; k];
        let mut xsum = vec![0f64; k];
        let mut ysum = vec![0f64; k];
        for p in 0..n {
            let l = labels[p] as usize;
            let wp = weights[p];
            for d in 0..DIM {
                acc[l * DIM + d] += wp * features[p * DIM + d];
            }
            wsum[l] += wp;
            xsum[l] += wp * (p % w) as f64;
            ysum[l] += wp * (p / w) as f64;
        }
        for c in 0..k {
            if wsum[c] > 0.0 {
                for d in 0..DIM {
                    centers[c * DIM + d] = acc[c * DIM + d] / wsum[c];
                }
                centroids[c] = (xsum[c] / wsum[c], ysum[c] / wsum[c]);
            }
        }
        // local window assignment
        best.iter_mut().for_each(|b| *b = f64::INFINITY);
        for c in 0..k {
            let (cx, cy) = centroids[c];
            let x0 = (cx as isize - 2 * step as isize).max(0) as usize;
            let x1 = ((cx as isize + 2 * step as isize) as usize).min(w - 1);
            let y0 = (cy as isize - 2 * step as isize).max(0) as usize;
            let y1 = ((cy as isize + 2 * step as isize) as usize).min(h - 1);
            let center = &centers[c * DIM..(c + 1) * DIM];
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = y * w + x;
                    let f = &features[p * DIM..(p + 1) * DIM];
                    let mut dist = 0.0;
                    for d in 0..DIM {
                        let diff = f[d] - center[d];
                        dist += diff * diff;
                    }
                    if dist < best[p] {
                        best[p] = dist;
                        labels[p] = c as u32;
                    }
                }
            }
        }
    }

    let labels = enforce_connectivity(&labels, w, h, k);
    let count = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    Ok(SuperpixelMap {
        labels: Array2::from_shape_vec((h, w), labels).expect("shape"),
        count,
    })
}

fn embed(image: &RgbImage, ratio: f64) -> Vec<f64> {
    let (w, h) = image.dimensions();
    let (w, h) = (w as usize, h as usize);
    let spatial_weight = COLOR_WEIGHT * ratio;
    let mut features = vec![0f64; w * h * DIM];
    let lift = |t: f64, scale: f64, out: &mut [f64]| {
        let angle = FRAC_PI_2 * t.clamp(0.0, 1.0);
        out[0] = scale * angle.cos();
        out[1] = scale * angle.sin();
    };
    for (p, pixel) in image.pixels().enumerate() {
        let [r, g, b] = pixel.0;
        let (l, a, bb) = srgb_to_lab(r, g, b);
        let f = &mut features[p * DIM..(p + 1) * DIM];
        lift(l / 100.0, COLOR_WEIGHT, &mut f[0..2]);
        lift((a + 128.0) / 255.0, COLOR_WEIGHT * AB_BOOST, &mut f[2..4]);
        lift((bb + 128.0) / 255.0, COLOR_WEIGHT * AB_BOOST, &mut f[4..6]);
        let x = p % w;
        let y = p / w;
        let xn = if w > 1 { x as f64 / (w - 1) as f64 } else { 0.0 };
        let yn = if h > 1 { y as f64 / (h - 1) as f64 } else { 0.0 };
        lift(xn, spatial_weight, &mut f[6..8]);
        lift(yn, spatial_weight, &mut f[8..10]);
    }
    features
}

/// Splits the labeling into 4-connected components, then merges undersized
/// components (and surplus ones, smallest first) into their largest
/// neighbor. Final labels are dense, in scanline order of first occurrence.
fn enforce_connectivity(labels: &[u32], w: usize, h: usize, k: usize) -> Vec<u32> {
    let n = w * h;
    let mut comp = vec![usize::MAX; n];
    let mut sizes: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let cluster = labels[start];
        comp[start] = id;
        stack.push(start);
        let mut size = 0usize;
        while let Some(p) = stack.pop() {
            size += 1;
            let (y, x) = (p / w, p % w);
            let mut visit = |q: usize| {
                if comp[q] == usize::MAX && labels[q] == cluster {
                    comp[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        sizes.push(size);
    }

    // adjacency between components
    let c = sizes.len();
    let mut adjacency: Vec<std::collections::BTreeSet<usize>> = vec![Default::default(); c];
    for p in 0..n {
        let (y, x) = (p / w, p % w);
        if x + 1 < w && comp[p] != comp[p + 1] {
            adjacency[comp[p]].insert(comp[p + 1]);
            adjacency[comp[p + 1]].insert(comp[p]);
        }
        if y + 1 < h && comp[p] != comp[p + w] {
            adjacency[comp[p]].insert(comp[p + w]);
            adjacency[comp[p + w]].insert(comp[p]);
        }
    }

    let min_size = (n / (4 * k)).max(1);
    // union-find over components
    let mut parent: Vec<usize> = (0..c).collect();
    fn find(parent: &mut Vec<usize>, a: usize) -> usize {
        let mut root = a;
        while parent[root] != root {
            root = parent[root];
        }
        let mut cur = a;
        while parent[cur] != root {
            let next = parent[cur];
            parent[cur] = root;
            cur = next;
        }
        root
    }

    let mut alive = c;
    loop {
        // smallest live component that violates size or count constraints
        let mut candidate: Option<(usize, usize)> = None;
        for id in 0..c {
            if find(&mut parent, id) != id {
                continue;
            }
            if sizes[id] < min_size || alive > k {
                match candidate {
                    Some((best_size, _)) if best_size <= sizes[id] => {}
                    _ => candidate = Some((sizes[id], id)),
                }
            }
        }
        let Some((_, victim)) = candidate else { break };
        if alive == 1 {
            break;
        }
        // largest neighbor (by size, then lowest id)
        let mut target: Option<(usize, usize)> = None;
        for &nb in adjacency[victim].clone().iter() {
            let root = find(&mut parent, nb);
            if root == victim {
                continue;
            }
            let better = match target {
                None => true,
                Some((sz, id)) => sizes[root] > sz || (sizes[root] == sz && root < id),
            };
            if better {
                target = Some((sizes[root], root));
            }
        }
        let Some((_, into)) = target else { break };
        parent[victim] = into;
        sizes[into] += sizes[victim];
        let moved: Vec<usize> = adjacency[victim].iter().copied().collect();
        for nb in moved {
            let root = find(&mut parent, nb);
            if root != into {
                adjacency[into].insert(root);
                adjacency[root].insert(into);
            }
        }
        alive -= 1;
    }

    // dense relabel in scanline first-occurrence order
    let mut remap: Vec<u32> = vec![u32::MAX; c];
    let mut next = 0u32;
    let mut out = vec![0u32; n];
    for p in 0..n {
        let root = find(&mut parent, comp[p]);
        if remap[root] == u32::MAX {
            remap[root] = next;
            next += 1;
        }
        out[p] = remap[root];
    }
    out
}
