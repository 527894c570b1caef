//! Small raster helpers: grayscale conversion, cropping, bilinear resize.
//!
//! All descriptor paths start from the same grayscale definition
//! (`luma = 0.299 R + 0.587 G + 0.114 B`, rounded to nearest) and the same
//! bilinear resampling, so the whole pipeline stays bit-deterministic.

use crate::error::{Error, Result};
use crate::geom::Rect;
use image::{GrayImage, RgbImage};
use ndarray::Array2;

/// Rec. 601 luma, rounded to the nearest integer.
pub fn to_gray(img: &RgbImage) -> GrayImage {
    let (w, h) = img.dimensions();
    let mut out = GrayImage::new(w, h);
    for (src, dst) in img.pixels().zip(out.pixels_mut()) {
        let [r, g, b] = src.0;
        let luma = 0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64;
        dst.0 = [luma.round() as u8];
    }
    out
}

/// Crops `rect` out of a grayscale image. The rect must lie inside.
pub fn crop_gray(img: &GrayImage, rect: Rect) -> Result<GrayImage> {
    let (w, h) = img.dimensions();
    if !rect.fits_in(w, h) {
        return Err(Error::InvalidArgument(format!(
            "crop {rect:?} outside {w}x{h} image"
        )));
    }
    let mut out = GrayImage::new(rect.w, rect.h);
    for y in 0..rect.h {
        for x in 0..rect.w {
            out.put_pixel(x, y, *img.get_pixel(rect.x + x, rect.y + y));
        }
    }
    Ok(out)
}

/// Classic bilinear resize with half-pixel centers; output rounded to u8.
pub fn resize_bilinear(img: &GrayImage, out_w: u32, out_h: u32) -> GrayImage {
    let (w, h) = img.dimensions();
    let mut out = GrayImage::new(out_w, out_h);
    let sx = w as f64 / out_w as f64;
    let sy = h as f64 / out_h as f64;
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (h - 1) as f64);
        let y0 = fy.floor() as u32;
        let y1 = (y0 + 1).min(h - 1);
        let wy = fy - y0 as f64;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (w - 1) as f64);
            let x0 = fx.floor() as u32;
            let x1 = (x0 + 1).min(w - 1);
            let wx = fx - x0 as f64;
            let p00 = img.get_pixel(x0, y0).0[0] as f64;
            let p01 = img.get_pixel(x1, y0).0[0] as f64;
            let p10 = img.get_pixel(x0, y1).0[0] as f64;
            let p11 = img.get_pixel(x1, y1).0[0] as f64;
            let top = (1.0 - wx) * p00 + wx * p01;
            let bot = (1.0 - wx) * p10 + wx * p11;
            let v = (1.0 - wy) * top + wy * bot;
            out.put_pixel(ox, oy, image::Luma([v.round() as u8]));
        }
    }
    out
}

/// Crops a detection box and brings it to the canonical 128x128 size all
/// face/body descriptors expect.
pub fn crop_to_canonical(img: &GrayImage, rect: Rect, side: u32) -> Result<GrayImage> {
    let patch = crop_gray(img, rect)?;
    if patch.dimensions() == (side, side) {
        return Ok(patch);
    }
    Ok(resize_bilinear(&patch, side, side))
}

/// Grayscale image as an `f64` matrix (rows = y).
pub fn gray_to_array(img: &GrayImage) -> Array2<f64> {
    let (w, h) = img.dimensions();
    Array2::from_shape_fn((h as usize, w as usize), |(y, x)| {
        img.get_pixel(x as u32, y as u32).0[0] as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn luma_rounding() {
        let mut img = RgbImage::new(1, 1);
        img.put_pixel(0, 0, image::Rgb([100, 150, 200]));
        let gray = to_gray(&img);
        // 0.299*100 + 0.587*150 + 0.114*200 = 140.75 -> 141
        assert_eq!(gray.get_pixel(0, 0).0[0], 141);
    }

    #[test]
    fn identity_resize() {
        let img = GrayImage::from_fn(13, 9, |x, y| image::Luma([(x * 17 + y * 3) as u8]));
        let same = resize_bilinear(&img, 13, 9);
        assert_eq!(img, same);
    }

    #[test]
    fn upscale_constant_stays_constant() {
        let img = GrayImage::from_pixel(5, 5, image::Luma([77]));
        let big = resize_bilinear(&img, 128, 128);
        assert!(big.pixels().all(|p| p.0[0] == 77));
    }

    #[test]
    fn crop_bounds_checked() {
        let img = GrayImage::new(10, 10);
        assert!(crop_gray(&img, Rect { x: 5, y: 5, w: 6, h: 2 }).is_err());
        assert!(crop_gray(&img, Rect { x: 5, y: 5, w: 5, h: 5 }).is_ok());
    }
}
