//! Quadratic-time DFTs and direct circular convolution.

use ndarray::Array2;
use rustfft::num_complex::Complex;

/// Direct 2-D DFT, `O(N^4)`.
pub fn dft2(input: &Array2<Complex<f64>>) -> Array2<Complex<f64>> {
    let (rows, cols) = input.dim();
    let mut out = Array2::from_elem((rows, cols), Complex::new(0.0, 0.0));
    for ky in 0..rows {
        for kx in 0..cols {
            let mut acc = Complex::new(0.0, 0.0);
            for y in 0..rows {
                for x in 0..cols {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * (ky as f64 * y as f64 / rows as f64 + kx as f64 * x as f64 / cols as f64);
                    acc += input[[y, x]] * Complex::from_polar(1.0, phase);
                }
            }
            out[[ky, kx]] = acc;
        }
    }
    out
}

/// Direct inverse 2-D DFT with `1/(rows*cols)` normalization.
pub fn idft2(input: &Array2<Complex<f64>>) -> Array2<Complex<f64>> {
    let (rows, cols) = input.dim();
    let mut out = Array2::from_elem((rows, cols), Complex::new(0.0, 0.0));
    let norm = 1.0 / (rows * cols) as f64;
    for y in 0..rows {
        for x in 0..cols {
            let mut acc = Complex::new(0.0, 0.0);
            for ky in 0..rows {
                for kx in 0..cols {
                    let phase = 2.0
                        * std::f64::consts::PI
                        * (ky as f64 * y as f64 / rows as f64 + kx as f64 * x as f64 / cols as f64);
                    acc += input[[ky, kx]] * Complex::from_polar(1.0, phase);
                }
            }
            out[[y, x]] = acc * norm;
        }
    }
    out
}

/// Circular (periodic) spatial convolution of a real image with a complex
/// kernel: `out[y][x] = sum_pq img[p][q] k[(y-p) mod R][(x-q) mod C]`.
pub fn circular_convolve(image: &Array2<f64>, kernel: &Array2<Complex<f64>>) -> Array2<Complex<f64>> {
    let (rows, cols) = image.dim();
    let mut out = Array2::from_elem((rows, cols), Complex::new(0.0, 0.0));
    for y in 0..rows {
        for x in 0..cols {
            let mut acc = Complex::new(0.0, 0.0);
            for p in 0..rows {
                for q in 0..cols {
                    let ky = (y + rows - p) % rows;
                    let kx = (x + cols - q) % cols;
                    acc += image[[p, q]] * kernel[[ky, kx]];
                }
            }
            out[[y, x]] = acc;
        }
    }
    out
}
