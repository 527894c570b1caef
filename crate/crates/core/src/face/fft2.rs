//! Minimal 2-D FFT on top of rustfft, with cached plans.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2 {
    rows: usize,
    cols: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            rows,
            cols,
            fwd_row: planner.plan_fft_forward(cols),
            fwd_col: planner.plan_fft_forward(rows),
            inv_row: planner.plan_fft_inverse(cols),
            inv_col: planner.plan_fft_inverse(rows),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// In-place forward transform of a row-major `rows x cols` buffer.
    pub fn forward(&self, data: &mut [Complex<f64>], scratch: &mut Vec<Complex<f64>>) {
        self.pass(data, scratch, true);
    }

    /// In-place inverse transform, normalized by `1/(rows*cols)` so that
    /// `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex<f64>], scratch: &mut Vec<Complex<f64>>) {
        self.pass(data, scratch, false);
        let norm = 1.0 / (self.rows * self.cols) as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    fn pass(&self, data: &mut [Complex<f64>], scratch: &mut Vec<Complex<f64>>, forward: bool) {
        assert_eq!(data.len(), self.rows * self.cols);
        let (row_fft, col_fft) = if forward {
            (&self.fwd_row, &self.fwd_col)
        } else {
            (&self.inv_row, &self.inv_col)
        };
        let needed = self.rows * self.cols
            + row_fft
                .get_inplace_scratch_len()
                .max(col_fft.get_inplace_scratch_len());
        if scratch.len() < needed {
            scratch.resize(needed, Complex::default());
        }
        let (transpose, fft_scratch) = scratch.split_at_mut(self.rows * self.cols);

        for row in data.chunks_exact_mut(self.cols) {
            row_fft.process_with_scratch(row, fft_scratch);
        }
        transpose_into(data, transpose, self.rows, self.cols);
        for col in transpose.chunks_exact_mut(self.rows) {
            col_fft.process_with_scratch(col, fft_scratch);
        }
        transpose_into(transpose, data, self.cols, self.rows);
    }
}

fn transpose_into(src: &[Complex<f64>], dst: &mut [Complex<f64>], rows: usize, cols: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Signed frequency (cycles per sample) of DFT bin `k` out of `n`.
pub fn bin_freq(k: usize, n: usize) -> f64 {
    let half = n / 2;
    if k <= half {
        k as f64 / n as f64
    } else {
        (k as f64 - n as f64) / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let fft = Fft2::new(8, 12);
        let mut data: Vec<Complex<f64>> = (0..96)
            .map(|i| Complex::new((i as f64 * 0.37).sin(), 0.0))
            .collect();
        let orig = data.clone();
        let mut scratch = Vec::new();
        fft.forward(&mut data, &mut scratch);
        fft.inverse(&mut data, &mut scratch);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let fft = Fft2::new(4, 4);
        let mut data = vec![Complex::default(); 16];
        data[0] = Complex::new(1.0, 0.0);
        let mut scratch = Vec::new();
        fft.forward(&mut data, &mut scratch);
        for v in &data {
            assert!((v - Complex::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn freq_axis_convention() {
        assert_eq!(bin_freq(0, 8), 0.0);
        assert_eq!(bin_freq(4, 8), 0.5);
        assert_eq!(bin_freq(5, 8), -3.0 / 8.0);
        assert_eq!(bin_freq(7, 8), -1.0 / 8.0);
    }
}
