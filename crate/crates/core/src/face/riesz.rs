//! First- and second-order Riesz transforms and band-pass Riesz volumes.
//!
//! In the frequency domain the 1st-order Riesz transform is the pair of
//! multipliers `H_x(u,v) = -i*u/|f|`, `H_y(u,v) = -i*v/|f|` (DC set to 0);
//! the 2nd-order transforms are their pointwise products `H_xx = H_x*H_x`,
//! `H_xy = H_x*H_y`, `H_yy = H_y*H_y` (composition of transforms is
//! multiplication of multipliers). Useful identities, both tested below:
//! `|H_x|^2 + |H_y|^2 = 1` and `H_xx + H_yy = -1` away from DC.

use crate::error::{Error, Result};
use crate::face::fft2::{bin_freq, Fft2};
use crate::face::gabor::LogGaborBank;
use ndarray::{Array2, Array3, ArrayView2};
use rustfft::num_complex::Complex;

/// Number of Riesz components (x, y, xx, xy, yy).
pub const COMPONENTS: usize = 5;

/// Frequency-domain Riesz multipliers on a square grid.
pub struct RieszTransfer {
    pub size: usize,
    /// Order: x, y, xx, xy, yy.
    pub grids: [Array2<Complex<f64>>; COMPONENTS],
}

/// Builds the five Riesz multiplier grids for a `size` x `size` block.
pub fn riesz_transfer(size: usize) -> Result<RieszTransfer> {
    if size < 8 {
        return Err(Error::InvalidArgument(format!(
            "riesz transfer needs size >= 8, got {size}"
        )));
    }
    let mut hx = Array2::from_elem((size, size), Complex::new(0.0, 0.0));
    let mut hy = hx.clone();
    for ky in 0..size {
        let v = bin_freq(ky, size);
        for kx in 0..size {
            let u = bin_freq(kx, size);
            let rho = (u * u + v * v).sqrt();
            if rho == 0.0 {
                continue;
            }
            hx[[ky, kx]] = Complex::new(0.0, -u / rho);
            hy[[ky, kx]] = Complex::new(0.0, -v / rho);
        }
    }
    let hxx = &hx * &hx;
    let hxy = &hx * &hy;
    let hyy = &hy * &hy;
    Ok(RieszTransfer {
        size,
        grids: [hx, hy, hxx, hxy, hyy],
    })
}

/// The five real volumes produced by filtering one block with the full
/// log-Gabor bank and each Riesz component. Volume `t` has shape
/// `(40, block, block)`: slice k is scale `k / 8`, orientation `k % 8`
/// (scale-major, orientation varies fastest).
pub struct RieszVolumeSet {
    pub volumes: [Array3<f64>; COMPONENTS],
}

/// Precomputed filtering engine for one block size.
///
/// For a real input block, `Re(ifft(F . G . H))` equals `ifft(F . M)` where
/// `M` is the Hermitian part of `G . H` under frequency negation. The
/// engine stores those symmetrized multipliers with consecutive bank
/// filters packed into the real/imaginary parts of one grid, so every
/// inverse transform yields two slices at once.
pub struct RieszEngine {
    size: usize,
    fft: Fft2,
    /// `paired[t][j]` combines bank filters `2j` (real lane) and `2j+1`
    /// (imaginary lane) for Riesz component `t`.
    paired: Vec<Vec<Array2<Complex<f64>>>>,
    filters: usize,
}

impl RieszEngine {
    pub fn new(bank: &LogGaborBank) -> Result<Self> {
        let size = bank.size;
        let riesz = riesz_transfer(size)?;
        let filters = bank.transfer.len();
        if filters % 2 != 0 {
            return Err(Error::InvalidArgument("bank size must be even".into()));
        }
        let neg = |k: usize| (size - k) % size;
        let mut paired = Vec::with_capacity(COMPONENTS);
        for grids in riesz.grids.iter() {
            let mut component = Vec::with_capacity(filters / 2);
            for j in 0..filters / 2 {
                let mut pack = Array2::from_elem((size, size), Complex::new(0.0, 0.0));
                for (lane, &f_idx) in [2 * j, 2 * j + 1].iter().enumerate() {
                    let gabor = &bank.transfer[f_idx];
                    for ky in 0..size {
                        for kx in 0..size {
                            let m = gabor[[ky, kx]] * grids[[ky, kx]];
                            let m_neg = gabor[[neg(ky), neg(kx)]] * grids[[neg(ky), neg(kx)]];
                            let herm = 0.5 * (m + m_neg.conj());
                            pack[[ky, kx]] += if lane == 0 {
                                herm
                            } else {
                                herm * Complex::new(0.0, 1.0)
                            };
                        }
                    }
                }
                component.push(pack);
            }
            paired.push(component);
        }
        Ok(RieszEngine {
            size,
            fft: Fft2::new(size, size),
            paired,
            filters,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Filters one grayscale block into the five Riesz volumes.
    pub fn volumes(&self, block: &ArrayView2<f64>) -> Result<RieszVolumeSet> {
        let (h, w) = block.dim();
        if h != self.size || w != self.size {
            return Err(Error::DimensionMismatch {
                expected: self.size,
                got: h.max(w),
            });
        }
        let n = self.size * self.size;
        let mut spectrum: Vec<Complex<f64>> = block.iter().map(|&v| Complex::new(v, 0.0)).collect();
        let mut scratch = Vec::new();
        self.fft.forward(&mut spectrum, &mut scratch);

        let mut work = vec![Complex::new(0.0, 0.0); n];
        let volumes: [Array3<f64>; COMPONENTS] = std::array::from_fn(|t| {
            let mut volume = Array3::zeros((self.filters, self.size, self.size));
            for (j, pack) in self.paired[t].iter().enumerate() {
                let pack_flat = pack.as_slice().expect("contiguous");
                for ((dst, &f), &m) in work.iter_mut().zip(&spectrum).zip(pack_flat) {
                    *dst = f * m;
                }
                self.fft.inverse(&mut work, &mut scratch);
                let (mut even, mut odd) = volume.multi_slice_mut((
                    ndarray::s![2 * j, .., ..],
                    ndarray::s![2 * j + 1, .., ..],
                ));
                let even_flat = even.as_slice_mut().expect("contiguous");
                let odd_flat = odd.as_slice_mut().expect("contiguous");
                for (k, &v) in work.iter().enumerate() {
                    even_flat[k] = v.re;
                    odd_flat[k] = v.im;
                }
            }
            volume
        });
        Ok(RieszVolumeSet { volumes })
    }
}

/// One-shot convenience wrapper over [`RieszEngine`].
pub fn riesz_volumes(block: &ArrayView2<f64>, bank: &LogGaborBank) -> Result<RieszVolumeSet> {
    RieszEngine::new(bank)?.volumes(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::face::gabor::{build_log_gabor_bank, LogGaborParams};
    use ndarray::Array2;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn unit_energy_identity() {
        let t = riesz_transfer(16).unwrap();
        for ky in 0..16 {
            for kx in 0..16 {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let e = t.grids[0][[ky, kx]].norm_sqr() + t.grids[1][[ky, kx]].norm_sqr();
                assert!((e - 1.0).abs() < 1e-12, "energy {e} at ({ky},{kx})");
            }
        }
    }

    #[test]
    fn laplacian_identity() {
        let t = riesz_transfer(24).unwrap();
        for ky in 0..24 {
            for kx in 0..24 {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let s = t.grids[2][[ky, kx]] + t.grids[4][[ky, kx]];
                assert!((s - Complex::new(-1.0, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_image_gives_zero_volumes() {
        let bank = build_log_gabor_bank(16, LogGaborParams::default()).unwrap();
        let block = Array2::zeros((16, 16));
        let set = riesz_volumes(&block.view(), &bank).unwrap();
        for vol in &set.volumes {
            assert!(vol.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn linear_in_input() {
        let bank = build_log_gabor_bank(16, LogGaborParams::default()).unwrap();
        let engine = RieszEngine::new(&bank).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let a = Array2::from_shape_fn((16, 16), |_| rng.gen_range(-1.0..1.0));
        let b = Array2::from_shape_fn((16, 16), |_| rng.gen_range(-1.0..1.0));
        let sum = &a + &b;
        let va = engine.volumes(&a.view()).unwrap();
        let vb = engine.volumes(&b.view()).unwrap();
        let vs = engine.volumes(&sum.view()).unwrap();
        for t in 0..COMPONENTS {
            let max_diff = va.volumes[t]
                .iter()
                .zip(vb.volumes[t].iter())
                .zip(vs.volumes[t].iter())
                .map(|((x, y), s)| (x + y - s).abs())
                .fold(0.0f64, f64::max);
            assert!(max_diff < 1e-10, "superposition violated by {max_diff}");
        }
    }

    #[test]
    fn constant_along_y_kills_ry() {
        let bank = build_log_gabor_bank(16, LogGaborParams::default()).unwrap();
        // f(x) only: every column constant
        let block = Array2::from_shape_fn((16, 16), |(_, x)| ((x as f64) * 0.9).sin() * 7.0);
        let set = riesz_volumes(&block.view(), &bank).unwrap();
        let max_ry = set.volumes[1].iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        assert!(max_ry < 1e-10, "R_y response {max_ry} should vanish");
    }

    #[test]
    fn doubling_input_doubles_slices() {
        let bank = build_log_gabor_bank(16, LogGaborParams::default()).unwrap();
        let engine = RieszEngine::new(&bank).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let a = Array2::from_shape_fn((16, 16), |_| rng.gen_range(0.0..255.0));
        let doubled = a.mapv(|v| v * 2.0);
        let va = engine.volumes(&a.view()).unwrap();
        let vd = engine.volumes(&doubled.view()).unwrap();
        for t in 0..COMPONENTS {
            let max_diff = va.volumes[t]
                .iter()
                .zip(vd.volumes[t].iter())
                .map(|(x, d)| (2.0 * x - d).abs())
                .fold(0.0f64, f64::max);
            assert!(max_diff < 1e-9);
        }
    }
}
