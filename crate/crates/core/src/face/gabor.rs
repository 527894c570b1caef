//! Log-Gabor filter bank, defined directly in the frequency domain.
//!
//! 5 scales x 8 orientations. The radial profile is log-Gaussian around
//! each scale's center frequency, the angular profile Gaussian around each
//! orientation, and the DC bin is zero by construction (a log-Gabor filter
//! has no DC response).

use crate::error::{Error, Result};
use crate::face::fft2::bin_freq;
use ndarray::Array2;

pub const SCALES: usize = 5;
pub const ORIENTATIONS: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct LogGaborParams {
    /// Wavelength of the finest-scale filter, in pixels.
    pub min_wavelength: f64,
    /// Wavelength multiplier between scales.
    pub mult: f64,
    /// Ratio sigma/f0 of the log-Gaussian radial profile.
    pub sigma_on_f: f64,
    /// Angular standard deviation as a fraction of the orientation spacing.
    pub angular_sigma_factor: f64,
}

impl Default for LogGaborParams {
    fn default() -> Self {
        LogGaborParams {
            min_wavelength: 3.0,
            mult: 2.0,
            sigma_on_f: 0.65,
            angular_sigma_factor: 0.6,
        }
    }
}

/// Frequency-domain transfer functions for all 40 (scale, orientation)
/// pairs on a square `size` x `size` grid. The gains are real-valued;
/// `transfer[s * ORIENTATIONS + o]` is scale `s`, orientation `o`
/// (orientation varies fastest).
pub struct LogGaborBank {
    pub size: usize,
    pub params: LogGaborParams,
    pub transfer: Vec<Array2<f64>>,
}

/// Builds the bank for a `size` x `size` block.
pub fn build_log_gabor_bank(size: usize, params: LogGaborParams) -> Result<LogGaborBank> {
    if size < 8 {
        return Err(Error::InvalidArgument(format!(
            "log-Gabor bank needs size >= 8, got {size}"
        )));
    }
    let spacing = std::f64::consts::PI / ORIENTATIONS as f64;
    let sigma_theta = params.angular_sigma_factor * spacing;
    let log_sigma = params.sigma_on_f.ln();
    let radial_denom = 2.0 * log_sigma * log_sigma;

    let mut transfer = Vec::with_capacity(SCALES * ORIENTATIONS);
    for s in 0..SCALES {
        let f0 = 1.0 / (params.min_wavelength * params.mult.powi(s as i32));
        for o in 0..ORIENTATIONS {
            let phi = o as f64 * spacing;
            let mut grid = Array2::zeros((size, size));
            for ky in 0..size {
                let v = bin_freq(ky, size);
                for kx in 0..size {
                    let u = bin_freq(kx, size);
                    let rho = (u * u + v * v).sqrt();
                    if rho == 0.0 {
                        continue; // zero DC
                    }
                    let radial = (-(rho / f0).ln().powi(2) / radial_denom).exp();
                    let theta = v.atan2(u);
                    let d = theta - phi;
                    let dtheta = d.sin().atan2(d.cos()).abs();
                    let angular = (-dtheta * dtheta / (2.0 * sigma_theta * sigma_theta)).exp();
                    grid[[ky, kx]] = radial * angular;
                }
            }
            transfer.push(grid);
        }
    }
    Ok(LogGaborBank {
        size,
        params,
        transfer,
    })
}
