//! Exact near-field LOS channel synthesis.
//!
//! The UE sits in the radiative near-field, so the wavefront is spherical:
//! each antenna sees a phase set by its exact distance to the UE. No
//! Fresnel or far-field approximation is applied anywhere; distances use
//! the full square-root expression.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, TAU};

use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;

/// Length-`L*N` complex vector in stacking order: subarray-major, raster
/// scan within each subarray. Synthesized normalized channels have
/// unit-modulus entries; estimates generally do not.
pub type ChannelVector = DVector<Complex64>;

/// UE position in spherical coordinates relative to the global origin
/// (the reference corner of the array).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UePlacement {
    /// Azimuth in radians, front-facing hemisphere only.
    pub azimuth: f64,
    /// Elevation in radians.
    pub elevation: f64,
    /// Range from the global origin in meters.
    pub range: f64,
}

impl UePlacement {
    pub fn new(azimuth: f64, elevation: f64, range: f64) -> Result<Self> {
        if !azimuth.is_finite() || azimuth.abs() > FRAC_PI_2 {
            return Err(Error::input(format!(
                "azimuth {azimuth} outside [-pi/2, pi/2]"
            )));
        }
        if !elevation.is_finite() || elevation.abs() > FRAC_PI_2 {
            return Err(Error::input(format!(
                "elevation {elevation} outside [-pi/2, pi/2]"
            )));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::input(format!("range {range} must be positive")));
        }
        Ok(UePlacement {
            azimuth,
            elevation,
            range,
        })
    }
}

/// Exact distance in meters between the UE and antenna `n` of subarray `l`.
pub fn distance_to_antenna(
    cfg: &ArrayConfig,
    placement: &UePlacement,
    l: usize,
    n: usize,
) -> Result<f64> {
    let idx = cfg.antenna_indices(l, n)?;
    if !(placement.range > 0.0) {
        return Err(Error::input("range must be positive"));
    }
    Ok(distance_for_grid_cell(cfg, placement, idx.i, idx.j))
}

fn distance_for_grid_cell(cfg: &ArrayConfig, placement: &UePlacement, i: usize, j: usize) -> f64 {
    let (sin_phi, cos_phi) = placement.azimuth.sin_cos();
    let (sin_theta, cos_theta) = placement.elevation.sin_cos();
    let r = placement.range;
    let x = r * cos_theta * cos_phi;
    let y = r * cos_theta * sin_phi - i as f64 * cfg.delta;
    let z = r * sin_theta - j as f64 * cfg.delta;
    (x * x + y * y + z * z).sqrt()
}

/// Near-field response of subarray `l`: entry `n` is
/// `exp(-i * 2*pi/lambda * (r_{l,n} - r))`. All entries are unit modulus;
/// the entry of an antenna at the origin is exactly 1.
pub fn subarray_response(
    cfg: &ArrayConfig,
    placement: &UePlacement,
    l: usize,
) -> Result<Vec<Complex64>> {
    if !(placement.range > 0.0) {
        return Err(Error::input("range must be positive"));
    }
    let n_per = cfg.antennas_per_subarray();
    let mut out = Vec::with_capacity(n_per);
    let k = TAU / cfg.wavelength;
    for n in 1..=n_per {
        let idx = cfg.antenna_indices(l, n)?;
        if idx.i == 0 && idx.j == 0 {
            // Phase reference: the origin antenna is exactly 1 regardless of
            // rounding in the distance computation.
            out.push(Complex64::new(1.0, 0.0));
            continue;
        }
        let d = distance_for_grid_cell(cfg, placement, idx.i, idx.j);
        let phase = -k * (d - placement.range);
        out.push(Complex64::from_polar(1.0, phase));
    }
    Ok(out)
}

/// Full stacked channel `sqrt(beta) * [b_1; ...; b_L]`. With `beta = 1`
/// this is the normalized channel: unit-modulus entries, squared norm `L*N`.
pub fn full_channel(cfg: &ArrayConfig, placement: &UePlacement, beta: f64) -> Result<ChannelVector> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::input(format!("channel gain beta {beta} must be positive")));
    }
    let scale = beta.sqrt();
    let mut entries = Vec::with_capacity(cfg.total_antennas());
    for l in 1..=cfg.subarrays() {
        let block = subarray_response(cfg, placement, l)?;
        entries.extend(block.into_iter().map(|b| scale * b));
    }
    Ok(DVector::from_vec(entries))
}

/// Distortion-free pilot observation at the LNA inputs, one block per
/// subarray: `y_l = sqrt(p*beta) * b_l + w_l`. The noise vector is supplied
/// by the caller (length `L*N`, stacking order) so trials replay
/// deterministically; stacking the returned blocks equals
/// `sqrt(p*beta) * h_bar + w`.
pub fn ideal_pilot_observation(
    cfg: &ArrayConfig,
    placement: &UePlacement,
    p: f64,
    beta: f64,
    noise: &[Complex64],
) -> Result<Vec<Vec<Complex64>>> {
    if noise.len() != cfg.total_antennas() {
        return Err(Error::Dimension {
            expected: cfg.total_antennas(),
            got: noise.len(),
        });
    }
    if !(p >= 0.0) || !(beta > 0.0) {
        return Err(Error::input("p must be non-negative and beta positive"));
    }
    let amp = (p * beta).sqrt();
    let n_per = cfg.antennas_per_subarray();
    let mut blocks = Vec::with_capacity(cfg.subarrays());
    for l in 1..=cfg.subarrays() {
        let b = subarray_response(cfg, placement, l)?;
        let w = &noise[(l - 1) * n_per..l * n_per];
        blocks.push(
            b.iter()
                .zip(w)
                .map(|(b_n, w_n)| amp * b_n + w_n)
                .collect(),
        );
    }
    Ok(blocks)
}
