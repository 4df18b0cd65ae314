//! Third-order quasi-memoryless LNA distortion.
//!
//! Every antenna branch applies `y -> a1*y + a2/E{|y|^2} * |y|^2 * y`,
//! where the AGC normalization `E{|y|^2} = p*beta + sigma^2` is known in
//! closed form. In the impaired signal model the true response vector is
//! scaled by the effective gain `alpha`, which estimators divide out.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex coefficients of the third-order LNA model. All branches share
/// one parameter set by default; per-subarray overrides are possible by
/// distorting each block with its own `LnaParams`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LnaParams {
    pub a1: Complex64,
    pub a2: Complex64,
}

impl LnaParams {
    pub fn new(a1: Complex64, a2: Complex64) -> Result<Self> {
        if a1 == Complex64::new(0.0, 0.0) {
            return Err(Error::input("a1 must be nonzero: estimators divide by alpha"));
        }
        Ok(LnaParams { a1, a2 })
    }

    /// Ideal hardware: the distortion stage is the identity.
    pub fn perfect() -> Self {
        LnaParams {
            a1: Complex64::new(1.0, 0.0),
            a2: Complex64::new(0.0, 0.0),
        }
    }
}

impl Default for LnaParams {
    /// Measured third-order coefficients used throughout the experiments.
    fn default() -> Self {
        LnaParams {
            a1: Complex64::new(1.065, 0.0),
            a2: Complex64::new(-0.028, 0.0),
        }
    }
}

/// Expected LNA input power `E{|y|^2} = p*beta + sigma^2`.
pub fn input_power(p: f64, beta: f64, sigma2: f64) -> f64 {
    p * beta + sigma2
}

/// Distort one sample: `a1*y + a2/(p*beta + sigma^2) * |y|^2 * y`.
pub fn lna_distort_scalar(y: Complex64, lna: &LnaParams, pb: f64, sigma2: f64) -> Result<Complex64> {
    let agc = pb + sigma2;
    if !(agc > 0.0) {
        return Err(Error::input("AGC power p*beta + sigma^2 must be positive"));
    }
    Ok(lna.a1 * y + lna.a2 / agc * y.norm_sqr() * y)
}

/// Element-wise distortion of a block of samples.
pub fn lna_distort(y: &[Complex64], lna: &LnaParams, pb: f64, sigma2: f64) -> Result<Vec<Complex64>> {
    let agc = pb + sigma2;
    if !(agc > 0.0) {
        return Err(Error::input("AGC power p*beta + sigma^2 must be positive"));
    }
    let scale = lna.a2 / agc;
    Ok(y.iter()
        .map(|&v| lna.a1 * v + scale * v.norm_sqr() * v)
        .collect())
}

/// Effective gain of the impaired model:
/// `alpha = sqrt(p*beta) * (a1 + a2 * p*beta / (p*beta + sigma^2))`.
pub fn effective_gain(p: f64, beta: f64, sigma2: f64, lna: &LnaParams) -> Result<Complex64> {
    let pb = p * beta;
    let agc = pb + sigma2;
    if !(agc > 0.0) {
        return Err(Error::input("AGC power p*beta + sigma^2 must be positive"));
    }
    let alpha = pb.sqrt() * (lna.a1 + lna.a2 * (pb / agc));
    if alpha.norm() == 0.0 {
        return Err(Error::DegenerateHardware);
    }
    Ok(alpha)
}
