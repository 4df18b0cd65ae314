//! Near-field LOS channel synthesis and estimator evaluation for modular
//! extremely large planar arrays.
//!
//! The crate models a modular array of widely separated UPA subarrays
//! serving a single UE in the radiative near-field, distorts pilot
//! observations with a third-order LNA non-linearity, and evaluates a
//! family of low-complexity channel estimators (LS, constant-modulus,
//! reduced-subspace, and 2D-DFT-masked variants) through deterministic
//! Monte-Carlo NMSE sweeps.
//!
//! Modules follow the processing chain:
//!
//! - [`geometry`]: antenna index maps, positions, aperture, raster grid
//! - [`channel`]: spherical-wavefront responses and pilot observations
//! - [`impairment`]: the LNA distortion model and its effective gain
//! - [`subspace`]: the isotropic-scattering eigenspace used by RS estimators
//! - [`spectral`]: per-subarray 2D-DFT energy masking and spectrum views
//! - [`estimators`]: the estimator pipelines
//! - [`harness`]: placement sampling, trial execution, sweep aggregation
//! - [`config`] / [`cli`]: JSON configuration and the command-line tool

pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod estimators;
pub mod geometry;
pub mod harness;
pub mod impairment;
pub mod spectral;
pub mod subspace;

pub use channel::{ChannelVector, UePlacement};
pub use config::SystemConfig;
pub use error::{Error, Result};
pub use estimators::EstimatorKind;
pub use geometry::{AntennaIndex, ArrayConfig};
pub use harness::{ExperimentResults, ExperimentSpec, TrialRecord};
pub use impairment::LnaParams;
pub use spectral::MaskedSpectrum;
pub use subspace::SubspaceBasis;
