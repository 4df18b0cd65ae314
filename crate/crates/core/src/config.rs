//! JSON experiment configuration.
//!
//! A single document with explicit units: spacings in wavelengths, SNR in
//! dB, wavelength in meters. Every field has a default, unknown keys are
//! rejected, and `--override key=value` edits apply on the JSON value
//! tree before re-validation so they obey the same schema rules.
//!
//! Complex LNA coefficients serialize as `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::harness::ExperimentSpec;
use crate::impairment::LnaParams;
use crate::subspace::DEFAULT_REL_THRESHOLD;

/// Subarray grid shared by every sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    pub l_h: usize,
    pub l_v: usize,
    pub gap_cells: usize,
}

impl Default for LayoutConfig {
    fn default() -> Self {
        LayoutConfig {
            l_h: 2,
            l_v: 2,
            gap_cells: 10,
        }
    }
}

/// Full experiment parameterization, the on-disk configuration schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub layout: LayoutConfig,
    pub wavelength_m: f64,
    /// `(n_h, n_v)` per sweep cell.
    pub subarray_sizes: Vec<[usize; 2]>,
    /// Element spacings in wavelengths.
    pub spacings_wl: Vec<f64>,
    pub snr_db: f64,
    pub lna: LnaParams,
    pub trials: u64,
    pub seed: u64,
    /// Relative eigenvalue cutoff of the reduced subspace.
    pub rel_threshold: f64,
    pub estimators: Vec<EstimatorKind>,
    pub include_perfect_hw_reference: bool,
    /// Masking energy fraction; `null` means `SNR/(SNR+1)`.
    pub mask_energy_fraction: Option<f64>,
    /// Directory for cached subspace bases, reused across runs.
    pub subspace_cache_dir: Option<PathBuf>,
    /// Worker threads for trial execution; `null` uses all cores.
    pub workers: Option<usize>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            layout: LayoutConfig::default(),
            wavelength_m: 0.02,
            subarray_sizes: vec![[8, 8]],
            spacings_wl: vec![0.5],
            snr_db: 10.0,
            lna: LnaParams::default(),
            trials: 1000,
            seed: 1,
            rel_threshold: DEFAULT_REL_THRESHOLD,
            estimators: EstimatorKind::default_set(),
            include_perfect_hw_reference: true,
            mask_energy_fraction: None,
            subspace_cache_dir: None,
            workers: None,
        }
    }
}

/// Built-in experiment presets: the subarray-size sweeps at half- and
/// quarter-wavelength spacing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig4,
    Fig5,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4" => Ok(Preset::Fig4),
            "fig5" => Ok(Preset::Fig5),
            other => Err(Error::config(format!(
                "unknown preset {other:?}; expected fig4 or fig5"
            ))),
        }
    }
}

/// Sizes of the standard subarray sweep.
pub const SWEEP_SIZES: [[usize; 2]; 5] = [[8, 8], [12, 12], [16, 16], [20, 20], [24, 24]];

impl SystemConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Overwrite the sweep-defining fields with a preset; seed, LNA, layout
    /// and the remaining knobs keep their configured values.
    pub fn apply_preset(&mut self, preset: Preset) {
        self.subarray_sizes = SWEEP_SIZES.to_vec();
        self.spacings_wl = match preset {
            Preset::Fig4 => vec![0.5],
            Preset::Fig5 => vec![0.25],
        };
        self.snr_db = 10.0;
        self.trials = 1000;
        self.estimators = EstimatorKind::default_set();
        self.include_perfect_hw_reference = true;
    }

    /// Apply one `key=value` override. Keys use dot paths into the schema
    /// (`trials`, `layout.l_h`, ...); values parse as JSON, with bare
    /// strings accepted for string fields. Unknown keys are rejected.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| {
            Error::config(format!("override {assignment:?} is not of the form key=value"))
        })?;
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));

        let mut tree = serde_json::to_value(&*self)?;
        let pointer = format!("/{}", key.replace('.', "/"));
        match tree.pointer_mut(&pointer) {
            Some(slot) => *slot = parsed,
            None => {
                return Err(Error::config(format!("unknown config key {key:?}")));
            }
        }
        *self = serde_json::from_value(tree).map_err(|e| {
            Error::config(format!("override {assignment:?} rejected: {e}"))
        })?;
        Ok(())
    }

    /// Convert to the harness spec, validating everything.
    pub fn to_experiment_spec(&self) -> Result<ExperimentSpec> {
        if self.lna.a1 == Complex64::new(0.0, 0.0) {
            return Err(Error::config("lna.a1 must be nonzero"));
        }
        let spec = ExperimentSpec {
            l_h: self.layout.l_h,
            l_v: self.layout.l_v,
            gap_cells: self.layout.gap_cells,
            wavelength: self.wavelength_m,
            subarray_sizes: self.subarray_sizes.iter().map(|s| (s[0], s[1])).collect(),
            spacings_wl: self.spacings_wl.clone(),
            snr_db: self.snr_db,
            lna: self.lna,
            trials: self.trials,
            estimators: self.estimators.clone(),
            include_perfect_hw_reference: self.include_perfect_hw_reference,
            seed: self.seed,
            rel_threshold: self.rel_threshold,
            mask_energy_fraction: self.mask_energy_fraction,
            workers: self.workers,
            subspace_cache_dir: self.subspace_cache_dir.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}
