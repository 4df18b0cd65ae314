//! Monte-Carlo experiment engine.
//!
//! A sweep runs over (subarray size, spacing) cells. Within a cell every
//! trial draws a UE placement and a noise realization from deterministic
//! substreams keyed by `(seed, trial index, stream tag)`, synthesizes the
//! channel, distorts the observation, and evaluates the requested
//! estimators on that one observation. Randomness never depends on the
//! execution schedule, so results are bit-identical however many workers
//! run the trials.
//!
//! The noise power is fixed at `sigma^2 = 1` and the channel gain at
//! `beta = 1`; the transmit power is the linear SNR. Everything in the
//! model depends on these only through `p*beta` and `p*beta/sigma^2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use crate::channel::{full_channel, ideal_pilot_observation, ChannelVector, UePlacement};
use crate::error::{Error, Result};
use crate::estimators::{cm, cm_rs_ls, dft_pipeline, ls, rs_ls, EstimatorKind};
use crate::geometry::ArrayConfig;
use crate::impairment::{effective_gain, lna_distort, LnaParams};
use crate::subspace::{load_or_compute, SubspaceBasis, DEFAULT_REL_THRESHOLD};

/// Pilot-phase noise power; the SNR scale is carried entirely by `p`.
pub const SIGMA2: f64 = 1.0;
/// Channel gain; assumed already estimated, so the harness works with the
/// normalized channel throughout.
pub const BETA: f64 = 1.0;

/// Room for future per-trial streams without disturbing existing draws.
const STREAM_STRIDE: u64 = 8;

/// Independent random substreams of one trial.
#[derive(Debug, Clone, Copy)]
pub enum StreamTag {
    Placement = 0,
    Noise = 1,
}

/// Deterministic generator for `(seed, trial, tag)`.
pub fn substream(seed: u64, trial: u64, tag: StreamTag) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(STREAM_STRIDE).wrapping_add(tag as u64));
    rng
}

/// Full parameterization of a sweep.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub l_h: usize,
    pub l_v: usize,
    pub gap_cells: usize,
    pub wavelength: f64,
    /// `(n_h, n_v)` per sweep cell.
    pub subarray_sizes: Vec<(usize, usize)>,
    /// Element spacings in wavelengths, one sweep row each.
    pub spacings_wl: Vec<f64>,
    pub snr_db: f64,
    pub lna: LnaParams,
    pub trials: u64,
    pub estimators: Vec<EstimatorKind>,
    /// Also evaluate DFT-CM-RS-LS with ideal hardware on the same noise.
    pub include_perfect_hw_reference: bool,
    pub seed: u64,
    pub rel_threshold: f64,
    /// Masking energy fraction; defaults to `SNR/(SNR+1)`.
    pub mask_energy_fraction: Option<f64>,
    pub workers: Option<usize>,
    pub subspace_cache_dir: Option<PathBuf>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            l_h: 2,
            l_v: 2,
            gap_cells: 10,
            wavelength: 0.02,
            subarray_sizes: vec![(8, 8)],
            spacings_wl: vec![0.5],
            snr_db: 10.0,
            lna: LnaParams::default(),
            trials: 1000,
            estimators: EstimatorKind::default_set(),
            include_perfect_hw_reference: true,
            seed: 1,
            rel_threshold: DEFAULT_REL_THRESHOLD,
            mask_energy_fraction: None,
            workers: None,
            subspace_cache_dir: None,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.subarray_sizes.is_empty() || self.spacings_wl.is_empty() {
            return Err(Error::config("sweep needs at least one size and one spacing"));
        }
        if !self.snr_db.is_finite() {
            return Err(Error::config("snr_db must be finite"));
        }
        if let Some(d) = self.mask_energy_fraction {
            if !(d > 0.0 && d <= 1.0) {
                return Err(Error::config(format!(
                    "mask_energy_fraction {d} outside (0, 1]"
                )));
            }
        }
        if !(self.rel_threshold > 0.0 && self.rel_threshold < 1.0) {
            return Err(Error::config(format!(
                "rel_threshold {} outside (0, 1)",
                self.rel_threshold
            )));
        }
        for &(n_h, n_v) in &self.subarray_sizes {
            for &sp in &self.spacings_wl {
                self.array_config(n_h, n_v, sp)?;
            }
        }
        Ok(())
    }

    pub fn snr_linear(&self) -> f64 {
        10f64.powf(self.snr_db / 10.0)
    }

    /// Fraction of 2D-DFT energy the mask preserves.
    pub fn mask_fraction(&self) -> f64 {
        self.mask_energy_fraction.unwrap_or_else(|| {
            let snr = self.snr_linear();
            snr / (snr + 1.0)
        })
    }

    pub fn array_config(&self, n_h: usize, n_v: usize, spacing_wl: f64) -> Result<ArrayConfig> {
        if !(spacing_wl > 0.0) || !spacing_wl.is_finite() {
            return Err(Error::config(format!(
                "spacing {spacing_wl} wavelengths must be positive"
            )));
        }
        ArrayConfig::new(
            n_h,
            n_v,
            self.l_h,
            self.l_v,
            spacing_wl * self.wavelength,
            self.gap_cells,
            self.wavelength,
        )
    }

    fn needs_basis(&self) -> bool {
        self.include_perfect_hw_reference
            || self.estimators.iter().any(EstimatorKind::needs_basis)
    }
}

/// Draw a UE placement: azimuth and elevation uniform on `[-pi/2, pi/2]`,
/// range uniform on `[2D, 2D^2/lambda]` (twice the aperture up to the
/// Fraunhofer distance). Draw order is azimuth, elevation, range.
pub fn sample_placement<R: Rng>(rng: &mut R, cfg: &ArrayConfig) -> Result<UePlacement> {
    let d = cfg.aperture();
    let lo = 2.0 * d;
    let hi = 2.0 * d * d / cfg.wavelength;
    if hi <= lo {
        return Err(Error::config(format!(
            "placement interval degenerate: aperture {d} m does not exceed wavelength {} m",
            cfg.wavelength
        )));
    }
    let azimuth = (rng.gen::<f64>() - 0.5) * std::f64::consts::PI;
    let elevation = (rng.gen::<f64>() - 0.5) * std::f64::consts::PI;
    let range = lo + rng.gen::<f64>() * (hi - lo);
    UePlacement::new(azimuth, elevation, range)
}

/// Circularly-symmetric complex Gaussian noise with variance `SIGMA2` per
/// entry: independent standard normal pairs scaled by `sigma/sqrt(2)`.
pub fn sample_noise<R: Rng>(rng: &mut R, len: usize) -> Vec<num_complex::Complex64> {
    let scale = (SIGMA2 / 2.0).sqrt();
    (0..len)
        .map(|_| {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            num_complex::Complex64::new(re * scale, im * scale)
        })
        .collect()
}

/// Per-trial normalized squared error `||estimate - truth||^2 / ||truth||^2`.
pub fn nmse(estimate: &ChannelVector, truth: &ChannelVector) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: estimate.len(),
        });
    }
    let denom = truth.norm_squared();
    if !(denom > 0.0) {
        return Err(Error::input("true channel has zero norm"));
    }
    Ok((estimate - truth).norm_squared() / denom)
}

/// Everything a trial needs; shared read-only across workers.
#[derive(Clone)]
pub struct TrialContext<'a> {
    pub cfg: &'a ArrayConfig,
    pub p: f64,
    pub lna: LnaParams,
    pub delta: f64,
    pub estimators: &'a [EstimatorKind],
    pub include_perfect: bool,
    pub basis: Option<&'a SubspaceBasis>,
    pub seed: u64,
}

/// One trial's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: u64,
    pub placement: UePlacement,
    /// NMSE per requested estimator, in request order.
    pub nmse: Vec<(EstimatorKind, f64)>,
    /// DFT-CM-RS-LS under ideal hardware on the same noise realization.
    pub perfect_reference_nmse: Option<f64>,
    /// Kept-bin count per subarray from the impaired DFT pipeline; empty
    /// when no DFT estimator was requested.
    pub kept_bins: Vec<usize>,
}

impl TrialRecord {
    /// Mean fronthaul payload fraction `|kept| / N` across subarrays.
    pub fn kept_fraction(&self, antennas_per_subarray: usize) -> Option<f64> {
        if self.kept_bins.is_empty() {
            return None;
        }
        let total: usize = self.kept_bins.iter().sum();
        Some(total as f64 / (self.kept_bins.len() * antennas_per_subarray) as f64)
    }
}

fn require_basis<'a>(ctx: &TrialContext<'a>) -> Result<&'a SubspaceBasis> {
    ctx.basis
        .ok_or_else(|| Error::config("estimator set requires a subspace basis"))
}

/// Run one trial: sample, synthesize, distort, estimate, score.
pub fn run_trial(ctx: &TrialContext<'_>, trial: u64) -> Result<TrialRecord> {
    let cfg = ctx.cfg;
    let placement = sample_placement(&mut substream(ctx.seed, trial, StreamTag::Placement), cfg)?;
    let noise = sample_noise(
        &mut substream(ctx.seed, trial, StreamTag::Noise),
        cfg.total_antennas(),
    );

    let truth = full_channel(cfg, &placement, BETA)?;
    let blocks = ideal_pilot_observation(cfg, &placement, ctx.p, BETA, &noise)?;
    let pb = ctx.p * BETA;
    let distorted: Vec<Vec<num_complex::Complex64>> = blocks
        .iter()
        .map(|b| lna_distort(b, &ctx.lna, pb, SIGMA2))
        .collect::<Result<_>>()?;
    let alpha = effective_gain(ctx.p, BETA, SIGMA2, &ctx.lna)?;
    let stacked: Vec<num_complex::Complex64> = distorted.iter().flatten().copied().collect();

    let mut scores = Vec::with_capacity(ctx.estimators.len());
    let mut kept_bins: Vec<usize> = Vec::new();
    for kind in ctx.estimators {
        let estimate = match kind {
            EstimatorKind::Ls => ls(&stacked, alpha)?,
            EstimatorKind::CmLs => cm(&ls(&stacked, alpha)?),
            EstimatorKind::RsLs => rs_ls(&stacked, alpha, require_basis(ctx)?)?,
            EstimatorKind::CmRsLs => cm_rs_ls(&stacked, alpha, require_basis(ctx)?)?,
            EstimatorKind::DftLs | EstimatorKind::DftCmLs | EstimatorKind::DftCmRsLs => {
                let tail = kind.dft_tail().expect("DFT estimator has a tail");
                let basis = if tail.needs_basis() {
                    Some(require_basis(ctx)?)
                } else {
                    None
                };
                let (estimate, kept) =
                    dft_pipeline(&distorted, alpha, ctx.delta, cfg, tail, basis)?;
                if kept_bins.is_empty() {
                    kept_bins = kept;
                }
                estimate
            }
        };
        scores.push((*kind, nmse(&estimate, &truth)?));
    }

    let perfect_reference_nmse = if ctx.include_perfect {
        // Ideal hardware on the same noise realization: the distortion stage
        // is the identity, so the undistorted blocks feed the pipeline with
        // alpha = sqrt(p).
        let ideal = LnaParams::perfect();
        let alpha_p = effective_gain(ctx.p, BETA, SIGMA2, &ideal)?;
        let (estimate, _) = dft_pipeline(
            &blocks,
            alpha_p,
            ctx.delta,
            cfg,
            EstimatorKind::CmRsLs,
            Some(require_basis(ctx)?),
        )?;
        Some(nmse(&estimate, &truth)?)
    } else {
        None
    };

    Ok(TrialRecord {
        trial,
        placement,
        nmse: scores,
        perfect_reference_nmse,
        kept_bins,
    })
}

/// Hardware mode of a result row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Hardware {
    #[serde(rename = "impaired")]
    Impaired,
    #[serde(rename = "perfect")]
    Perfect,
}

impl fmt::Display for Hardware {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hardware::Impaired => "impaired",
            Hardware::Perfect => "perfect",
        })
    }
}

/// Aggregated sweep-cell statistics for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub n_h: usize,
    pub n_v: usize,
    pub spacing_wl: f64,
    pub estimator: EstimatorKind,
    pub hardware: Hardware,
    pub mean_nmse: f64,
    /// Mean fronthaul payload fraction; DFT estimators only.
    pub mean_kept_fraction: Option<f64>,
    pub trials: u64,
    pub seed: u64,
}

/// Records plus aggregates for one `(size, spacing)` cell.
#[derive(Debug, Clone)]
pub struct CellOutput {
    pub records: Vec<TrialRecord>,
    pub rows: Vec<ResultRow>,
}

/// Run every trial of one sweep cell. Trials execute on a worker pool but
/// aggregate in trial order, so the output is independent of `workers`.
pub fn run_cell(spec: &ExperimentSpec, n_h: usize, n_v: usize, spacing_wl: f64) -> Result<CellOutput> {
    run_cell_inner(spec, n_h, n_v, spacing_wl).map_err(|e| e.in_cell(n_h, n_v, spacing_wl))
}

fn run_cell_inner(
    spec: &ExperimentSpec,
    n_h: usize,
    n_v: usize,
    spacing_wl: f64,
) -> Result<CellOutput> {
    let cfg = spec.array_config(n_h, n_v, spacing_wl)?;
    let basis: Option<Arc<SubspaceBasis>> = if spec.needs_basis() {
        Some(Arc::new(load_or_compute(
            &cfg,
            spec.rel_threshold,
            spec.subspace_cache_dir.as_deref(),
        )?))
    } else {
        None
    };

    let ctx = TrialContext {
        cfg: &cfg,
        p: spec.snr_linear(),
        lna: spec.lna,
        delta: spec.mask_fraction(),
        estimators: &spec.estimators,
        include_perfect: spec.include_perfect_hw_reference,
        basis: basis.as_deref(),
        seed: spec.seed,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..spec.trials)
            .into_par_iter()
            .map(|t| run_trial(&ctx, t))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::new();
    let n_per = cfg.antennas_per_subarray();
    for (pos, kind) in spec.estimators.iter().enumerate() {
        let mean_nmse =
            records.iter().map(|r| r.nmse[pos].1).sum::<f64>() / records.len() as f64;
        let mean_kept_fraction = if kind.is_dft() {
            let fractions: Vec<f64> = records
                .iter()
                .filter_map(|r| r.kept_fraction(n_per))
                .collect();
            Some(fractions.iter().sum::<f64>() / fractions.len() as f64)
        } else {
            None
        };
        rows.push(ResultRow {
            n_h,
            n_v,
            spacing_wl,
            estimator: *kind,
            hardware: Hardware::Impaired,
            mean_nmse,
            mean_kept_fraction,
            trials: spec.trials,
            seed: spec.seed,
        });
    }
    if spec.include_perfect_hw_reference {
        let mean_nmse = records
            .iter()
            .map(|r| r.perfect_reference_nmse.expect("reference recorded"))
            .sum::<f64>()
            / records.len() as f64;
        rows.push(ResultRow {
            n_h,
            n_v,
            spacing_wl,
            estimator: EstimatorKind::DftCmRsLs,
            hardware: Hardware::Perfect,
            mean_nmse,
            mean_kept_fraction: None,
            trials: spec.trials,
            seed: spec.seed,
        });
    }

    Ok(CellOutput { records, rows })
}

/// Aggregated results of a full sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResults {
    pub rows: Vec<ResultRow>,
}

impl ExperimentResults {
    /// CSV with a timestamp comment line, a mandatory header row, and one
    /// row per (size, spacing, estimator, hardware). Bodies are
    /// byte-identical across reruns of the same spec; only the comment
    /// line varies.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# generated {}\n",
            chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
        );
        out.push_str(
            "n_h,n_v,spacing_wl,estimator,hardware,mean_nmse,mean_kept_fraction,trials,seed\n",
        );
        for r in &self.rows {
            let kept = r
                .mean_kept_fraction
                .map(|f| f.to_string())
                .unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.n_h,
                r.n_v,
                r.spacing_wl,
                r.estimator,
                r.hardware,
                r.mean_nmse,
                kept,
                r.trials,
                r.seed
            ));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            version: u32,
            generated: String,
            rows: &'a [ResultRow],
        }
        Ok(serde_json::to_string_pretty(&Summary {
            version: 1,
            generated: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            rows: &self.rows,
        })?)
    }

    pub fn find(
        &self,
        n_h: usize,
        spacing_wl: f64,
        estimator: EstimatorKind,
        hardware: Hardware,
    ) -> Option<&ResultRow> {
        self.rows.iter().find(|r| {
            r.n_h == n_h
                && r.spacing_wl == spacing_wl
                && r.estimator == estimator
                && r.hardware == hardware
        })
    }
}

/// Run the whole sweep: every size for every spacing, one basis per cell
/// (reused by all of its trials), deterministic given the seed.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResults> {
    spec.validate()?;
    let mut rows = Vec::new();
    for &spacing in &spec.spacings_wl {
        for &(n_h, n_v) in &spec.subarray_sizes {
            let cell = run_cell(spec, n_h, n_v, spacing)?;
            rows.extend(cell.rows);
        }
    }
    Ok(ExperimentResults { rows })
}
