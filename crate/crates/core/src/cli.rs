//! Command-line front end: `run`, `spectrum`, and `table1` subcommands.
//!
//! Exit codes: 0 on success, 2 for configuration problems (parse errors,
//! schema violations, bad overrides), 3 for failures during computation
//! (the error names the failing sweep cell).

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs;
use std::path::PathBuf;

use crate::channel::UePlacement;
use crate::config::{Preset, SystemConfig, SWEEP_SIZES};
use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::harness::{run_experiment, sample_noise, substream, ExperimentResults, StreamTag, BETA, SIGMA2};
use crate::impairment::lna_distort;

#[derive(Parser, Debug)]
#[command(
    name = "nfsim",
    version,
    about = "Near-field channel-estimation experiments for modular planar arrays"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON experiment configuration file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Built-in experiment preset, applied over the configuration.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,

    /// RNG seed, overriding the configuration.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for trial execution.
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,

    /// Configuration override as key=value; repeatable, applied in order.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Output directory for result files.
    #[arg(long, env = "NFSIM_OUT", default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum PresetArg {
    Fig4,
    Fig5,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Preset {
        match p {
            PresetArg::Fig4 => Preset::Fig4,
            PresetArg::Fig5 => Preset::Fig5,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the configured NMSE sweep; writes results.csv and results.json.
    Run(CommonArgs),
    /// Emit the centered full-grid power spectrum of one impaired noisy
    /// observation; writes spectrum.csv.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Azimuth in radians.
        #[arg(long, allow_hyphen_values = true)]
        phi: f64,
        /// Elevation in radians.
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
        /// UE range as a multiple of the array aperture.
        #[arg(long, default_value_t = 2.0)]
        r_mult: f64,
    },
    /// Mean kept-bin fractions over the standard size/spacing table;
    /// writes table1.csv.
    Table1(CommonArgs),
}

/// Resolved invocation: validated configuration plus output location.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub config: SystemConfig,
    pub out_dir: PathBuf,
}

impl RunManifest {
    pub fn from_args(args: &CommonArgs) -> Result<Self> {
        let mut config = match &args.config {
            Some(path) => SystemConfig::from_path(path)
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?,
            None => SystemConfig::default(),
        };
        if let Some(preset) = args.preset {
            config.apply_preset(preset.into());
        }
        for assignment in &args.overrides {
            config.apply_override(assignment)?;
        }
        if let Some(seed) = args.seed {
            config.seed = seed;
        }
        if let Some(workers) = args.workers {
            config.workers = Some(workers);
        }
        // Validate before any computation starts.
        config.to_experiment_spec()?;

        fs::create_dir_all(&args.out).map_err(|e| {
            Error::config(format!(
                "output directory {} is not writable: {e}",
                args.out.display()
            ))
        })?;
        Ok(RunManifest {
            config,
            out_dir: args.out.clone(),
        })
    }
}

fn timestamp_line() -> String {
    format!(
        "# generated {}\n",
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    )
}

fn print_summary(results: &ExperimentResults) {
    println!(
        "{:>5} {:>5} {:>10} {:>13} {:>9} {:>12} {:>10}",
        "n_h", "n_v", "spacing_wl", "estimator", "hardware", "mean_nmse", "kept"
    );
    for r in &results.rows {
        let kept = r
            .mean_kept_fraction
            .map(|f| format!("{f:.4}"))
            .unwrap_or_else(|| "-".to_string());
        println!(
            "{:>5} {:>5} {:>10} {:>13} {:>9} {:>12.6} {:>10}",
            r.n_h, r.n_v, r.spacing_wl, r.estimator, r.hardware, r.mean_nmse, kept
        );
    }
}

/// `run` subcommand.
pub fn cmd_run(manifest: &RunManifest) -> Result<()> {
    let spec = manifest.config.to_experiment_spec()?;
    let results = run_experiment(&spec)?;
    let csv_path = manifest.out_dir.join("results.csv");
    fs::write(&csv_path, results.to_csv())?;
    fs::write(manifest.out_dir.join("results.json"), results.to_json()?)?;
    print_summary(&results);
    println!("wrote {}", csv_path.display());
    Ok(())
}

/// `spectrum` subcommand: one impaired noisy observation at the configured
/// SNR, embedded on the full grid.
pub fn cmd_spectrum(manifest: &RunManifest, phi: f64, theta: f64, r_mult: f64) -> Result<()> {
    let spec = manifest.config.to_experiment_spec()?;
    let (n_h, n_v) = spec.subarray_sizes[0];
    let cfg = spec.array_config(n_h, n_v, spec.spacings_wl[0])?;
    if !(r_mult > 0.0) || !r_mult.is_finite() {
        return Err(Error::config(format!("r_mult {r_mult} must be positive")));
    }
    let placement = UePlacement::new(phi, theta, r_mult * cfg.aperture())
        .map_err(|e| Error::config(e.to_string()))?;

    let p = spec.snr_linear();
    let noise = sample_noise(
        &mut substream(spec.seed, 0, StreamTag::Noise),
        cfg.total_antennas(),
    );
    let blocks = crate::channel::ideal_pilot_observation(&cfg, &placement, p, BETA, &noise)?;
    let mut stacked = Vec::with_capacity(cfg.total_antennas());
    for block in &blocks {
        stacked.extend(lna_distort(block, &spec.lna, p * BETA, SIGMA2)?);
    }
    let spectrum = crate::spectral::full_grid_spectrum(&stacked, &cfg)?;

    let mut csv = timestamp_line();
    csv.push_str("row_bin,col_bin,normalized_power\n");
    for (row, col, power) in spectrum.iter_bins() {
        csv.push_str(&format!("{row},{col},{power}\n"));
    }
    let path = manifest.out_dir.join("spectrum.csv");
    fs::write(&path, csv)?;
    let (peak_row, peak_col) = spectrum.peak_bin();
    println!(
        "{}x{} grid, peak bin (row {peak_row}, col {peak_col})",
        spectrum.rows(),
        spectrum.cols()
    );
    println!("wrote {}", path.display());
    Ok(())
}

/// `table1` subcommand: kept-bin statistics over the standard sweep. The
/// DFT mask is estimator-independent, so a single DFT-LS pass per cell
/// yields the fractions; trials, seed, SNR and LNA come from the config.
pub fn cmd_table1(manifest: &RunManifest) -> Result<()> {
    let mut config = manifest.config.clone();
    config.subarray_sizes = SWEEP_SIZES.to_vec();
    config.spacings_wl = vec![0.5, 0.25];
    config.estimators = vec![EstimatorKind::DftLs];
    config.include_perfect_hw_reference = false;
    let spec = config.to_experiment_spec()?;
    let results = run_experiment(&spec)?;

    let mut csv = timestamp_line();
    csv.push_str("spacing_wl,n_h,n_v,mean_kept_fraction\n");
    println!(
        "{:>10} {:>5} {:>5} {:>18}",
        "spacing_wl", "n_h", "n_v", "mean_kept_fraction"
    );
    for r in &results.rows {
        let kept = r.mean_kept_fraction.expect("DFT row has a kept fraction");
        csv.push_str(&format!("{},{},{},{}\n", r.spacing_wl, r.n_h, r.n_v, kept));
        println!(
            "{:>10} {:>5} {:>5} {:>18.4}",
            r.spacing_wl, r.n_h, r.n_v, kept
        );
    }
    let path = manifest.out_dir.join("table1.csv");
    fs::write(&path, csv)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Parse arguments and dispatch; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(common) => RunManifest::from_args(common).and_then(|m| cmd_run(&m)),
        Command::Spectrum {
            common,
            phi,
            theta,
            r_mult,
        } => RunManifest::from_args(common).and_then(|m| cmd_spectrum(&m, *phi, *theta, *r_mult)),
        Command::Table1(common) => RunManifest::from_args(common).and_then(|m| cmd_table1(&m)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                2
            } else {
                3
            }
        }
    }
}
