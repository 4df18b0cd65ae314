//! Per-subarray 2D-DFT energy masking and full-grid spectrum views.
//!
//! Each BBU reshapes its normalized observation into the subarray's 2D
//! layout, transforms it, and forwards only the dominant bins carrying a
//! `delta` fraction of the total energy. The CPU zero-fills the dropped
//! bins and inverts the transform. Near-field LOS energy concentrates in
//! few bins, so this both compresses the fronthaul payload and strips
//! noise from unused spatial directions.
//!
//! Reshape orientation is fixed: matrix rows follow the vertical antenna
//! index, columns the horizontal one, so a raster-scanned observation
//! vector is exactly the row-major matrix data. The full-grid view uses
//! the same convention.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Grid {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input("grid dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Grid { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    /// Sum of squared magnitudes over all cells.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn transform(grid: &Grid, forward: bool) -> Grid {
    let (rows, cols) = (grid.rows, grid.cols);
    let mut data = grid.data.clone();
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let row_fft = if forward {
            planner.plan_fft_forward(cols)
        } else {
            planner.plan_fft_inverse(cols)
        };
        // Rows are contiguous in row-major storage.
        row_fft.process(&mut data);
        let mut t = vec![Complex64::new(0.0, 0.0); data.len()];
        for r in 0..rows {
            for c in 0..cols {
                t[c * rows + r] = data[r * cols + c];
            }
        }
        let col_fft = if forward {
            planner.plan_fft_forward(rows)
        } else {
            planner.plan_fft_inverse(rows)
        };
        col_fft.process(&mut t);
        for r in 0..rows {
            for c in 0..cols {
                data[r * cols + c] = t[c * rows + r];
            }
        }
    });
    Grid { rows, cols, data }
}

/// Unnormalized forward 2D-DFT.
pub fn dft2(grid: &Grid) -> Grid {
    transform(grid, true)
}

/// Inverse 2D-DFT with the `1/(rows*cols)` normalization, so
/// `idft2(dft2(x)) == x` up to rounding.
pub fn idft2(grid: &Grid) -> Grid {
    let mut out = transform(grid, false);
    let scale = 1.0 / (out.rows * out.cols) as f64;
    for v in &mut out.data {
        *v *= scale;
    }
    out
}

/// One retained frequency bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeptBin {
    pub row: usize,
    pub col: usize,
    pub value: Complex64,
}

/// Sparse transform-domain payload: the fronthaul unit. Bins are ordered
/// by decreasing energy (ties by ascending row-major index) and form the
/// shortest prefix whose cumulative energy reaches `delta * total_energy`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedSpectrum {
    pub rows: usize,
    pub cols: usize,
    pub kept: Vec<KeptBin>,
    /// Pre-mask energy, summed over all bins.
    pub total_energy: f64,
}

#[derive(Serialize, Deserialize)]
struct MaskedSpectrumRecord {
    version: u32,
    rows: usize,
    cols: usize,
    total_energy: f64,
    kept: Vec<KeptBin>,
}

const MASKED_SPECTRUM_VERSION: u32 = 1;

impl MaskedSpectrum {
    /// Number of complex scalars a BBU forwards for this payload.
    pub fn payload_len(&self) -> usize {
        self.kept.len()
    }

    pub fn kept_energy(&self) -> f64 {
        self.kept.iter().map(|b| b.value.norm_sqr()).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let record = MaskedSpectrumRecord {
            version: MASKED_SPECTRUM_VERSION,
            rows: self.rows,
            cols: self.cols,
            total_energy: self.total_energy,
            kept: self.kept.clone(),
        };
        Ok(serde_json::to_string(&record)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: MaskedSpectrumRecord = serde_json::from_str(text)?;
        if record.version != MASKED_SPECTRUM_VERSION {
            return Err(Error::PayloadCorrupt(format!(
                "unsupported masked-spectrum version {}",
                record.version
            )));
        }
        Ok(MaskedSpectrum {
            rows: record.rows,
            cols: record.cols,
            kept: record.kept,
            total_energy: record.total_energy,
        })
    }
}

/// Keep the most energetic bins of a spectrum until a `delta` fraction of
/// its total energy is covered. A zero spectrum keeps the single `(0, 0)`
/// bin with value zero so the payload is never empty.
pub fn mask_by_energy(spectrum: &Grid, delta: f64) -> Result<MaskedSpectrum> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::input(format!("delta {delta} outside (0, 1]")));
    }
    let energies: Vec<f64> = spectrum.data.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = energies.iter().sum();
    if !total.is_finite() {
        return Err(Error::Numerical("spectrum energy is not finite".into()));
    }
    if total == 0.0 {
        return Ok(MaskedSpectrum {
            rows: spectrum.rows,
            cols: spectrum.cols,
            kept: vec![KeptBin {
                row: 0,
                col: 0,
                value: Complex64::new(0.0, 0.0),
            }],
            total_energy: 0.0,
        });
    }

    let mut order: Vec<usize> = (0..energies.len()).collect();
    // Energy descending; ties resolved by ascending linear index so the
    // kept set is identical across platforms.
    order.sort_unstable_by(|&a, &b| {
        energies[b]
            .partial_cmp(&energies[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });

    let mut kept = Vec::new();
    if delta == 1.0 {
        for &k in &order {
            if energies[k] == 0.0 {
                break;
            }
            kept.push(k);
        }
    } else {
        let threshold = delta * total;
        let mut cum = 0.0;
        for &k in &order {
            kept.push(k);
            cum += energies[k];
            if cum >= threshold {
                break;
            }
        }
    }

    Ok(MaskedSpectrum {
        rows: spectrum.rows,
        cols: spectrum.cols,
        kept: kept
            .into_iter()
            .map(|k| KeptBin {
                row: k / spectrum.cols,
                col: k % spectrum.cols,
                value: spectrum.data[k],
            })
            .collect(),
        total_energy: total,
    })
}

/// Zero-fill the dropped bins and invert the transform.
pub fn reconstruct(masked: &MaskedSpectrum) -> Result<Grid> {
    if masked.rows == 0 || masked.cols == 0 {
        return Err(Error::PayloadCorrupt("masked payload has empty grid".into()));
    }
    let mut spectrum = Grid::zeros(masked.rows, masked.cols);
    let mut seen = vec![false; masked.rows * masked.cols];
    for bin in &masked.kept {
        if bin.row >= masked.rows || bin.col >= masked.cols {
            return Err(Error::PayloadCorrupt(format!(
                "bin ({}, {}) outside {}x{} grid",
                bin.row, bin.col, masked.rows, masked.cols
            )));
        }
        let k = bin.row * masked.cols + bin.col;
        if seen[k] {
            return Err(Error::PayloadCorrupt(format!(
                "duplicate bin ({}, {})",
                bin.row, bin.col
            )));
        }
        seen[k] = true;
        spectrum.data[k] = bin.value;
    }
    Ok(idft2(&spectrum))
}

/// BBU-side compression of one subarray observation (length `N`,
/// raster-scanned): reshape to the subarray's `n_v x n_h` layout,
/// transform, and mask. The result is the fronthaul message.
pub fn mask_subarray_observation(
    obs: &[Complex64],
    cfg: &ArrayConfig,
    delta: f64,
) -> Result<MaskedSpectrum> {
    let n = cfg.antennas_per_subarray();
    if obs.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: obs.len(),
        });
    }
    // Raster order makes the observation vector the row-major matrix data.
    let grid = Grid::from_vec(cfg.n_v, cfg.n_h, obs.to_vec())?;
    mask_by_energy(&dft2(&grid), delta)
}

/// Centered, peak-normalized power spectrum of the full gapped grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    rows: usize,
    cols: usize,
    /// Row-major, zero-frequency bin at the center cell.
    power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Power at centered bin coordinates; `row_bin` in
    /// `-(rows/2)..rows-rows/2`, likewise for columns. Centered bin `b`
    /// on an axis of length `n` maps to normalized spatial frequency `2b/n`.
    pub fn at(&self, row_bin: i64, col_bin: i64) -> Option<f64> {
        let r = row_bin + (self.rows / 2) as i64;
        let c = col_bin + (self.cols / 2) as i64;
        if r < 0 || c < 0 || r >= self.rows as i64 || c >= self.cols as i64 {
            return None;
        }
        Some(self.power[r as usize * self.cols + c as usize])
    }

    /// Iterate `(row_bin, col_bin, power)` in row-major order.
    pub fn iter_bins(&self) -> impl Iterator<Item = (i64, i64, f64)> + '_ {
        let half_r = (self.rows / 2) as i64;
        let half_c = (self.cols / 2) as i64;
        self.power.iter().enumerate().map(move |(k, &p)| {
            let r = (k / self.cols) as i64 - half_r;
            let c = (k % self.cols) as i64 - half_c;
            (r, c, p)
        })
    }

    /// Centered bin of maximum power (first in row-major order on ties).
    pub fn peak_bin(&self) -> (i64, i64) {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, &p) in self.power.iter().enumerate() {
            if p > best.1 {
                best = (k, p);
            }
        }
        let half_r = (self.rows / 2) as i64;
        let half_c = (self.cols / 2) as i64;
        (
            (best.0 / self.cols) as i64 - half_r,
            (best.0 % self.cols) as i64 - half_c,
        )
    }
}

/// Embed a stacked observation on the full raster (gap cells zero),
/// transform, center the zero-frequency bin, and normalize power so the
/// peak is 1. This is the demonstration view of how near-field LOS energy
/// concentrates; the estimator pipeline masks per subarray instead.
pub fn full_grid_spectrum(stacked: &[Complex64], cfg: &ArrayConfig) -> Result<PowerSpectrum> {
    let ln = cfg.total_antennas();
    if stacked.len() != ln {
        return Err(Error::Dimension {
            expected: ln,
            got: stacked.len(),
        });
    }
    let (rows, cols) = cfg.grid_dimensions();
    let mut grid = Grid::zeros(rows, cols);
    for ((l, n), value) in cfg.antenna_iter().zip(stacked) {
        let idx = cfg.antenna_indices(l, n)?;
        grid.set(idx.j, idx.i, *value);
    }
    let spectrum = dft2(&grid);

    let (half_r, half_c) = (rows / 2, cols / 2);
    let mut power = vec![0.0; rows * cols];
    let mut peak = 0.0f64;
    for r in 0..rows {
        let src_r = (r + rows - half_r) % rows;
        for c in 0..cols {
            let src_c = (c + cols - half_c) % cols;
            let p = spectrum.get(src_r, src_c).norm_sqr();
            power[r * cols + c] = p;
            peak = peak.max(p);
        }
    }
    if peak > 0.0 {
        for p in &mut power {
            *p /= peak;
        }
    }
    Ok(PowerSpectrum { rows, cols, power })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{full_channel, UePlacement};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_grid(rows: usize, cols: usize, seed: u64) -> Grid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Grid::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn all_ones_transforms_to_dc_only() {
        let grid = Grid::from_vec(4, 6, vec![Complex64::new(1.0, 0.0); 24]).unwrap();
        let f = dft2(&grid);
        assert!((f.get(0, 0) - Complex64::new(24.0, 0.0)).norm() < 1e-10);
        for r in 0..4 {
            for c in 0..6 {
                if (r, c) != (0, 0) {
                    assert!(f.get(r, c).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn parseval_holds() {
        let grid = random_grid(7, 5, 1);
        let f = dft2(&grid);
        let lhs = f.energy();
        let rhs = 35.0 * grid.energy();
        assert!((lhs - rhs).abs() < 1e-9 * rhs);
    }

    #[test]
    fn plane_wave_hits_a_single_bin() {
        let (rows, cols, q, p) = (8usize, 8usize, 3usize, 5usize);
        let mut grid = Grid::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let phase = std::f64::consts::TAU
                    * (c as f64 * p as f64 / cols as f64 + r as f64 * q as f64 / rows as f64);
                grid.set(r, c, Complex64::from_polar(1.0, phase));
            }
        }
        let f = dft2(&grid);
        for r in 0..rows {
            for c in 0..cols {
                let expect = if (r, c) == (q, p) { 64.0 } else { 0.0 };
                assert!(
                    (f.get(r, c).norm() - expect).abs() < 1e-9,
                    "bin ({r},{c}) = {}",
                    f.get(r, c).norm()
                );
            }
        }
    }

    #[test]
    fn roundtrip_is_identity() {
        let grid = random_grid(13, 9, 2);
        let back = idft2(&dft2(&grid));
        for (a, b) in back.as_slice().iter().zip(grid.as_slice()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn full_delta_keeps_nonzero_bins_and_reconstructs_exactly() {
        let grid = random_grid(6, 6, 3);
        let f = dft2(&grid);
        let masked = mask_by_energy(&f, 1.0).unwrap();
        let nonzero = f.as_slice().iter().filter(|z| z.norm_sqr() > 0.0).count();
        assert_eq!(masked.payload_len(), nonzero);
        let rec = reconstruct(&masked).unwrap();
        for (a, b) in rec.as_slice().iter().zip(grid.as_slice()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn single_dominant_bin_needs_one_entry() {
        let mut f = Grid::zeros(5, 5);
        f.set(2, 3, Complex64::new(4.0, 1.0));
        let masked = mask_by_energy(&f, 0.909).unwrap();
        assert_eq!(masked.payload_len(), 1);
        assert_eq!(masked.kept[0].row, 2);
        assert_eq!(masked.kept[0].col, 3);
    }

    #[test]
    fn minimal_prefix_property() {
        let f = dft2(&random_grid(8, 8, 4));
        let delta = 0.8;
        let masked = mask_by_energy(&f, delta).unwrap();
        let kept_energy = masked.kept_energy();
        assert!(kept_energy >= delta * masked.total_energy - 1e-12);
        let weakest = masked.kept.last().unwrap().value.norm_sqr();
        assert!(
            kept_energy - weakest < delta * masked.total_energy,
            "prefix is not minimal"
        );
    }

    #[test]
    fn ties_break_by_ascending_linear_index() {
        let f = Grid::from_vec(2, 2, vec![Complex64::new(1.0, 0.0); 4]).unwrap();
        let masked = mask_by_energy(&f, 0.5).unwrap();
        let coords: Vec<(usize, usize)> = masked.kept.iter().map(|b| (b.row, b.col)).collect();
        assert_eq!(coords, vec![(0, 0), (0, 1)]);
    }

    #[test]
    fn zero_spectrum_keeps_single_zero_dc_bin() {
        let masked = mask_by_energy(&Grid::zeros(4, 4), 0.5).unwrap();
        assert_eq!(masked.payload_len(), 1);
        assert_eq!((masked.kept[0].row, masked.kept[0].col), (0, 0));
        assert_eq!(masked.kept[0].value, Complex64::new(0.0, 0.0));
        let rec = reconstruct(&masked).unwrap();
        assert!(rec.energy() == 0.0);
    }

    #[test]
    fn reconstruction_never_gains_energy() {
        for seed in 0..5 {
            let grid = random_grid(8, 8, 100 + seed);
            let masked = mask_by_energy(&dft2(&grid), 0.7).unwrap();
            let rec = reconstruct(&masked).unwrap();
            assert!(rec.energy() <= grid.energy() * (1.0 + 1e-12));
        }
    }

    #[test]
    fn dc_only_payload_reconstructs_to_constant() {
        let masked = MaskedSpectrum {
            rows: 4,
            cols: 4,
            kept: vec![KeptBin {
                row: 0,
                col: 0,
                value: Complex64::new(8.0, 0.0),
            }],
            total_energy: 64.0,
        };
        let rec = reconstruct(&masked).unwrap();
        for v in rec.as_slice() {
            assert!((v - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn mask_then_reconstruct_is_the_kept_bin_projection() {
        // Reconstruction must equal zero-filling the complement of the kept
        // set exactly; combined with Parseval that makes the op an
        // orthogonal projection of the input.
        let grid = random_grid(8, 8, 7);
        let f = dft2(&grid);
        let masked = mask_by_energy(&f, 0.6).unwrap();
        let mut projected = Grid::zeros(8, 8);
        for bin in &masked.kept {
            projected.set(bin.row, bin.col, f.get(bin.row, bin.col));
        }
        let direct = idft2(&projected);
        let rec = reconstruct(&masked).unwrap();
        for (a, b) in rec.as_slice().iter().zip(direct.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn masking_scales_homogeneously() {
        // Scaling the input scales the payload and keeps the same bin set.
        let grid = random_grid(8, 8, 8);
        let f = dft2(&grid);
        let scale = Complex64::new(0.0, -2.0);
        let scaled = Grid::from_vec(8, 8, f.as_slice().iter().map(|z| z * scale).collect()).unwrap();
        let m1 = mask_by_energy(&f, 0.77).unwrap();
        let m2 = mask_by_energy(&scaled, 0.77).unwrap();
        assert_eq!(m1.payload_len(), m2.payload_len());
        for (a, b) in m1.kept.iter().zip(&m2.kept) {
            assert_eq!((a.row, a.col), (b.row, b.col));
            assert!((b.value - a.value * scale).norm() < 1e-12);
        }
    }

    #[test]
    fn corrupt_payloads_are_rejected() {
        let out_of_range = MaskedSpectrum {
            rows: 4,
            cols: 4,
            kept: vec![KeptBin {
                row: 4,
                col: 0,
                value: Complex64::new(1.0, 0.0),
            }],
            total_energy: 1.0,
        };
        assert!(matches!(
            reconstruct(&out_of_range),
            Err(Error::PayloadCorrupt(_))
        ));

        let duplicate = MaskedSpectrum {
            rows: 4,
            cols: 4,
            kept: vec![
                KeptBin {
                    row: 1,
                    col: 1,
                    value: Complex64::new(1.0, 0.0),
                },
                KeptBin {
                    row: 1,
                    col: 1,
                    value: Complex64::new(2.0, 0.0),
                },
            ],
            total_energy: 5.0,
        };
        assert!(matches!(
            reconstruct(&duplicate),
            Err(Error::PayloadCorrupt(_))
        ));
    }

    #[test]
    fn json_record_roundtrip_and_version_check() {
        let grid = random_grid(4, 4, 9);
        let masked = mask_by_energy(&dft2(&grid), 0.9).unwrap();
        let text = masked.to_json().unwrap();
        let back = MaskedSpectrum::from_json(&text).unwrap();
        assert_eq!(back, masked);

        let bumped = text.replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            MaskedSpectrum::from_json(&bumped),
            Err(Error::PayloadCorrupt(_))
        ));
    }

    #[test]
    fn broadside_far_field_subarray_is_dc_concentrated() {
        let cfg = ArrayConfig::new(8, 8, 1, 1, 0.01, 0, 0.02).unwrap();
        let pl = UePlacement::new(0.0, 0.0, 1e6 * cfg.aperture()).unwrap();
        let h = full_channel(&cfg, &pl, 1.0).unwrap();
        let masked = mask_subarray_observation(h.as_slice(), &cfg, 0.99).unwrap();
        assert_eq!(masked.payload_len(), 1);
        assert_eq!((masked.kept[0].row, masked.kept[0].col), (0, 0));
    }

    #[test]
    fn white_noise_kept_fraction_matches_order_statistics_oracle() {
        // Oracle: iid exponential bin energies, sorted descending; count the
        // shortest prefix reaching 10/11 of the sum. Independent of the
        // masking implementation.
        let delta = 10.0 / 11.0;
        let reps = 400;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut oracle_sum = 0.0;
        for _ in 0..reps {
            let mut energies: Vec<f64> =
                (0..64).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            energies.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
            let total: f64 = energies.iter().sum();
            let mut cum = 0.0;
            let mut count = 0;
            for e in &energies {
                cum += e;
                count += 1;
                if cum >= delta * total {
                    break;
                }
            }
            oracle_sum += count as f64 / 64.0;
        }
        let oracle_mean = oracle_sum / reps as f64;
        assert!(
            (0.58..=0.66).contains(&oracle_mean),
            "oracle mean {oracle_mean} drifted"
        );

        // Implementation path on complex white noise; bin energies of the
        // DFT of CN noise are iid exponential, so the means must agree.
        let cfg = ArrayConfig::new(8, 8, 1, 1, 0.01, 0, 0.02).unwrap();
        let mut impl_sum = 0.0;
        for _ in 0..reps {
            let noise: Vec<Complex64> = (0..64)
                .map(|_| {
                    Complex64::new(
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                        rng.sample::<f64, _>(rand_distr::StandardNormal),
                    ) / 2f64.sqrt()
                })
                .collect();
            let masked = mask_subarray_observation(&noise, &cfg, delta).unwrap();
            impl_sum += masked.payload_len() as f64 / 64.0;
        }
        let impl_mean = impl_sum / reps as f64;
        assert!(
            (impl_mean - oracle_mean).abs() < 0.02,
            "implementation {impl_mean} vs oracle {oracle_mean}"
        );
    }

    #[test]
    fn full_grid_spectrum_dimensions_and_peak() {
        let cfg = ArrayConfig::new(8, 8, 2, 2, 0.01, 10, 0.02).unwrap();
        let d = cfg.aperture();
        let pl = UePlacement::new(std::f64::consts::FRAC_PI_4, 0.0, 2.0 * d).unwrap();
        let h = full_channel(&cfg, &pl, 1.0).unwrap();
        let spec = full_grid_spectrum(h.as_slice(), &cfg).unwrap();
        assert_eq!((spec.rows(), spec.cols()), (26, 26));
        let max = spec.iter_bins().map(|(_, _, p)| p).fold(0.0f64, f64::max);
        assert!((max - 1.0).abs() < 1e-12);

        // Horizontal bin near sin(pi/4)*13 ~ 9, vertical near 0.
        let (row, col) = spec.peak_bin();
        assert!((col - 9).abs() <= 2, "horizontal peak bin {col}");
        assert!(row.abs() <= 2, "vertical peak bin {row}");
    }

    #[test]
    fn full_grid_spectrum_negative_angles() {
        let cfg = ArrayConfig::new(8, 8, 2, 2, 0.01, 10, 0.02).unwrap();
        let d = cfg.aperture();
        let pl = UePlacement::new(
            -std::f64::consts::FRAC_PI_4,
            -std::f64::consts::FRAC_PI_3,
            2.0 * d,
        )
        .unwrap();
        let h = full_channel(&cfg, &pl, 1.0).unwrap();
        let spec = full_grid_spectrum(h.as_slice(), &cfg).unwrap();
        let (row, col) = spec.peak_bin();
        assert!((col - (-5)).abs() <= 2, "horizontal peak bin {col}");
        assert!((row - (-11)).abs() <= 2, "vertical peak bin {row}");
    }

    #[test]
    fn full_grid_spectrum_rejects_wrong_length() {
        let cfg = ArrayConfig::new(8, 8, 2, 2, 0.01, 10, 0.02).unwrap();
        let v = vec![Complex64::new(1.0, 0.0); 10];
        assert!(matches!(
            full_grid_spectrum(&v, &cfg),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn centered_bin_lookup() {
        let cfg = ArrayConfig::new(4, 4, 1, 1, 0.01, 0, 0.02).unwrap();
        let v = vec![Complex64::new(1.0, 0.0); 16];
        let spec = full_grid_spectrum(&v, &cfg).unwrap();
        // Constant input: all energy in the zero bin.
        assert_eq!(spec.peak_bin(), (0, 0));
        assert!((spec.at(0, 0).unwrap() - 1.0).abs() < 1e-12);
        assert!(spec.at(-2, -2).is_some());
        assert!(spec.at(2, 0).is_none(), "bin 2 is outside -2..=1 for n=4");
    }
}
