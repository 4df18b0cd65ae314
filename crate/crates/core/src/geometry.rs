//! Modular planar-array geometry.
//!
//! The array is a grid of `l_h x l_v` identical UPA subarrays, each with
//! `n_h x n_v` elements at spacing `delta`. Facing subarray edges are
//! separated by `gap_cells` empty raster cells, so every antenna of the
//! full modular array sits on one common raster. Subarray 1 occupies the
//! bottom-left corner and its first antenna is the global origin; the
//! array lies in the yz-plane.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full layout description of a modular planar array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayConfig {
    /// Antennas per subarray along the horizontal axis.
    pub n_h: usize,
    /// Antennas per subarray along the vertical axis.
    pub n_v: usize,
    /// Subarrays per row.
    pub l_h: usize,
    /// Subarrays per column.
    pub l_v: usize,
    /// Intra-subarray element spacing in meters.
    pub delta: f64,
    /// Inter-subarray edge separation in units of `delta`. Kept integer so
    /// the full-grid spectrum embedding has every antenna on one raster.
    pub gap_cells: usize,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
}

/// Grid indices of one antenna on the common raster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AntennaIndex {
    /// Horizontal grid index.
    pub i: usize,
    /// Vertical grid index.
    pub j: usize,
}

impl ArrayConfig {
    pub fn new(
        n_h: usize,
        n_v: usize,
        l_h: usize,
        l_v: usize,
        delta: f64,
        gap_cells: usize,
        wavelength: f64,
    ) -> Result<Self> {
        let cfg = ArrayConfig {
            n_h,
            n_v,
            l_h,
            l_v,
            delta,
            gap_cells,
            wavelength,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_h == 0 || self.n_v == 0 {
            return Err(Error::config("subarray dimensions must be at least 1x1"));
        }
        if self.l_h == 0 || self.l_v == 0 {
            return Err(Error::config("subarray grid must be at least 1x1"));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::config("element spacing must be positive"));
        }
        if !(self.wavelength > 0.0) || !self.wavelength.is_finite() {
            return Err(Error::config("wavelength must be positive"));
        }
        Ok(())
    }

    /// Antennas per subarray, `N`.
    pub fn antennas_per_subarray(&self) -> usize {
        self.n_h * self.n_v
    }

    /// Number of subarrays, `L`.
    pub fn subarrays(&self) -> usize {
        self.l_h * self.l_v
    }

    /// Total antenna count, `L * N`.
    pub fn total_antennas(&self) -> usize {
        self.subarrays() * self.antennas_per_subarray()
    }

    /// Grid indices of antenna `n` of subarray `l` (both 1-based).
    ///
    /// Subarrays are raster-ordered on the `l_h x l_v` grid (subarray 1
    /// bottom-left, advancing horizontally first); within a subarray,
    /// antennas raster-scan row by row along the horizontal axis.
    pub fn antenna_indices(&self, l: usize, n: usize) -> Result<AntennaIndex> {
        if l < 1 || l > self.subarrays() {
            return Err(Error::input(format!(
                "subarray index {l} outside 1..={}",
                self.subarrays()
            )));
        }
        if n < 1 || n > self.antennas_per_subarray() {
            return Err(Error::input(format!(
                "antenna index {n} outside 1..={}",
                self.antennas_per_subarray()
            )));
        }
        let grid_h = (l - 1) % self.l_h;
        let grid_v = (l - 1) / self.l_h;
        let i = grid_h * (self.n_h + self.gap_cells) + (n - 1) % self.n_h;
        let j = grid_v * (self.n_v + self.gap_cells) + (n - 1) / self.n_h;
        Ok(AntennaIndex { i, j })
    }

    /// Physical position of antenna `n` of subarray `l` in meters,
    /// relative to the global origin: `(0, i*delta, j*delta)`.
    pub fn antenna_position(&self, l: usize, n: usize) -> Result<[f64; 3]> {
        let idx = self.antenna_indices(l, n)?;
        Ok([0.0, idx.i as f64 * self.delta, idx.j as f64 * self.delta])
    }

    /// Raster dimensions `(rows, cols)` of the grid spanned by the full
    /// modular array, including gap cells.
    pub fn grid_dimensions(&self) -> (usize, usize) {
        let cols = self.l_h * self.n_h + (self.l_h - 1) * self.gap_cells;
        let rows = self.l_v * self.n_v + (self.l_v - 1) * self.gap_cells;
        (rows, cols)
    }

    /// Array aperture `D` in meters: the diagonal of the bounding box,
    /// counted in grid cells (a 26-cell-per-side layout yields `26*sqrt(2)*delta`,
    /// not 25; the cell count includes the last cell).
    pub fn aperture(&self) -> f64 {
        let (rows, cols) = self.grid_dimensions();
        self.delta * (rows as f64).hypot(cols as f64)
    }

    /// Iterate over all `(l, n)` pairs (1-based) in stacking order:
    /// subarray-major, raster scan within each subarray.
    pub fn antenna_iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n_per = self.antennas_per_subarray();
        (1..=self.subarrays()).flat_map(move |l| (1..=n_per).map(move |n| (l, n)))
    }
}
