//! Reduced subspace of the isotropic-scattering spatial correlation matrix.
//!
//! Under isotropic scattering the correlation between two antennas depends
//! only on their distance: `sinc(2*d/lambda)` with `sinc(x) = sin(pi*x)/(pi*x)`.
//! The eigenspace of that matrix restricted to non-negligible eigenvalues
//! spans every plausible LOS channel direction; its orthogonal complement
//! carries noise only. RS estimators project observations onto this basis.
//!
//! The kernel is real symmetric, so the basis is stored as a real matrix;
//! complex vectors are projected by splitting real and imaginary parts.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::channel::ChannelVector;
use crate::error::{Error, Result};
use crate::geometry::ArrayConfig;

/// Default relative eigenvalue cutoff: eigenvalues above
/// `rel_threshold * lambda_max` are retained. The isotropic kernel has a
/// sharp eigenvalue cliff, so the exact value is uncritical within a few
/// decades; it is exposed in the experiment configuration.
pub const DEFAULT_REL_THRESHOLD: f64 = 1e-5;

const CACHE_MAGIC: &[u8; 4] = b"NFSB";
const CACHE_VERSION: u32 = 1;

/// Semi-unitary basis of the retained eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    /// `LN x s` matrix with orthonormal columns, eigenvalue order descending.
    basis: DMatrix<f64>,
    /// Retained eigenvalues, descending. `None` when loaded from a cache
    /// file, which stores the basis only.
    eigenvalues: Option<Vec<f64>>,
}

impl SubspaceBasis {
    /// Ambient dimension `LN`.
    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    /// Subspace dimension `s`.
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `s / (LN)`.
    pub fn retained_fraction(&self) -> f64 {
        self.dim() as f64 / self.ambient_dim() as f64
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn eigenvalues(&self) -> Option<&[f64]> {
        self.eigenvalues.as_deref()
    }

    /// Orthogonal projection `U * (U^H * v)` onto the subspace.
    /// Idempotent and non-expansive.
    pub fn project(&self, v: &[Complex64]) -> Result<ChannelVector> {
        let ln = self.ambient_dim();
        if v.len() != ln {
            return Err(Error::Dimension {
                expected: ln,
                got: v.len(),
            });
        }
        // Real basis: project real and imaginary parts independently.
        let mut parts = DMatrix::<f64>::zeros(ln, 2);
        for (k, z) in v.iter().enumerate() {
            parts[(k, 0)] = z.re;
            parts[(k, 1)] = z.im;
        }
        let coeff = self.basis.tr_mul(&parts);
        let proj = &self.basis * coeff;
        Ok(DVector::from_fn(ln, |k, _| {
            Complex64::new(proj[(k, 0)], proj[(k, 1)])
        }))
    }
}

/// `sin(pi*x)/(pi*x)` with `sinc(0) = 1`.
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Spatial correlation matrix of the full modular array under isotropic
/// scattering: entry `(m, k)` is `sinc(2*||u_m - u_k||/lambda)`. Real
/// symmetric with unit diagonal; built over the gapped geometry, i.e. the
/// antenna positions that physically exist.
pub fn isotropic_correlation(cfg: &ArrayConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    let positions: Vec<[f64; 3]> = cfg
        .antenna_iter()
        .map(|(l, n)| cfg.antenna_position(l, n))
        .collect::<Result<_>>()?;
    let ln = positions.len();
    let mut r = DMatrix::<f64>::zeros(ln, ln);
    for m in 0..ln {
        r[(m, m)] = 1.0;
        for k in 0..m {
            let dy = positions[m][1] - positions[k][1];
            let dz = positions[m][2] - positions[k][2];
            let d = (dy * dy + dz * dz).sqrt();
            let v = sinc(2.0 * d / cfg.wavelength);
            r[(m, k)] = v;
            r[(k, m)] = v;
        }
    }
    Ok(r)
}

/// Eigendecompose a correlation matrix and keep the eigenvectors whose
/// eigenvalues exceed `rel_threshold * lambda_max`, descending.
pub fn reduced_subspace(r: DMatrix<f64>, rel_threshold: f64) -> Result<SubspaceBasis> {
    if !(rel_threshold > 0.0 && rel_threshold < 1.0) {
        return Err(Error::input(format!(
            "rel_threshold {rel_threshold} outside (0, 1)"
        )));
    }
    if r.nrows() != r.ncols() {
        return Err(Error::Dimension {
            expected: r.nrows(),
            got: r.ncols(),
        });
    }
    if r.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical(
            "correlation matrix has non-finite entries".into(),
        ));
    }
    let ln = r.nrows();
    let eig = r.symmetric_eigen();

    let mut order: Vec<usize> = (0..ln).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lambda_max = eig.eigenvalues[order[0]];
    if !(lambda_max > 0.0) {
        return Err(Error::Numerical(
            "correlation matrix has no positive eigenvalue".into(),
        ));
    }
    let cutoff = rel_threshold * lambda_max;
    let s = order
        .iter()
        .take_while(|&&k| eig.eigenvalues[k] > cutoff)
        .count();

    let basis = DMatrix::from_fn(ln, s, |row, col| eig.eigenvectors[(row, order[col])]);
    let eigenvalues = order[..s].iter().map(|&k| eig.eigenvalues[k]).collect();
    Ok(SubspaceBasis {
        basis,
        eigenvalues: Some(eigenvalues),
    })
}

/// Hex key identifying a `(cfg, rel_threshold)` pair for the disk cache.
pub fn cache_key(cfg: &ArrayConfig, rel_threshold: f64) -> String {
    let mut h = Sha256::new();
    h.update(CACHE_VERSION.to_le_bytes());
    for v in [
        cfg.n_h as u64,
        cfg.n_v as u64,
        cfg.l_h as u64,
        cfg.l_v as u64,
        cfg.gap_cells as u64,
    ] {
        h.update(v.to_le_bytes());
    }
    h.update(cfg.delta.to_bits().to_le_bytes());
    h.update(cfg.wavelength.to_bits().to_le_bytes());
    h.update(rel_threshold.to_bits().to_le_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn cache_path(dir: &Path, cfg: &ArrayConfig, rel_threshold: f64) -> PathBuf {
    dir.join(format!("subspace-{}.bin", cache_key(cfg, rel_threshold)))
}

/// Write a basis to the binary cache format: magic, version, dimensions,
/// then row-major complex values.
pub fn save_cache(path: &Path, basis: &SubspaceBasis) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + basis.ambient_dim() * basis.dim() * 16);
    buf.extend_from_slice(CACHE_MAGIC);
    buf.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    buf.extend_from_slice(&(basis.ambient_dim() as u64).to_le_bytes());
    buf.extend_from_slice(&(basis.dim() as u64).to_le_bytes());
    for row in 0..basis.ambient_dim() {
        for col in 0..basis.dim() {
            buf.extend_from_slice(&basis.basis[(row, col)].to_le_bytes());
            buf.extend_from_slice(&0f64.to_le_bytes());
        }
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(())
}

/// Read a basis back from the cache format written by [`save_cache`].
pub fn load_cache(path: &Path) -> Result<SubspaceBasis> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[0..4] != CACHE_MAGIC {
        return Err(Error::PayloadCorrupt("bad subspace cache magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CACHE_VERSION {
        return Err(Error::PayloadCorrupt(format!(
            "unsupported subspace cache version {version}"
        )));
    }
    let ln = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let s = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = 24 + ln.checked_mul(s).and_then(|v| v.checked_mul(16)).ok_or_else(
        || Error::PayloadCorrupt("subspace cache dimensions overflow".into()),
    )?;
    if s == 0 || s > ln || bytes.len() != expected {
        return Err(Error::PayloadCorrupt(
            "subspace cache dimensions inconsistent with file size".into(),
        ));
    }
    let mut basis = DMatrix::<f64>::zeros(ln, s);
    let mut off = 24;
    for row in 0..ln {
        for col in 0..s {
            let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
            if im != 0.0 {
                return Err(Error::PayloadCorrupt(
                    "subspace cache holds a non-real basis".into(),
                ));
            }
            basis[(row, col)] = re;
            off += 16;
        }
    }
    let loaded = SubspaceBasis {
        basis,
        eigenvalues: None,
    };
    spot_check_semi_unitary(&loaded)?;
    Ok(loaded)
}

/// Cheap orthonormality probe on a handful of columns; a full `U^T U`
/// check on large cached bases would cost more than recomputing trials.
fn spot_check_semi_unitary(basis: &SubspaceBasis) -> Result<()> {
    let s = basis.dim();
    let step = (s / 7).max(1);
    let cols: Vec<usize> = (0..s).step_by(step).take(8).collect();
    for (a_pos, &a) in cols.iter().enumerate() {
        let ca = basis.basis.column(a);
        if (ca.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::PayloadCorrupt(
                "subspace cache column is not unit norm".into(),
            ));
        }
        for &b in &cols[..a_pos] {
            if ca.dot(&basis.basis.column(b)).abs() > 1e-8 {
                return Err(Error::PayloadCorrupt(
                    "subspace cache columns are not orthogonal".into(),
                ));
            }
        }
    }
    Ok(())
}

/// Build (or fetch from `cache_dir`) the basis for a configuration. The
/// basis is placement-independent, so one instance serves every trial of
/// a sweep cell. Unreadable cache files are recomputed and overwritten.
pub fn load_or_compute(
    cfg: &ArrayConfig,
    rel_threshold: f64,
    cache_dir: Option<&Path>,
) -> Result<SubspaceBasis> {
    if let Some(dir) = cache_dir {
        let path = cache_path(dir, cfg, rel_threshold);
        if path.exists() {
            if let Ok(basis) = load_cache(&path) {
                if basis.ambient_dim() == cfg.total_antennas() {
                    return Ok(basis);
                }
            }
        }
        let basis = reduced_subspace(isotropic_correlation(cfg)?, rel_threshold)?;
        fs::create_dir_all(dir)?;
        save_cache(&path, &basis)?;
        return Ok(basis);
    }
    reduced_subspace(isotropic_correlation(cfg)?, rel_threshold)
}
