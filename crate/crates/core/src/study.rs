//! Simulation studies of estimation accuracy.

use alloc::vec::Vec;

use crate::dist::{pmf, CategoricalSampler};
use crate::error::{GsdError, Result};
use crate::estimate::{GridConfig, GridEstimator};
use crate::matrix::{fit_matrix, random_parameters, simulate_matrix, MatrixFitConfig};
use crate::params::GsdParams;
use crate::rng;
use crate::table::axis_values;

/// Root mean squared deviation of `estimates` from `truth`.
pub fn rmsd(estimates: &[f64], truth: f64) -> f64 {
    if estimates.is_empty() {
        return f64::NAN;
    }
    let sum: f64 = estimates.iter().map(|e| (e - truth) * (e - truth)).sum();
    libm::sqrt(sum / estimates.len() as f64)
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StudyConfig {
    pub m: u32,
    pub sizes: Vec<u64>,
    pub psi_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub replicates: u32,
    pub grid: GridConfig,
    pub seed: u64,
}

impl StudyConfig {
    /// `psi` from 1 to `M` and `rho` from 0 to 1, both in steps of 0.25;
    /// sizes 12, 24, 50 and 200; 1000 replicates.
    pub fn for_scale(m: u32, seed: u64) -> Self {
        Self {
            m,
            sizes: alloc::vec![12, 24, 50, 200],
            psi_values: axis_values(1.0, f64::from(m), 0.25),
            rho_values: axis_values(0.0, 1.0, 0.25),
            replicates: 1000,
            grid: GridConfig::default(),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.sizes.contains(&0) || self.replicates == 0 {
            return Err(GsdError::InvalidArgument(
                "sizes and replicates must be positive",
            ));
        }
        for &psi in &self.psi_values {
            for &rho in &self.rho_values {
                GsdParams::new(psi, rho, self.m)?;
            }
        }
        self.grid.validate()
    }
}

/// One `(n, psi, rho)` cell of the one-dimensional study.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RmsdCell {
    pub n: u64,
    pub psi: f64,
    pub rho: f64,
    pub rmsd_psi: f64,
    pub rmsd_rho: f64,
}

/// Grid maximum likelihood on `replicates` samples of size `n` for every
/// cell; ordered by size, then `psi`, then `rho`.
pub fn rmsd_study(config: &StudyConfig) -> Result<Vec<RmsdCell>> {
    config.validate()?;
    let mut estimator = GridEstimator::new(config.m, config.grid)?;
    let mut cells = Vec::new();
    let mut psi_hat = Vec::with_capacity(config.replicates as usize);
    let mut rho_hat = Vec::with_capacity(config.replicates as usize);
    for &n in &config.sizes {
        let mut cell_index = 0u64;
        for &psi in &config.psi_values {
            for &rho in &config.rho_values {
                let params = GsdParams::new(psi, rho, config.m)?;
                let sampler = CategoricalSampler::new(&pmf(&params));
                let mut rng = rng::stream(rng::derive_seed(config.seed, cell_index, n), 0);
                psi_hat.clear();
                rho_hat.clear();
                for _ in 0..config.replicates {
                    let fit = estimator.fit(&sampler.draw_sample(&mut rng, n))?;
                    psi_hat.push(fit.params.psi());
                    rho_hat.push(fit.params.rho());
                }
                cells.push(RmsdCell {
                    n,
                    psi,
                    rho,
                    rmsd_psi: rmsd(&psi_hat, psi),
                    rmsd_rho: rmsd(&rho_hat, rho),
                });
                cell_index += 1;
            }
        }
    }
    Ok(cells)
}

/// A parameter held fixed in the matrix study: `psi` of stimulus 0 or
/// `rho` of rater 0.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Probe {
    Psi(f64),
    Rho(f64),
}

/// Absolute estimation errors from one simulated square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixErrors {
    pub psi_abs: Vec<f64>,
    pub rho_abs: Vec<f64>,
    /// Estimate of the probed parameter, if any.
    pub probe_estimate: Option<f64>,
}

/// Simulates a `size` by `size` matrix with uniformly random parameters
/// (the probe, if given, overriding one of them), fits it and reports the
/// errors.
pub fn matrix_replicate(
    size: usize,
    m: u32,
    probe: Option<Probe>,
    seed: u64,
    fit_config: &MatrixFitConfig,
) -> Result<MatrixErrors> {
    if size == 0 {
        return Err(GsdError::InvalidArgument("matrix size must be positive"));
    }
    let (mut psi, mut rho) = random_parameters(size, size, m, seed);
    match probe {
        Some(Probe::Psi(p)) => psi[0] = p,
        Some(Probe::Rho(r)) => rho[0] = r,
        None => {}
    }
    let matrix = simulate_matrix(&psi, &rho, m, seed)?;
    let fit = fit_matrix(&matrix, fit_config)?;
    let probe_estimate = probe.map(|p| match p {
        Probe::Psi(_) => fit.psi[0],
        Probe::Rho(_) => fit.rho[0],
    });
    Ok(MatrixErrors {
        psi_abs: fit
            .psi
            .iter()
            .zip(&psi)
            .map(|(a, b)| (a - b).abs())
            .collect(),
        rho_abs: fit
            .rho
            .iter()
            .zip(&rho)
            .map(|(a, b)| (a - b).abs())
            .collect(),
        probe_estimate,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatrixStudyConfig {
    pub m: u32,
    pub sizes: Vec<usize>,
    pub probes: Vec<Probe>,
    pub replicates: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatrixRmsdRow {
    pub size: usize,
    pub probe: Probe,
    pub rmsd: f64,
    pub median_abs_psi: f64,
    pub median_abs_rho: f64,
}

/// RMSD of the probed parameter per size, plus median absolute errors of
/// all parameters pooled over the replicates.
pub fn matrix_rmsd_study(
    config: &MatrixStudyConfig,
    fit_config: &MatrixFitConfig,
) -> Result<Vec<MatrixRmsdRow>> {
    if config.replicates == 0 {
        return Err(GsdError::InvalidArgument("replicates must be positive"));
    }
    let mut rows = Vec::new();
    for &size in &config.sizes {
        for (p, &probe) in config.probes.iter().enumerate() {
            let truth = match probe {
                Probe::Psi(v) => {
                    GsdParams::new(v, 0.5, config.m)?;
                    v
                }
                Probe::Rho(v) => {
                    GsdParams::new(2.0, v, config.m)?;
                    v
                }
            };
            let mut estimates = Vec::new();
            let mut psi_abs = Vec::new();
            let mut rho_abs = Vec::new();
            for r in 0..config.replicates {
                let seed =
                    rng::derive_seed(config.seed, (size as u64) << 32 | p as u64, u64::from(r));
                let errors = matrix_replicate(size, config.m, Some(probe), seed, fit_config)?;
                estimates.extend(errors.probe_estimate);
                psi_abs.extend(errors.psi_abs);
                rho_abs.extend(errors.rho_abs);
            }
            rows.push(MatrixRmsdRow {
                size,
                probe,
                rmsd: rmsd(&estimates, truth),
                median_abs_psi: median(&psi_abs),
                median_abs_rho: median(&rho_abs),
            });
        }
    }
    Ok(rows)
}
