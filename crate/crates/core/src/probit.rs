//! Ordered probit with fixed thresholds: a normal latent score rounded to
//! the nearest category and clipped to `[1, M]`.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GsdError, Result};
use crate::math::{ln_add_exp, ln_norm_cdf, norm_cdf};
use crate::params::Pmf;
use crate::sample::CountSample;
use crate::table::{axis_values, LogProbTable};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbitParams {
    mu: f64,
    sigma: f64,
    m: u32,
}

impl ProbitParams {
    pub fn new(mu: f64, sigma: f64, m: u32) -> Result<Self> {
        if m < 3 {
            return Err(GsdError::ScaleTooSmall(m));
        }
        if !mu.is_finite() {
            return Err(GsdError::InvalidArgument("mu must be finite"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(GsdError::InvalidArgument(
                "sigma must be positive and finite",
            ));
        }
        Ok(Self { mu, sigma, m })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Standardised cell edges `(lower, upper)` of category `k`; the outer
    /// cells extend to infinity.
    fn cell(&self, k: u32) -> (f64, f64) {
        let z = |x: f64| (x - self.mu) / self.sigma;
        let lower = if k == 1 {
            f64::NEG_INFINITY
        } else {
            z(f64::from(k) - 0.5)
        };
        let upper = if k == self.m {
            f64::INFINITY
        } else {
            z(f64::from(k) + 0.5)
        };
        (lower, upper)
    }
}

/// `Phi(b) - Phi(a)` without cancellation in either tail.
fn normal_mass(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        norm_cdf(b) - norm_cdf(a)
    } else if a >= 0.0 {
        norm_cdf(-a) - norm_cdf(-b)
    } else {
        1.0 - norm_cdf(a) - norm_cdf(-b)
    }
}

/// `(ln(Phi(b) - Phi(a)), ln(1 - Phi(b) + Phi(a)))`, both accurate when
/// either quantity is far below machine epsilon.
fn ln_normal_mass(a: f64, b: f64) -> (f64, f64) {
    let ln_outside = ln_add_exp(ln_norm_cdf(a), ln_norm_cdf(-b));
    let ln_inside = if b <= 0.0 {
        let hi = ln_norm_cdf(b);
        hi + libm::log1p(-libm::exp(ln_norm_cdf(a) - hi))
    } else if a >= 0.0 {
        let hi = ln_norm_cdf(-a);
        hi + libm::log1p(-libm::exp(ln_norm_cdf(-b) - hi))
    } else {
        libm::log1p(-libm::exp(ln_outside))
    };
    (ln_inside, ln_outside)
}

pub fn probit_pmf(params: &ProbitParams) -> Pmf {
    let probs = (1..=params.m)
        .map(|k| {
            let (a, b) = params.cell(k);
            normal_mass(a, b)
        })
        .collect();
    Pmf::from_vec_unchecked(probs)
}

/// Mean and variance of the discretised response.
pub fn probit_induced_moments(params: &ProbitParams) -> (f64, f64) {
    let pmf = probit_pmf(params);
    (pmf.mean(), pmf.variance())
}

/// Box and spacing searched by [`probit_mle_grid`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbitGrid {
    pub mu_min: f64,
    pub mu_max: f64,
    pub mu_step: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_step: f64,
}

impl ProbitGrid {
    /// `mu` in `[0, M + 1]`, `sigma` in `[0.01, 5]`, both in steps of 0.01.
    pub fn for_scale(m: u32) -> Self {
        Self {
            mu_min: 0.0,
            mu_max: f64::from(m) + 1.0,
            mu_step: 0.01,
            sigma_min: 0.01,
            sigma_max: 5.0,
            sigma_step: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.mu_min,
            self.mu_max,
            self.mu_step,
            self.sigma_min,
            self.sigma_max,
            self.sigma_step,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite
            || self.mu_step <= 0.0
            || self.sigma_step <= 0.0
            || self.mu_max < self.mu_min
            || self.sigma_max < self.sigma_min
            || self.sigma_min <= 0.0
        {
            return Err(GsdError::InvalidArgument(
                "probit grid must be a nonempty finite box with sigma > 0",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbitFit {
    pub params: ProbitParams,
    pub log_likelihood: f64,
    pub grid: ProbitGrid,
}

pub fn probit_log_likelihood(params: &ProbitParams, sample: &CountSample) -> Result<f64> {
    if params.m != sample.m() {
        return Err(GsdError::ScaleMismatch {
            expected: params.m,
            got: sample.m(),
        });
    }
    Ok(sample
        .counts()
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(i, &n)| {
            let (a, b) = params.cell(i as u32 + 1);
            n as f64 * ln_normal_mass(a, b).0
        })
        .sum())
}

/// Grid MLE over a fixed `(mu, sigma)` box, memoised by count vector.
#[derive(Debug, Clone)]
pub struct ProbitEstimator {
    m: u32,
    grid: ProbitGrid,
    mu_axis: Vec<f64>,
    sigma_axis: Vec<f64>,
    table: LogProbTable,
    cache: BTreeMap<Vec<u64>, ProbitFit>,
    scratch: Vec<f64>,
}

impl ProbitEstimator {
    pub fn new(m: u32, grid: ProbitGrid) -> Result<Self> {
        if m < 3 {
            return Err(GsdError::ScaleTooSmall(m));
        }
        grid.validate()?;
        let mu_axis = axis_values(grid.mu_min, grid.mu_max, grid.mu_step);
        let sigma_axis = axis_values(grid.sigma_min, grid.sigma_max, grid.sigma_step);
        let mut table = LogProbTable::new(m as usize, mu_axis.len() * sigma_axis.len());
        let mut log_p = vec![0.0; m as usize];
        let mut log_not = vec![0.0; m as usize];
        for &mu in &mu_axis {
            for &sigma in &sigma_axis {
                let params = ProbitParams { mu, sigma, m };
                for k in 1..=m {
                    let (a, b) = params.cell(k);
                    let (inside, outside) = ln_normal_mass(a, b);
                    log_p[k as usize - 1] = inside;
                    log_not[k as usize - 1] = outside;
                }
                let p_max = probit_pmf(&params).p_max();
                table.push_logs(&log_p, &log_not, p_max);
            }
        }
        Ok(Self {
            m,
            grid,
            mu_axis,
            sigma_axis,
            table,
            cache: BTreeMap::new(),
            scratch: Vec::new(),
        })
    }

    /// Ties go to the smallest `mu`, then the smallest `sigma`.
    pub fn fit(&mut self, sample: &CountSample) -> Result<ProbitFit> {
        if sample.m() != self.m {
            return Err(GsdError::ScaleMismatch {
                expected: self.m,
                got: sample.m(),
            });
        }
        if let Some(hit) = self.cache.get(sample.counts()) {
            return Ok(hit.clone());
        }
        let index = self
            .table
            .argmax(sample.counts(), None, &mut self.scratch)
            .expect("grid is nonempty");
        let per = self.sigma_axis.len();
        let params = ProbitParams {
            mu: self.mu_axis[index / per],
            sigma: self.sigma_axis[index % per],
            m: self.m,
        };
        let fit = ProbitFit {
            params,
            log_likelihood: probit_log_likelihood(&params, sample)?,
            grid: self.grid,
        };
        self.cache.insert(sample.counts().to_vec(), fit.clone());
        Ok(fit)
    }
}

pub fn probit_mle_grid(sample: &CountSample, grid: &ProbitGrid) -> Result<ProbitFit> {
    ProbitEstimator::new(sample.m(), *grid)?.fit(sample)
}
