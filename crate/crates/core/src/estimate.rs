//! Parameter estimation for the GSD: moments, exhaustive grid MLE,
//! projected-gradient MLE and the grid MLE restricted to fits that leave
//! no category empty.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{fill_pmf, pmf, shifted_binomial, triangular};
use crate::envelope::{c_derivative, envelope, is_edge, is_integer};
use crate::error::{GsdError, Result};
use crate::math::binomial;
use crate::params::{GsdParams, Pmf};
use crate::sample::CountSample;
use crate::table::{axis_values, LogProbTable};

/// How a [`FitResult`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "method", rename_all = "snake_case"))]
pub enum FitMethod {
    Moments,
    Grid {
        psi_step: f64,
        rho_step: f64,
    },
    Gradient {
        iterations: u32,
        converged: bool,
    },
    ConstrainedGrid {
        psi_step: f64,
        rho_step: f64,
        p_max_bound: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FitResult {
    pub params: GsdParams,
    pub log_likelihood: f64,
    pub method: FitMethod,
}

/// Spacing of the `(psi, rho)` grid searched by the grid estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridConfig {
    pub psi_step: f64,
    pub rho_step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            psi_step: 0.01,
            rho_step: 0.01,
        }
    }
}

impl GridConfig {
    pub fn uniform(step: f64) -> Self {
        Self {
            psi_step: step,
            rho_step: step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |s: f64| s > 0.0 && s <= 0.1;
        if !ok(self.psi_step) || !ok(self.rho_step) {
            return Err(GsdError::InvalidArgument("grid steps must lie in (0, 0.1]"));
        }
        Ok(())
    }
}

/// `psi` is the sample mean; `rho` inverts the variance identity using the
/// divide-by-`n` sample variance, clamped to `[0, 1]`. A sample mean on a
/// scale endpoint gives `rho = 1`.
pub fn moments_estimate(sample: &CountSample) -> GsdParams {
    let m = sample.m();
    let psi = sample.mean().clamp(1.0, f64::from(m));
    if is_edge(psi, m) {
        return GsdParams::new(psi, 1.0, m).expect("mean lies on the scale");
    }
    let env = envelope(psi, m);
    let rho = ((env.v_max - sample.variance()) / (env.v_max - env.v_min)).clamp(0.0, 1.0);
    GsdParams::new(psi, rho, m).expect("clamped into range")
}

fn check_scale(params: &GsdParams, sample: &CountSample) -> Result<()> {
    if params.m() != sample.m() {
        return Err(GsdError::ScaleMismatch {
            expected: params.m(),
            got: sample.m(),
        });
    }
    Ok(())
}

/// `sum n_k ln p_k` over categories with `n_k > 0`; `-inf` if an observed
/// category has probability zero.
pub fn log_likelihood(params: &GsdParams, sample: &CountSample) -> Result<f64> {
    check_scale(params, sample)?;
    Ok(pmf_log_likelihood(&pmf(params), sample.counts()))
}

pub(crate) fn pmf_log_likelihood(pmf: &Pmf, counts: &[u64]) -> f64 {
    counts
        .iter()
        .zip(pmf.probs())
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &p)| n as f64 * libm::log(p))
        .sum()
}

/// The log-likelihood written branch by branch as a sum of logarithms of
/// the individual factors, instead of the logarithm of the evaluated PMF.
pub fn log_likelihood_branchwise(params: &GsdParams, sample: &CountSample) -> Result<f64> {
    check_scale(params, sample)?;
    let (psi, rho, m) = (params.psi(), params.rho(), params.m());
    if is_edge(psi, m) {
        return log_likelihood(params, sample);
    }
    let mf = f64::from(m);
    let env = envelope(psi, m);
    let mut total = 0.0;
    for (idx, &n) in sample.counts().iter().enumerate() {
        if n == 0 {
            continue;
        }
        let k = idx as u32 + 1;
        let term = if rho < env.c {
            let delta = env.c - rho;
            let up = (psi - 1.0) * rho / (mf - 1.0);
            let down = (mf - psi) * rho / (mf - 1.0);
            let mut t = libm::log(binomial(m - 1, k - 1));
            // i = 0 factors: up (k >= 2), down (k <= M - 1), over rho.
            t += match (k >= 2, k < m) {
                (true, true) => {
                    libm::log((psi - 1.0) * (mf - psi) * rho / ((mf - 1.0) * (mf - 1.0)))
                }
                (true, false) => libm::log((psi - 1.0) / (mf - 1.0)),
                (false, true) => libm::log((mf - psi) / (mf - 1.0)),
                (false, false) => unreachable!("m >= 3"),
            };
            for i in 1..=(k as i64 - 2) {
                t += libm::log(up + i as f64 * delta);
            }
            for i in 1..=(i64::from(m) - 1 - i64::from(k)) {
                t += libm::log(down + i as f64 * delta);
            }
            for i in 1..=(m - 2) {
                t -= libm::log(rho + f64::from(i) * delta);
            }
            t
        } else {
            let mix =
                (rho - env.c) * triangular(psi, k) + (1.0 - rho) * shifted_binomial(psi, m, k);
            libm::log(mix) - libm::log(1.0 - env.c)
        };
        total += n as f64 * term;
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Branch {
    BetaBinomial,
    Mixture,
}

impl Branch {
    pub(crate) fn of(psi: f64, rho: f64, m: u32) -> Self {
        if rho < envelope(psi, m).c {
            Branch::BetaBinomial
        } else {
            Branch::Mixture
        }
    }
}

/// Partial derivatives of `ln P(U = k)` with respect to `(psi, rho)` on the
/// given branch, for interior non-integer `psi`.
pub(crate) fn category_gradient(psi: f64, rho: f64, m: u32, k: u32, branch: Branch) -> (f64, f64) {
    let mf = f64::from(m);
    let env = envelope(psi, m);
    let c = env.c;
    let dc = c_derivative(psi, m);
    match branch {
        Branch::BetaBinomial => {
            let delta = c - rho;
            let up = (psi - 1.0) * rho / (mf - 1.0);
            let down = (mf - psi) * rho / (mf - 1.0);
            let has_up = k >= 2;
            let has_down = k < m;
            let mut d_psi = 0.0;
            let mut d_rho = 0.0;
            // i = 0 terms, combined so they stay finite at rho = 0.
            if has_up {
                d_psi += 1.0 / (psi - 1.0);
            }
            if has_down {
                d_psi -= 1.0 / (mf - psi);
            }
            let zero_terms = i32::from(has_up) + i32::from(has_down) - 1;
            if zero_terms != 0 {
                d_rho += f64::from(zero_terms) / rho;
            }
            for i in 1..=(k as i64 - 2) {
                let i = i as f64;
                let den = up + i * delta;
                d_psi += (rho / (mf - 1.0) + i * dc) / den;
                d_rho += ((psi - 1.0) / (mf - 1.0) - i) / den;
            }
            for i in 1..=(i64::from(m) - 1 - i64::from(k)) {
                let i = i as f64;
                let den = down + i * delta;
                d_psi += (-rho / (mf - 1.0) + i * dc) / den;
                d_rho += ((mf - psi) / (mf - 1.0) - i) / den;
            }
            for i in 1..=(m - 2) {
                let i = f64::from(i);
                let den = rho + i * delta;
                d_psi -= i * dc / den;
                d_rho += (i - 1.0) / den;
            }
            (d_psi, d_rho)
        }
        Branch::Mixture => {
            let kf = f64::from(k);
            let tri = triangular(psi, k);
            let d_tri = if psi > kf - 1.0 && psi <= kf {
                1.0
            } else if psi > kf && psi < kf + 1.0 {
                -1.0
            } else {
                0.0
            };
            let bin = shifted_binomial(psi, m, k);
            let d_bin = (1.0 - rho) * bin * ((kf - 1.0) / (psi - 1.0) - (mf - kf) / (mf - psi));
            let den = (rho - c) * tri + (1.0 - rho) * bin;
            let d_psi = ((rho - c) * d_tri - dc * tri + d_bin) / den + dc / (1.0 - c);
            let d_rho = (tri - bin) / den;
            (d_psi, d_rho)
        }
    }
}

pub(crate) fn gradient_on_branch(psi: f64, rho: f64, counts: &[u64], branch: Branch) -> (f64, f64) {
    let m = counts.len() as u32;
    let mut g = (0.0, 0.0);
    for (idx, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        let (a, b) = category_gradient(psi, rho, m, idx as u32 + 1, branch);
        g.0 += n as f64 * a;
        g.1 += n as f64 * b;
    }
    g
}

/// Analytic gradient `(d/dpsi, d/drho)` of the log-likelihood.
///
/// Fails with [`GsdError::NonDifferentiable`] at integer `psi`, at the
/// scale endpoints and at `rho = C(psi)`, where the two branches meet.
pub fn log_likelihood_gradient(params: &GsdParams, sample: &CountSample) -> Result<(f64, f64)> {
    check_scale(params, sample)?;
    let (psi, rho, m) = (params.psi(), params.rho(), params.m());
    if is_edge(psi, m) || is_integer(psi) || rho == envelope(psi, m).c {
        return Err(GsdError::NonDifferentiable { psi, rho });
    }
    Ok(gradient_on_branch(
        psi,
        rho,
        sample.counts(),
        Branch::of(psi, rho, m),
    ))
}

/// Largest total probability of two distinct categories.
pub fn p_max(params: &GsdParams) -> f64 {
    pmf(params).p_max()
}

/// Category frequencies `n_k / n`.
pub fn epmf(sample: &CountSample) -> Pmf {
    let n = sample.n() as f64;
    Pmf::from_vec_unchecked(sample.counts().iter().map(|&c| c as f64 / n).collect())
}

/// Frequencies after adding one half to every count:
/// `(n_k + 0.5) / (n + M / 2)`; every entry is strictly inside `(0, 1)`.
pub fn modified_epmf(sample: &CountSample) -> Pmf {
    let denom = sample.n() as f64 + f64::from(sample.m()) / 2.0;
    Pmf::from_vec_unchecked(
        sample
            .counts()
            .iter()
            .map(|&c| (c as f64 + 0.5) / denom)
            .collect(),
    )
}

/// Exhaustive search over a fixed `(psi, rho)` grid with a precomputed
/// log-probability table. Fits are memoised by count vector, which makes
/// repeated refitting inside bootstrap loops cheap.
#[derive(Debug, Clone)]
pub struct GridEstimator {
    m: u32,
    grid: GridConfig,
    psi_axis: Vec<f64>,
    rho_axis: Vec<f64>,
    table: LogProbTable,
    cache: BTreeMap<(bool, Vec<u64>), FitResult>,
    scratch: Vec<f64>,
}

impl GridEstimator {
    pub fn new(m: u32, grid: GridConfig) -> Result<Self> {
        if m < 3 {
            return Err(GsdError::ScaleTooSmall(m));
        }
        grid.validate()?;
        let psi_axis = axis_values(1.0, f64::from(m), grid.psi_step);
        let rho_axis = axis_values(0.0, 1.0, grid.rho_step);
        let mut table = LogProbTable::new(m as usize, psi_axis.len() * rho_axis.len());
        let mut probs = vec![0.0; m as usize];
        for &psi in &psi_axis {
            for &rho in &rho_axis {
                fill_pmf(psi, rho, m, &mut probs);
                table.push_probs(&probs);
            }
        }
        Ok(Self {
            m,
            grid,
            psi_axis,
            rho_axis,
            table,
            cache: BTreeMap::new(),
            scratch: Vec::new(),
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn grid(&self) -> GridConfig {
        self.grid
    }

    fn point(&self, index: usize) -> GsdParams {
        let per = self.rho_axis.len();
        GsdParams::new(
            self.psi_axis[index / per],
            self.rho_axis[index % per],
            self.m,
        )
        .expect("grid inside domain")
    }

    fn check(&self, sample: &CountSample) -> Result<()> {
        if sample.m() != self.m {
            return Err(GsdError::ScaleMismatch {
                expected: self.m,
                got: sample.m(),
            });
        }
        Ok(())
    }

    /// Grid MLE; ties go to the smallest `psi`, then the smallest `rho`.
    pub fn fit(&mut self, sample: &CountSample) -> Result<FitResult> {
        self.check(sample)?;
        let key = (false, sample.counts().to_vec());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let index = self
            .table
            .argmax(sample.counts(), None, &mut self.scratch)
            .expect("grid is nonempty");
        let params = self.point(index);
        let fit = FitResult {
            params,
            log_likelihood: log_likelihood(&params, sample)?,
            method: FitMethod::Grid {
                psi_step: self.grid.psi_step,
                rho_step: self.grid.rho_step,
            },
        };
        self.cache.insert(key, fit.clone());
        Ok(fit)
    }

    /// Grid MLE over the points whose two most probable categories hold at
    /// most `1 - 1/n` of the mass.
    pub fn fit_constrained(&mut self, sample: &CountSample) -> Result<FitResult> {
        self.check(sample)?;
        let n = sample.n();
        if n < 2 {
            return Err(GsdError::SampleTooSmall { n, min: 2 });
        }
        let key = (true, sample.counts().to_vec());
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let bound = p_max_bound(n);
        let index = self
            .table
            .argmax(sample.counts(), Some(bound), &mut self.scratch)
            .ok_or(GsdError::InfeasibleConstraint { bound })?;
        let params = self.point(index);
        let fit = FitResult {
            params,
            log_likelihood: log_likelihood(&params, sample)?,
            method: FitMethod::ConstrainedGrid {
                psi_step: self.grid.psi_step,
                rho_step: self.grid.rho_step,
                p_max_bound: bound,
            },
        };
        self.cache.insert(key, fit.clone());
        Ok(fit)
    }

    /// Every grid point with whether it is admissible for samples of size `n`.
    pub fn feasible_region(&self, n: u64) -> Vec<(f64, f64, bool)> {
        let bound = p_max_bound(n);
        let per = self.rho_axis.len();
        (0..self.table.len())
            .map(|i| {
                (
                    self.psi_axis[i / per],
                    self.rho_axis[i % per],
                    self.table.p_max(i) <= bound,
                )
            })
            .collect()
    }

    pub fn clear_cache(&mut self) {
        self.cache.clear();
    }
}

pub(crate) fn p_max_bound(n: u64) -> f64 {
    1.0 - 1.0 / n as f64
}

/// Grid maximum likelihood estimate.
pub fn mle_grid(sample: &CountSample, grid: &GridConfig) -> Result<FitResult> {
    GridEstimator::new(sample.m(), *grid)?.fit(sample)
}

/// Grid MLE subject to `p_max <= 1 - 1/n`; needs `n >= 2`.
pub fn mle_constrained(sample: &CountSample, grid: &GridConfig) -> Result<FitResult> {
    GridEstimator::new(sample.m(), *grid)?.fit_constrained(sample)
}

/// Settings of [`mle_gradient`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientConfig {
    pub initial_step: f64,
    pub tolerance: f64,
    pub max_iterations: u32,
}

impl Default for GradientConfig {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

const PSI_NUDGE: f64 = 1e-9;

/// Gradient at a point of the box, treating the kinks one-sidedly: `psi`
/// is nudged off integers and endpoints, and `rho = C(psi)` uses the
/// mixture branch.
fn safe_gradient(psi: f64, rho: f64, counts: &[u64]) -> (f64, f64) {
    let m = counts.len() as u32;
    let mf = f64::from(m);
    let mut at = psi;
    if at - 1.0 < PSI_NUDGE {
        at = 1.0 + PSI_NUDGE;
    } else if mf - at < PSI_NUDGE {
        at = mf - PSI_NUDGE;
    } else if is_integer(at) {
        at += PSI_NUDGE;
    }
    gradient_on_branch(at, rho, counts, Branch::of(at, rho, m))
}

/// Projected gradient ascent on `[1, M] x [0, 1]` from `init`.
///
/// Each iteration moves along the normalised projected gradient with a
/// step that starts at `initial_step` and halves until the log-likelihood
/// strictly increases. The search stops when an accepted step is shorter
/// than `tolerance`, when no improving step exists, or after
/// `max_iterations`; the log-likelihood never decreases from `init`.
pub fn mle_gradient(sample: &CountSample, init: &GsdParams) -> Result<FitResult> {
    mle_gradient_with(sample, init, &GradientConfig::default())
}

pub fn mle_gradient_with(
    sample: &CountSample,
    init: &GsdParams,
    config: &GradientConfig,
) -> Result<FitResult> {
    check_scale(init, sample)?;
    let m = sample.m();
    let mf = f64::from(m);
    let counts = sample.counts();
    let mut current = *init;
    let mut value = log_likelihood(&current, sample)?;
    if value == f64::NEG_INFINITY {
        current = moments_estimate(sample);
        value = log_likelihood(&current, sample)?;
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        iterations += 1;
        let (psi, rho) = (current.psi(), current.rho());
        let (mut g_psi, mut g_rho) = safe_gradient(psi, rho, counts);
        for g in [&mut g_psi, &mut g_rho] {
            if g.is_nan() {
                *g = 0.0;
            }
        }
        // Drop components pushing out of the box.
        if (psi <= 1.0 && g_psi < 0.0) || (psi >= mf && g_psi > 0.0) {
            g_psi = 0.0;
        }
        if (rho <= 0.0 && g_rho < 0.0) || (rho >= 1.0 && g_rho > 0.0) {
            g_rho = 0.0;
        }
        let (d_psi, d_rho) = direction(g_psi, g_rho);
        if d_psi == 0.0 && d_rho == 0.0 {
            converged = true;
            break;
        }
        let mut step = config.initial_step;
        let mut accepted = None;
        while step > 1e-14 {
            let cand_psi = (psi + step * d_psi).clamp(1.0, mf);
            let cand_rho = (rho + step * d_rho).clamp(0.0, 1.0);
            let cand = current.with_psi(cand_psi).with_rho(cand_rho);
            let cand_value = log_likelihood(&cand, sample)?;
            if cand_value > value {
                accepted = Some((cand, cand_value));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            None => {
                converged = true;
                break;
            }
            Some((cand, cand_value)) => {
                let moved = libm::hypot(cand.psi() - psi, cand.rho() - rho);
                current = cand;
                value = cand_value;
                if moved < config.tolerance {
                    converged = true;
                    break;
                }
            }
        }
    }
    Ok(FitResult {
        params: current,
        log_likelihood: value,
        method: FitMethod::Gradient {
            iterations,
            converged,
        },
    })
}

fn direction(g_psi: f64, g_rho: f64) -> (f64, f64) {
    if g_psi.is_infinite() || g_rho.is_infinite() {
        let pick = |g: f64| if g.is_infinite() { g.signum() } else { 0.0 };
        return (pick(g_psi), pick(g_rho));
    }
    let norm = libm::hypot(g_psi, g_rho);
    if norm == 0.0 {
        return (0.0, 0.0);
    }
    (g_psi / norm, g_rho / norm)
}
