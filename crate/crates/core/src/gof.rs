//! Bootstrapped G-test of goodness of fit and P-P plot data for a
//! collection of p-values.

use alloc::vec::Vec;

use crate::dist::{pmf, CategoricalSampler};
use crate::error::{GsdError, Result};
use crate::estimate::{FitResult, GridConfig, GridEstimator};
use crate::math::binomial_quantile;
use crate::params::Pmf;
use crate::probit::{probit_pmf, ProbitEstimator, ProbitFit, ProbitGrid};
use crate::rng;
use crate::sample::CountSample;

/// `T = sum n_k ln(n_k / (n p_k))`, skipping empty cells. An observed
/// category with `p_k = 0` makes `T = +inf`.
pub fn g_statistic(sample: &CountSample, fitted: &Pmf) -> Result<f64> {
    if fitted.m() != sample.m() {
        return Err(GsdError::ScaleMismatch {
            expected: sample.m(),
            got: fitted.m(),
        });
    }
    let n = sample.n() as f64;
    let t: f64 = sample
        .counts()
        .iter()
        .zip(fitted.probs())
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &p)| {
            if p <= 0.0 {
                f64::INFINITY
            } else {
                let c = c as f64;
                c * libm::log(c / (n * p))
            }
        })
        .sum();
    // T is a scaled Kullback-Leibler divergence; clear rounding below zero.
    Ok(t.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GofModel {
    Gsd,
    OrderedProbit,
}

/// Estimator used for the GSD, both on the observed sample and on every
/// bootstrap sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GsdEstimator {
    Grid,
    #[default]
    ConstrainedGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GofConfig {
    pub mc: u32,
    pub seed: u64,
    pub grid: GridConfig,
    pub gsd_estimator: GsdEstimator,
    /// `None` uses [`ProbitGrid::for_scale`].
    pub probit_grid: Option<ProbitGrid>,
}

impl Default for GofConfig {
    fn default() -> Self {
        Self {
            mc: 10_000,
            seed: 0,
            grid: GridConfig::default(),
            gsd_estimator: GsdEstimator::default(),
            probit_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "model", rename_all = "snake_case"))]
pub enum FittedModel {
    Gsd(FitResult),
    OrderedProbit(ProbitFit),
}

impl FittedModel {
    pub fn pmf(&self) -> Pmf {
        match self {
            FittedModel::Gsd(fit) => pmf(&fit.params),
            FittedModel::OrderedProbit(fit) => probit_pmf(&fit.params),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GofResult {
    pub t_statistic: f64,
    /// `#{T_r >= T} / mc`.
    pub p_value: f64,
    pub mc: u32,
    pub fitted: FittedModel,
}

/// A model fitter that can be reused across many samples of one scale.
pub struct ModelFitter {
    inner: FitterKind,
}

enum FitterKind {
    Gsd(GridEstimator, GsdEstimator),
    Probit(ProbitEstimator),
}

impl ModelFitter {
    pub fn new(model: GofModel, m: u32, config: &GofConfig) -> Result<Self> {
        let inner = match model {
            GofModel::Gsd => {
                FitterKind::Gsd(GridEstimator::new(m, config.grid)?, config.gsd_estimator)
            }
            GofModel::OrderedProbit => {
                let grid = config
                    .probit_grid
                    .unwrap_or_else(|| ProbitGrid::for_scale(m));
                FitterKind::Probit(ProbitEstimator::new(m, grid)?)
            }
        };
        Ok(Self { inner })
    }

    /// Fits one sample. The constrained GSD estimator needs `n >= 2`; a
    /// single response falls back to the plain grid estimator.
    pub fn fit(&mut self, sample: &CountSample) -> Result<FittedModel> {
        match &mut self.inner {
            FitterKind::Gsd(est, GsdEstimator::ConstrainedGrid) if sample.n() >= 2 => {
                est.fit_constrained(sample).map(FittedModel::Gsd)
            }
            FitterKind::Gsd(est, _) => est.fit(sample).map(FittedModel::Gsd),
            FitterKind::Probit(est) => est.fit(sample).map(FittedModel::OrderedProbit),
        }
    }

    /// G-test with a parametric bootstrap p-value; replicate `r` draws from
    /// random stream `r` of `seed`.
    pub fn bootstrap_g_test(
        &mut self,
        sample: &CountSample,
        mc: u32,
        seed: u64,
    ) -> Result<GofResult> {
        if mc < 1 {
            return Err(GsdError::InvalidArgument("mc must be at least 1"));
        }
        let fitted = self.fit(sample)?;
        let fitted_pmf = fitted.pmf();
        let t = g_statistic(sample, &fitted_pmf)?;
        let sampler = CategoricalSampler::new(&fitted_pmf);
        let n = sample.n();
        let mut exceed = 0u32;
        for r in 0..mc {
            let mut rng = rng::stream(seed, u64::from(r));
            let boot = sampler.draw_sample(&mut rng, n);
            let refit = self.fit(&boot)?.pmf();
            if g_statistic(&boot, &refit)? >= t {
                exceed += 1;
            }
        }
        Ok(GofResult {
            t_statistic: t,
            p_value: f64::from(exceed) / f64::from(mc),
            mc,
            fitted,
        })
    }
}

pub fn bootstrap_g_test(
    sample: &CountSample,
    model: GofModel,
    config: &GofConfig,
) -> Result<GofResult> {
    ModelFitter::new(model, sample.m(), config)?.bootstrap_g_test(sample, config.mc, config.seed)
}

/// Upper reference curve drawn with the p-value ECDF.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BoundKind {
    /// At each `x`, the `1 - alpha` quantile of `Binomial(K, x) / K`: the
    /// one-sided pointwise bound for the ECDF of `K` uniform p-values.
    #[default]
    PointwiseBinomial,
    /// `x + sqrt(ln(1 / alpha) / (2K))`, the one-sided
    /// Dvoretzky-Kiefer-Wolfowitz band, valid simultaneously for all `x`.
    Dkw,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PpPlot {
    pub x: Vec<f64>,
    pub ecdf: Vec<f64>,
    pub bound: Vec<f64>,
}

impl PpPlot {
    /// Share of grid points where the ECDF lies strictly above the bound.
    pub fn exceedance_fraction(&self) -> f64 {
        let over = self
            .ecdf
            .iter()
            .zip(&self.bound)
            .filter(|(e, b)| e > b)
            .count();
        over as f64 / self.x.len() as f64
    }
}

/// ECDF of `p_values` on `grid_points + 1` equally spaced points of
/// `[0, 1]`, with the reference bound at level `1 - alpha`.
pub fn pp_plot_data(
    p_values: &[f64],
    alpha: f64,
    grid_points: usize,
    kind: BoundKind,
) -> Result<PpPlot> {
    if p_values.is_empty() {
        return Err(GsdError::EmptySample);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GsdError::InvalidArgument("alpha must lie in (0, 1)"));
    }
    if grid_points < 1 {
        return Err(GsdError::InvalidArgument("need at least one grid interval"));
    }
    let mut sorted: Vec<f64> = p_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let total = sorted.len();
    let kf = total as f64;
    let mut x = Vec::with_capacity(grid_points + 1);
    let mut ecdf = Vec::with_capacity(grid_points + 1);
    let mut bound = Vec::with_capacity(grid_points + 1);
    for i in 0..=grid_points {
        let xi = i as f64 / grid_points as f64;
        let below = sorted.partition_point(|&p| p <= xi);
        let b = match kind {
            BoundKind::PointwiseBinomial => {
                binomial_quantile(total as u64, xi, 1.0 - alpha) as f64 / kf
            }
            BoundKind::Dkw => (xi + libm::sqrt(libm::log(1.0 / alpha) / (2.0 * kf))).min(1.0),
        };
        x.push(xi);
        ecdf.push(below as f64 / kf);
        bound.push(b);
    }
    Ok(PpPlot { x, ecdf, bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::modified_epmf;
    use alloc::vec;

    fn s(counts: &[u64]) -> CountSample {
        CountSample::new(counts.to_vec()).unwrap()
    }

    #[test]
    fn perfect_fit_with_empty_cell() {
        let fitted = Pmf::new(vec![0.25, 0.25, 0.25, 0.25, 0.0]).unwrap();
        assert_eq!(g_statistic(&s(&[6, 6, 6, 6, 0]), &fitted).unwrap(), 0.0);
    }

    #[test]
    fn observed_cell_with_zero_probability() {
        let fitted = Pmf::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert_eq!(g_statistic(&s(&[1, 1, 1]), &fitted).unwrap(), f64::INFINITY);
    }

    #[test]
    fn against_modified_epmf() {
        let sample = s(&[10, 5, 5, 4, 0]);
        let t = g_statistic(&sample, &modified_epmf(&sample)).unwrap();
        let n = 24.0;
        let expected = 10.0 * libm::log(10.0 / (n * 10.5 / 26.5))
            + 5.0 * libm::log(5.0 / (n * 5.5 / 26.5)) * 2.0
            + 4.0 * libm::log(4.0 / (n * 4.5 / 26.5));
        assert!((t - expected).abs() < 1e-12);
    }

    #[test]
    fn scale_mismatch() {
        let fitted = Pmf::new(vec![0.25; 4]).unwrap();
        assert!(g_statistic(&s(&[1, 1, 1, 1, 1]), &fitted).is_err());
    }

    #[test]
    fn representable_sample_has_unit_p_value() {
        let config = GofConfig {
            mc: 50,
            seed: 1,
            gsd_estimator: GsdEstimator::Grid,
            ..GofConfig::default()
        };
        let res = bootstrap_g_test(&s(&[0, 0, 24, 0, 0]), GofModel::Gsd, &config).unwrap();
        assert_eq!(res.t_statistic, 0.0);
        assert_eq!(res.p_value, 1.0);
    }

    #[test]
    fn deterministic_and_on_lattice() {
        let config = GofConfig {
            mc: 40,
            seed: 9,
            grid: GridConfig::uniform(0.05),
            ..GofConfig::default()
        };
        let sample = s(&[2, 14, 6, 1, 1]);
        let a = bootstrap_g_test(&sample, GofModel::Gsd, &config).unwrap();
        let b = bootstrap_g_test(&sample, GofModel::Gsd, &config).unwrap();
        assert_eq!(a, b);
        let scaled = a.p_value * 40.0;
        assert_eq!(scaled, libm::round(scaled));
        assert!((0.0..=1.0).contains(&a.p_value));
    }

    #[test]
    fn pp_plot_extremes() {
        let ones = pp_plot_data(&[1.0; 50], 0.05, 100, BoundKind::PointwiseBinomial).unwrap();
        assert!(ones.ecdf[..100].iter().all(|&e| e == 0.0));
        assert_eq!(ones.ecdf[100], 1.0);
        assert_eq!(ones.exceedance_fraction(), 0.0);
        let zeros = pp_plot_data(&[0.0; 50], 0.05, 100, BoundKind::PointwiseBinomial).unwrap();
        assert!(zeros.ecdf.iter().all(|&e| e == 1.0));
        assert!(zeros.ecdf[0] > zeros.bound[0]);
        assert!(zeros.ecdf[1] > zeros.bound[1]);
    }

    #[test]
    fn pp_plot_errors() {
        assert!(pp_plot_data(&[], 0.05, 10, BoundKind::Dkw).is_err());
        assert!(pp_plot_data(&[0.5], 1.5, 10, BoundKind::Dkw).is_err());
    }

    #[test]
    fn dkw_bound_dominates_pointwise() {
        let ps: Vec<f64> = (0..200).map(|i| f64::from(i) / 200.0).collect();
        let a = pp_plot_data(&ps, 0.05, 20, BoundKind::PointwiseBinomial).unwrap();
        let b = pp_plot_data(&ps, 0.05, 20, BoundKind::Dkw).unwrap();
        for (pw, dkw) in a.bound.iter().zip(&b.bound).skip(1).take(19) {
            assert!(dkw >= pw);
        }
    }
}
