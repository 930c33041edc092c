//! Which model better predicts a large sample from a small subsample: a GSD
//! fitted to the subsample, or the subsample's own empirical PMF?
//!
//! For each of `mc` bootstrap subsamples drawn from the large sample's EPMF
//! the log-likelihood ratio `W_r = sum_{N_k > 0} N_k (ln q_k - ln v_k)` is
//! computed, `q` being the fitted GSD and `v` the subsample EPMF. The
//! estimate of `P(W > 0) - P(W < 0)` comes with a normal-approximation 95%
//! interval.

use alloc::vec;
use alloc::vec::Vec;

use crate::dist::{pmf, CategoricalSampler};
use crate::error::{GsdError, Result};
use crate::estimate::{epmf, modified_epmf, GridConfig, GridEstimator};
use crate::params::Pmf;
use crate::rng;
use crate::sample::CountSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Variant {
    /// Plain grid MLE against the plain EPMF.
    Unmodified,
    /// Constrained grid MLE against the add-one-half EPMF; neither model
    /// leaves a category empty.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Verdict {
    GsdBetter,
    EpmfBetter,
    NoDifference,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompareResult {
    pub p_hat_gsd: f64,
    pub p_hat_e: f64,
    pub diff: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mc: u32,
    pub n_small: u64,
    pub gsd_wins: u32,
    pub epmf_wins: u32,
    pub ties: u32,
    /// Replicates where both models gave an observed category probability
    /// zero; these are counted as ties.
    pub both_infinite: u32,
    pub verdict: Verdict,
}

const Z_975: f64 = 1.96;

impl CompareResult {
    /// Builds the summary from win/loss counts.
    pub fn from_counts(
        gsd_wins: u32,
        epmf_wins: u32,
        ties: u32,
        both_infinite: u32,
        n_small: u64,
    ) -> Self {
        let mc = gsd_wins + epmf_wins + ties;
        let mcf = f64::from(mc);
        let p_hat_gsd = f64::from(gsd_wins) / mcf;
        let p_hat_e = f64::from(epmf_wins) / mcf;
        let diff = p_hat_gsd - p_hat_e;
        let half = Z_975 * libm::sqrt(((p_hat_gsd + p_hat_e - diff * diff) / mcf).max(0.0));
        let (ci_low, ci_high) = (diff - half, diff + half);
        let verdict = if ci_low > 0.0 {
            Verdict::GsdBetter
        } else if ci_high < 0.0 {
            Verdict::EpmfBetter
        } else {
            Verdict::NoDifference
        };
        Self {
            p_hat_gsd,
            p_hat_e,
            diff,
            ci_low,
            ci_high,
            mc,
            n_small,
            gsd_wins,
            epmf_wins,
            ties,
            both_infinite,
            verdict,
        }
    }
}

/// `sum_{N_k > 0} N_k ln p_k`.
fn large_sample_log_likelihood(large: &[u64], probs: &Pmf) -> f64 {
    large
        .iter()
        .zip(probs.probs())
        .filter(|(&n, _)| n > 0)
        .map(|(&n, &p)| n as f64 * libm::log(p))
        .sum()
}

/// Reusable comparison driver; the GSD fits are memoised across calls.
pub struct Comparator {
    estimator: GridEstimator,
}

impl Comparator {
    pub fn new(m: u32, grid: GridConfig) -> Result<Self> {
        Ok(Self {
            estimator: GridEstimator::new(m, grid)?,
        })
    }

    pub fn compare(
        &mut self,
        large: &CountSample,
        n_small: u64,
        mc: u32,
        variant: Variant,
        seed: u64,
    ) -> Result<CompareResult> {
        if large.m() != self.estimator.m() {
            return Err(GsdError::ScaleMismatch {
                expected: self.estimator.m(),
                got: large.m(),
            });
        }
        if mc < 1 {
            return Err(GsdError::InvalidArgument("mc must be at least 1"));
        }
        let min = if variant == Variant::Corrected { 2 } else { 1 };
        if n_small < min {
            return Err(GsdError::SampleTooSmall { n: n_small, min });
        }
        if n_small >= large.n() {
            return Err(GsdError::InvalidArgument(
                "the small sample must be smaller than the large sample",
            ));
        }
        let sampler = CategoricalSampler::new(&epmf(large));
        let (mut wins, mut losses, mut ties, mut both_inf) = (0, 0, 0, 0);
        for r in 0..mc {
            let mut rng = rng::stream(seed, u64::from(r));
            let small = sampler.draw_sample(&mut rng, n_small);
            let (model, empirical) = match variant {
                Variant::Unmodified => (self.estimator.fit(&small)?, epmf(&small)),
                Variant::Corrected => (
                    self.estimator.fit_constrained(&small)?,
                    modified_epmf(&small),
                ),
            };
            let ll_model = large_sample_log_likelihood(large.counts(), &pmf(&model.params));
            let ll_emp = large_sample_log_likelihood(large.counts(), &empirical);
            if ll_model == f64::NEG_INFINITY && ll_emp == f64::NEG_INFINITY {
                both_inf += 1;
                ties += 1;
                continue;
            }
            let w = ll_model - ll_emp;
            if w > 0.0 {
                wins += 1;
            } else if w < 0.0 {
                losses += 1;
            } else {
                ties += 1;
            }
        }
        Ok(CompareResult::from_counts(
            wins, losses, ties, both_inf, n_small,
        ))
    }
}

pub fn compare_models(
    large: &CountSample,
    n_small: u64,
    mc: u32,
    variant: Variant,
    seed: u64,
    grid: &GridConfig,
) -> Result<CompareResult> {
    Comparator::new(large.m(), *grid)?.compare(large, n_small, mc, variant, seed)
}

/// One stimulus at one small-sample size.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchEntry {
    pub stimulus: usize,
    pub result: CompareResult,
}

/// Histogram of `diff` over `[-1, 1]`, split by significance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DiffHistogram {
    pub n_small: u64,
    /// `bins + 1` bin edges.
    pub edges: Vec<f64>,
    pub significant: Vec<u32>,
    pub insignificant: Vec<u32>,
}

impl DiffHistogram {
    fn new(n_small: u64, bins: usize) -> Self {
        let edges = (0..=bins)
            .map(|i| -1.0 + 2.0 * i as f64 / bins as f64)
            .collect();
        Self {
            n_small,
            edges,
            significant: vec![0; bins],
            insignificant: vec![0; bins],
        }
    }

    fn add(&mut self, result: &CompareResult) {
        let bins = self.significant.len();
        let pos = ((result.diff + 1.0) / 2.0 * bins as f64) as usize;
        let bin = pos.min(bins - 1);
        if result.verdict == Verdict::NoDifference {
            self.insignificant[bin] += 1;
        } else {
            self.significant[bin] += 1;
        }
    }

    pub fn occupied_bins(&self) -> usize {
        self.significant
            .iter()
            .zip(&self.insignificant)
            .filter(|(a, b)| **a + **b > 0)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchResult {
    pub entries: Vec<BatchEntry>,
    pub histograms: Vec<DiffHistogram>,
}

impl BatchResult {
    pub fn mean_diff(&self, n_small: u64) -> Option<f64> {
        let diffs: Vec<f64> = self
            .entries
            .iter()
            .filter(|e| e.result.n_small == n_small)
            .map(|e| e.result.diff)
            .collect();
        if diffs.is_empty() {
            return None;
        }
        Some(diffs.iter().sum::<f64>() / diffs.len() as f64)
    }
}

/// Runs [`compare_models`] for every stimulus and small-sample size. The
/// pair `(stimulus s, size index j)` uses seed `derive_seed(seed, s, j)`.
pub fn compare_batch(
    large_samples: &[CountSample],
    n_small_values: &[u64],
    mc: u32,
    variant: Variant,
    seed: u64,
    grid: &GridConfig,
    bins: usize,
) -> Result<BatchResult> {
    let first = large_samples.first().ok_or(GsdError::EmptySample)?;
    if n_small_values.is_empty() {
        return Err(GsdError::InvalidArgument("no small-sample sizes given"));
    }
    if bins < 1 {
        return Err(GsdError::InvalidArgument("need at least one histogram bin"));
    }
    let mut comparator = Comparator::new(first.m(), *grid)?;
    let mut entries = Vec::new();
    let mut histograms = Vec::new();
    for (j, &n_small) in n_small_values.iter().enumerate() {
        let mut hist = DiffHistogram::new(n_small, bins);
        for (s, large) in large_samples.iter().enumerate() {
            let sub_seed = rng::derive_seed(seed, s as u64, j as u64);
            let result = comparator.compare(large, n_small, mc, variant, sub_seed)?;
            hist.add(&result);
            entries.push(BatchEntry {
                stimulus: s,
                result,
            });
        }
        histograms.push(hist);
    }
    Ok(BatchResult {
        entries,
        histograms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_wins_collapse_interval() {
        let r = CompareResult::from_counts(100, 0, 0, 0, 12);
        assert_eq!((r.diff, r.ci_low, r.ci_high), (1.0, 1.0, 1.0));
        assert_eq!(r.verdict, Verdict::GsdBetter);
    }

    #[test]
    fn balanced_wins_give_symmetric_interval() {
        let r = CompareResult::from_counts(50, 50, 0, 0, 12);
        assert_eq!(r.diff, 0.0);
        assert!((r.ci_high - 1.96 / 10.0).abs() < 1e-15);
        assert!((r.ci_low + 1.96 / 10.0).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::NoDifference);
    }

    #[test]
    fn losses_favour_epmf() {
        let r = CompareResult::from_counts(10, 90, 0, 0, 12);
        assert_eq!(r.verdict, Verdict::EpmfBetter);
        assert!(r.p_hat_gsd + r.p_hat_e <= 1.0);
    }

    #[test]
    fn argument_checks() {
        let large = CountSample::new(alloc::vec![5, 10, 20, 10, 5]).unwrap();
        let grid = GridConfig::uniform(0.1);
        assert!(compare_models(&large, 50, 10, Variant::Unmodified, 0, &grid).is_err());
        assert!(compare_models(&large, 1, 10, Variant::Corrected, 0, &grid).is_err());
        assert!(compare_models(&large, 5, 0, Variant::Unmodified, 0, &grid).is_err());
        assert!(compare_batch(&[], &[12], 10, Variant::Unmodified, 0, &grid, 20).is_err());
    }

    #[test]
    fn counts_add_up_and_corrected_has_no_infinities() {
        let large = CountSample::new(alloc::vec![3, 10, 20, 12, 5]).unwrap();
        let grid = GridConfig::uniform(0.05);
        for variant in [Variant::Unmodified, Variant::Corrected] {
            let r = compare_models(&large, 12, 200, variant, 4, &grid).unwrap();
            assert_eq!(r.gsd_wins + r.epmf_wins + r.ties, 200);
            assert!(r.ci_low <= r.diff && r.diff <= r.ci_high);
            if variant == Variant::Corrected {
                assert_eq!(r.both_infinite, 0);
            }
        }
    }

    #[test]
    fn batch_single_entry() {
        let large = CountSample::new(alloc::vec![3, 10, 20, 12, 5]).unwrap();
        let grid = GridConfig::uniform(0.05);
        let a = compare_batch(
            core::slice::from_ref(&large),
            &[12],
            100,
            Variant::Unmodified,
            3,
            &grid,
            20,
        )
        .unwrap();
        let b = compare_batch(&[large], &[12], 100, Variant::Unmodified, 3, &grid, 20).unwrap();
        assert_eq!(a.entries.len(), 1);
        assert_eq!(a.histograms[0].occupied_bins(), 1);
        assert_eq!(a, b);
    }
}
