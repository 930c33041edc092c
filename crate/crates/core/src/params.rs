use alloc::vec::Vec;

use crate::error::{GsdError, Result};

/// Parameters of a GSD on `{1, ..., m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GsdParams {
    psi: f64,
    rho: f64,
    m: u32,
}

impl GsdParams {
    pub fn new(psi: f64, rho: f64, m: u32) -> Result<Self> {
        if m < 3 {
            return Err(GsdError::ScaleTooSmall(m));
        }
        if !(1.0..=f64::from(m)).contains(&psi) {
            return Err(GsdError::PsiOutOfRange { psi, m });
        }
        if !(0.0..=1.0).contains(&rho) {
            return Err(GsdError::RhoOutOfRange(rho));
        }
        Ok(Self { psi, rho, m })
    }

    /// Mean of the distribution.
    pub fn psi(&self) -> f64 {
        self.psi
    }

    /// Confidence parameter.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Number of response categories.
    pub fn m(&self) -> u32 {
        self.m
    }

    pub(crate) fn with_psi(self, psi: f64) -> Self {
        Self { psi, ..self }
    }

    pub(crate) fn with_rho(self, rho: f64) -> Self {
        Self { rho, ..self }
    }
}

/// Probability mass function over categories `1..=M`, stored in order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Pmf {
    probs: Vec<f64>,
}

impl Pmf {
    /// Checks every entry lies in `[0, 1]` and that the entries sum to 1
    /// within `1e-9`.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 3 {
            return Err(GsdError::ScaleTooSmall(probs.len() as u32));
        }
        if let Some(&bad) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(GsdError::ProbabilityOutOfRange(bad));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(GsdError::NotNormalized(total));
        }
        Ok(Self { probs })
    }

    pub(crate) fn from_vec_unchecked(probs: Vec<f64>) -> Self {
        Self { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.probs
    }

    /// Number of categories.
    pub fn m(&self) -> u32 {
        self.probs.len() as u32
    }

    /// `P(U = k)` for `k` in `1..=M`.
    pub fn prob(&self, k: u32) -> Result<f64> {
        self.check_category(k)?;
        Ok(self.probs[k as usize - 1])
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = (i + 1) as f64 - mean;
                d * d * p
            })
            .sum()
    }

    /// `P(U <= k)`.
    pub fn cdf(&self, k: u32) -> Result<f64> {
        self.check_category(k)?;
        if k == self.m() {
            return Ok(1.0);
        }
        Ok(self.probs[..k as usize].iter().sum::<f64>().min(1.0))
    }

    /// Generalised inverse of the CDF: the smallest `k` with `cdf(k) >= u`.
    pub fn quantile(&self, u: f64) -> Result<u32> {
        if !(0.0..=1.0).contains(&u) {
            return Err(GsdError::ProbabilityOutOfRange(u));
        }
        let mut cum = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            cum += p;
            if cum >= u {
                return Ok(i as u32 + 1);
            }
        }
        Ok(self.m())
    }

    /// Largest total probability held by two distinct categories.
    pub fn p_max(&self) -> f64 {
        let mut first = 0.0f64;
        let mut second = 0.0f64;
        for &p in &self.probs {
            if p > first {
                second = first;
                first = p;
            } else if p > second {
                second = p;
            }
        }
        first + second
    }

    fn check_category(&self, k: u32) -> Result<()> {
        if k == 0 || k > self.m() {
            return Err(GsdError::CategoryOutOfRange { k, m: self.m() });
        }
        Ok(())
    }
}
