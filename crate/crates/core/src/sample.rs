use alloc::vec;
use alloc::vec::Vec;

use crate::error::{GsdError, Result};

/// Category counts `(n_1, ..., n_M)` of an observed sample.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CountSample {
    counts: Vec<u64>,
}

impl CountSample {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        if counts.len() < 3 {
            return Err(GsdError::ScaleTooSmall(counts.len() as u32));
        }
        if counts.iter().sum::<u64>() == 0 {
            return Err(GsdError::EmptySample);
        }
        Ok(Self { counts })
    }

    /// Tallies raw scores in `1..=m`.
    pub fn from_scores(scores: &[u32], m: u32) -> Result<Self> {
        if m < 3 {
            return Err(GsdError::ScaleTooSmall(m));
        }
        let mut counts = vec![0u64; m as usize];
        for &s in scores {
            if s == 0 || s > m {
                return Err(GsdError::CategoryOutOfRange { k: s, m });
            }
            counts[s as usize - 1] += 1;
        }
        Self::new(counts)
    }

    pub(crate) fn from_counts_unchecked(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn m(&self) -> u32 {
        self.counts.len() as u32
    }

    /// Total number of responses.
    pub fn n(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        let n = self.n() as f64;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i + 1) as f64 * c as f64)
            .sum::<f64>()
            / n
    }

    /// Variance with divisor `n`.
    pub fn variance(&self) -> f64 {
        let n = self.n() as f64;
        let mean = self.mean();
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &c)| {
                let d = (i + 1) as f64 - mean;
                d * d * c as f64
            })
            .sum::<f64>()
            / n
    }
}
