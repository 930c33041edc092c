//! Precomputed log-probability tables for exhaustive grid maximum likelihood.

use alloc::vec::Vec;

/// Evenly spaced values from `start` to `end` inclusive (the last value is
/// dropped when `step` does not divide the span). When `1 / step` is an
/// integer the values are formed as `start + i / (1 / step)` so that, for
/// example, the 0.01 grid hits 0.38 exactly.
pub(crate) fn axis_values(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = libm::floor((end - start) / step + 1e-9) as usize;
    let inv = 1.0 / step;
    let exact_inv = (inv - libm::round(inv)).abs() < 1e-9;
    (0..=count)
        .map(|i| {
            let v = if exact_inv {
                start + i as f64 / libm::round(inv)
            } else {
                start + i as f64 * step
            };
            v.min(end)
        })
        .collect()
}

/// Log-probabilities of `M` categories at a list of parameter points.
#[derive(Debug, Clone)]
pub(crate) struct LogProbTable {
    /// `log_p[k][point] = ln P(U = k + 1)`.
    log_p: Vec<Vec<f64>>,
    /// `ln(1 - P(U = k + 1))`, used to order exact likelihood ties.
    log_not: Vec<Vec<f64>>,
    p_max: Vec<f64>,
}

impl LogProbTable {
    pub(crate) fn new(m: usize, capacity: usize) -> Self {
        Self {
            log_p: (0..m).map(|_| Vec::with_capacity(capacity)).collect(),
            log_not: (0..m).map(|_| Vec::with_capacity(capacity)).collect(),
            p_max: Vec::with_capacity(capacity),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.p_max.len()
    }

    pub(crate) fn push_probs(&mut self, probs: &[f64]) {
        let mut first = 0.0f64;
        let mut second = 0.0f64;
        for (k, &p) in probs.iter().enumerate() {
            self.log_p[k].push(libm::log(p));
            self.log_not[k].push(libm::log1p(-p));
            if p > first {
                second = first;
                first = p;
            } else if p > second {
                second = p;
            }
        }
        self.p_max.push(first + second);
    }

    pub(crate) fn push_logs(&mut self, log_p: &[f64], log_not: &[f64], p_max: f64) {
        for k in 0..log_p.len() {
            self.log_p[k].push(log_p[k]);
            self.log_not[k].push(log_not[k]);
        }
        self.p_max.push(p_max);
    }

    pub(crate) fn p_max(&self, point: usize) -> f64 {
        self.p_max[point]
    }

    /// Index of the point maximising `sum n_k ln p_k`, scanning points in
    /// order so that the first of several equal maxima wins. Exact ties
    /// are first ordered by the smaller `sum n_k ln(1 - p_k)`, which
    /// separates points whose likelihood rounds to the same value (e.g.
    /// every point putting all but `1e-30` of its mass on one category).
    /// Points with `p_max > bound` are skipped.
    pub(crate) fn argmax(
        &self,
        counts: &[u64],
        bound: Option<f64>,
        scratch: &mut Vec<f64>,
    ) -> Option<usize> {
        let points = self.len();
        scratch.clear();
        scratch.resize(points, 0.0);
        for (k, &n_k) in counts.iter().enumerate() {
            if n_k == 0 {
                continue;
            }
            let w = n_k as f64;
            for (acc, lp) in scratch.iter_mut().zip(&self.log_p[k]) {
                *acc += w * lp;
            }
        }
        let secondary = |point: usize| -> f64 {
            counts
                .iter()
                .enumerate()
                .filter(|(_, &n)| n > 0)
                .map(|(k, &n)| n as f64 * self.log_not[k][point])
                .sum()
        };
        let mut best: Option<(usize, f64)> = None;
        let mut best_secondary = f64::NAN;
        for (point, &value) in scratch.iter().enumerate() {
            if let Some(b) = bound {
                if self.p_max[point] > b {
                    continue;
                }
            }
            match best {
                None => {
                    best = Some((point, value));
                    best_secondary = f64::NAN;
                }
                Some((_, top)) if value > top => {
                    best = Some((point, value));
                    best_secondary = f64::NAN;
                }
                Some((holder, top)) if value == top && value.is_finite() => {
                    if best_secondary.is_nan() {
                        best_secondary = secondary(holder);
                    }
                    let s = secondary(point);
                    if s < best_secondary {
                        best = Some((point, value));
                        best_secondary = s;
                    }
                }
                _ => {}
            }
        }
        best.map(|(point, _)| point)
    }
}
