//! Rater/stimulus model: score `U_ij ~ GSD(psi_j, rho_i)` for rater `i`
//! and stimulus `j`, with a mean per stimulus and a confidence per rater.
//!
//! Fitting alternates between the two parameter blocks. Within a block the
//! coordinates do not interact (column `j` only involves `psi_j`, row `i`
//! only `rho_i`), so each coordinate is improved by its own one-dimensional
//! projected-gradient search. Only strictly improving moves are taken, so
//! the joint log-likelihood never decreases from one sweep to the next.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::dist::{category_prob, fill_pmf, CategoricalSampler};
use crate::envelope::{envelope, is_edge, is_integer};
use crate::error::{GsdError, Result};
use crate::estimate::{category_gradient, Branch};
use crate::params::{GsdParams, Pmf};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rating {
    pub rater: usize,
    pub stimulus: usize,
    pub score: u32,
}

/// Sparse matrix of scores; zero-based rater and stimulus indices.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingMatrix {
    m: u32,
    n_raters: usize,
    n_stimuli: usize,
    ratings: Vec<Rating>,
    by_rater: Vec<Vec<usize>>,
    by_stimulus: Vec<Vec<usize>>,
}

impl RatingMatrix {
    pub fn new(m: u32, n_raters: usize, n_stimuli: usize, ratings: Vec<Rating>) -> Result<Self> {
        if m < 3 {
            return Err(GsdError::ScaleTooSmall(m));
        }
        let mut by_rater = vec![Vec::new(); n_raters];
        let mut by_stimulus = vec![Vec::new(); n_stimuli];
        for (idx, r) in ratings.iter().enumerate() {
            if r.score == 0 || r.score > m {
                return Err(GsdError::CategoryOutOfRange { k: r.score, m });
            }
            if r.rater >= n_raters || r.stimulus >= n_stimuli {
                return Err(GsdError::InvalidArgument("rating index outside the matrix"));
            }
            by_rater[r.rater].push(idx);
            by_stimulus[r.stimulus].push(idx);
        }
        Ok(Self {
            m,
            n_raters,
            n_stimuli,
            ratings,
            by_rater,
            by_stimulus,
        })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n_raters(&self) -> usize {
        self.n_raters
    }

    pub fn n_stimuli(&self) -> usize {
        self.n_stimuli
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn get(&self, rater: usize, stimulus: usize) -> Option<u32> {
        self.by_rater
            .get(rater)?
            .iter()
            .map(|&i| self.ratings[i])
            .find(|r| r.stimulus == stimulus)
            .map(|r| r.score)
    }

    pub fn stimulus_scores(&self, stimulus: usize) -> impl Iterator<Item = &Rating> + '_ {
        self.by_stimulus[stimulus]
            .iter()
            .map(move |&i| &self.ratings[i])
    }

    pub fn rater_scores(&self, rater: usize) -> impl Iterator<Item = &Rating> + '_ {
        self.by_rater[rater].iter().map(move |&i| &self.ratings[i])
    }

    fn check_estimable(&self) -> Result<()> {
        if let Some(i) = self.by_rater.iter().position(Vec::is_empty) {
            return Err(GsdError::EmptyLine {
                kind: "rater",
                index: i,
            });
        }
        if let Some(j) = self.by_stimulus.iter().position(Vec::is_empty) {
            return Err(GsdError::EmptyLine {
                kind: "stimulus",
                index: j,
            });
        }
        Ok(())
    }
}

/// Draws `psi_j ~ Uniform(1, M)` and `rho_i ~ Uniform(0, 1)`.
pub fn random_parameters(
    n_raters: usize,
    n_stimuli: usize,
    m: u32,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng::stream(seed, 1);
    let hi = f64::from(m);
    let psi = (0..n_stimuli).map(|_| rng.random_range(1.0..hi)).collect();
    let rho = (0..n_raters).map(|_| rng.random_range(0.0..1.0)).collect();
    (psi, rho)
}

/// A complete matrix with every score drawn independently from
/// `GSD(psi[j], rho[i])`, raters in the outer loop.
pub fn simulate_matrix(psi: &[f64], rho: &[f64], m: u32, seed: u64) -> Result<RatingMatrix> {
    let stimuli: Vec<GsdParams> = psi
        .iter()
        .map(|&p| GsdParams::new(p, 0.5, m))
        .collect::<Result<_>>()?;
    let mut rng = rng::stream(seed, 0);
    let mut ratings = Vec::with_capacity(psi.len() * rho.len());
    let mut probs = vec![0.0; m as usize];
    for (i, &r) in rho.iter().enumerate() {
        if !(0.0..=1.0).contains(&r) {
            return Err(GsdError::RhoOutOfRange(r));
        }
        for (j, s) in stimuli.iter().enumerate() {
            fill_pmf(s.psi(), r, m, &mut probs);
            let sampler = CategoricalSampler::new(&Pmf::from_vec_unchecked(probs.clone()));
            ratings.push(Rating {
                rater: i,
                stimulus: j,
                score: sampler.draw(&mut rng),
            });
        }
    }
    RatingMatrix::new(m, rho.len(), psi.len(), ratings)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixFitConfig {
    pub max_sweeps: u32,
    /// Stop once a sweep raises the joint log-likelihood by less than this.
    pub tolerance: f64,
    /// Line-search iterations per coordinate per sweep.
    pub inner_iterations: u32,
}

impl Default for MatrixFitConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            tolerance: 1e-8,
            inner_iterations: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MatrixFit {
    pub psi: Vec<f64>,
    pub rho: Vec<f64>,
    pub log_likelihood: f64,
    pub sweeps: u32,
    pub converged: bool,
    /// Joint log-likelihood at the start and after every sweep.
    pub trace: Vec<f64>,
}

fn log_prob(psi: f64, rho: f64, m: u32, score: u32) -> f64 {
    libm::log(category_prob(psi, rho, m, score))
}

fn nudged(psi: f64, m: u32) -> f64 {
    const NUDGE: f64 = 1e-9;
    let mf = f64::from(m);
    if psi - 1.0 < NUDGE {
        1.0 + NUDGE
    } else if mf - psi < NUDGE {
        mf - NUDGE
    } else if is_integer(psi) {
        psi + NUDGE
    } else {
        psi
    }
}

/// One-dimensional projected ascent along the sign of the derivative.
/// `step` carries the last accepted step length between calls.
fn ascend(
    x0: f64,
    (lo, hi): (f64, f64),
    iterations: u32,
    step: &mut f64,
    mut value: impl FnMut(f64) -> f64,
    mut slope: impl FnMut(f64) -> f64,
) -> (f64, f64) {
    let mut x = x0;
    let mut fx = value(x);
    for _ in 0..iterations {
        let g = slope(x);
        if g.is_nan() || g == 0.0 || (x <= lo && g < 0.0) || (x >= hi && g > 0.0) {
            break;
        }
        let dir = g.signum();
        let mut t = (*step).clamp(1e-10, 0.5);
        let mut accepted = false;
        while t > 1e-12 {
            let cand = (x + dir * t).clamp(lo, hi);
            if cand != x {
                let fc = value(cand);
                if fc > fx {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            *step = 1e-3;
            break;
        }
        *step = 2.0 * t;
    }
    (x, fx)
}

/// Block-coordinate maximum likelihood for the rater/stimulus model.
///
/// Starts from the column means for `psi` and, for `rho_i`, the average of
/// the moments-implied confidence `(V_max - d^2) / (V_max - V_min)` over
/// rater `i`'s scores (`d` being the distance to the column mean), kept in
/// `[0.01, 0.99]` so every starting probability is positive.
pub fn fit_matrix(ratings: &RatingMatrix, config: &MatrixFitConfig) -> Result<MatrixFit> {
    ratings.check_estimable()?;
    let m = ratings.m;
    let mf = f64::from(m);

    let mut psi: Vec<f64> = (0..ratings.n_stimuli)
        .map(|j| {
            let (sum, count) = ratings
                .stimulus_scores(j)
                .fold((0.0, 0.0), |(s, c), r| (s + f64::from(r.score), c + 1.0));
            (sum / count).clamp(1.0, mf)
        })
        .collect();
    let mut rho: Vec<f64> = (0..ratings.n_raters)
        .map(|i| {
            let mut total = 0.0;
            let mut count = 0.0;
            for r in ratings.rater_scores(i) {
                let centre = psi[r.stimulus];
                if is_edge(centre, m) {
                    continue;
                }
                let env = envelope(centre, m);
                let d = f64::from(r.score) - centre;
                total += ((env.v_max - d * d) / (env.v_max - env.v_min)).clamp(0.0, 1.0);
                count += 1.0;
            }
            if count > 0.0 { total / count } else { 0.5 }.clamp(0.01, 0.99)
        })
        .collect();

    let joint = |psi: &[f64], rho: &[f64]| -> f64 {
        ratings
            .ratings
            .iter()
            .map(|r| log_prob(psi[r.stimulus], rho[r.rater], m, r.score))
            .sum()
    };

    let mut psi_steps = vec![0.1; ratings.n_stimuli];
    let mut rho_steps = vec![0.1; ratings.n_raters];
    let mut current = joint(&psi, &rho);
    let mut trace = vec![current];
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < config.max_sweeps {
        sweeps += 1;
        for j in 0..ratings.n_stimuli {
            let column: Vec<Rating> = ratings.stimulus_scores(j).copied().collect();
            let rho_ref = &rho;
            let (x, _) = ascend(
                psi[j],
                (1.0, mf),
                config.inner_iterations,
                &mut psi_steps[j],
                |x| {
                    column
                        .iter()
                        .map(|r| log_prob(x, rho_ref[r.rater], m, r.score))
                        .sum()
                },
                |x| {
                    let at = nudged(x, m);
                    column
                        .iter()
                        .map(|r| {
                            let rr = rho_ref[r.rater];
                            category_gradient(at, rr, m, r.score, Branch::of(at, rr, m)).0
                        })
                        .sum()
                },
            );
            psi[j] = x;
        }
        for i in 0..ratings.n_raters {
            let row: Vec<Rating> = ratings.rater_scores(i).copied().collect();
            let psi_ref = &psi;
            let (x, _) = ascend(
                rho[i],
                (0.0, 1.0),
                config.inner_iterations,
                &mut rho_steps[i],
                |x| {
                    row.iter()
                        .map(|r| log_prob(psi_ref[r.stimulus], x, m, r.score))
                        .sum()
                },
                |x| {
                    row.iter()
                        .map(|r| {
                            let at = nudged(psi_ref[r.stimulus], m);
                            category_gradient(at, x, m, r.score, Branch::of(at, x, m)).1
                        })
                        .sum()
                },
            );
            rho[i] = x;
        }
        let next = joint(&psi, &rho);
        trace.push(next);
        let gain = next - current;
        current = next;
        if gain < config.tolerance {
            converged = true;
            break;
        }
    }
    Ok(MatrixFit {
        psi,
        rho,
        log_likelihood: current,
        sweeps,
        converged,
        trace,
    })
}
