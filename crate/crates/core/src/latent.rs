//! Representation of `U - 1` as a sum of `M - 1` zero-one variables.
//!
//! In the underdispersed regime (`rho >= C`) a single shared indicator `D`
//! chooses, for all positions at once, between the "staircase" variables
//! `X_i` (deterministic except for one fractional position) and iid
//! Bernoulli variables `Y_i`. The `Z_i = D X_i + (1 - D) Y_i` are therefore
//! dependent; treating them as independent Bernoullis with the marginal
//! probabilities `phi(i)` gives a different (Poisson-binomial) law.
//!
//! In the overdispersed regime (`rho < C`) the `Z_i` are conditionally iid
//! Bernoulli(`B`) with `B ~ Beta(alpha, beta)`, so `U - 1` is beta-binomial.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Beta, Distribution};

use crate::envelope::{envelope, is_edge};
use crate::error::{GsdError, Result};
use crate::math::{binomial, ln_beta};
use crate::params::{GsdParams, Pmf};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LatentSpec {
    Underdispersed {
        /// `P(D = 1) = (rho - C) / (1 - C)`.
        mix_weight: f64,
        /// `P(X_i = 1)` for `i = 1..M-1`.
        staircase: Vec<f64>,
        /// Common `P(Y_i = 1) = (psi - 1) / (M - 1)`.
        bernoulli: f64,
    },
    Overdispersed {
        alpha: f64,
        beta: f64,
        /// Number of trials, `M - 1`.
        trials: u32,
    },
}

pub fn latent_decomposition(params: &GsdParams) -> Result<LatentSpec> {
    let (psi, rho, m) = (params.psi(), params.rho(), params.m());
    if is_edge(psi, m) {
        return Err(GsdError::Degenerate(
            "psi on the scale boundary gives a point mass",
        ));
    }
    let mf = f64::from(m);
    let env = envelope(psi, m);
    if rho >= env.c {
        let staircase = (1..m)
            .map(|i| (psi - f64::from(i)).clamp(0.0, 1.0))
            .collect();
        Ok(LatentSpec::Underdispersed {
            mix_weight: (rho - env.c) / (1.0 - env.c),
            staircase,
            bernoulli: (psi - 1.0) / (mf - 1.0),
        })
    } else {
        if rho <= 0.0 {
            return Err(GsdError::Degenerate("beta parameters vanish at rho = 0"));
        }
        let scale = rho / ((mf - 1.0) * (env.c - rho));
        Ok(LatentSpec::Overdispersed {
            alpha: (psi - 1.0) * scale,
            beta: (mf - psi) * scale,
            trials: m - 1,
        })
    }
}

impl LatentSpec {
    /// Marginal success probabilities `P(Z_i = 1)`, `i = 1..M-1`.
    pub fn success_probabilities(&self) -> Vec<f64> {
        match self {
            LatentSpec::Underdispersed {
                mix_weight,
                staircase,
                bernoulli,
            } => staircase
                .iter()
                .map(|x| mix_weight * x + (1.0 - mix_weight) * bernoulli)
                .collect(),
            LatentSpec::Overdispersed {
                alpha,
                beta,
                trials,
            } => {
                vec![alpha / (alpha + beta); *trials as usize]
            }
        }
    }

    /// Law of `1 + sum Z_i`, built from the latent variables alone: the
    /// underdispersed branch convolves the two Bernoulli families, the
    /// overdispersed branch evaluates the beta-binomial through log-gamma.
    pub fn pmf(&self) -> Pmf {
        match self {
            LatentSpec::Underdispersed {
                mix_weight,
                staircase,
                bernoulli,
            } => {
                let xs = bernoulli_sum_law(staircase);
                let ys = bernoulli_sum_law(&vec![*bernoulli; staircase.len()]);
                let probs = xs
                    .iter()
                    .zip(&ys)
                    .map(|(x, y)| mix_weight * x + (1.0 - mix_weight) * y)
                    .collect();
                Pmf::from_vec_unchecked(probs)
            }
            LatentSpec::Overdispersed {
                alpha,
                beta,
                trials,
            } => {
                let base = ln_beta(*alpha, *beta);
                let probs = (0..=*trials)
                    .map(|j| {
                        let jf = f64::from(j);
                        let tf = f64::from(*trials);
                        binomial(*trials, j) * libm::exp(ln_beta(alpha + jf, beta + tf - jf) - base)
                    })
                    .collect();
                Pmf::from_vec_unchecked(probs)
            }
        }
    }

    /// Draws `n` scores by simulating the latent variables directly.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u32> {
        let mut rng = rng::stream(seed, 0);
        let mut out = Vec::with_capacity(n);
        match self {
            LatentSpec::Underdispersed {
                mix_weight,
                staircase,
                bernoulli,
            } => {
                for _ in 0..n {
                    let use_staircase = rng.random::<f64>() < *mix_weight;
                    let mut total = 1;
                    for x in staircase {
                        let p = if use_staircase { *x } else { *bernoulli };
                        if rng.random::<f64>() < p {
                            total += 1;
                        }
                    }
                    out.push(total);
                }
            }
            LatentSpec::Overdispersed {
                alpha,
                beta,
                trials,
            } => {
                // alpha, beta > 0 by construction
                let law = Beta::new(*alpha, *beta).expect("positive beta parameters");
                for _ in 0..n {
                    let b: f64 = law.sample(&mut rng);
                    let mut total = 1;
                    for _ in 0..*trials {
                        if rng.random::<f64>() < b {
                            total += 1;
                        }
                    }
                    out.push(total);
                }
            }
        }
        out
    }
}

/// Law of a sum of independent Bernoulli variables, by convolution.
fn bernoulli_sum_law(probs: &[f64]) -> Vec<f64> {
    let mut law = vec![0.0; probs.len() + 1];
    law[0] = 1.0;
    for (seen, &p) in probs.iter().enumerate() {
        for j in (0..=seen + 1).rev() {
            let stay = law[j] * (1.0 - p);
            let step = if j > 0 { law[j - 1] * p } else { 0.0 };
            law[j] = stay + step;
        }
    }
    law
}

/// Marginal success probability `phi(x)` of the underdispersed
/// representation, on `x in [1, M - 1]`: a plateau up to `psi - 1`, a
/// linear ramp on `(psi - 1, psi]` and a constant tail beyond `psi`.
pub fn phi(params: &GsdParams, x: f64) -> Result<f64> {
    let (psi, rho, m) = (params.psi(), params.rho(), params.m());
    let mf = f64::from(m);
    if !(1.0..=mf - 1.0).contains(&x) {
        return Err(GsdError::InvalidArgument("phi is defined on [1, M - 1]"));
    }
    if is_edge(psi, m) {
        return Ok((psi - x).clamp(0.0, 1.0));
    }
    let env = envelope(psi, m);
    if rho < env.c {
        return Err(GsdError::NotUnderdispersed { rho, c: env.c });
    }
    let d = (rho - env.c) / (1.0 - env.c);
    let tail = (1.0 - rho) * (psi - 1.0) / ((1.0 - env.c) * (mf - 1.0));
    Ok(if x <= psi - 1.0 {
        d + tail
    } else if x <= psi {
        d * (psi - x) + tail
    } else {
        tail
    })
}

/// Checks the three conditions a general success-probability profile must
/// meet to give mean `psi` and confidence `rho`: values in `[0, 1]`,
/// `sum phi(i) = psi - 1` and
/// `sum phi(i)^2 = psi - 1 - (1 - rho) V_max - rho V_min`, each within `1e-9`.
pub fn validate_general_phi(phi_values: &[f64], psi: f64, rho: f64, m: u32) -> Result<bool> {
    if m < 3 {
        return Err(GsdError::ScaleTooSmall(m));
    }
    if phi_values.len() != m as usize - 1 {
        return Err(GsdError::ScaleMismatch {
            expected: m - 1,
            got: phi_values.len() as u32,
        });
    }
    let params = GsdParams::new(psi, rho, m)?;
    const TOL: f64 = 1e-9;
    if phi_values.iter().any(|v| !(-TOL..=1.0 + TOL).contains(v)) {
        return Ok(false);
    }
    let sum: f64 = phi_values.iter().sum();
    let sum_sq: f64 = phi_values.iter().map(|v| v * v).sum();
    let env = envelope(params.psi(), m);
    let target_sq = psi - 1.0 - (1.0 - rho) * env.v_max - rho * env.v_min;
    Ok((sum - (psi - 1.0)).abs() <= TOL && (sum_sq - target_sq).abs() <= TOL)
}
