//! GSD probabilities, moments, CDF and inverse-CDF sampling.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::envelope::{envelope, is_edge, VarianceEnvelope};
use crate::error::{GsdError, Result};
use crate::math::binomial;
use crate::params::{GsdParams, Pmf};
use crate::rng;
use crate::sample::CountSample;

/// Exact category probabilities of `GSD(psi, rho)`.
///
/// `rho < C(psi)` uses the reparameterised beta-binomial; `rho >= C(psi)`
/// uses the mixture of the minimal-variance law and the shifted binomial.
/// At `psi` in `{1, M}` the law is a point mass whatever `rho` is.
pub fn pmf(params: &GsdParams) -> Pmf {
    let mut probs = vec![0.0; params.m() as usize];
    fill_pmf(params.psi(), params.rho(), params.m(), &mut probs);
    Pmf::from_vec_unchecked(probs)
}

pub(crate) fn fill_pmf(psi: f64, rho: f64, m: u32, out: &mut [f64]) {
    debug_assert_eq!(out.len(), m as usize);
    if is_edge(psi, m) {
        out.fill(0.0);
        let k = if psi - 1.0 < 0.5 { 0 } else { m as usize - 1 };
        out[k] = 1.0;
        return;
    }
    let env = envelope(psi, m);
    if rho >= env.c {
        fill_mixture(psi, rho, m, &env, out);
    } else {
        fill_beta_binomial(psi, rho, m, env.c, out);
    }
}

/// `[1 - |k - psi|]_+`: the minimal-variance law at mean `psi`.
pub(crate) fn triangular(psi: f64, k: u32) -> f64 {
    (1.0 - (f64::from(k) - psi).abs()).max(0.0)
}

/// Shifted binomial `1 + Binomial(M - 1, (psi - 1) / (M - 1))` at `k`.
pub(crate) fn shifted_binomial(psi: f64, m: u32, k: u32) -> f64 {
    let mf = f64::from(m);
    let p = (psi - 1.0) / (mf - 1.0);
    let q = (mf - psi) / (mf - 1.0);
    binomial(m - 1, k - 1) * libm::pow(p, f64::from(k - 1)) * libm::pow(q, f64::from(m - k))
}

fn fill_mixture(psi: f64, rho: f64, m: u32, env: &VarianceEnvelope, out: &mut [f64]) {
    let denom = 1.0 - env.c;
    let w_tri = (rho - env.c) / denom;
    let w_bin = (1.0 - rho) / denom;
    for (i, slot) in out.iter_mut().enumerate() {
        let k = i as u32 + 1;
        *slot = w_tri * triangular(psi, k) + w_bin * shifted_binomial(psi, m, k);
    }
}

// Ratio form of the beta-binomial products. Every factor stays bounded
// away from zero for rho in (0, C), and the leading factors cancel in
// closed form, so the expression is also valid at rho = 0.
fn fill_beta_binomial(psi: f64, rho: f64, m: u32, c: f64, out: &mut [f64]) {
    let mf = f64::from(m);
    let delta = c - rho;
    let up = (psi - 1.0) * rho / (mf - 1.0);
    let down = (mf - psi) * rho / (mf - 1.0);
    let top = m as usize - 2;

    // prefix products over i = 1..=t of (x + i * delta)
    let mut up_prod = vec![1.0; top + 1];
    let mut down_prod = vec![1.0; top + 1];
    let mut norm_prod = vec![1.0; top + 1];
    for t in 1..=top {
        let i = t as f64;
        up_prod[t] = up_prod[t - 1] * (up + i * delta);
        down_prod[t] = down_prod[t - 1] * (down + i * delta);
        norm_prod[t] = norm_prod[t - 1] * (rho + i * delta);
    }
    let norm = norm_prod[top];

    out[0] = (mf - psi) / (mf - 1.0) * down_prod[top] / norm;
    out[m as usize - 1] = (psi - 1.0) / (mf - 1.0) * up_prod[top] / norm;
    let lead = (psi - 1.0) * (mf - psi) * rho / ((mf - 1.0) * (mf - 1.0));
    for k in 2..m {
        let ups = (k - 2) as usize;
        let downs = (m - k - 1) as usize;
        out[k as usize - 1] =
            binomial(m - 1, k - 1) * lead * up_prod[ups] * down_prod[downs] / norm;
    }
}

/// `P(U = k)` alone, without allocating; agrees with [`fill_pmf`].
pub(crate) fn category_prob(psi: f64, rho: f64, m: u32, k: u32) -> f64 {
    if is_edge(psi, m) {
        let mode = if psi - 1.0 < 0.5 { 1 } else { m };
        return if k == mode { 1.0 } else { 0.0 };
    }
    let env = envelope(psi, m);
    if rho >= env.c {
        let denom = 1.0 - env.c;
        return (rho - env.c) / denom * triangular(psi, k)
            + (1.0 - rho) / denom * shifted_binomial(psi, m, k);
    }
    let mf = f64::from(m);
    let delta = env.c - rho;
    let up = (psi - 1.0) * rho / (mf - 1.0);
    let down = (mf - psi) * rho / (mf - 1.0);
    let (ups, downs) = match k {
        1 => (0, m - 2),
        _ if k == m => (m - 2, 0),
        _ => (k - 2, m - k - 1),
    };
    let mut value = if k == 1 {
        (mf - psi) / (mf - 1.0)
    } else if k == m {
        (psi - 1.0) / (mf - 1.0)
    } else {
        binomial(m - 1, k - 1) * (psi - 1.0) * (mf - psi) * rho / ((mf - 1.0) * (mf - 1.0))
    };
    for i in 1..=m - 2 {
        let i = f64::from(i);
        value /= rho + i * delta;
    }
    for i in 1..=ups {
        value *= up + f64::from(i) * delta;
    }
    for i in 1..=downs {
        value *= down + f64::from(i) * delta;
    }
    value
}

/// Mean and variance from the closed forms.
pub fn moments(params: &GsdParams) -> (f64, f64) {
    let env = envelope(params.psi(), params.m());
    let rho = params.rho();
    (params.psi(), rho * env.v_min + (1.0 - rho) * env.v_max)
}

/// `P(U <= k)`.
pub fn cdf(params: &GsdParams, k: u32) -> Result<f64> {
    pmf(params).cdf(k)
}

/// Smallest `k` with `cdf(k) >= u`.
pub fn quantile(params: &GsdParams, u: f64) -> Result<u32> {
    pmf(params).quantile(u)
}

/// Inverse-CDF sampler over a fixed PMF.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cumulative: Vec<f64>,
}

impl CategoricalSampler {
    pub fn new(pmf: &Pmf) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = pmf
            .probs()
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Pin the top of the table to 1 at the last category with mass so
        // rounding can never select a zero-probability tail category.
        if let Some(last) = pmf.probs().iter().rposition(|&p| p > 0.0) {
            for c in &mut cumulative[last..] {
                *c = 1.0;
            }
        }
        Self { cumulative }
    }

    pub fn m(&self) -> u32 {
        self.cumulative.len() as u32
    }

    /// One draw in `1..=M`.
    pub fn draw(&self, rng: &mut rng::Rng) -> u32 {
        let u: f64 = rng.random();
        // smallest k with F(k) > u, u in [0, 1)
        self.cumulative.partition_point(|&c| c <= u) as u32 + 1
    }

    /// Category counts of `n` draws.
    pub fn draw_counts(&self, rng: &mut rng::Rng, n: u64) -> Vec<u64> {
        let mut counts = vec![0u64; self.cumulative.len()];
        for _ in 0..n {
            counts[self.draw(rng) as usize - 1] += 1;
        }
        counts
    }

    pub fn draw_sample(&self, rng: &mut rng::Rng, n: u64) -> CountSample {
        CountSample::from_counts_unchecked(self.draw_counts(rng, n))
    }
}

/// `n` scores drawn by inverse-CDF sampling; identical for identical seeds.
pub fn sample(params: &GsdParams, n: usize, seed: u64) -> Result<Vec<u32>> {
    if n < 1 {
        return Err(GsdError::SampleTooSmall { n: 0, min: 1 });
    }
    let sampler = CategoricalSampler::new(&pmf(params));
    let mut rng = rng::stream(seed, 0);
    Ok((0..n).map(|_| sampler.draw(&mut rng)).collect())
}
