//! Small numeric helpers shared across modules.

use core::f64::consts::{FRAC_1_SQRT_2, PI};

/// `binom(n, k)` as a float. Exact for the scale sizes used here.
pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    libm::round(acc)
}

pub(crate) fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Standard normal CDF.
pub(crate) fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// `ln Phi(z)`, accurate deep in the lower tail where `Phi` underflows.
pub(crate) fn ln_norm_cdf(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z > -30.0 {
        return libm::log(norm_cdf(z));
    }
    // Mills-ratio asymptotic series; truncation error < 1e-12 for z < -30.
    let z2 = z * z;
    let inv = 1.0 / z2;
    let series =
        1.0 - inv + 3.0 * inv * inv - 15.0 * inv * inv * inv + 105.0 * inv * inv * inv * inv;
    -0.5 * z2 - libm::log(-z) - 0.5 * libm::log(2.0 * PI) + libm::log(series)
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn ln_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + libm::log1p(libm::exp(lo - hi))
}

/// Smallest `b` with `P(Binomial(trials, p) <= b) >= level`.
pub(crate) fn binomial_quantile(trials: u64, p: f64, level: f64) -> u64 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return trials;
    }
    let nf = trials as f64;
    let ln_p = libm::log(p);
    let ln_q = libm::log1p(-p);
    let ln_n_fact = ln_gamma(nf + 1.0);
    let mut cum = 0.0;
    for b in 0..=trials {
        let bf = b as f64;
        let ln_pmf =
            ln_n_fact - ln_gamma(bf + 1.0) - ln_gamma(nf - bf + 1.0) + bf * ln_p + (nf - bf) * ln_q;
        cum += libm::exp(ln_pmf);
        if cum >= level {
            return b;
        }
    }
    trials
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial(4, 0), 1.0);
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(10, 3), 120.0);
        assert_eq!(binomial(3, 5), 0.0);
    }

    #[test]
    fn ln_norm_cdf_matches_direct_and_asymptotic_regions() {
        for &z in &[-29.0, -10.0, -1.0, 0.0, 2.0] {
            assert!((ln_norm_cdf(z) - libm::log(norm_cdf(z))).abs() < 1e-12);
        }
        // continuity across the switch point
        let below = ln_norm_cdf(-30.0 - 1e-9);
        let above = libm::log(norm_cdf(-30.0 + 1e-9));
        assert!((below - above).abs() < 1e-6);
        assert!(ln_norm_cdf(-600.0).is_finite());
    }

    #[test]
    fn binomial_quantile_small_cases() {
        // Binomial(10, 0.5): P(X <= 7) = 0.9453, P(X <= 8) = 0.9893
        assert_eq!(binomial_quantile(10, 0.5, 0.95), 8);
        assert_eq!(binomial_quantile(10, 0.0, 0.95), 0);
        assert_eq!(binomial_quantile(10, 1.0, 0.95), 10);
    }
}
