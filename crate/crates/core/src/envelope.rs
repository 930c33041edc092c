//! Attainable variance range at a fixed mean, and the regime threshold
//! `C(psi)` at which the GSD is the shifted binomial.

use crate::error::{GsdError, Result};
use crate::INTEGER_TOL;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VarianceEnvelope {
    /// Smallest variance of any distribution on `{1..M}` with mean `psi`.
    pub v_min: f64,
    /// Largest such variance (two-point law on `{1, M}`).
    pub v_max: f64,
    /// Variance of the shifted binomial with mean `psi`.
    pub v_bin: f64,
    /// Value of `rho` giving variance `v_bin`.
    pub c: f64,
}

pub fn variance_envelope(psi: f64, m: u32) -> Result<VarianceEnvelope> {
    if m < 3 {
        return Err(GsdError::ScaleTooSmall(m));
    }
    if !(1.0..=f64::from(m)).contains(&psi) {
        return Err(GsdError::PsiOutOfRange { psi, m });
    }
    Ok(envelope(psi, m))
}

/// `true` when `psi` sits (within tolerance) on an endpoint of the scale.
pub(crate) fn is_edge(psi: f64, m: u32) -> bool {
    psi - 1.0 < INTEGER_TOL || f64::from(m) - psi < INTEGER_TOL
}

pub(crate) fn is_integer(psi: f64) -> bool {
    (psi - libm::round(psi)).abs() < INTEGER_TOL
}

pub(crate) fn v_min(psi: f64) -> f64 {
    if is_integer(psi) {
        return 0.0;
    }
    (libm::ceil(psi) - psi) * (psi - libm::floor(psi))
}

pub(crate) fn v_max(psi: f64, m: u32) -> f64 {
    (psi - 1.0) * (f64::from(m) - psi)
}

pub(crate) fn envelope(psi: f64, m: u32) -> VarianceEnvelope {
    let mf = f64::from(m);
    if is_edge(psi, m) {
        // C is 0/0 at the endpoints; its one-sided limit is 1.
        return VarianceEnvelope {
            v_min: 0.0,
            v_max: 0.0,
            v_bin: 0.0,
            c: 1.0,
        };
    }
    let v_min = v_min(psi);
    let v_max = v_max(psi, m);
    let c = (mf - 2.0) / (mf - 1.0) * v_max / (v_max - v_min);
    VarianceEnvelope {
        v_min,
        v_max,
        v_bin: v_max / (mf - 1.0),
        c,
    }
}

/// `C'(psi)` for non-integer interior `psi`.
pub(crate) fn c_derivative(psi: f64, m: u32) -> f64 {
    let mf = f64::from(m);
    let vmin = v_min(psi);
    let vmax = v_max(psi, m);
    let dvmin = -2.0 * psi + libm::ceil(psi) + libm::floor(psi);
    let dvmax = -2.0 * psi + mf + 1.0;
    let gap = vmax - vmin;
    (mf - 2.0) / (mf - 1.0) * (vmax * dvmin - dvmax * vmin) / (gap * gap)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn integer_mid_scale() {
        let e = variance_envelope(3.0, 5).unwrap();
        assert_eq!((e.v_min, e.v_max, e.v_bin), (0.0, 4.0, 1.0));
        assert!(close(e.c, 0.75, 1e-15));
    }

    #[test]
    fn endpoint_is_degenerate_with_unit_threshold() {
        let e = variance_envelope(1.0, 5).unwrap();
        assert_eq!((e.v_min, e.v_max, e.v_bin, e.c), (0.0, 0.0, 0.0, 1.0));
        let e = variance_envelope(5.0, 5).unwrap();
        assert_eq!(e.c, 1.0);
    }

    #[test]
    fn non_integer_psi() {
        let e = variance_envelope(3.3, 5).unwrap();
        assert!(close(e.v_min, 0.21, 1e-12));
        assert!(close(e.v_max, 3.91, 1e-12));
        assert!(close(e.v_bin, 0.9775, 1e-12));
        assert!(close(e.c, 0.792_567_567_567_567_5, 1e-12));
    }

    #[test]
    fn threshold_tends_to_one_at_the_edges() {
        let near = envelope(1.0 + 1e-7, 5).c;
        assert!(close(near, 1.0, 1e-6));
        let near = envelope(5.0 - 1e-7, 5).c;
        assert!(close(near, 1.0, 1e-6));
    }

    #[test]
    fn rejects_bad_domain() {
        assert!(variance_envelope(0.5, 5).is_err());
        assert!(variance_envelope(3.0, 2).is_err());
    }

    #[test]
    fn c_derivative_matches_finite_difference() {
        for &psi in &[1.3, 2.4, 2.9, 3.6, 4.7] {
            let h = 1e-6;
            let fd = (envelope(psi + h, 5).c - envelope(psi - h, 5).c) / (2.0 * h);
            assert!(close(c_derivative(psi, 5), fd, 1e-6), "psi={psi}");
        }
    }
}
