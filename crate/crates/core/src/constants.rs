//! Normalization constants of the fractional Laplacian, its ball Poisson
//! kernel and the Riesz potential, together with the gamma function.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};

/// Dimension `n` and order `s` of the operator `(-Δ)^s` on `R^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    n: usize,
    s: f64,
}

impl FracParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n == 0 {
            return domain("dimension must be at least 1");
        }
        if !(s > 0.0 && s < 1.0) {
            return domain(format!("order s = {s} must lie strictly inside (0, 1)"));
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// True when `2s < n`, the regime in which the Riesz potential exists.
    pub fn is_riesz_regime(&self) -> bool {
        2.0 * self.s < self.n as f64
    }

    pub(crate) fn require_riesz(&self) -> Result<()> {
        if self.is_riesz_regime() {
            Ok(())
        } else {
            Err(FracError::Precondition(format!(
                "Riesz potential needs 2s < n, got n = {}, s = {}",
                self.n, self.s
            )))
        }
    }

    pub(crate) fn require_geometric(&self) -> Result<()> {
        if (1..=3).contains(&self.n) {
            Ok(())
        } else {
            Err(FracError::UnsupportedDimension(self.n))
        }
    }
}

/// The three normalization constants for a given `(n, s)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantsTable {
    /// Normalization of the singular-integral definition of `(-Δ)^s`.
    pub c_ns: f64,
    /// Normalization of the ball Poisson kernel.
    pub beta_ns: f64,
    /// Riesz normalization as printed; `None` outside the regime `2s < n`.
    pub alpha_ns: Option<f64>,
}

// Lanczos approximation, g = 7, nine coefficients.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_ln_gamma(x: f64) -> f64 {
    // valid for x >= 0.5
    let z = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("log_gamma needs a positive finite argument, got {x}"));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // Γ(x)Γ(1-x) = π / sin(πx)
        return Ok((PI / (PI * x).sin()).ln() - lanczos_ln_gamma(1.0 - x));
    }
    Ok(lanczos_ln_gamma(x))
}

/// Γ(x) for `x > 0`.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// Surface area of the unit sphere `S^{n-1}` in `R^n` (2 for n = 1).
pub fn sphere_area(n: usize) -> f64 {
    let half = n as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half).expect("n >= 1")
}

/// `C_{n,s} = s(1-s) π^{-n/2} 4^s Γ(n/2 + s) / Γ(2 - s)`.
pub fn c_ns(p: FracParams) -> f64 {
    let (n, s) = (p.n() as f64, p.s());
    let lg = log_gamma(n / 2.0 + s).unwrap() - log_gamma(2.0 - s).unwrap();
    s * (1.0 - s) * (-(n / 2.0) * PI.ln() + s * 4f64.ln() + lg).exp()
}

/// `β_{n,s} = Γ(n/2) π^{-n/2-1} sin(sπ)`.
pub fn beta_ns(p: FracParams) -> f64 {
    let (n, s) = (p.n() as f64, p.s());
    (log_gamma(n / 2.0).unwrap() - (n / 2.0 + 1.0) * PI.ln()).exp() * (s * PI).sin()
}

/// `α_{n,s} = π^{n/2} 2^{2s} Γ(s) / Γ((n - 2s)/2)`, defined for `2s < n`.
pub fn alpha_ns(p: FracParams) -> Option<f64> {
    if !p.is_riesz_regime() {
        return None;
    }
    let (n, s) = (p.n() as f64, p.s());
    let lg = log_gamma(s).unwrap() - log_gamma((n - 2.0 * s) / 2.0).unwrap();
    Some(((n / 2.0) * PI.ln() + 2.0 * s * 2f64.ln() + lg).exp())
}

pub fn constants_for(p: FracParams) -> ConstantsTable {
    ConstantsTable {
        c_ns: c_ns(p),
        beta_ns: beta_ns(p),
        alpha_ns: alpha_ns(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn log_gamma_known_values() {
        assert_eq!(log_gamma(1.0).unwrap(), 0.0);
        assert!(rel(log_gamma(5.0).unwrap(), 24f64.ln()) < 1e-14);
        assert!(rel(log_gamma(0.5).unwrap(), PI.sqrt().ln()) < 1e-13);
        // Γ(x)Γ(x+1/2) = 2^{1-2x} √π Γ(2x) at x = 0.25
        let lhs = log_gamma(0.25).unwrap() + log_gamma(0.75).unwrap();
        let rhs = (1.0 - 0.5) * 2f64.ln() + PI.sqrt().ln() + log_gamma(0.5).unwrap();
        assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn log_gamma_factorials_up_to_fifty() {
        let mut ln_fact = 0.0f64;
        for k in 1..50 {
            // ln Γ(k + 1) = ln k!
            ln_fact += (k as f64).ln();
            let v = log_gamma(k as f64 + 1.0).unwrap();
            assert!((v - ln_fact).abs() <= 1e-13 * ln_fact.abs().max(1.0), "k = {k}");
        }
    }

    #[test]
    fn log_gamma_rejects_non_positive() {
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_reflection_identity() {
        for i in 1..=100 {
            let x = i as f64 / 101.0;
            let lhs = log_gamma(x).unwrap() + log_gamma(1.0 - x).unwrap();
            let rhs = (PI / (PI * x).sin()).ln();
            assert!((lhs - rhs).abs() < 1e-11, "x = {x}");
        }
    }

    #[test]
    fn constants_closed_forms() {
        let p = FracParams::new(1, 0.5).unwrap();
        let t = constants_for(p);
        assert!(rel(t.c_ns, 1.0 / PI) < 1e-12);
        assert!(rel(t.beta_ns, 1.0 / PI) < 1e-12);
        assert_eq!(t.alpha_ns, None);

        let p3 = FracParams::new(3, 0.5).unwrap();
        assert!(rel(alpha_ns(p3).unwrap(), 2.0 * PI * PI) < 1e-12);
    }

    #[test]
    fn c_ns_vanishes_linearly_at_both_ends() {
        for n in 1..=4 {
            for &s in &[1e-6, 1e-4, 1.0 - 1e-4, 1.0 - 1e-6] {
                let p = FracParams::new(n, s).unwrap();
                let c = c_ns(p);
                let reduced = c / (s * (1.0 - s));
                assert!(c > 0.0 && reduced.is_finite() && reduced > 0.0);
                assert!(reduced < 10.0);
            }
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FracParams::new(0, 0.5).is_err());
        assert!(FracParams::new(1, 0.0).is_err());
        assert!(FracParams::new(1, 1.0).is_err());
        assert!(FracParams::new(2, f64::NAN).is_err());
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-14);
        assert!(rel(sphere_area(2), 2.0 * PI) < 1e-14);
        assert!(rel(sphere_area(3), 4.0 * PI) < 1e-14);
    }
}
