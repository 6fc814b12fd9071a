//! Derivative bounds for `s`-harmonic functions and the decay experiment
//! behind the Liouville theorem.
//!
//! Derivatives are extracted exactly as in the mean-value argument:
//! `D^γ u(x) = ∫_{|z| >= r0} u(x - z) D^γ Ψ_{r0}(z) dz`, valid when `u` is
//! `s`-harmonic on a ball of radius larger than `4 r0` around `x`.

use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::constants::{sphere_area, FracParams};
use crate::error::{FracError, Result};
use crate::field::ScalarField;
use crate::geometry::{Ball, Domain, Point};
use crate::kernels::{psi_derivative, MultiIndex};
use crate::poisson::{extension_field, ExteriorData};
use crate::quadrature::{
    integrate_exterior_ball_with, integrate_half_line, integrate_sphere_with, ExteriorOptions, HalfLine, QuadResult,
    QuadSpec,
};

/// Ratio `r0 / R` used for Cauchy estimates on `B(0, R)`: just under the
/// limiting value `1/4`, keeping the `4 r0` margin strict.
pub const R0_FRACTION: f64 = 0.245;

/// `D^γ u(x)` as `u ⋆ D^γ Ψ_{r0}`.
pub fn derivative_via_kernel(
    p: FracParams,
    u: &ScalarField,
    gamma: &MultiIndex,
    x: &Point,
    r0: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    p.require_geometric()?;
    spec.validate()?;
    let n = p.n();
    gamma.check_dim(n)?;
    if gamma.order() > 4 {
        return Err(FracError::Domain(format!("derivative order {} exceeds 4", gamma.order())));
    }
    if !(r0 > 0.0) {
        return Err(FracError::Domain("r0 must be positive".into()));
    }
    if !u.is_l1s_certified(p) {
        return Err(FracError::NotL1s { s: p.s() });
    }
    let q = 2.0 * p.s() + gamma.order() as f64 - u.growth_exponent().max(0.0);
    let nodes = spec.sphere.nodes(n, None)?;
    let kernel_ok = AtomicBool::new(true);
    let total = integrate_sphere_with(
        |theta| {
            let back = -*theta;
            let mut breaks = u.ray_breaks(x, &back);
            breaks.push(4.0 * r0);
            let plan = HalfLine::plan(r0, 0.0, q, r0, 4.0 * r0, breaks, spec);
            integrate_half_line(
                |rho| {
                    let z = *theta * rho;
                    let d = match psi_derivative(p, gamma, r0, &z) {
                        Ok(d) => d,
                        Err(_) => return f64::NAN,
                    };
                    if !d.converged {
                        kernel_ok.store(false, Ordering::Relaxed);
                    }
                    u.eval(&x.along(&back, rho)) * d.value * rho.powi(n as i32 - 1)
                },
                &plan,
                spec,
            )
        },
        &nodes,
    );
    if !total.value.is_finite() {
        return Err(FracError::Singularity("non-finite kernel derivative integral".into()));
    }
    Ok(QuadResult { converged: total.converged && kernel_ok.into_inner(), ..total })
}

/// Both sides of the Cauchy-type estimate
/// `|D^γ u(0)| <= C R^{2s-|γ|} ∫_{|y| >= R/4} |u(y)| |y|^{-n-2s} dy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub gamma: MultiIndex,
    pub radius: f64,
    pub lhs: f64,
    pub tail: f64,
    pub rhs_factor: f64,
    /// `lhs / rhs_factor`; absent when `rhs_factor` vanishes.
    pub ratio: Option<f64>,
    pub lhs_error: f64,
    pub converged: bool,
}

/// `∫_{|y| >= a} |u(y)| |y|^{-n-2s} dy`.
pub fn tail_integral(p: FracParams, u: &ScalarField, a: f64, spec: &QuadSpec) -> Result<QuadResult> {
    let n = p.n();
    let q = 2.0 * p.s() - u.growth_exponent().max(0.0);
    if !(q > 0.0) {
        return Err(FracError::NotL1s { s: p.s() });
    }
    let opts = ExteriorOptions { decay_q: q, inner_singularity: 0.0, breaks: u.breaks() };
    let decay = n as f64 + 2.0 * p.s();
    integrate_exterior_ball_with(|y| u.eval(y).abs() * y.norm().powf(-decay), &Point::zero(n), a, &opts, spec)
}

/// The estimate at the origin for `u` assumed `s`-harmonic in `B(0, R)`.
pub fn cauchy_estimate_record(
    p: FracParams,
    u: &ScalarField,
    gamma: &MultiIndex,
    radius: f64,
    spec: &QuadSpec,
) -> Result<EstimateRecord> {
    if !(radius > 0.0) {
        return Err(FracError::Domain("radius must be positive".into()));
    }
    let n = p.n();
    let d = derivative_via_kernel(p, u, gamma, &Point::zero(n), R0_FRACTION * radius, spec)?;
    let tail = tail_integral(p, u, radius / 4.0, spec)?;
    let lhs = d.value.abs();
    let rhs_factor = radius.powf(2.0 * p.s() - gamma.order() as f64) * tail.value;
    // a derivative well above its own error with nothing on the right
    if rhs_factor == 0.0 && lhs > 10.0 * d.error_estimate.max(spec.abs_tol) {
        return Err(FracError::Inconsistent(format!(
            "|D^γ u(0)| = {lhs:e} with a vanishing tail integral; u is not s-harmonic in B(0, {radius})"
        )));
    }
    Ok(EstimateRecord {
        gamma: gamma.clone(),
        radius,
        lhs,
        tail: tail.value,
        rhs_factor,
        ratio: (rhs_factor > 0.0).then(|| lhs / rhs_factor),
        lhs_error: d.error_estimate,
        converged: d.converged && tail.converged,
    })
}

/// The localized estimate at `x ∈ Ω` with `R = dist(x, R^n \ Ω)`, computed
/// as the origin estimate for the translated field `u(· + x)`.
pub fn localized_estimate_record(
    p: FracParams,
    u: &ScalarField,
    omega: &Domain,
    x: &Point,
    gamma: &MultiIndex,
    spec: &QuadSpec,
) -> Result<EstimateRecord> {
    let r = omega.dist_to_complement(x);
    if !(r > 0.0) {
        return Err(FracError::Precondition(format!("{x:?} is not inside the domain")));
    }
    cauchy_estimate_record(p, &u.translated(*x), gamma, r, spec)
}

/// Outcome of the decay experiment: `|D^γ u_R(0)|` for extensions of the
/// same bounded data from balls of growing radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub gamma: MultiIndex,
    pub radii: Vec<f64>,
    pub derivatives: Vec<f64>,
    pub errors: Vec<f64>,
    /// `R^{2s-|γ|} ‖g‖∞ σ_{n-1} (R/4)^{-2s} / (2s)`, the estimate's
    /// right-hand side for bounded data up to the constant `C`.
    pub bound_curve: Vec<f64>,
    /// Least-squares slope of `ln |D^γ u_R(0)|` against `ln R`.
    pub fitted_slope: f64,
    /// `|D^γ u_R(0)|` at the first radius over that at the last.
    pub drop_factor: f64,
    /// Non-increasing in `R` up to 5% slack.
    pub monotone: bool,
    pub converged: bool,
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// For each `R`, extend `g` from `B(0, R)` and record `|D^γ u_R(0)|`.
pub fn liouville_decay_experiment(
    p: FracParams,
    g: &ExteriorData,
    gamma: &MultiIndex,
    radii: &[f64],
    spec: &QuadSpec,
) -> Result<DecayReport> {
    let bound = g
        .bound_hint()
        .ok_or_else(|| FracError::Precondition("decay experiment needs bounded data (bound_hint)".into()))?;
    if !(gamma.order() as f64 > 2.0 * p.s()) {
        return Err(FracError::Precondition(format!("need |γ| = {} > 2s = {}", gamma.order(), 2.0 * p.s())));
    }
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] < w[1])) || !(radii[0] > 0.0) {
        return Err(FracError::Domain("radii must be positive and strictly increasing (at least two)".into()));
    }
    let n = p.n();
    let s = p.s();
    let mut derivatives = Vec::with_capacity(radii.len());
    let mut errors = Vec::with_capacity(radii.len());
    let mut converged = true;
    for &r in radii {
        let u = extension_field(p, Ball::centered(n, r)?, g, *spec);
        let d = derivative_via_kernel(p, &u, gamma, &Point::zero(n), R0_FRACTION * r, spec)?;
        derivatives.push(d.value.abs());
        errors.push(d.error_estimate);
        converged &= d.converged;
    }
    let bound_curve = radii
        .iter()
        .map(|&r| r.powf(2.0 * s - gamma.order() as f64) * bound * sphere_area(n) * (r / 4.0).powf(-2.0 * s) / (2.0 * s))
        .collect();
    let ln_r: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ln_d: Vec<f64> = derivatives.iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
    let monotone = derivatives.windows(2).all(|w| w[1] <= 1.05 * w[0]);
    Ok(DecayReport {
        gamma: gamma.clone(),
        radii: radii.to_vec(),
        fitted_slope: fit_slope(&ln_r, &ln_d),
        drop_factor: derivatives[0] / derivatives[derivatives.len() - 1],
        derivatives,
        errors,
        bound_curve,
        monotone,
        converged,
    })
}

/// `y ↦ u(y + h) - u(y)`.
pub fn difference_field(u: &ScalarField, h: &Point) -> ScalarField {
    ScalarField::combine(1.0, &u.translated(*h), -1.0, u)
}
