//! One-dimensional adaptive quadrature, endpoint-singular substitution,
//! spherical rules for `n <= 3`, and integrals over ball exteriors.

mod exterior;
mod gauss_kronrod;
mod half_line;
mod singular;
mod sphere;

pub use exterior::{integrate_exterior_ball, integrate_exterior_ball_with, integrate_exterior_radial, ExteriorOptions};
pub use gauss_kronrod::{integrate_1d, integrate_1d_carrying, integrate_1d_multi, integrate_log};
pub use half_line::{integrate_half_line, integrate_half_line_to, integrate_oscillatory_tail, integrate_power_tail, HalfLine};
pub use singular::integrate_endpoint_singular;
pub(crate) use singular::integrate_power_weighted;
pub use sphere::{gauss_legendre, integrate_sphere, integrate_sphere_with, SphereRule};
pub(crate) use sphere::frame;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Tolerances and budgets shared by every integral.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of bisections per adaptive 1D integral.
    pub max_subdivisions: usize,
    /// Multiple of the inner length scale where half-line integrals switch
    /// from log-spaced panels to the power-law tail map.
    pub tail_radius_factor: f64,
    #[serde(default)]
    pub sphere: SphereRule,
}

impl Default for QuadSpec {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-13,
            max_subdivisions: 200,
            tail_radius_factor: 64.0,
            sphere: SphereRule::default(),
        }
    }
}

impl QuadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return domain("rel_tol and abs_tol must be positive");
        }
        if self.max_subdivisions < 1 {
            return domain("max_subdivisions must be at least 1");
        }
        if !(self.tail_radius_factor >= 2.0) {
            return domain("tail_radius_factor must be at least 2");
        }
        self.sphere.validate()
    }

    /// Same spec with both tolerances multiplied by `k`.
    pub fn loosened(&self, k: f64) -> Self {
        Self { rel_tol: self.rel_tol * k, abs_tol: self.abs_tol * k, ..*self }
    }

    pub fn with_rel_tol(self, rel_tol: f64) -> Self {
        Self { rel_tol, ..self }
    }

    pub fn with_abs_tol(self, abs_tol: f64) -> Self {
        Self { abs_tol, ..self }
    }

    pub(crate) fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

/// Value of an integral with its error estimate and cost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: u64,
    /// False when a subdivision budget ran out somewhere in the computation.
    pub converged: bool,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        Self { value, error_estimate: 0.0, evaluations: 1, converged: true }
    }

    pub fn zero() -> Self {
        Self { value: 0.0, error_estimate: 0.0, evaluations: 0, converged: true }
    }

    pub fn scaled(self, k: f64) -> Self {
        Self { value: self.value * k, error_estimate: self.error_estimate * k.abs(), ..self }
    }

    pub fn plus(self, o: QuadResult) -> Self {
        Self {
            value: self.value + o.value,
            error_estimate: self.error_estimate + o.error_estimate,
            evaluations: self.evaluations + o.evaluations,
            converged: self.converged && o.converged,
        }
    }

    pub fn with_extra_error(self, e: f64) -> Self {
        Self { error_estimate: self.error_estimate + e.abs(), ..self }
    }
}

impl std::iter::Sum for QuadResult {
    fn sum<I: Iterator<Item = QuadResult>>(iter: I) -> Self {
        iter.fold(QuadResult::zero(), QuadResult::plus)
    }
}
