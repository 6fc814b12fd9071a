//! The `s`-harmonic extension of exterior data into a ball through the
//! Poisson kernel, and the mean-value identity `u = u ⋆ Ψ_{r0}`.
//!
//! Integrals run over rays from the evaluation point. On the ray
//! `y = x + ρθ` the ball boundary sits at `ρ₊ = -b + sqrt(b² + r² - |x-a|²)`
//! with `b = (x-a)·θ`, and `|y-a|² - r² = (ρ - ρ₊)(ρ - ρ₋)`, so the
//! boundary layer is a plain `(ρ - ρ₊)^{-s}` endpoint weight.


use crate::constants::FracParams;
use crate::error::{FracError, Result};
use crate::field::{ScalarField, TailBehavior};
use crate::geometry::{Ball, Domain, Point};
use crate::kernels::{PoissonKernel, PsiTable};
use crate::quadrature::{
    integrate_half_line, integrate_half_line_to, integrate_oscillatory_tail, integrate_sphere_with, HalfLine, QuadResult, QuadSpec,
};

/// Panel budget for oscillatory data, shared across all directions.
const OSC_PANEL_BUDGET: usize = 16_384;

/// Data prescribed outside a ball.
#[derive(Clone, Debug)]
pub struct ExteriorData {
    field: ScalarField,
    bound_hint: Option<f64>,
}

impl ExteriorData {
    pub fn new(field: ScalarField) -> Self {
        let bound_hint = field.growth().filter(|g| g.exponent <= 0.0).map(|g| g.constant);
        Self { field, bound_hint }
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound_hint = Some(bound);
        self
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn bound_hint(&self) -> Option<f64> {
        self.bound_hint
    }

    pub fn eval(&self, y: &Point) -> f64 {
        self.field.eval(y)
    }
}

fn check_inside(ball: &Ball, x: &Point) -> Result<()> {
    if x.dim() != ball.dim() {
        return Err(FracError::Domain("point and ball have different dimensions".into()));
    }
    if !ball.contains(x) {
        return Err(FracError::Domain(format!(
            "{x:?} is not inside the open ball of radius {} around {:?}",
            ball.radius, ball.center
        )));
    }
    Ok(())
}

/// `∫ P_r(x - a, y - a) g(y) dy` with kernel normalization `kernel.beta()`.
fn poisson_integral(kernel: &PoissonKernel, ball: &Ball, g: &ScalarField, x: &Point, spec: &QuadSpec) -> Result<QuadResult> {
    let p = kernel.params();
    p.require_geometric()?;
    spec.validate()?;
    check_inside(ball, x)?;
    if g.dim() != p.n() {
        return Err(FracError::Domain("data dimension differs from n".into()));
    }
    let s = p.s();
    let r = ball.radius;
    let d = *x - ball.center;
    let gap = (r - d.norm()) * (r + d.norm());
    let scale = kernel.beta() * gap.powf(s);
    let q = 2.0 * s - g.growth_exponent().max(0.0);
    if !(q > 0.0) {
        return Err(FracError::NotL1s { s });
    }
    let nodes = spec.sphere.nodes(p.n(), None)?;
    let far = r + d.norm();
    let total = integrate_sphere_with(
        |theta| {
            let b = d.dot(theta);
            let disc = (b * b + gap).sqrt();
            // ρ₊ = gap / (b + disc) avoids cancellation when b < 0
            let rho_p = if b >= 0.0 { gap / (b + disc) } else { disc - b };
            let rho_m = -b - disc;
            let breaks = g.ray_breaks(x, theta);
            let f = |rho: f64| (rho - rho_m).powf(-s) / rho * g.eval(&x.along(theta, rho));
            match (g.tail(), g.growth()) {
                (TailBehavior::Oscillatory { period }, Some(gr)) => {
                    // regular part up to L, then period panels; for ρ >= L,
                    // (ρ-ρ₊)(ρ-ρ₋) >= ρ²/4 and |g| <= K (2ρ)^m
                    let l = 2.0 * (far + 1.0);
                    let m = gr.exponent.max(0.0);
                    let head_plan = HalfLine::plan(rho_p, s, q, rho_p.min(r), far, breaks, spec);
                    let head = integrate_half_line_to(f, &head_plan, l, spec);
                    let envelope = gr.constant * 2f64.powf(m + 2.0 * s);
                    let tail = integrate_oscillatory_tail(
                        |rho| f(rho) * (rho - rho_p).powf(-s),
                        l,
                        period,
                        envelope,
                        q,
                        (OSC_PANEL_BUDGET / nodes.len()).max(256),
                        spec,
                    );
                    head.plus(tail)
                }
                _ => {
                    let plan = HalfLine::plan(rho_p, s, q, rho_p.min(r), far, breaks, spec);
                    integrate_half_line(f, &plan, spec)
                }
            }
        },
        &nodes,
    );
    Ok(total.scaled(scale))
}

/// The Poisson integral of `g` over the exterior of `ball`, evaluated at `x`.
pub fn poisson_extend(p: FracParams, ball: &Ball, g: &ExteriorData, x: &Point, spec: &QuadSpec) -> Result<QuadResult> {
    if !g.field.is_l1s_certified(p) {
        return Err(FracError::NotL1s { s: p.s() });
    }
    poisson_integral(&PoissonKernel::new(p), ball, &g.field, x, spec)
}

/// `∫_{|y| > r} P_r(x, y) dy` for the given kernel (1 for the exact one).
pub fn kernel_mass(kernel: &PoissonKernel, r: f64, x: &Point, spec: &QuadSpec) -> Result<QuadResult> {
    let n = kernel.params().n();
    let one = ScalarField::bounded(n, 1.0, |_| 1.0);
    poisson_integral(kernel, &Ball::centered(n, r)?, &one, x, spec)
}

/// The extension glued to its data: Poisson values inside the open ball,
/// `g` elsewhere. Evaluation failures inside the ball yield NaN.
pub fn extension_field(p: FracParams, ball: Ball, g: &ExteriorData, spec: QuadSpec) -> ScalarField {
    let data = g.clone();
    let inner = data.clone();
    let f = move |y: &Point| {
        if ball.contains(y) {
            poisson_extend(p, &ball, &inner, y, &spec).map(|q| q.value).unwrap_or(f64::NAN)
        } else {
            inner.eval(y)
        }
    };
    let src = data.field();
    let mut u = ScalarField::new(src.dim(), f).with_tail(src.tail()).with_breaks(src.breaks().iter().copied());
    u = u.with_breaks([ball]);
    match src.growth() {
        Some(gr) => u = u.with_growth(gr.constant.max(data.bound_hint.unwrap_or(0.0)), gr.exponent),
        None => {
            if let Some(b) = data.bound_hint {
                u = u.with_growth(b, 0.0);
            }
        }
    }
    if src.is_l1s_certified(p) {
        u = u.assert_l1s();
    }
    u
}

/// `(u ⋆ Ψ_{r0})(x) = ∫_{|z| >= r0} u(x - z) Ψ_{r0}(z) dz`.
pub fn convolve_psi(p: FracParams, u: &ScalarField, r0: f64, x: &Point, spec: &QuadSpec) -> Result<QuadResult> {
    p.require_geometric()?;
    spec.validate()?;
    if !(r0 > 0.0) {
        return Err(FracError::Domain("r0 must be positive".into()));
    }
    if !u.is_l1s_certified(p) {
        return Err(FracError::NotL1s { s: p.s() });
    }
    let n = p.n();
    let q = 2.0 * p.s() - u.growth_exponent().max(0.0);
    let nodes = spec.sphere.nodes(n, None)?;
    let norm = r0.powi(-(n as i32));
    let table = PsiTable::get(p);
    // Ψ is even, so the ray y = x + ρθ carries the same weight as x - ρθ
    let total = integrate_sphere_with(
        |theta| {
            let mut breaks = u.ray_breaks(x, theta);
            breaks.push(4.0 * r0);
            let plan = HalfLine::plan(r0, 0.0, q, r0, 4.0 * r0, breaks, spec);
            integrate_half_line(
                |rho| u.eval(&x.along(theta, rho)) * norm * table.eval(rho / r0) * rho.powi(n as i32 - 1),
                &plan,
                spec,
            )
        },
        &nodes,
    );
    Ok(total)
}

/// `|u(x) - (u ⋆ Ψ_{r0})(x)|`, defined for `dist(x, R^n \ Ω) > 4 r0`.
pub fn mean_value_residual(p: FracParams, u: &ScalarField, omega: &Domain, r0: f64, x: &Point, spec: &QuadSpec) -> Result<f64> {
    let d = omega.dist_to_complement(x);
    if !(d > 4.0 * r0) {
        return Err(FracError::Precondition(format!(
            "mean-value identity needs dist(x, complement) = {d} > 4 r0 = {}",
            4.0 * r0
        )));
    }
    let c = convolve_psi(p, u, r0, x, spec)?;
    Ok((u.eval(x) - c.value).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_kernel_has_unit_mass() {
        let spec = QuadSpec::default();
        for n in 1..=3 {
            for s in [0.25, 0.5, 0.75] {
                let k = PoissonKernel::new(FracParams::new(n, s).unwrap());
                for t in [0.0, 0.5, 0.9] {
                    let x = Point::on_axis(n, t * 2.0);
                    let m = kernel_mass(&k, 2.0, &x, &spec).unwrap();
                    assert!((m.value - 1.0).abs() < 1e-6, "n={n} s={s} t={t}: {m:?}");
                }
            }
        }
    }

    #[test]
    fn rejects_points_outside() {
        let p = FracParams::new(1, 0.5).unwrap();
        let g = ExteriorData::new(ScalarField::bounded(1, 1.0, |_| 1.0));
        let b = Ball::centered(1, 1.0).unwrap();
        let e = poisson_extend(p, &b, &g, &Point::on_axis(1, 1.0), &QuadSpec::default());
        assert!(matches!(e, Err(FracError::Domain(_))));
    }
}
