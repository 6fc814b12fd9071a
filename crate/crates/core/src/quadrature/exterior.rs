use super::{integrate_half_line, integrate_sphere_with, HalfLine, QuadResult, QuadSpec};
use crate::constants::sphere_area;
use crate::error::{domain, Result};
use crate::geometry::{Ball, Point};

/// Shape information for an integral over `{|y - center| > r}`.
#[derive(Clone, Copy, Debug)]
pub struct ExteriorOptions<'a> {
    /// `|F(y)| <= K |y - center|^{-n-q}` far away; must be positive.
    pub decay_q: f64,
    /// Exponent `p` of an integrable `(|y - center| - r)^{-p}` boundary layer.
    pub inner_singularity: f64,
    /// Spheres across which `F` is not smooth.
    pub breaks: &'a [Ball],
}

impl<'a> ExteriorOptions<'a> {
    pub fn decaying(decay_q: f64) -> Self {
        Self { decay_q, inner_singularity: 0.0, breaks: &[] }
    }
}

fn check(r: f64, opts: &ExteriorOptions<'_>) -> Result<()> {
    if !(opts.decay_q > 0.0) {
        return domain(format!("non-integrable decay exponent q = {}", opts.decay_q));
    }
    if !(r > 0.0) {
        return domain("exterior radius must be positive");
    }
    if !(opts.inner_singularity < 1.0) {
        return domain("boundary-layer exponent must be below 1");
    }
    Ok(())
}

/// `∫_{|y - center| > r} F(y) dy` assuming `|F| <= K |y - center|^{-n-q}`.
pub fn integrate_exterior_ball<F>(f: F, center: &Point, r: f64, decay_q: f64, spec: &QuadSpec) -> Result<QuadResult>
where
    F: Fn(&Point) -> f64 + Sync,
{
    integrate_exterior_ball_with(f, center, r, &ExteriorOptions::decaying(decay_q), spec)
}

/// Exterior-of-ball integral as radial half-lines times the spherical rule.
pub fn integrate_exterior_ball_with<F>(
    f: F,
    center: &Point,
    r: f64,
    opts: &ExteriorOptions<'_>,
    spec: &QuadSpec,
) -> Result<QuadResult>
where
    F: Fn(&Point) -> f64 + Sync,
{
    check(r, opts)?;
    let n = center.dim();
    let nodes = spec.sphere.nodes(n, None)?;
    let p = opts.inner_singularity;
    Ok(integrate_sphere_with(
        |theta| {
            let crossings = opts
                .breaks
                .iter()
                .filter_map(|b| b.ray_crossings(center, theta))
                .flat_map(|(a, b)| [a, b]);
            let plan = HalfLine::plan(r, p, opts.decay_q, r, r, crossings, spec);
            integrate_half_line(
                |rho| {
                    let w = if p == 0.0 { 1.0 } else { (rho - r).powf(p) };
                    f(&center.along(theta, rho)) * rho.powi(n as i32 - 1) * w
                },
                &plan,
                spec,
            )
        },
        &nodes,
    ))
}

/// `σ_{n-1} ∫_r^∞ profile(ρ) ρ^{n-1} dρ` for a radial integrand.
pub fn integrate_exterior_radial<F>(
    profile: F,
    n: usize,
    r: f64,
    opts: &ExteriorOptions<'_>,
    spec: &QuadSpec,
) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    check(r, opts)?;
    let p = opts.inner_singularity;
    let crossings = opts.breaks.iter().map(|b| b.center.norm() + b.radius);
    let plan = HalfLine::plan(r, p, opts.decay_q, r, r, crossings, spec);
    let res = integrate_half_line(
        |rho| {
            let w = if p == 0.0 { 1.0 } else { (rho - r).powf(p) };
            profile(rho) * rho.powi(n as i32 - 1) * w
        },
        &plan,
        spec,
    );
    Ok(res.scaled(sphere_area(n)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn power_law_exteriors() {
        let s = QuadSpec::default();
        // n = 1, s = 1/2: 2 ∫_1^∞ y^{-2} dy = 2
        let r = integrate_exterior_ball(|y| y.norm().powf(-2.0), &Point::zero(1), 1.0, 1.0, &s).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{r:?}");
        // n = 2, s = 1/2: σ_1 / (2s) = 2π
        let r = integrate_exterior_ball(|y| y.norm().powf(-3.0), &Point::zero(2), 1.0, 1.0, &s).unwrap();
        assert!((r.value - 2.0 * PI).abs() < 1e-11, "{r:?}");
        let r = integrate_exterior_ball(|_| 0.0, &Point::zero(3), 1.0, 1.0, &s).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn off_center_and_radial_agree() {
        let s = QuadSpec::default();
        let c = Point::new(&[0.5, -0.25]).unwrap();
        let f = |y: &Point| (1.0 + y.dist(&c).powi(2)).powf(-1.75);
        let a = integrate_exterior_ball(f, &c, 2.0, 1.5, &s).unwrap();
        let b = integrate_exterior_radial(|rho| (1.0 + rho * rho).powf(-1.75), 2, 2.0, &ExteriorOptions::decaying(1.5), &s).unwrap();
        assert!((a.value - b.value).abs() < 1e-11 * b.value);
    }

    #[test]
    fn boundary_layer() {
        // ∫_{|y|>1} (|y|-1)^{-1/2} |y|^{-3} dy in 1D = 2 * 16/15... check via
        // ρ = 1 + u²: 2 ∫_0^∞ 2 du (1+u²)^{-3} = 4 * 3π/16
        let s = QuadSpec::default();
        let opts = ExteriorOptions { decay_q: 2.5, inner_singularity: 0.5, breaks: &[] };
        let r = integrate_exterior_ball_with(|y| (y.norm() - 1.0).powf(-0.5) * y.norm().powi(-3), &Point::zero(1), 1.0, &opts, &s)
            .unwrap();
        assert!((r.value - 0.75 * PI).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn rejects_non_integrable_decay() {
        let s = QuadSpec::default();
        assert!(integrate_exterior_ball(|_| 1.0, &Point::zero(1), 1.0, 0.0, &s).is_err());
    }
}
