//! The Riesz potential `c ∫ f(y) |x - y|^{2s-n} dy` of a compactly
//! supported density, and the experiment that checks it inverts `(-Δ)^s`.
//!
//! The potential is integrated on rays leaving `x`, where the kernel turns
//! into the integrable weight `ρ^{2s-1}`. From inside the support every
//! direction is used; from outside only the cap of directions that hit the
//! support ball, parametrized so that the chord length stays smooth up to
//! the rim of the cap.

use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{alpha_ns, FracParams};
use crate::error::{FracError, Result};
use crate::field::ScalarField;
use crate::fraclap::frac_laplacian_point;
use crate::geometry::{Ball, Point};
use crate::kernels::psi::{cheb_nodes, graded_edges, ChebPanel};
use crate::quadrature::{frame, integrate_1d, integrate_1d_carrying, integrate_power_weighted, QuadResult, QuadSpec};

/// Default relative residual below which a normalization is accepted.
pub const ADJUDICATION_THRESHOLD: f64 = 5e-2;

type DensityFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;
type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Regularity of a density, which decides whether the inversion check
/// applies to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Smoothness {
    /// At least twice continuously differentiable on `R^n`.
    Smooth,
    /// Bounded, with jumps or kinks.
    Rough,
}

/// A density supported in the closed ball `B(center, support_radius)`.
///
/// Evaluation returns zero outside the ball whatever the wrapped closure
/// does. Densities built from a radial profile remember it; the inversion
/// check tabulates their potentials instead of nesting quadratures.
#[derive(Clone)]
pub struct CompactDensity {
    dim: usize,
    center: Point,
    radius: f64,
    smoothness: Smoothness,
    eval: DensityFn,
    profile: Option<ProfileFn>,
    breaks: Vec<Ball>,
}

impl fmt::Debug for CompactDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompactDensity")
            .field("dim", &self.dim)
            .field("center", &self.center)
            .field("support_radius", &self.radius)
            .field("smoothness", &self.smoothness)
            .field("radial", &self.profile.is_some())
            .field("breaks", &self.breaks)
            .finish_non_exhaustive()
    }
}

impl CompactDensity {
    pub fn new(
        center: Point,
        support_radius: f64,
        smoothness: Smoothness,
        f: impl Fn(&Point) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        if !(support_radius > 0.0 && support_radius.is_finite()) {
            return Err(FracError::Domain(format!("support radius {support_radius} must be positive")));
        }
        Ok(Self { dim: center.dim(), center, radius: support_radius, smoothness, eval: Arc::new(f), profile: None, breaks: Vec::new() })
    }

    /// `y ↦ profile(|y - center|)`.
    pub fn radial(
        center: Point,
        support_radius: f64,
        smoothness: Smoothness,
        profile: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let profile: ProfileFn = Arc::new(profile);
        let g = profile.clone();
        let c = center;
        let mut d = Self::new(center, support_radius, smoothness, move |y| g(y.dist(&c)))?;
        d.profile = Some(profile);
        Ok(d)
    }

    pub fn zero(dim: usize) -> Self {
        Self::radial(Point::zero(dim), 1.0, Smoothness::Smooth, |_| 0.0).expect("unit radius")
    }

    /// Indicator of `B(0, radius)`.
    pub fn ball_indicator(dim: usize, radius: f64) -> Result<Self> {
        Self::radial(Point::zero(dim), radius, Smoothness::Rough, |_| 1.0)
    }

    /// `(1 - |y|²/radius²)^4` on `B(0, radius)`, a `C³` bump with
    /// `∫ f = radius^n σ_{n-1} B(n/2, 5) / 2`.
    pub fn smooth_bump(dim: usize, radius: f64) -> Result<Self> {
        Self::radial(Point::zero(dim), radius, Smoothness::Smooth, move |r| {
            let t = 1.0 - (r / radius).powi(2);
            t.max(0.0).powi(4)
        })
    }

    /// Declare spheres inside the support across which the density jumps
    /// or kinks; ray integrals are split where they cross them.
    pub fn with_breaks(mut self, breaks: impl IntoIterator<Item = Ball>) -> Self {
        self.breaks.extend(breaks);
        self
    }

    pub fn breaks(&self) -> &[Ball] {
        &self.breaks
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn support_radius(&self) -> f64 {
        self.radius
    }

    pub fn support(&self) -> Ball {
        Ball::new(self.center, self.radius).expect("positive radius")
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn is_radial(&self) -> bool {
        self.profile.is_some()
    }

    #[inline]
    pub fn eval(&self, y: &Point) -> f64 {
        if y.dist(&self.center) > self.radius {
            0.0
        } else {
            (self.eval)(y)
        }
    }

    /// `y ↦ f(y - h)`.
    pub fn translated(&self, h: Point) -> Self {
        let inner = self.eval.clone();
        Self {
            center: self.center + h,
            eval: Arc::new(move |y: &Point| inner(&(*y - h))),
            breaks: self.breaks.iter().map(|b| Ball::new(b.center + h, b.radius).expect("positive radius")).collect(),
            ..self.clone()
        }
    }

    /// `y ↦ f(y / λ)`, `λ > 0`.
    pub fn dilated(&self, lambda: f64) -> Self {
        let inner = self.eval.clone();
        let profile = self.profile.clone().map(|g| Arc::new(move |r: f64| g(r / lambda)) as ProfileFn);
        Self {
            center: self.center * lambda,
            radius: self.radius * lambda,
            eval: Arc::new(move |y: &Point| inner(&(*y * (1.0 / lambda)))),
            profile,
            breaks: self.breaks.iter().map(|b| Ball::new(b.center * lambda, b.radius * lambda).expect("positive radius")).collect(),
            ..self.clone()
        }
    }

    /// `a f + b g`, supported in a ball containing both supports. Both
    /// support spheres become breaks of the sum.
    pub fn combine(a: f64, f: &CompactDensity, b: f64, g: &CompactDensity) -> Result<Self> {
        if f.dim != g.dim {
            return Err(FracError::Domain(format!("dimension mismatch: {} vs {}", f.dim, g.dim)));
        }
        let radius = f.radius.max(f.center.dist(&g.center) + g.radius);
        let smoothness =
            if f.smoothness == Smoothness::Smooth && g.smoothness == Smoothness::Smooth { Smoothness::Smooth } else { Smoothness::Rough };
        let mut breaks: Vec<Ball> = f.breaks.iter().chain(&g.breaks).copied().collect();
        breaks.extend([f.support(), g.support()]);
        let (f, g) = (f.clone(), g.clone());
        let sum = match (&f.profile, &g.profile) {
            (Some(pf), Some(pg)) if f.center == g.center => {
                let (pf, pg, (rf, rg)) = (pf.clone(), pg.clone(), (f.radius, g.radius));
                let cut = |p: &ProfileFn, r: f64, t: f64| if t > r { 0.0 } else { p(t) };
                Self::radial(f.center, radius, smoothness, move |t| a * cut(&pf, rf, t) + b * cut(&pg, rg, t))
            }
            _ => Self::new(f.center, radius, smoothness, move |y| a * f.eval(y) + b * g.eval(y)),
        };
        Ok(sum?.with_breaks(breaks))
    }

    /// Break crossings of `x + ρθ` strictly inside `(lo, hi)`, sorted.
    fn ray_breaks(&self, x: &Point, theta: &Point, lo: f64, hi: f64) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .breaks
            .iter()
            .filter_map(|b| b.ray_crossings(x, theta))
            .flat_map(|(t1, t2)| [t1, t2])
            .filter(|t| *t > lo && *t < hi)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

fn check_inputs(p: FracParams, dim: usize, spec: &QuadSpec) -> Result<()> {
    if !p.is_riesz_regime() {
        return Err(FracError::Domain(format!("Riesz potential needs 2s < n, got n = {}, s = {}", p.n(), p.s())));
    }
    p.require_geometric()?;
    spec.validate()?;
    if dim != p.n() {
        return Err(FracError::Domain(format!("density has dimension {dim}, expected {}", p.n())));
    }
    Ok(())
}

/// `normalization · ∫ f(y) |x - y|^{2s-n} dy`.
pub fn riesz_potential(
    p: FracParams,
    f: &CompactDensity,
    x: &Point,
    normalization: f64,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    check_inputs(p, f.dim(), spec)?;
    if x.dim() != p.n() {
        return Err(FracError::Domain(format!("point has dimension {}, expected {}", x.dim(), p.n())));
    }
    let r = raw_potential(p, f, x, spec);
    if !r.value.is_finite() {
        return Err(FracError::Singularity(format!("non-finite potential at {x:?}")));
    }
    Ok(r.scaled(normalization))
}

/// Accumulates inner quadrature cost and convergence across directions.
struct Tally {
    evaluations: AtomicU64,
    converged: AtomicBool,
}

impl Tally {
    fn new() -> Self {
        Self { evaluations: AtomicU64::new(0), converged: AtomicBool::new(true) }
    }

    fn record(&self, r: &QuadResult) -> [f64; 2] {
        self.evaluations.fetch_add(r.evaluations, Ordering::Relaxed);
        if !r.converged {
            self.converged.store(false, Ordering::Relaxed);
        }
        [r.value, r.error_estimate]
    }

    /// Outer integral of `[value, inner error]` into one result.
    fn finish(&self, outer: [QuadResult; 2]) -> QuadResult {
        QuadResult {
            value: outer[0].value,
            error_estimate: outer[0].error_estimate + outer[1].value.abs(),
            evaluations: outer[0].evaluations + self.evaluations.load(Ordering::Relaxed),
            converged: outer[0].converged && outer[1].converged && self.converged.load(Ordering::Relaxed),
        }
    }

    fn finish_sum(&self, parts: impl IntoIterator<Item = [f64; 2]>) -> QuadResult {
        let (value, error) = parts.into_iter().fold((0.0, 0.0), |(v, e), [a, b]| (v + a, e + b));
        QuadResult {
            value,
            error_estimate: error,
            evaluations: self.evaluations.load(Ordering::Relaxed),
            converged: self.converged.load(Ordering::Relaxed),
        }
    }
}

/// `∫ f(y) |x - y|^{2s-n} dy` without normalization.
fn raw_potential(p: FracParams, f: &CompactDensity, x: &Point, spec: &QuadSpec) -> QuadResult {
    let rel = *x - f.center;
    let d = rel.norm();
    if d <= f.radius {
        inside(p, f, x, &rel, d, spec)
    } else {
        outside(p, f, x, &rel, d, spec)
    }
}

/// `∫_0^{ρ+} f(x + ρθ) ρ^{2s-1} dρ` up to the support sphere.
fn inner_ray(p: FracParams, f: &CompactDensity, x: &Point, rel: &Point, theta: &Point, spec: &QuadSpec) -> QuadResult {
    let t = rel.dot(theta);
    let disc = (t * t - rel.norm_sq() + f.radius * f.radius).max(0.0);
    let end = -t + disc.sqrt();
    if !(end > 0.0) {
        return QuadResult::zero();
    }
    let cuts = f.ray_breaks(x, theta, 0.0, end);
    let first = cuts.first().copied().unwrap_or(end);
    let head = integrate_power_weighted(|rho| f.eval(&x.along(theta, rho)), 0.0, first, 1.0 - 2.0 * p.s(), false, spec);
    head.plus(chord(p, f, x, theta, first, end, spec))
}

/// `∫_lo^hi f(x + ρθ) ρ^{2s-1} dρ` for `0 < lo`.
fn chord(p: FracParams, f: &CompactDensity, x: &Point, theta: &Point, lo: f64, hi: f64, spec: &QuadSpec) -> QuadResult {
    if !(hi > lo) {
        return QuadResult::zero();
    }
    let e = 2.0 * p.s() - 1.0;
    let g = |rho: f64| f.eval(&x.along(theta, rho)) * rho.powf(e);
    let mut edges = vec![lo];
    edges.extend(f.ray_breaks(x, theta, lo, hi));
    edges.push(hi);
    edges.windows(2).map(|w| integrate_1d(g, w[0], w[1], spec)).sum()
}

fn inside(p: FracParams, f: &CompactDensity, x: &Point, rel: &Point, d: f64, spec: &QuadSpec) -> QuadResult {
    let n = p.n();
    let tally = Tally::new();
    let ray = |theta: &Point| tally.record(&inner_ray(p, f, x, rel, theta, spec));
    // The potential varies fastest in the direction of the nearest part of
    // the support sphere, so the angular coordinates start there.
    let axis = if d > 0.0 { *rel * (1.0 / d) } else { Point::unit(n, n - 1) };
    let cones = tangent_cones(f, x);
    let pi = std::f64::consts::PI;
    match n {
        1 => {
            let parts = [ray(&axis), ray(&-axis)];
            tally.finish_sum(parts)
        }
        2 => {
            let phi0 = axis.get(1).atan2(axis.get(0));
            let g = |phi: f64| ray(&Point::new(&[(phi0 + phi).cos(), (phi0 + phi).sin()]).unwrap());
            let mut cuts = vec![0.0];
            for (w, beta) in &cones {
                let rel_angle = w.get(1).atan2(w.get(0)) - phi0;
                cuts.extend([rel_angle - beta, rel_angle + beta].map(|t| (t + pi).rem_euclid(2.0 * pi) - pi));
            }
            tally.finish(integrate_pieces(g, -pi, pi, cuts, spec))
        }
        _ => {
            let (a, u, v) = frame(&axis);
            let g = |t: f64| {
                let st = (1.0 - t * t).max(0.0).sqrt();
                around_axis(f, spec, azimuth_kinks(&cones, (&a, &u, &v), t, st), |phi| {
                    ray(&(a * t + u * (st * phi.cos()) + v * (st * phi.sin())))
                })
            };
            let cuts = polar_kinks(&cones, &a).into_iter().map(f64::cos).collect();
            tally.finish(integrate_pieces(g, -1.0, 1.0, cuts, spec))
        }
    }
}

/// Directions from `x` that graze a break sphere with `x` outside it form
/// a cone `{θ : θ·w = cos β}`; the angular integrands have square-root
/// kinks there. Returns `(w, β)` per such sphere.
fn tangent_cones(f: &CompactDensity, x: &Point) -> Vec<(Point, f64)> {
    f.breaks
        .iter()
        .filter_map(|b| {
            let w = b.center - *x;
            let d = w.norm();
            (d > b.radius).then(|| (w * (1.0 / d), (b.radius / d).asin()))
        })
        .collect()
}

/// Polar angles from `axis` (in `(0, π)`) where a tangent cone starts or
/// stops meeting the circle of directions at that angle.
fn polar_kinks(cones: &[(Point, f64)], axis: &Point) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    cones
        .iter()
        .flat_map(|(w, beta)| {
            let gamma = w.dot(axis).clamp(-1.0, 1.0).acos();
            [gamma - beta, gamma + beta]
        })
        .filter(|t| *t > 0.0 && *t < pi)
        .collect()
}

/// Azimuths of the directions `a cos θ + sin θ (u cos φ + v sin φ)` lying
/// on a tangent cone.
fn azimuth_kinks(cones: &[(Point, f64)], (a, u, v): (&Point, &Point, &Point), ct: f64, st: f64) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = Vec::new();
    for (w, beta) in cones {
        let (wu, wv) = (w.dot(u), w.dot(v));
        let amp = st * wu.hypot(wv);
        if !(amp > 0.0) {
            continue;
        }
        let c = (beta.cos() - ct * w.dot(a)) / amp;
        if c.abs() < 1.0 {
            let phi0 = wv.atan2(wu);
            out.extend([phi0 - c.acos(), phi0 + c.acos()].map(|t| t.rem_euclid(two_pi)));
        }
    }
    out
}

/// `∫_lo^hi g` split at `cuts` (those outside `(lo, hi)` are ignored).
fn integrate_pieces<G: Fn(f64) -> [f64; 2]>(g: G, lo: f64, hi: f64, mut cuts: Vec<f64>, spec: &QuadSpec) -> [QuadResult; 2] {
    cuts.retain(|c| *c > lo && *c < hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![lo];
    edges.extend(cuts);
    edges.push(hi);
    edges
        .windows(2)
        .map(|e| integrate_1d_carrying(&g, e[0], e[1], spec))
        .fold([QuadResult::zero(), QuadResult::zero()], |acc, r| [acc[0].plus(r[0]), acc[1].plus(r[1])])
}

/// `∫_0^{2π} g(φ) dφ` as `[value, error]` for an azimuth about an axis
/// through the center of the support. Radial densities without breaks are
/// symmetric about that axis, so one sample suffices; otherwise the
/// azimuth is split at the grazing directions `kinks`.
fn around_axis(f: &CompactDensity, spec: &QuadSpec, kinks: Vec<f64>, g: impl Fn(f64) -> [f64; 2]) -> [f64; 2] {
    let two_pi = 2.0 * std::f64::consts::PI;
    if f.is_radial() && f.breaks.is_empty() {
        let r = g(0.0);
        return [two_pi * r[0], two_pi * r[1]];
    }
    let [v, e] = integrate_pieces(g, 0.0, two_pi, kinks, spec);
    [v.value, v.error_estimate + e.value.abs()]
}

/// Directions at angle `θ` from the axis towards the center with
/// `sin θ = (R/d) sin ψ`: the chord through the ball is then
/// `d cos θ ± R cos ψ`, smooth in `ψ` up to the rim `ψ = π/2`.
fn outside(p: FracParams, f: &CompactDensity, x: &Point, rel: &Point, d: f64, spec: &QuadSpec) -> QuadResult {
    let n = p.n();
    let k = f.radius / d;
    let axis = *rel * (-1.0 / d);
    let tally = Tally::new();
    // θ from ψ, with the chord bounds and the Jacobian dθ/dψ
    let angles = |psi: f64| {
        let st = k * psi.sin();
        let ct = (1.0 - st * st).max(0.0).sqrt();
        let half = f.radius * psi.cos();
        (st, ct, d * ct - half, d * ct + half, k * psi.cos() / ct)
    };
    // ψ of a polar angle θ inside the cap
    let to_psi = |theta: f64| (theta.sin() / k).clamp(-1.0, 1.0).asin();
    let cap = k.min(1.0).asin();
    let cones = tangent_cones(f, x);
    let half_pi = std::f64::consts::FRAC_PI_2;
    match n {
        1 => {
            let r = chord(p, f, x, &axis, d - f.radius, d + f.radius, spec);
            let part = tally.record(&r);
            tally.finish_sum([part])
        }
        2 => {
            let perp = Point::new(&[-axis.get(1), axis.get(0)]).unwrap();
            let g = |psi: f64| {
                let (st, ct, lo, hi, jac) = angles(psi);
                let r = tally.record(&chord(p, f, x, &(axis * ct + perp * st), lo, hi, spec));
                [r[0] * jac, r[1] * jac]
            };
            let mut cuts = Vec::new();
            for (w, beta) in &cones {
                let t = w.dot(&perp).atan2(w.dot(&axis));
                cuts.extend([t - beta, t + beta].into_iter().filter(|t| t.abs() < cap).map(to_psi));
            }
            tally.finish(integrate_pieces(g, -half_pi, half_pi, cuts, spec))
        }
        _ => {
            let (a, u, v) = frame(&axis);
            let g = |psi: f64| {
                let (st, ct, lo, hi, jac) = angles(psi);
                let r = around_axis(f, spec, azimuth_kinks(&cones, (&a, &u, &v), ct, st), |phi| {
                    let theta = a * ct + u * (st * phi.cos()) + v * (st * phi.sin());
                    tally.record(&chord(p, f, x, &theta, lo, hi, spec))
                });
                [r[0] * st * jac, r[1] * st * jac]
            };
            let cuts = polar_kinks(&cones, &a).into_iter().filter(|t| *t < cap).map(to_psi).collect();
            tally.finish(integrate_pieces(g, 0.0, half_pi, cuts, spec))
        }
    }
}

/// Potential of a radial density at normalization 1, tabulated in
/// `v = a²/(1 + a²)`, `a = |x - center| / R`, as
/// `u · (1 + a²)^{(n-2s)/2}`, which stays smooth up to `v = 1`.
struct PotentialTable {
    center: Point,
    radius: f64,
    decay: f64,
    panels: Vec<ChebPanel>,
    /// Largest relative gap between table and direct quadrature at one
    /// off-node point per panel.
    rel_error: f64,
    peak: f64,
    converged: bool,
}

const TABLE_PANELS: usize = 6;
const TABLE_GRADING: usize = 3;
const TABLE_NODES: usize = 16;

impl PotentialTable {
    fn build(p: FracParams, f: &CompactDensity, spec: &QuadSpec) -> Self {
        let decay = p.n() as f64 - 2.0 * p.s();
        let radius = f.radius;
        let center = f.center;
        let axis = Point::unit(p.n(), 0);
        let sample = |v: f64| {
            let a2 = v / (1.0 - v);
            let x = center + axis * (radius * a2.sqrt());
            let r = raw_potential(p, f, &x, spec);
            (r.value * (1.0 + a2).powf(0.5 * decay), r)
        };
        let mut edges = graded_edges(0.0, 0.5, TABLE_PANELS, TABLE_GRADING);
        edges.pop();
        edges.extend(graded_edges(0.5, 1.0, TABLE_PANELS, TABLE_GRADING));
        let jobs: Vec<(f64, f64)> = edges.windows(2).map(|w| (w[0], w[1])).collect();
        let built: Vec<(ChebPanel, f64, QuadResult)> = jobs
            .par_iter()
            .map(|&(lo, hi)| {
                let nodes = cheb_nodes(lo, hi, TABLE_NODES);
                let results: Vec<(f64, QuadResult)> = nodes.iter().map(|&v| sample(v)).collect();
                let panel = ChebPanel::new(lo, hi, nodes, results.iter().map(|r| r.0).collect());
                let probe = lo + 0.37 * (hi - lo);
                let (direct, check) = sample(probe);
                let gap = (panel.eval(probe) - direct).abs();
                let cost = results.iter().map(|r| r.1).fold(check, QuadResult::plus);
                (panel, gap, cost)
            })
            .collect();
        let peak = built.iter().flat_map(|b| &b.0.values).fold(0.0f64, |m, v| m.max(v.abs()));
        let gap = built.iter().map(|b| b.1).fold(0.0, f64::max);
        let cost = built.iter().map(|b| b.2).sum::<QuadResult>();
        let panels = built.into_iter().map(|b| b.0).collect();
        Self {
            center,
            radius,
            decay,
            panels,
            rel_error: if peak > 0.0 { gap / peak } else { gap },
            peak,
            converged: cost.converged,
        }
    }

    fn eval(&self, y: &Point) -> f64 {
        let a2 = (*y - self.center).norm_sq() / (self.radius * self.radius);
        let v = a2 / (1.0 + a2);
        let i = self.panels.partition_point(|c| c.b <= v).min(self.panels.len() - 1);
        self.panels[i].eval(v) * (1.0 + a2).powf(-0.5 * self.decay)
    }
}

/// `(-Δ)^s u - f` at one test point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionPoint {
    pub x: Vec<f64>,
    pub potential: f64,
    pub frac_laplacian: f64,
    pub density: f64,
    pub residual: f64,
    pub error_estimate: f64,
}

/// Outcome of applying `(-Δ)^s` to a normalized Riesz potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InversionReport {
    pub n: usize,
    pub s: f64,
    pub normalization: f64,
    pub points: Vec<InversionPoint>,
    /// `max |(-Δ)^s u - f|` over the test points.
    pub max_residual: f64,
    /// `max |f|` over the test points and the support center.
    pub density_scale: f64,
    /// `max_residual / density_scale` (or the absolute residual when `f`
    /// vanishes at all those points).
    pub relative_residual: f64,
    /// Relative interpolation error of the tabulated potential, for radial
    /// densities.
    pub table_error: Option<f64>,
    pub converged: bool,
}

/// `u` at normalization 1 and `(-Δ)^s u` at each test point.
struct UnitResponse {
    points: Vec<(Point, f64, QuadResult, f64)>,
    table_error: Option<f64>,
    converged: bool,
}

fn unit_response(p: FracParams, f: &CompactDensity, test_points: &[Point], spec: &QuadSpec) -> Result<UnitResponse> {
    check_inputs(p, f.dim(), spec)?;
    if f.smoothness() != Smoothness::Smooth {
        return Err(FracError::Precondition("the inversion check needs a C² density".into()));
    }
    if let Some(x) = test_points.iter().find(|x| x.dim() != p.n()) {
        return Err(FracError::Domain(format!("test point {x:?} has the wrong dimension")));
    }
    let exponent = 2.0 * p.s() - p.n() as f64;
    let support = f.support();
    let (field, table_error, mut converged) = if f.is_radial() {
        let table = Arc::new(PotentialTable::build(p, f, spec));
        let (err, ok, bound) = (table.rel_error, table.converged, table.peak * 2f64.powf(-exponent / 2.0).max(1.0));
        let t = table.clone();
        let field = ScalarField::new(p.n(), move |y| t.eval(y));
        (field.with_growth(bound.max(f64::MIN_POSITIVE), exponent), Some(err), ok)
    } else {
        let (g, inner) = (f.clone(), *spec);
        let field = ScalarField::new(p.n(), move |y| raw_potential(p, &g, y, &inner).value);
        (field.assert_l1s(), None, true)
    };
    let field = field.with_breaks([support]);
    let points = test_points
        .par_iter()
        .map(|x| {
            let lap = frac_laplacian_point(p, &field, x, spec)?;
            Ok((*x, field.eval(x), lap, f.eval(x)))
        })
        .collect::<Result<Vec<_>>>()?;
    converged &= points.iter().all(|q| q.2.converged);
    Ok(UnitResponse { points, table_error, converged })
}

impl UnitResponse {
    fn report(&self, p: FracParams, f: &CompactDensity, normalization: f64) -> InversionReport {
        let points: Vec<InversionPoint> = self
            .points
            .iter()
            .map(|(x, u, lap, dens)| {
                let value = normalization * lap.value;
                InversionPoint {
                    x: x.coords().to_vec(),
                    potential: normalization * u,
                    frac_laplacian: value,
                    density: *dens,
                    residual: (value - dens).abs(),
                    error_estimate: (normalization * lap.error_estimate).abs(),
                }
            })
            .collect();
        let max_residual = points.iter().map(|q| q.residual).fold(0.0, f64::max);
        let density_scale = points.iter().map(|q| q.density.abs()).fold(f.eval(&f.center).abs(), f64::max);
        InversionReport {
            n: p.n(),
            s: p.s(),
            normalization,
            relative_residual: if density_scale > 0.0 { max_residual / density_scale } else { max_residual },
            max_residual,
            density_scale,
            points,
            table_error: self.table_error,
            converged: self.converged,
        }
    }
}

/// Apply `(-Δ)^s` to `u = normalization · ∫ f(y) |x - y|^{2s-n} dy` at each
/// test point and compare with `f`.
///
/// Radial densities are handled through a table of `u` (built once, in
/// parallel); other densities re-run the potential quadrature at every
/// point the fractional Laplacian samples, which is far more expensive.
pub fn inversion_residual(
    p: FracParams,
    f: &CompactDensity,
    normalization: f64,
    test_points: &[Point],
    spec: &QuadSpec,
) -> Result<InversionReport> {
    Ok(unit_response(p, f, test_points, spec)?.report(p, f, normalization))
}

/// Which of the two candidate normalizations inverts `(-Δ)^s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    /// `α_{n,s}` as printed.
    Alpha,
    /// `1 / α_{n,s}`.
    Reciprocal,
    /// Both or neither passed the threshold.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaVerdict {
    pub n: usize,
    pub s: f64,
    pub alpha: f64,
    pub threshold: f64,
    pub with_alpha: InversionReport,
    pub with_reciprocal: InversionReport,
    pub verdict: AlphaChoice,
    /// The normalization that passed, when exactly one did.
    pub adopted: Option<f64>,
}

/// Test points used by [`adjudicate_alpha`]: the center and two interior
/// points of the unit bump's support.
pub fn default_test_points(n: usize) -> Vec<Point> {
    let diag = Point::new(&vec![1.0; n]).unwrap().normalized().unwrap();
    vec![Point::zero(n), Point::on_axis(n, 0.3), diag * 0.55]
}

/// Run the inversion check with `α_{n,s}` and `1/α_{n,s}` on the unit
/// smooth bump.
pub fn adjudicate_alpha(p: FracParams, spec: &QuadSpec) -> Result<AlphaVerdict> {
    check_inputs(p, p.n(), spec)?;
    let f = CompactDensity::smooth_bump(p.n(), 1.0)?;
    adjudicate_alpha_with(p, &f, &default_test_points(p.n()), ADJUDICATION_THRESHOLD, spec)
}

/// [`adjudicate_alpha`] with a chosen density, test points and threshold.
pub fn adjudicate_alpha_with(
    p: FracParams,
    f: &CompactDensity,
    test_points: &[Point],
    threshold: f64,
    spec: &QuadSpec,
) -> Result<AlphaVerdict> {
    let alpha = alpha_ns(p).ok_or_else(|| FracError::Domain(format!("α undefined for n = {}, s = {}", p.n(), p.s())))?;
    let response = unit_response(p, f, test_points, spec)?;
    let with_alpha = response.report(p, f, alpha);
    let with_reciprocal = response.report(p, f, 1.0 / alpha);
    let (pa, pr) = (with_alpha.relative_residual < threshold, with_reciprocal.relative_residual < threshold);
    let (verdict, adopted) = match (pa, pr) {
        (true, false) => (AlphaChoice::Alpha, Some(alpha)),
        (false, true) => (AlphaChoice::Reciprocal, Some(1.0 / alpha)),
        _ => (AlphaChoice::Inconclusive, None),
    };
    Ok(AlphaVerdict { n: p.n(), s: p.s(), alpha, threshold, with_alpha, with_reciprocal, verdict, adopted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn p(n: usize, s: f64) -> FracParams {
        FracParams::new(n, s).unwrap()
    }

    #[test]
    fn indicator_at_center() {
        // ∫_{|y|<1} |y|^{2s-n} dy = σ_{n-1} / (2s)
        let spec = QuadSpec::default();
        let f = CompactDensity::ball_indicator(3, 1.0).unwrap();
        let r = riesz_potential(p(3, 0.5), &f, &Point::zero(3), 1.0, &spec).unwrap();
        assert!((r.value - 4.0 * PI).abs() < 1e-9, "{r:?}");
        let f = CompactDensity::ball_indicator(1, 2.0).unwrap();
        let r = riesz_potential(p(1, 0.25), &f, &Point::zero(1), 1.0, &spec).unwrap();
        assert!((r.value - 2.0 * 2f64.sqrt() / 0.5).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn evaluation_is_cut_at_the_support() {
        let f = CompactDensity::new(Point::zero(2), 1.0, Smoothness::Rough, |_| 3.0).unwrap();
        assert_eq!(f.eval(&Point::on_axis(2, 0.9)), 3.0);
        assert_eq!(f.eval(&Point::on_axis(2, 1.1)), 0.0);
        let g = f.translated(Point::on_axis(2, 5.0));
        assert_eq!(g.eval(&Point::on_axis(2, 5.5)), 3.0);
        assert_eq!(g.eval(&Point::zero(2)), 0.0);
        let h = f.dilated(2.0);
        assert_eq!(h.support_radius(), 2.0);
        assert_eq!(h.eval(&Point::on_axis(2, 1.5)), 3.0);
    }

    #[test]
    fn refuses_outside_the_riesz_regime() {
        let f = CompactDensity::zero(1);
        let e = riesz_potential(p(1, 0.75), &f, &Point::zero(1), 1.0, &QuadSpec::default()).unwrap_err();
        assert!(matches!(e, FracError::Domain(_)));
        assert!(adjudicate_alpha(p(1, 0.75), &QuadSpec::default()).is_err());
    }

    #[test]
    fn rough_densities_are_not_inverted() {
        let f = CompactDensity::ball_indicator(1, 1.0).unwrap();
        let e = inversion_residual(p(1, 0.25), &f, 1.0, &[Point::zero(1)], &QuadSpec::default()).unwrap_err();
        assert!(matches!(e, FracError::Precondition(_)));
    }

    #[test]
    fn combination_keeps_radial_profiles() {
        let a = CompactDensity::smooth_bump(2, 1.0).unwrap();
        let b = CompactDensity::smooth_bump(2, 2.0).unwrap();
        let c = CompactDensity::combine(2.0, &a, -1.0, &b).unwrap();
        assert!(c.is_radial());
        assert_eq!(c.support_radius(), 2.0);
        let y = Point::on_axis(2, 0.5);
        assert!((c.eval(&y) - (2.0 * a.eval(&y) - b.eval(&y))).abs() < 1e-15);
        let d = CompactDensity::combine(1.0, &a, 1.0, &b.translated(Point::on_axis(2, 3.0))).unwrap();
        assert!(!d.is_radial());
        assert_eq!(d.support_radius(), 5.0);
    }
}
