//! The mollified kernel `Ψ = ∫_1^4 P_r(0, ·) φ(r) dr`, its rescalings and
//! its derivatives up to order four.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use super::MultiIndex;
use crate::constants::{beta_ns, FracParams};
use crate::error::{domain, Result};
use crate::geometry::Point;
use crate::quadrature::{integrate_1d, integrate_1d_multi, integrate_power_weighted, QuadResult, QuadSpec};

/// Highest derivative order supported by [`psi_derivative`].
pub const MAX_DERIVATIVE_ORDER: u32 = 4;

fn bump_unnormalized(r: f64) -> f64 {
    if r <= 1.0 || r >= 4.0 {
        return 0.0;
    }
    (-1.0 / ((r - 1.0) * (4.0 - r))).exp()
}

fn inner_spec() -> QuadSpec {
    QuadSpec { rel_tol: 1e-13, abs_tol: 1e-300, max_subdivisions: 100, ..QuadSpec::default() }
}

fn mollifier_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| integrate_1d(bump_unnormalized, 1.0, 4.0, &inner_spec()).value)
}

/// Smooth bump supported in `(1, 4)` with unit integral.
pub fn mollifier_phi(r: f64) -> f64 {
    bump_unnormalized(r) / mollifier_mass()
}

/// `φ^{(j)}(r)` for `j = 0..=4`.
///
/// With `φ ∝ e^g`, `g = -1/q`, `q = (r-1)(4-r)`, the derivatives follow
/// from Faà di Bruno; `q''' = 0` keeps the expressions short.
fn mollifier_derivatives(r: f64) -> [f64; 5] {
    let phi = mollifier_phi(r);
    if phi == 0.0 {
        return [0.0; 5];
    }
    let q = (r - 1.0) * (4.0 - r);
    let (q1, q2) = (5.0 - 2.0 * r, -2.0);
    let (i2, i3) = (q.powi(-2), q.powi(-3));
    let (i4, i5) = (i2 * i2, i2 * i3);
    let g1 = q1 * i2;
    let g2 = q2 * i2 - 2.0 * q1 * q1 * i3;
    let g3 = -6.0 * q1 * q2 * i3 + 6.0 * q1.powi(3) * i4;
    let g4 = -6.0 * q2 * q2 * i3 + 36.0 * q1 * q1 * q2 * i4 - 24.0 * q1.powi(4) * i5;
    [
        phi,
        g1 * phi,
        (g2 + g1 * g1) * phi,
        (g3 + 3.0 * g1 * g2 + g1.powi(3)) * phi,
        (g4 + 4.0 * g1 * g3 + 3.0 * g2 * g2 + 6.0 * g1 * g1 * g2 + g1.powi(4)) * phi,
    ]
}

/// Radial profile of `Ψ` by direct quadrature of the defining integral.
pub fn psi_radial_direct(p: FracParams, rho: f64) -> f64 {
    if rho <= 1.0 {
        return 0.0;
    }
    let s = p.s();
    let beta = beta_ns(p);
    let spec = inner_spec();
    let integral = if rho < 4.0 {
        // (ρ - r)^{-s} endpoint singularity at r = ρ
        integrate_power_weighted(
            |r| r.powf(2.0 * s) * (rho + r).powf(-s) * mollifier_phi(r),
            1.0,
            rho,
            s,
            true,
            &spec,
        )
        .value
    } else {
        integrate_1d(|r| r.powf(2.0 * s) * ((rho - r) * (rho + r)).powf(-s) * mollifier_phi(r), 1.0, 4.0, &spec).value
    };
    beta * rho.powi(-(p.n() as i32)) * integral
}

/// `ψ^{(k)}(ρ)`, `k = 0..=4`, of the radial profile, by quadrature, with
/// their error estimates.
///
/// Substituting `r = ρσ` gives
/// `ψ(ρ) = β ρ^{1-n} ∫ σ^{2s} (1-σ²)^{-s} φ(ρσ) dσ`, where `ρ` enters
/// only through smooth factors, so every derivative is an integral of
/// the same kind: `ψ^{(k)} = β Σ_j C(k,j) (ρ^{1-n})^{(k-j)} I_j` with
/// `I_j = ∫ σ^{2s+j} (1-σ²)^{-s} φ^{(j)}(ρσ) dσ`.
fn psi_radial_derivatives_direct(p: FracParams, rho: f64) -> ([f64; 5], [f64; 5]) {
    if rho <= 1.0 {
        return ([0.0; 5], [0.0; 5]);
    }
    let s = p.s();
    let spec = QuadSpec { rel_tol: 1e-12, ..inner_spec() };
    let lo = 1.0 / rho;
    let weighted = |t: f64, w: f64| -> [f64; 5] {
        let d = mollifier_derivatives(rho * t);
        let base = t.powf(2.0 * s) * w;
        std::array::from_fn(|j| base * t.powi(j as i32) * d[j])
    };
    let res = if rho < 4.0 {
        // σ = 1 - u^{1/(1-s)} absorbs the (1-σ)^{-s} weight
        let e = 1.0 - s;
        integrate_1d_multi(
            |u| {
                let t = 1.0 - u.powf(1.0 / e);
                weighted(t, (1.0 + t).powf(-s) / e)
            },
            0.0,
            (1.0 - lo).powf(e),
            &spec,
        )
    } else {
        integrate_1d_multi(|t| weighted(t, ((1.0 - t) * (1.0 + t)).powf(-s)), lo, 4.0 / rho, &spec)
    };
    let ij = res.map(|r| r.value);
    let ij_err = res.map(|r| r.error_estimate);
    let beta = beta_ns(p);
    let a = 1.0 - p.n() as f64;
    let mut out = [0.0; 5];
    let mut err = [0.0; 5];
    for k in 0..5 {
        let (mut acc, mut acc_err) = (0.0, 0.0);
        let mut binom = 1.0;
        for j in (0..=k).rev() {
            // C(k, j) built from j = k downwards
            let m = k - j;
            let falling: f64 = (0..m).map(|i| a - i as f64).product();
            let c = binom * falling * rho.powf(a - m as f64);
            acc += c * ij[j];
            acc_err += c.abs() * ij_err[j];
            binom = binom * j as f64 / (m + 1) as f64;
        }
        out[k] = beta * acc;
        err[k] = beta * acc_err;
    }
    (out, err)
}

/// Chebyshev interpolant on `[a, b]` in barycentric form.
#[derive(Debug)]
pub(crate) struct ChebPanel {
    pub(crate) a: f64,
    pub(crate) b: f64,
    pub(crate) nodes: Vec<f64>,
    pub(crate) values: Vec<f64>,
    pub(crate) weights: Vec<f64>,
}

fn cheb_theta(j: usize, m: usize) -> f64 {
    std::f64::consts::PI * (j as f64 + 0.5) / m as f64
}

pub(crate) fn cheb_nodes(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m).map(|j| 0.5 * (a + b) + 0.5 * (b - a) * cheb_theta(j, m).cos()).collect()
}

impl ChebPanel {
    pub(crate) fn new(a: f64, b: f64, nodes: Vec<f64>, values: Vec<f64>) -> Self {
        let m = nodes.len();
        let weights = (0..m)
            .map(|j| if j % 2 == 0 { cheb_theta(j, m).sin() } else { -cheb_theta(j, m).sin() })
            .collect();
        Self { a, b, nodes, values, weights }
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((xj, fj), wj) in self.nodes.iter().zip(&self.values).zip(&self.weights) {
            let d = x - xj;
            if d == 0.0 {
                return *fj;
            }
            let t = wj / d;
            num += t * fj;
            den += t;
        }
        num / den
    }
}

/// Panel layout of a [`RadialTable`].
#[derive(Clone, Copy, Debug)]
struct Layout {
    inner_panels: usize,
    outer_panels: usize,
    nodes: usize,
    /// Geometric refinement levels at each end of both ranges.
    graded: usize,
}

const PSI_LAYOUT: Layout = Layout { inner_panels: 48, outer_panels: 16, nodes: 20, graded: 24 };
const DERIVATIVE_LAYOUT: Layout = Layout { inner_panels: 48, outer_panels: 16, nodes: 20, graded: 12 };

/// `m` uniform panels on `[a, b]`, the outermost ones replaced by
/// `graded` geometric refinements towards both ends.
pub(crate) fn graded_edges(a: f64, b: f64, m: usize, graded: usize) -> Vec<f64> {
    let h = (b - a) / m as f64;
    let mut edges = vec![a];
    edges.extend((0..graded).rev().map(|k| a + h * 0.5f64.powi(k as i32 + 1)));
    edges.extend((1..m).map(|k| a + k as f64 * h));
    edges.extend((0..graded).map(|k| b - h * 0.5f64.powi(k as i32 + 1)));
    edges.push(b);
    edges
}

/// Piecewise Chebyshev table of a radial function `f` on `(1, ∞)`: `f`
/// itself on `[1, 4]`, and `ρ^{decay} f(ρ)` as a function of `w = 4/ρ`
/// beyond. `f` vanishes on `ρ <= 1`.
#[derive(Debug)]
struct RadialTable {
    decay: f64,
    inner: Vec<ChebPanel>,
    outer: Vec<ChebPanel>,
    /// Largest `|f|` on `[1, 4]` and largest `|ρ^{decay} f|` beyond.
    inner_scale: f64,
    outer_scale: f64,
    /// Bound on the table error relative to [`Self::scale_at`].
    rel_error: f64,
}

impl RadialTable {
    fn eval(&self, rho: f64) -> f64 {
        if rho <= 1.0 {
            return 0.0;
        }
        if rho < 4.0 {
            let k = self.inner.partition_point(|c| c.b <= rho);
            return match self.inner.get(k) {
                Some(c) if c.a <= rho => c.eval(rho),
                _ => 0.0,
            };
        }
        let w = 4.0 / rho;
        let k = self.outer.partition_point(|c| c.b <= w).min(self.outer.len() - 1);
        self.outer[k].eval(w) * rho.powf(-self.decay)
    }

    /// Magnitude envelope of `f` near `ρ`.
    fn scale_at(&self, rho: f64) -> f64 {
        if rho < 4.0 {
            self.inner_scale
        } else {
            self.outer_scale * rho.powf(-self.decay)
        }
    }

    /// Tables for the `K` components of `f`, interpolated panel by panel.
    /// Each table's error is measured against `f` at two off-node points
    /// per panel and combined with the reported evaluation error.
    fn build<const K: usize>(layout: Layout, decay: [f64; K], f: impl Fn(f64) -> ([f64; K], [f64; K])) -> [RadialTable; K] {
        let mut inner: [Vec<ChebPanel>; K] = std::array::from_fn(|_| Vec::new());
        let mut outer: [Vec<ChebPanel>; K] = std::array::from_fn(|_| Vec::new());
        // largest evaluation error on [1, 4], and of ρ^{decay} f beyond
        let mut inner_err = [0.0f64; K];
        let mut outer_err = [0.0f64; K];
        // (checkpoint, exact values) per region, compared after assembly
        let mut checks: Vec<(f64, [f64; K])> = Vec::new();
        for e in graded_edges(1.0, 4.0, layout.inner_panels, layout.graded).windows(2) {
            let nodes = cheb_nodes(e[0], e[1], layout.nodes);
            let vals: Vec<([f64; K], [f64; K])> = nodes.iter().map(|&r| f(r)).collect();
            for (k, panels) in inner.iter_mut().enumerate() {
                panels.push(ChebPanel::new(e[0], e[1], nodes.clone(), vals.iter().map(|v| v.0[k]).collect()));
            }
            for (k, err) in inner_err.iter_mut().enumerate() {
                *err = vals.iter().fold(*err, |acc, v| acc.max(v.1[k]));
            }
            for t in [0.31, 0.77] {
                let r = e[0] + t * (e[1] - e[0]);
                checks.push((r, f(r).0));
            }
        }
        for e in graded_edges(0.0, 1.0, layout.outer_panels, layout.graded).windows(2) {
            let nodes = cheb_nodes(e[0], e[1], layout.nodes);
            let vals: Vec<([f64; K], [f64; K])> = nodes.iter().map(|&w| f(4.0 / w)).collect();
            for k in 0..K {
                let scaled = nodes.iter().zip(&vals).map(|(&w, v)| (4.0 / w).powf(decay[k]) * v.0[k]).collect();
                outer[k].push(ChebPanel::new(e[0], e[1], nodes.clone(), scaled));
            }
            for k in 0..K {
                let worst = nodes.iter().zip(&vals).fold(0.0f64, |acc, (&w, v)| acc.max((4.0 / w).powf(decay[k]) * v.1[k]));
                outer_err[k] = outer_err[k].max(worst);
            }
            for t in [0.31, 0.77] {
                let r = 4.0 / (e[0] + t * (e[1] - e[0]));
                checks.push((r, f(r).0));
            }
        }
        let mut tables: [RadialTable; K] = std::array::from_fn(|k| {
            let peak = |panels: &Vec<ChebPanel>| panels.iter().flat_map(|c| &c.values).fold(0.0f64, |m, v| m.max(v.abs()));
            let (inner_scale, outer_scale) = (peak(&inner[k]), peak(&outer[k]));
            RadialTable {
                decay: decay[k],
                inner: std::mem::take(&mut inner[k]),
                outer: std::mem::take(&mut outer[k]),
                inner_scale,
                outer_scale,
                rel_error: 0.0,
            }
        });
        for (k, t) in tables.iter_mut().enumerate() {
            let interp = checks.iter().fold(0.0f64, |m, (r, exact)| m.max((t.eval(*r) - exact[k]).abs() / t.scale_at(*r)));
            t.rel_error = interp + (inner_err[k] / t.inner_scale).max(outer_err[k] / t.outer_scale);
        }
        tables
    }
}

type Cache<T> = OnceLock<RwLock<HashMap<(usize, u64), Arc<T>>>>;

/// Shared value for `(n, s)`, built on first use. Building happens outside
/// the lock, so a racing duplicate build is possible but harmless.
fn cached<T>(cache: &'static Cache<T>, p: FracParams, build: impl FnOnce() -> T) -> Arc<T> {
    let cache = cache.get_or_init(Default::default);
    let key = (p.n(), p.s().to_bits());
    if let Some(t) = cache.read().expect("kernel cache poisoned").get(&key) {
        return t.clone();
    }
    let value = Arc::new(build());
    cache.write().expect("kernel cache poisoned").entry(key).or_insert(value).clone()
}

/// Interpolation table of the radial profile of `Ψ`; agrees with
/// [`psi_radial_direct`] to about 1e-11 of its peak.
#[derive(Debug)]
pub struct PsiTable {
    profile: RadialTable,
}

impl PsiTable {
    /// Shared table for `(n, s)`, built on first use.
    pub fn get(p: FracParams) -> Arc<PsiTable> {
        static CACHE: Cache<PsiTable> = OnceLock::new();
        cached(&CACHE, p, || {
            let decay = p.n() as f64 + 2.0 * p.s();
            let [profile] = RadialTable::build(PSI_LAYOUT, [decay], |r| ([psi_radial_direct(p, r)], [0.0]));
            PsiTable { profile }
        })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        self.profile.eval(rho).max(0.0)
    }

    /// Measured bound on the table error relative to the peak of `Ψ`.
    pub fn rel_error(&self) -> f64 {
        self.profile.rel_error
    }
}

/// Tables of `ψ^{(k)}`, `k = 1..=4`, the radial derivatives of `Ψ`.
#[derive(Debug)]
struct DerivativeTables {
    tables: [RadialTable; 4],
}

impl DerivativeTables {
    fn get(p: FracParams) -> Arc<DerivativeTables> {
        static CACHE: Cache<DerivativeTables> = OnceLock::new();
        cached(&CACHE, p, || {
            let base = p.n() as f64 + 2.0 * p.s();
            let decay = std::array::from_fn(|k| base + (k + 1) as f64);
            let tables = RadialTable::build(DERIVATIVE_LAYOUT, decay, |r| {
                let (d, e) = psi_radial_derivatives_direct(p, r);
                ([d[1], d[2], d[3], d[4]], [e[1], e[2], e[3], e[4]])
            });
            DerivativeTables { tables }
        })
    }

    /// `(ψ^{(k)}(ρ), error bound)`.
    fn eval(&self, k: usize, rho: f64) -> (f64, f64) {
        let t = &self.tables[k - 1];
        (t.eval(rho), t.rel_error * t.scale_at(rho))
    }
}

/// Radial profile of `Ψ`: `Ψ(y) = psi_radial(|y|)`, read from the cached
/// interpolation table.
pub fn psi_radial(p: FracParams, rho: f64) -> f64 {
    if rho <= 1.0 {
        return 0.0;
    }
    PsiTable::get(p).eval(rho)
}

/// `k`-th derivative of the radial profile of `Ψ`, `k <= 4`.
pub fn psi_radial_derivative(p: FracParams, k: u32, rho: f64) -> Result<f64> {
    match k {
        0 => Ok(psi_radial(p, rho)),
        1..=MAX_DERIVATIVE_ORDER => Ok(DerivativeTables::get(p).eval(k as usize, rho).0),
        _ => domain(format!("derivative order {k} exceeds {MAX_DERIVATIVE_ORDER}")),
    }
}

/// `Ψ(y) = ∫_1^4 P_r(0, y) φ(r) dr`; exactly zero on the closed unit ball.
pub fn psi(p: FracParams, y: &Point) -> f64 {
    psi_radial(p, y.norm())
}

/// `Ψ_{r0}(y) = r0^{-n} Ψ(y / r0)`.
pub fn psi_scaled(p: FracParams, r0: f64, y: &Point) -> f64 {
    r0.powi(-(p.n() as i32)) * psi_radial(p, y.norm() / r0)
}

/// Limit of `|y|^{n+2s} Ψ(y)` as `|y| → ∞`: `β_{n,s} ∫_1^4 r^{2s} φ(r) dr`.
pub fn psi_decay_constant(p: FracParams) -> f64 {
    let s = p.s();
    beta_ns(p) * integrate_1d(|r| r.powf(2.0 * s) * mollifier_phi(r), 1.0, 4.0, &inner_spec()).value
}

/// Coefficients of `(ρ^{-1} d/dρ)^k ψ = Σ_j A[k][j] ρ^{j-2k} ψ^{(j)}`.
const RADIAL_OPERATOR: [[f64; 5]; 5] = [
    [1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, -1.0, 1.0, 0.0, 0.0],
    [0.0, 3.0, -3.0, 1.0, 0.0],
    [0.0, -15.0, 15.0, -6.0, 1.0],
];

/// Terms `(c, e, k)` of `∂_x^a G(|y|²/2) = Σ c x^e G^{(k)}`.
fn axis_terms(a: u32) -> Vec<(f64, i32, usize)> {
    let fact = |m: u32| (1..=m).product::<u32>() as f64;
    (a.div_ceil(2)..=a)
        .map(|k| {
            let c = fact(a) / (fact(2 * k - a) * fact(a - k) * 2f64.powi((a - k) as i32));
            (c, (2 * k - a) as i32, k as usize)
        })
        .collect()
}

/// `D^γ Ψ_{r0}(y)` for `|γ| <= 4`, from the tabulated radial derivatives.
///
/// Writing `Ψ(y) = G(|y|²/2)`, each coordinate derivative acts on `G` by
/// the one-variable rule in [`axis_terms`], and `G^{(k)} = (ρ^{-1} d/dρ)^k ψ`.
/// Zero on the vanishing ball `|y| <= r0`. The error estimate propagates
/// the measured table errors; the result is flagged as not converged when
/// it exceeds `1e-8` of the magnitude of the summed terms.
pub fn psi_derivative(p: FracParams, gamma: &MultiIndex, r0: f64, y: &Point) -> Result<QuadResult> {
    if !(r0 > 0.0) {
        return domain("r0 must be positive");
    }
    gamma.check_dim(y.dim())?;
    let order = gamma.order();
    if order > MAX_DERIVATIVE_ORDER {
        return domain(format!("derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}"));
    }
    let n = p.n() as i32;
    let norm = r0.powi(-n - order as i32);
    let x = *y * (1.0 / r0);
    let rho = x.norm();
    if rho <= 1.0 {
        return Ok(QuadResult::exact(0.0));
    }
    if order == 0 {
        return Ok(QuadResult::exact(norm * psi_radial(p, rho)));
    }
    let derivs = DerivativeTables::get(p);
    // G^{(k)}(ρ²/2) with a bound on its error and on its magnitude
    let mut g = [(0.0, 0.0, 0.0); 5];
    for (k, slot) in g.iter_mut().enumerate().skip(1).take(order as usize) {
        for (j, a) in RADIAL_OPERATOR[k].iter().enumerate().take(k + 1).skip(1) {
            let (v, e) = derivs.eval(j, rho);
            let c = a * rho.powi(j as i32 - 2 * k as i32);
            let mag = derivs.tables[j - 1].scale_at(rho);
            *slot = (slot.0 + c * v, slot.1 + c.abs() * e, slot.2 + c.abs() * mag);
        }
    }
    let per_axis: Vec<Vec<(f64, i32, usize)>> = gamma.entries().iter().map(|&a| axis_terms(a)).collect();
    let (mut value, mut err, mut mag) = (0.0, 0.0, 0.0);
    let mut idx = vec![0usize; per_axis.len()];
    loop {
        let (mut c, mut k) = (1.0, 0usize);
        for (i, terms) in per_axis.iter().enumerate() {
            let (ci, e, ki) = terms[idx[i]];
            c *= ci * x.get(i).powi(e);
            k += ki;
        }
        value += c * g[k].0;
        err += c.abs() * g[k].1;
        mag += c.abs() * g[k].2;
        // odometer over the per-axis expansions
        let mut i = 0;
        while i < idx.len() {
            idx[i] += 1;
            if idx[i] < per_axis[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
        if i == idx.len() {
            break;
        }
    }
    Ok(QuadResult {
        value: norm * value,
        error_estimate: norm * err,
        evaluations: 1,
        converged: err <= 1e-8 * mag,
    })
}

fn stencil(order: u32) -> &'static [(i32, f64)] {
    match order {
        0 => &[(0, 1.0)],
        1 => &[(-1, -0.5), (1, 0.5)],
        2 => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
        3 => &[(-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)],
        4 => &[(-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)],
        _ => unreachable!("orders above 4 are rejected"),
    }
}

/// Initial difference step per derivative order, in units of
/// `r0 max(1, |y| / 4r0)`.
const STEP_FACTOR: [f64; 5] = [0.0, 0.08, 0.1, 0.15, 0.2];
/// Step reduction per Ridders stage and the stage count.
const RIDDERS_SHRINK: f64 = 1.4;
const RIDDERS_STAGES: usize = 10;

/// Richardson extrapolation of `d(h)` to `h → 0` for an error series in
/// even powers of `h` (Ridders' tableau). Returns the entry with the
/// smallest estimated error and that error.
fn ridders(d: impl Fn(f64) -> f64, h0: f64) -> (f64, f64) {
    let c2 = RIDDERS_SHRINK * RIDDERS_SHRINK;
    let mut prev: Vec<f64> = vec![d(h0)];
    let mut best = (prev[0], f64::INFINITY);
    let mut h = h0;
    for _ in 1..RIDDERS_STAGES {
        h /= RIDDERS_SHRINK;
        let mut row = vec![d(h)];
        let mut fac = c2;
        for j in 1..=prev.len() {
            let v = (row[j - 1] * fac - prev[j - 1]) / (fac - 1.0);
            fac *= c2;
            let err = (v - row[j - 1]).abs().max((v - prev[j - 1]).abs());
            if err <= best.1 {
                best = (v, err);
            }
            row.push(v);
        }
        let k = row.len() - 1;
        // higher orders stopped helping: roundoff has taken over
        if (row[k] - prev[k - 1]).abs() >= 2.0 * best.1 {
            break;
        }
        prev = row;
    }
    best
}

fn central_difference<F: Fn(&Point) -> f64>(f: &F, gamma: &MultiIndex, y: &Point, h: f64) -> f64 {
    let n = y.dim();
    let stencils: Vec<&[(i32, f64)]> = gamma.entries().iter().map(|&k| stencil(k)).collect();
    let mut idx = vec![0usize; n];
    let mut acc = 0.0;
    loop {
        let mut pt = *y;
        let mut w = 1.0;
        for i in 0..n {
            let (off, wi) = stencils[i][idx[i]];
            pt.set(i, y.get(i) + off as f64 * h);
            w *= wi;
        }
        acc += w * f(&pt);
        // odometer over the tensor stencil
        let mut i = 0;
        loop {
            if i == n {
                return acc / h.powi(gamma.order() as i32);
            }
            idx[i] += 1;
            if idx[i] < stencils[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// `D^γ Ψ_{r0}(y)` by tensor central differences of the tabulated `Ψ`,
/// extrapolated to zero step with Ridders' tableau. An independent check
/// on [`psi_derivative`]; reliable where `Ψ` varies slowly on the scale of
/// the stencil, so not next to `|y| = r0` or `|y| = 4 r0`.
pub fn psi_derivative_fd(p: FracParams, gamma: &MultiIndex, r0: f64, y: &Point) -> Result<QuadResult> {
    if !(r0 > 0.0) {
        return domain("r0 must be positive");
    }
    gamma.check_dim(y.dim())?;
    let order = gamma.order();
    if order > MAX_DERIVATIVE_ORDER {
        return domain(format!("derivative order {order} exceeds {MAX_DERIVATIVE_ORDER}"));
    }
    let rho = y.norm();
    if rho <= r0 {
        return Ok(QuadResult::exact(0.0));
    }
    let table = PsiTable::get(p);
    let norm = r0.powi(-(p.n() as i32));
    let f = |q: &Point| norm * table.eval(q.norm() / r0);
    if order == 0 {
        return Ok(QuadResult::exact(f(y)));
    }
    let h0 = STEP_FACTOR[order as usize] * r0 * (rho / (4.0 * r0)).max(1.0);
    let (value, err) = ridders(|h| central_difference(&f, gamma, y, h), h0);
    let stencil_points: usize = gamma.entries().iter().map(|&k| stencil(k).len()).product();
    Ok(QuadResult {
        value,
        error_estimate: err,
        evaluations: (RIDDERS_STAGES * stencil_points) as u64,
        converged: err.is_finite(),
    })
}
