//! Walk-on-spheres for `(-Δ)^s u = 0` in `Ω` with `u = g` outside.
//!
//! From a point `x` the walk jumps according to the Poisson kernel of the
//! largest ball `B(x, r) ⊂ Ω`. Centered at `x`, that kernel has radial
//! density
//!
//! ```text
//! β_{n,s} σ_{n-1} (ρ² - 1)^{-s} ρ^{-1},   ρ = |y - x| / r > 1,
//! ```
//!
//! times a uniform direction, independent of `r`. The walk stops at the
//! first landing point outside `Ω` and scores `g` there.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::{beta_ns, sphere_area, FracParams};
use crate::error::{FracError, Result};
use crate::geometry::{Domain, Point};
use crate::poisson::ExteriorData;
use crate::quadrature::{integrate_log, integrate_power_tail, integrate_power_weighted, QuadSpec};

pub const DEFAULT_TABLE_SIZE: usize = 2048;
pub const DEFAULT_MAX_STEPS: usize = 10_000;
/// Fraction of truncated walks above which a result is flagged.
pub const TRUNCATION_FLAG: f64 = 0.01;

/// `ρ - 1` range covered by the table; beyond it the exact asymptotic forms
/// of the CDF take over.
const T_MIN: f64 = 1e-10;
const T_MAX: f64 = 1e8;

/// Inverse CDF of the centered exit radius ratio `ρ`.
///
/// Rows are `(quantile, ρ)` with `ρ - 1` log-spaced over `[1e-10, 1e8]`,
/// preceded by `(0, 1)`. Between rows `ln(ρ - 1)` is interpolated as a
/// monotone cubic in `z = ln(q / (1 - q))`; in that variable it is
/// asymptotically linear at both ends, with slopes `1/(1-s)` near `ρ = 1`
/// and `1/(2s)` in the tail, which extend the table past its last rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExitSampler {
    params: FracParams,
    quantiles: Vec<f64>,
    ratios: Vec<f64>,
    /// `z` and `ln(ρ - 1)` at the interior rows, with PCHIP slopes.
    z: Vec<f64>,
    y: Vec<f64>,
    slopes: Vec<f64>,
    /// Deviation of the total quadrature mass from 1.
    pub mass_error: f64,
}

/// `β σ (ρ + 1)^{-s} ρ^{-1}`, the radial density without `(ρ - 1)^{-s}`.
fn regular_factor(p: FracParams) -> impl Fn(f64) -> f64 {
    let c = beta_ns(p) * sphere_area(p.n());
    let s = p.s();
    move |rho: f64| c * (rho + 1.0).powf(-s) / rho
}

/// The radial density of the exit ratio, `ρ > 1`.
pub fn exit_density(p: FracParams, rho: f64) -> f64 {
    if !(rho > 1.0) {
        return 0.0;
    }
    regular_factor(p)(rho) * (rho - 1.0).powf(-p.s())
}

/// Fritsch–Carlson slopes for a monotone cubic through `(x, y)`.
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let d: Vec<f64> = (0..m - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
    let mut out = vec![0.0; m];
    out[0] = d[0];
    out[m - 1] = d[m - 2];
    for i in 1..m - 1 {
        if d[i - 1] * d[i] > 0.0 {
            let (w1, w2) = (2.0 * h[i] + h[i - 1], h[i] + 2.0 * h[i - 1]);
            out[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    out
}

/// Build the inverse-CDF table by cumulative quadrature of the density.
pub fn build_exit_sampler(p: FracParams, table_size: usize, spec: &QuadSpec) -> Result<ExitSampler> {
    spec.validate()?;
    if table_size < 256 {
        return Err(FracError::Domain(format!("table size {table_size} is below 256")));
    }
    let s = p.s();
    let reg = regular_factor(p);
    // everything in the excess t = ρ - 1, which stays accurate near ρ = 1
    let density = |t: f64| reg(1.0 + t) * t.powf(-s);
    let m = table_size - 1;
    let (l0, l1) = (T_MIN.ln(), T_MAX.ln());
    let excess: Vec<f64> = (0..m).map(|i| (l0 + (l1 - l0) * i as f64 / (m - 1) as f64).exp()).collect();

    let head = integrate_power_weighted(|t| reg(1.0 + t), 0.0, excess[0], s, false, spec);
    let mut converged = head.converged;
    let mut cdf = Vec::with_capacity(m);
    let mut pieces = Vec::with_capacity(m - 1);
    let mut acc = head.value;
    cdf.push(acc);
    for w in excess.windows(2) {
        let piece = integrate_log(density, w[0], w[1], spec);
        converged &= piece.converged;
        acc += piece.value;
        pieces.push(piece.value);
        cdf.push(acc);
    }
    let tail = integrate_power_tail(density, excess[m - 1], 2.0 * s, spec);
    converged &= tail.converged;
    let mass = acc + tail.value;
    let mass_error = mass - 1.0;
    if !converged || !(mass_error.abs() < 1e-8) {
        return Err(FracError::Inconsistent(format!("exit law has mass {mass} (converged: {converged})")));
    }
    // quantiles of the upper rows from the tail side, where 1 - q is tiny
    let mut upper = tail.value;
    let mut survival = vec![0.0; m];
    survival[m - 1] = upper;
    for i in (0..m - 1).rev() {
        upper += pieces[i];
        survival[i] = upper;
    }
    let quantiles_inner: Vec<f64> = cdf.iter().map(|c| c / mass).collect();
    let z: Vec<f64> = (0..m).map(|i| (cdf[i] / survival[i]).ln()).collect();
    if z.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(FracError::Inconsistent("exit CDF is not strictly increasing".into()));
    }
    let y: Vec<f64> = excess.iter().map(|t| t.ln()).collect();
    let slopes = pchip_slopes(&z, &y);

    let mut quantiles = vec![0.0];
    quantiles.extend(quantiles_inner);
    let mut ratios = vec![1.0];
    ratios.extend(excess.iter().map(|t| 1.0 + t));
    Ok(ExitSampler { params: p, quantiles, ratios, z, y, slopes, mass_error })
}

impl ExitSampler {
    pub fn params(&self) -> FracParams {
        self.params
    }

    pub fn table_size(&self) -> usize {
        self.quantiles.len()
    }

    /// `(quantile, ρ)` rows, starting at `(0, 1)`.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.quantiles.iter().copied().zip(self.ratios.iter().copied())
    }

    /// The `ρ` with `P(ratio <= ρ) = q`, `0 < q < 1`, kept above 1 even
    /// where `ρ - 1` is below the resolution of `ρ`.
    pub fn quantile(&self, q: f64) -> f64 {
        (1.0 + self.excess_quantile(q)).max(1.0 + f64::EPSILON)
    }

    /// `ρ - 1` at quantile `q`.
    pub fn excess_quantile(&self, q: f64) -> f64 {
        self.log_excess(q.ln() - (-q).ln_1p()).exp()
    }

    /// `ln(ρ - 1)` at `z` on the interpolant.
    fn log_excess(&self, z: f64) -> f64 {
        let (zs, ys, ds) = (&self.z, &self.y, &self.slopes);
        let last = zs.len() - 1;
        let s = self.params.s();
        if z <= zs[0] {
            ys[0] + (z - zs[0]) / (1.0 - s)
        } else if z >= zs[last] {
            ys[last] + (z - zs[last]) / (2.0 * s)
        } else {
            let i = zs.partition_point(|v| *v <= z) - 1;
            let h = zs[i + 1] - zs[i];
            let t = (z - zs[i]) / h;
            let (t2, t3) = (t * t, t * t * t);
            (2.0 * t3 - 3.0 * t2 + 1.0) * ys[i]
                + (t3 - 2.0 * t2 + t) * h * ds[i]
                + (-2.0 * t3 + 3.0 * t2) * ys[i + 1]
                + (t3 - t2) * h * ds[i + 1]
        }
    }

    /// CDF of the interpolated law at `ρ`.
    pub fn cdf(&self, rho: f64) -> f64 {
        self.cdf_excess(rho - 1.0)
    }

    /// CDF at `ρ = 1 + t`, the exact inverse of [`Self::excess_quantile`].
    pub fn cdf_excess(&self, t: f64) -> f64 {
        if !(t > 0.0) {
            return 0.0;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        let y = t.ln();
        let (zs, ys) = (&self.z, &self.y);
        let last = ys.len() - 1;
        let s = self.params.s();
        let z = if y <= ys[0] {
            zs[0] + (y - ys[0]) * (1.0 - s)
        } else if y >= ys[last] {
            zs[last] + (y - ys[last]) * 2.0 * s
        } else {
            // the interpolant is monotone on each segment
            let i = ys.partition_point(|v| *v <= y) - 1;
            let (mut lo, mut hi) = (zs[i], zs[i + 1]);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if self.log_excess(mid) < y {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        1.0 / (1.0 + (-z).exp())
    }

    /// A draw of the exit ratio `ρ`.
    pub fn sample_ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.quantile(u)
    }
}

/// A uniform direction on `S^{n-1}`.
fn uniform_direction<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Point {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(d) = Point::new(&v).ok().and_then(|p| p.normalized()) {
            return d;
        }
    }
}

/// Exit point of the walk from the center of `B(center, r)`.
pub fn sample_exit<R: Rng + ?Sized>(sampler: &ExitSampler, center: &Point, r: f64, rng: &mut R) -> Point {
    let theta = uniform_direction(center.dim(), rng);
    let mut rho = sampler.sample_ratio(rng);
    loop {
        let y = center.along(&theta, r * rho);
        if y.dist(center) > r {
            return y;
        }
        rho *= 1.0 + 4.0 * f64::EPSILON;
    }
}

/// Monte Carlo estimate of `u(x0)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WalkResult {
    pub estimate: f64,
    /// Sample standard deviation over `√samples`.
    pub std_error: f64,
    pub samples: usize,
    pub mean_steps: f64,
    /// Walks stopped by the step limit and scored at the nearest exterior
    /// point.
    pub max_steps_hit: usize,
    /// More than 1% of the walks were truncated.
    pub flagged: bool,
    pub seed: u64,
}

/// Running count, mean and squared deviation, merged in a fixed order.
#[derive(Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
    steps: f64,
    truncated: usize,
}

impl Moments {
    fn push(&mut self, score: f64, steps: usize, truncated: bool) {
        self.count += 1.0;
        let d = score - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (score - self.mean);
        self.steps += steps as f64;
        self.truncated += truncated as usize;
    }

    fn merge(self, o: Moments) -> Moments {
        if o.count == 0.0 {
            return self;
        }
        let count = self.count + o.count;
        let d = o.mean - self.mean;
        Moments {
            count,
            mean: self.mean + d * o.count / count,
            m2: self.m2 + o.m2 + d * d * self.count * o.count / count,
            steps: self.steps + o.steps,
            truncated: self.truncated + o.truncated,
        }
    }
}

/// Samples per accumulation chunk; chunks are merged in index order so the
/// result does not depend on the number of workers.
const CHUNK: usize = 1024;

/// Walk-on-spheres estimate of the `s`-harmonic extension of `g` at `x0`.
#[allow(clippy::too_many_arguments)]
pub fn wos_solve(
    p: FracParams,
    omega: &Domain,
    g: &ExteriorData,
    x0: &Point,
    n_samples: usize,
    max_steps: usize,
    seed: u64,
    spec: &QuadSpec,
) -> Result<WalkResult> {
    let sampler = build_exit_sampler(p, DEFAULT_TABLE_SIZE, spec)?;
    wos_solve_with(&sampler, omega, g, x0, n_samples, max_steps, seed)
}

/// [`wos_solve`] with a prebuilt sampler.
pub fn wos_solve_with(
    sampler: &ExitSampler,
    omega: &Domain,
    g: &ExteriorData,
    x0: &Point,
    n_samples: usize,
    max_steps: usize,
    seed: u64,
) -> Result<WalkResult> {
    let n = sampler.params().n();
    if omega.dim() != n || x0.dim() != n {
        return Err(FracError::Domain(format!("dimension mismatch: n = {n}, domain {}, x0 {}", omega.dim(), x0.dim())));
    }
    if !(omega.dist_to_complement(x0) > 0.0) {
        return Err(FracError::Domain(format!("x0 = {x0:?} is not strictly inside the domain")));
    }
    if g.bound_hint().is_none() {
        return Err(FracError::Precondition("walk-on-spheres needs bounded data (bound_hint)".into()));
    }
    if n_samples < 2 || max_steps < 1 {
        return Err(FracError::Domain("need at least two samples and one step".into()));
    }
    let walk = |index: usize| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index as u64);
        let mut x = *x0;
        for step in 1..=max_steps {
            let r = omega.dist_to_complement(&x);
            let y = sample_exit(sampler, &x, r, &mut rng);
            if !omega.contains(&y) {
                return (g.eval(&y), step, false);
            }
            x = y;
        }
        (g.eval(&omega.nearest_exterior(&x)), max_steps, true)
    };
    let chunks = n_samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut m = Moments::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                let (score, steps, truncated) = walk(i);
                m.push(score, steps, truncated);
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let variance = total.m2 / (total.count - 1.0);
    if !total.mean.is_finite() {
        return Err(FracError::Domain("exterior data produced a non-finite score".into()));
    }
    Ok(WalkResult {
        estimate: total.mean,
        std_error: (variance / total.count).sqrt(),
        samples: n_samples,
        mean_steps: total.steps / total.count,
        max_steps_hit: total.truncated,
        flagged: total.truncated as f64 > TRUNCATION_FLAG * n_samples as f64,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::geometry::Ball;

    fn p(n: usize, s: f64) -> FracParams {
        FracParams::new(n, s).unwrap()
    }

    #[test]
    fn pchip_preserves_monotone_data() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.1, 0.1, 2.0, 2.1];
        let d = pchip_slopes(&x, &y);
        assert_eq!(d[1], 0.0);
        assert_eq!(d[2], 0.0);
        assert!(d.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn table_shape() {
        let t = build_exit_sampler(p(2, 0.4), 256, &QuadSpec::default()).unwrap();
        assert_eq!(t.table_size(), 256);
        let rows: Vec<_> = t.rows().collect();
        assert_eq!(rows[0], (0.0, 1.0));
        assert!(rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert!(rows.last().unwrap().0 < 1.0);
        assert!(t.mass_error.abs() < 1e-8);
        assert!(build_exit_sampler(p(2, 0.4), 255, &QuadSpec::default()).is_err());
    }

    #[test]
    fn quantile_inverts_cdf() {
        let t = build_exit_sampler(p(3, 0.7), 512, &QuadSpec::default()).unwrap();
        for q in [1e-14, 1e-6, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-12] {
            assert!(t.quantile(q) > 1.0);
            let e = t.excess_quantile(q);
            let tol = 1e-9 * q.min(1.0 - q) + 4.0 * f64::EPSILON;
            assert!((t.cdf_excess(e) - q).abs() < tol, "q = {q}");
        }
        assert_eq!(t.cdf(1.0), 0.0);
        assert_eq!(t.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn exits_leave_the_ball() {
        let t = build_exit_sampler(p(2, 0.9), 256, &QuadSpec::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let c = Point::new(&[0.3, -1.0]).unwrap();
        for _ in 0..10_000 {
            assert!(sample_exit(&t, &c, 0.5, &mut rng).dist(&c) > 0.5);
        }
    }

    #[test]
    fn constant_data_on_a_ball() {
        let omega = Domain::ball(Ball::centered(2, 1.0).unwrap());
        let g = ExteriorData::new(ScalarField::bounded(2, 1.0, |_| 1.0));
        let r = wos_solve(p(2, 0.5), &omega, &g, &Point::on_axis(2, 0.2), 500, 100, 3, &QuadSpec::default()).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
        assert_eq!(r.max_steps_hit, 0);
    }

    #[test]
    fn refuses_points_outside() {
        let omega = Domain::ball(Ball::centered(1, 1.0).unwrap());
        let g = ExteriorData::new(ScalarField::bounded(1, 1.0, |_| 1.0));
        let e = wos_solve(p(1, 0.5), &omega, &g, &Point::on_axis(1, 1.5), 10, 10, 0, &QuadSpec::default()).unwrap_err();
        assert!(matches!(e, FracError::Domain(_)));
    }
}
