//! The acceptance criteria as a runnable suite.
//!
//! Each criterion reports its measured values as JSON. Wall-clock time is
//! kept apart from the measurements so that two runs can be compared byte
//! for byte.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use fraclab_core::kernels::{psi_decay_constant, psi_radial, psi_scaled};
use fraclab_core::liouville::liouville_decay_experiment;
use fraclab_core::poisson::{extension_field, kernel_mass, mean_value_residual, poisson_extend};
use fraclab_core::quadrature::{integrate_exterior_radial, ExteriorOptions};
use fraclab_core::{
    adjudicate_alpha, build_exit_sampler, cauchy_estimate_record, constants_for, frac_laplacian_point, wos_solve_with,
    AlphaChoice, Ball, Domain, FracParams, MultiIndex, Point, PoissonKernel, QuadSpec, Result, ScalarField, TailBehavior,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::builtins;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    /// Reduced Monte Carlo sample counts.
    Fast,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptOptions {
    pub tier: Tier,
    /// Multiplier applied to `β_{n,s}` in the kernel-normalization check;
    /// anything but 1 must make that criterion fail.
    pub beta_scale: f64,
}

impl Default for AcceptOptions {
    fn default() -> Self {
        Self { tier: Tier::Full, beta_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u8,
    pub name: String,
    pub passed: bool,
    pub measured: Value,
    pub detail: String,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionOutcome {
    /// One human-readable line.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<28} {}  {} ({:.1} s)",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub options: AcceptOptions,
    pub criteria: Vec<CriterionOutcome>,
    pub passed: bool,
}

struct Check {
    passed: bool,
    measured: Value,
    detail: String,
}

fn run(id: u8, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Result<Check>) -> CriterionOutcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (mut passed, measured, mut detail) = match result {
        Ok(c) => (c.passed, c.measured, c.detail),
        Err(e) => (false, Value::Null, format!("error: {e}")),
    };
    if let Some(limit) = limit {
        if elapsed > limit {
            passed = false;
            detail.push_str(&format!("; over the {} s limit", limit.as_secs()));
        }
    }
    CriterionOutcome { id, name: name.into(), passed, measured, detail, elapsed }
}

fn p(n: usize, s: f64) -> FracParams {
    FracParams::new(n, s).expect("valid parameters")
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn constants() -> Result<Check> {
    let c = constants_for(p(1, 0.5));
    let a = constants_for(p(3, 0.5)).alpha_ns.unwrap_or(f64::NAN);
    let errs = [rel(c.c_ns, 1.0 / PI), rel(c.beta_ns, 1.0 / PI), rel(a, 2.0 * PI * PI)];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    Ok(Check {
        passed: errs.iter().all(|e| *e < 1e-10),
        measured: json!({ "c_ns_1_half": c.c_ns, "beta_ns_1_half": c.beta_ns, "alpha_ns_3_half": a, "max_rel_error": worst }),
        detail: format!("max relative error {worst:.1e}"),
    })
}

fn kernel_normalization(beta_scale: f64, spec: &QuadSpec) -> Result<Check> {
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let r = 2.0;
    for n in 1..=3 {
        for s in [0.25, 0.5, 0.75] {
            let params = p(n, s);
            let kernel = PoissonKernel::with_beta(params, beta_scale * constants_for(params).beta_ns);
            for t in [0.0, 0.5, 0.9] {
                let m = kernel_mass(&kernel, r, &Point::on_axis(n, t * r), spec)?;
                let dev = (m.value - 1.0).abs();
                worst = worst.max(if m.converged { dev } else { f64::INFINITY });
                rows.push(json!({ "n": n, "s": s, "x_over_r": t, "mass": m.value }));
            }
        }
    }
    Ok(Check {
        passed: worst < 1e-6,
        measured: json!({ "cases": rows, "max_deviation": worst }),
        detail: format!("max |mass - 1| = {worst:.1e} over 27 cases"),
    })
}

fn psi_properties(spec: &QuadSpec) -> Result<Check> {
    let mut rows = Vec::new();
    let (mut vanish, mut worst_mass, mut worst_decay) = (true, 0.0f64, 0.0f64);
    for n in 1..=3 {
        for s in [0.25, 0.5, 0.75] {
            let params = p(n, s);
            vanish &= [0.0, 0.25, 0.5, 0.9, 0.999, 1.0].iter().all(|&r| psi_radial(params, r) == 0.0);
            let opts = ExteriorOptions::decaying(2.0 * s);
            let m = integrate_exterior_radial(|r| psi_radial(params, r), n, 1.0, &opts, spec)?;
            let m_scaled = integrate_exterior_radial(|r| psi_scaled(params, 0.5, &Point::on_axis(n, r)), n, 0.5, &opts, spec)?;
            let k = psi_decay_constant(params);
            let y = 1e3f64;
            let decay = rel(psi_radial(params, y) * y.powf(n as f64 + 2.0 * s), k);
            worst_mass = worst_mass.max((m.value - 1.0).abs()).max((m_scaled.value - 1.0).abs());
            worst_decay = worst_decay.max(decay);
            rows.push(json!({ "n": n, "s": s, "mass": m.value, "mass_r0_half": m_scaled.value, "decay_rel_error": decay }));
        }
    }
    Ok(Check {
        passed: vanish && worst_mass < 1e-6 && worst_decay < 1e-2,
        measured: json!({ "cases": rows, "vanishes_on_unit_ball": vanish, "max_mass_error": worst_mass, "max_decay_error": worst_decay }),
        detail: format!("zero on |y| <= 1: {vanish}, mass error {worst_mass:.1e}, decay error {worst_decay:.1e}"),
    })
}

fn mean_value(spec: &QuadSpec) -> Result<Check> {
    let ball = Ball::centered(1, 10.0)?;
    let g = builtins::exterior("sign", 1)?;
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for s in [0.25, 0.5, 0.75] {
        let u = extension_field(p(1, s), ball, &g, *spec);
        for x in [0.0, 0.5, 1.0] {
            let r = mean_value_residual(p(1, s), &u, &Domain::ball(ball), 0.5, &Point::on_axis(1, x), spec)?;
            worst = worst.max(r);
            rows.push(json!({ "s": s, "x": x, "residual": r }));
        }
    }
    Ok(Check {
        passed: worst < 1e-4,
        measured: json!({ "cases": rows, "max_residual": worst }),
        detail: format!("max |u - u*Psi| = {worst:.1e}"),
    })
}

/// `(1/π) ∫_0^∞ (2u(x) - u(x+z) - u(x-z)) / z² dz` for `u = (1 - x²)₊^{1/2}`
/// by the midpoint rule, split at the kinks of the integrand.
fn half_bump_oracle(x: f64) -> f64 {
    let u = |t: f64| (1.0 - t * t).max(0.0).sqrt();
    let f = |z: f64| (2.0 * u(x) - u(x + z) - u(x - z)) / (z * z);
    let cells = 1_000_000;
    let midpoint = |a: f64, b: f64| {
        let h = (b - a) / cells as f64;
        (0..cells).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    };
    let (k1, k2) = (1.0 - x.abs(), 1.0 + x.abs());
    let inner = midpoint(0.0, k1) + if k2 > k1 { midpoint(k1, k2) } else { 0.0 };
    (inner + 2.0 * u(x) / k2) / PI
}

fn fractional_laplacian(spec: &QuadSpec) -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut affine_worst = 0.0f64;
    for s in [0.6, 0.75, 0.9] {
        for n in 1..=3 {
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let b = rng.random_range(-1.0..1.0);
            let coef = Point::new(&a)?;
            let u = ScalarField::new(n, move |y| coef.dot(y) + b).with_growth(coef.norm() + b.abs(), 1.0);
            for _ in 0..10 {
                let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
                let r = frac_laplacian_point(p(n, s), &u, &Point::new(&x)?, spec)?;
                affine_worst = affine_worst.max(r.value.abs());
            }
        }
    }
    let cosine = ScalarField::bounded(1, 1.0, |y| y.get(0).cos()).with_tail(TailBehavior::Oscillatory { period: 2.0 * PI });
    let symbol = frac_laplacian_point(p(1, 0.5), &cosine, &Point::zero(1), spec)?.value;
    let bump = builtins::field("bump2s", p(1, 0.5))?;
    let mut bump_rows = Vec::new();
    let mut bump_ok = true;
    for x in [0.0, 0.5, -0.5] {
        let v = frac_laplacian_point(p(1, 0.5), &bump, &Point::on_axis(1, x), spec)?.value;
        let oracle = half_bump_oracle(x);
        bump_ok &= (v - 1.0).abs() < 1e-3 && (v - oracle).abs() < 1e-3;
        bump_rows.push(json!({ "x": x, "value": v, "oracle": oracle }));
    }
    let symbol_err = (symbol - 1.0).abs();
    Ok(Check {
        passed: affine_worst < 1e-6 && symbol_err < 1e-4 && bump_ok,
        measured: json!({ "affine_max_abs": affine_worst, "cosine_at_0": symbol, "bump": bump_rows }),
        detail: format!("affine max {affine_worst:.1e}, cos symbol error {symbol_err:.1e}, bump within 1e-3: {bump_ok}"),
    })
}

const RADII: [f64; 5] = [1.0, 2.0, 4.0, 8.0, 16.0];

fn cauchy(spec: &QuadSpec) -> Result<Check> {
    let g = builtins::exterior("sign", 1)?;
    let gamma = MultiIndex::axis(1, 0, 1);
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut ok = true;
    for s in [0.25, 0.5, 0.75] {
        let mut ratios = Vec::new();
        for &r in &RADII {
            let u = extension_field(p(1, s), Ball::centered(1, r)?, &g, *spec);
            let rec = cauchy_estimate_record(p(1, s), &u, &gamma, r, spec)?;
            ok &= rec.converged;
            ratios.push(rec.ratio.unwrap_or(f64::NAN));
        }
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
        let spread = hi / lo;
        ok &= ratios.iter().all(|v| v.is_finite() && *v > 0.0) && spread <= 10.0;
        worst = worst.max(spread);
        rows.push(json!({ "s": s, "ratios": ratios, "max_over_min": spread }));
    }
    Ok(Check {
        passed: ok,
        measured: json!({ "cases": rows, "max_spread": worst }),
        detail: format!("largest max/min ratio {worst:.2}"),
    })
}

fn liouville(spec: &QuadSpec) -> Result<Check> {
    let g = builtins::mixed_data(1);
    let mut rows = Vec::new();
    let mut ok = true;
    for (s, order) in [(0.25, 2u32), (0.5, 2), (0.75, 2), (0.25, 1)] {
        let rep = liouville_decay_experiment(p(1, s), &g, &MultiIndex::axis(1, 0, order), &RADII, spec)?;
        let limit = 2.0 * s - order as f64 + 0.3;
        let pass = rep.converged && rep.drop_factor >= 2.0 && rep.fitted_slope <= limit;
        ok &= pass;
        rows.push(json!({
            "s": s, "order": order, "derivatives": rep.derivatives, "drop_factor": rep.drop_factor,
            "fitted_slope": rep.fitted_slope, "slope_limit": limit, "passed": pass
        }));
    }
    let worst = rows
        .iter()
        .map(|r| r["fitted_slope"].as_f64().unwrap_or(f64::NAN) - r["slope_limit"].as_f64().unwrap_or(f64::NAN))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Check {
        passed: ok,
        measured: json!({ "cases": rows }),
        detail: format!("worst slope margin {worst:+.2} (must be <= 0), drops >= 2: {ok}"),
    })
}

fn riesz(spec: &QuadSpec) -> Result<Check> {
    let mut rows = Vec::new();
    let mut ok = true;
    let mut verdicts = Vec::new();
    for (n, s) in [(3, 0.5), (2, 0.4)] {
        let v = adjudicate_alpha(p(n, s), spec)?;
        let passes = [v.with_alpha.relative_residual, v.with_reciprocal.relative_residual]
            .iter()
            .filter(|r| **r < 5e-2)
            .count();
        ok &= passes == 1 && v.verdict != AlphaChoice::Inconclusive;
        verdicts.push(v.verdict);
        rows.push(json!({
            "n": n, "s": s, "alpha": v.alpha, "residual_alpha": v.with_alpha.relative_residual,
            "residual_reciprocal": v.with_reciprocal.relative_residual, "verdict": v.verdict, "adopted": v.adopted
        }));
    }
    ok &= verdicts[0] == verdicts[1];
    Ok(Check {
        passed: ok,
        measured: json!({ "cases": rows }),
        detail: format!("verdicts {:?} / {:?}", verdicts[0], verdicts[1]),
    })
}

fn walk_on_spheres(tier: Tier, spec: &QuadSpec) -> Result<Check> {
    let params = p(1, 0.5);
    let sampler = build_exit_sampler(params, fraclab_core::wos::DEFAULT_TABLE_SIZE, spec)?;
    let g = builtins::exterior("sign", 1)?;
    let ball = Ball::centered(1, 1.0)?;
    let x0 = Point::on_axis(1, 0.3);
    let exact = poisson_extend(params, &ball, &g, &x0, spec)?.value;
    let steps = fraclab_core::wos::DEFAULT_MAX_STEPS;
    let w = wos_solve_with(&sampler, &Domain::ball(ball), &g, &x0, 10_000, steps, 1)?;
    let ball_ok = (w.estimate - exact).abs() < 3.0 * w.std_error;

    let union = builtins::parse_domain("union(ball(0,1);ball(3,1))")?;
    let samples = match tier {
        Tier::Fast => 10_000,
        Tier::Full => 100_000,
    };
    let x1 = Point::on_axis(1, 0.4);
    let a = wos_solve_with(&sampler, &union, &g, &x1, samples, steps, 1)?;
    let b = wos_solve_with(&sampler, &union, &g, &x1, samples, steps, 2)?;
    let sigma = a.std_error.hypot(b.std_error);
    let union_ok = (a.estimate - b.estimate).abs() < 3.0 * sigma && !a.flagged && !b.flagged;
    Ok(Check {
        passed: ball_ok && union_ok,
        measured: json!({ "ball": { "poisson": exact, "wos": w }, "union": { "seed_1": a, "seed_2": b } }),
        detail: format!(
            "ball |wos - poisson| = {:.2} sigma, union seeds differ by {:.2} sigma",
            (w.estimate - exact).abs() / w.std_error,
            (a.estimate - b.estimate).abs() / sigma
        ),
    })
}

fn criteria_1_to_9(opts: &AcceptOptions) -> Vec<CriterionOutcome> {
    let spec = QuadSpec::default();
    let secs = Duration::from_secs;
    vec![
        run(1, "constants", Some(secs(1)), constants),
        run(2, "kernel normalization", Some(secs(120)), || kernel_normalization(opts.beta_scale, &spec)),
        run(3, "psi properties", None, || psi_properties(&spec)),
        run(4, "mean-value identity", None, || mean_value(&spec)),
        run(5, "fractional laplacian", None, || fractional_laplacian(&spec)),
        run(6, "cauchy estimate", None, || cauchy(&spec)),
        run(7, "liouville decay", None, || liouville(&spec)),
        run(8, "riesz adjudication", Some(secs(600)), || riesz(&spec)),
        run(9, "walk-on-spheres", Some(secs(60)), || walk_on_spheres(opts.tier, &spec)),
    ]
}

fn fingerprint(c: &[CriterionOutcome]) -> String {
    serde_json::to_string(c).expect("outcomes serialize")
}

/// Run every criterion, then run 1 to 9 again and require byte-identical
/// measurements.
pub fn run_acceptance_suite(opts: &AcceptOptions, mut progress: impl FnMut(&CriterionOutcome)) -> AcceptanceReport {
    let mut criteria = Vec::new();
    for c in criteria_1_to_9(opts) {
        progress(&c);
        criteria.push(c);
    }
    let first = fingerprint(&criteria);
    let again = run(10, "determinism", None, || {
        let second = fingerprint(&criteria_1_to_9(opts));
        let same = first == second;
        Ok(Check {
            passed: same,
            measured: json!({ "identical": same, "bytes": first.len() }),
            detail: format!("re-run of criteria 1-9 byte-identical: {same}"),
        })
    });
    progress(&again);
    criteria.push(again);
    let passed = criteria.iter().all(|c| c.passed);
    AcceptanceReport { options: *opts, criteria, passed }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_reproduces_the_closed_form() {
        for x in [0.0, 0.5, -0.5] {
            assert!((half_bump_oracle(x) - 1.0).abs() < 1e-6, "{x}");
        }
    }

    #[test]
    fn constants_criterion_passes() {
        let c = run(1, "constants", None, constants);
        assert!(c.passed, "{}", c.line());
        assert!(c.line().contains("PASS"));
    }
}
