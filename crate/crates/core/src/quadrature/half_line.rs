use super::singular::integrate_power_weighted;
use super::{integrate_1d, integrate_log, QuadResult, QuadSpec};

/// `∫_a^∞ f(ρ) dρ` for `f ~ ρ^{-1-q}`, `q > 0`, through `t = (ρ/a)^{-q}`.
///
/// An exact power law `f = K ρ^{-1-q}` becomes the constant `K a^{-q} / q`.
pub fn integrate_power_tail<F: Fn(f64) -> f64>(f: F, a: f64, q: f64, spec: &QuadSpec) -> QuadResult {
    debug_assert!(a > 0.0 && q > 0.0);
    let inv_q = 1.0 / q;
    integrate_1d(
        |t| {
            if t <= 0.0 {
                return 0.0;
            }
            let rho = a * t.powf(-inv_q);
            if !rho.is_finite() {
                return 0.0;
            }
            f(rho) * rho * inv_q / t
        },
        0.0,
        1.0,
        spec,
    )
}

/// `∫_a^∞ f` for an integrand that oscillates with period `period` under
/// an envelope `|f(ρ)| <= envelope ρ^{-1-q}`.
///
/// Whole periods are integrated until `max_panels` is used up or the
/// envelope's remaining mass falls below `spec.abs_tol`. The remainder is
/// extrapolated as `c L^{-q} / q`, where `c` is the mean of `f ρ^{1+q}`
/// over the last period; the error estimate is the change in that
/// extrapolation between the last two periods plus one period of envelope.
pub fn integrate_oscillatory_tail<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    period: f64,
    envelope: f64,
    q: f64,
    max_panels: usize,
    spec: &QuadSpec,
) -> QuadResult {
    debug_assert!(a > 0.0 && period > 0.0 && q > 0.0);
    let remaining = |l: f64| envelope.abs() * l.powf(-q) / q;
    // ∫_lo^hi ρ^{-1-q} dρ
    let weight = |lo: f64, hi: f64| (lo.powf(-q) - hi.powf(-q)) / q;
    let mut total = QuadResult::zero();
    let mut lo = a;
    let mut means = [0.0f64; 2];
    let mut panels = 0;
    while panels < max_panels.max(2) {
        if remaining(lo) < spec.abs_tol {
            return total.with_extra_error(remaining(lo));
        }
        let hi = lo + period;
        let piece = integrate_1d(&f, lo, hi, spec);
        means = [means[1], piece.value / weight(lo, hi)];
        total = total.plus(piece);
        lo = hi;
        panels += 1;
    }
    let rest = lo.powf(-q) / q;
    let one_period = envelope.abs() * lo.powf(-1.0 - q) * period;
    QuadResult {
        value: total.value + means[1] * rest,
        error_estimate: total.error_estimate + (means[1] - means[0]).abs() * rest + one_period,
        ..total
    }
}

/// Segmentation of a half-line integral `∫_start^∞ f(ρ) (ρ - start)^{-p} dρ`.
///
/// The near segment `[start, near_end]` absorbs the endpoint weight by
/// substitution, `[near_end, tail_start]` is split at `breaks` and
/// integrated in `ln ρ`, and `[tail_start, ∞)` uses the power-law map with
/// exponent `tail_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfLine {
    pub start: f64,
    pub singular_exponent: f64,
    pub near_end: f64,
    pub breaks: Vec<f64>,
    pub tail_start: f64,
    pub tail_q: f64,
}

impl HalfLine {
    /// Plan a half-line with near-field width `near_width`, outer length
    /// scale `far_scale` and the given interior breakpoints.
    pub fn plan(
        start: f64,
        singular_exponent: f64,
        tail_q: f64,
        near_width: f64,
        far_scale: f64,
        breaks: impl IntoIterator<Item = f64>,
        spec: &QuadSpec,
    ) -> Self {
        let mut br: Vec<f64> = breaks.into_iter().filter(|b| b.is_finite() && *b > start).collect();
        br.sort_by(f64::total_cmp);
        br.dedup();
        let mut width = near_width.max(f64::MIN_POSITIVE);
        if let Some(&first) = br.first() {
            width = width.min(0.5 * (first - start));
        }
        let near_end = start + width;
        br.retain(|b| *b > near_end * (1.0 + 1e-14));
        let outer = far_scale.max(near_end).max(br.last().copied().unwrap_or(0.0));
        let tail_start = spec.tail_radius_factor * outer;
        br.retain(|b| *b < tail_start);
        Self { start, singular_exponent, near_end, breaks: br, tail_start, tail_q }
    }
}

/// Integrate along a planned half-line; `f` is the regular factor, the
/// weight `(ρ - start)^{-p}` is applied internally.
pub fn integrate_half_line<F: Fn(f64) -> f64>(f: F, plan: &HalfLine, spec: &QuadSpec) -> QuadResult {
    let head = integrate_half_line_to(&f, plan, plan.tail_start, spec);
    let p = plan.singular_exponent;
    let start = plan.start;
    let full = |rho: f64| {
        let w = if p == 0.0 { 1.0 } else { (rho - start).powf(-p) };
        f(rho) * w
    };
    head.plus(integrate_power_tail(full, plan.tail_start, plan.tail_q, spec))
}

/// The planned half-line integral truncated at `end`, with no tail.
pub fn integrate_half_line_to<F: Fn(f64) -> f64>(f: F, plan: &HalfLine, end: f64, spec: &QuadSpec) -> QuadResult {
    let p = plan.singular_exponent;
    let start = plan.start;
    let full = |rho: f64| {
        let w = if p == 0.0 { 1.0 } else { (rho - start).powf(-p) };
        f(rho) * w
    };
    let mut total = integrate_power_weighted(&f, start, plan.near_end, p, false, spec);

    let mut a = plan.near_end;
    for &b in plan.breaks.iter().filter(|b| **b < end).chain(std::iter::once(&end)) {
        if b <= a {
            continue;
        }
        let piece = if a > 0.0 && b / a > 1.5 {
            integrate_log(full, a, b, spec)
        } else {
            integrate_1d(full, a, b, spec)
        };
        total = total.plus(piece);
        a = b;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_tail() {
        let s = QuadSpec::default();
        let r = integrate_power_tail(|x: f64| x.powf(-2.0), 1.0, 1.0, &s);
        assert!((r.value - 1.0).abs() < 1e-14);
        let r = integrate_power_tail(|x: f64| x.powf(-1.5), 4.0, 0.5, &s);
        assert!((r.value - 1.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_tail_of_cosine() {
        // against a long direct integral
        let s = QuadSpec::default();
        let r = integrate_oscillatory_tail(|x: f64| x.cos() / (x * x), 3.0, 2.0 * std::f64::consts::PI, 1.0, 1.0, 100_000, &s);
        let direct = integrate_1d(|x: f64| x.cos() / (x * x), 3.0, 3.0 + 2e5 * std::f64::consts::PI, &s.with_rel_tol(1e-13));
        assert!((r.value - direct.value).abs() < 1e-5 + r.error_estimate, "{r:?} vs {direct:?}");
        assert!(r.error_estimate < 1e-5);
        // a nonzero mean is extrapolated, not dropped
        let c2 = |x: f64| x.cos().powi(2) * x.powf(-1.5);
        let r = integrate_oscillatory_tail(c2, 3.0, std::f64::consts::PI, 1.0, 0.5, 2000, &s);
        let pi = std::f64::consts::PI;
        let periods: f64 = (0..100_000).map(|k| integrate_1d(c2, 3.0 + k as f64 * pi, 3.0 + (k + 1) as f64 * pi, &s).value).sum();
        let direct = periods + integrate_power_tail(|x| 0.5 * x.powf(-1.5), 3.0 + 1e5 * pi, 0.5, &s).value;
        assert!((r.value - direct).abs() < 1e-4 && (r.value - direct).abs() <= r.error_estimate + 1e-9, "{r:?} vs {direct}");
    }

    #[test]
    fn half_line_with_singular_start() {
        // ∫_1^∞ (ρ-1)^{-1/2} ρ^{-2} dρ = π/2
        let s = QuadSpec::default();
        let plan = HalfLine::plan(1.0, 0.5, 1.5, 1.0, 1.0, [3.0], &s);
        let r = integrate_half_line(|x: f64| x.powi(-2), &plan, &s);
        assert!((r.value - std::f64::consts::FRAC_PI_2).abs() < 1e-11, "{r:?}");
    }

    #[test]
    fn breaks_are_sorted_and_clipped() {
        let s = QuadSpec::default();
        let plan = HalfLine::plan(0.0, 0.0, 1.0, 1.0, 1.0, [5.0, 0.5, f64::NAN, -1.0, 1e9], &s);
        assert_eq!(plan.near_end, 0.25);
        assert_eq!(plan.breaks, vec![0.5, 5.0, 1e9]);
        assert_eq!(plan.tail_start, 64.0 * 1e9);
    }
}
