use super::{integrate_1d, QuadResult, QuadSpec};
use crate::error::{domain, Result};

/// `∫_a^b f(t) (b - t)^{-p} dt` (or `(t - a)^{-p}` when `at_b` is false)
/// for `p < 1`, via `u = (b - t)^{1-p}` which removes the weight exactly.
pub(crate) fn integrate_power_weighted<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    p: f64,
    at_b: bool,
    spec: &QuadSpec,
) -> QuadResult {
    debug_assert!(p < 1.0 && a < b);
    if p == 0.0 {
        return integrate_1d(f, a, b, spec);
    }
    let e = 1.0 - p;
    let inv = 1.0 / e;
    let top = (b - a).powf(e);
    let g = |u: f64| {
        let d = u.powf(inv);
        let t = if at_b { b - d } else { a + d };
        f(t) * inv
    };
    integrate_1d(g, 0.0, top, spec)
}

/// Integral of `f_regular(t) * (b - t)^{-p}` over `[a, b]` (or with the
/// weight `(t - a)^{-p}` when `at_b` is false), for `p ∈ (0, 1)`.
pub fn integrate_endpoint_singular<F: Fn(f64) -> f64>(
    f_regular: F,
    a: f64,
    b: f64,
    p: f64,
    at_b: bool,
    spec: &QuadSpec,
) -> Result<QuadResult> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("singularity exponent p = {p} must lie in (0, 1)"));
    }
    if !(a < b) {
        return domain("integration interval must satisfy a < b");
    }
    Ok(integrate_power_weighted(f_regular, a, b, p, at_b, spec))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_weights() {
        let s = QuadSpec::default();
        let r = integrate_endpoint_singular(|_| 1.0, 0.0, 1.0, 0.5, true, &s).unwrap();
        assert!((r.value - 2.0).abs() < 1e-14);
        let r = integrate_endpoint_singular(|_| 1.0, 0.0, 1.0, 0.75, true, &s).unwrap();
        assert!((r.value - 4.0).abs() < 1e-13);
    }

    #[test]
    fn cubic_times_weight_matches_antiderivative() {
        // ∫_0^1 (1 + t + t^2 + t^3) t^{-p} dt
        let s = QuadSpec::default();
        for &p in &[0.1, 0.25, 0.5, 0.75, 0.9] {
            let exact: f64 = (0..4).map(|k| 1.0 / (k as f64 + 1.0 - p)).sum();
            let r = integrate_endpoint_singular(|t| 1.0 + t + t * t + t * t * t, 0.0, 1.0, p, false, &s).unwrap();
            assert!((r.value - exact).abs() < 1e-10, "p = {p}");
            // the mirrored singularity at b
            let r = integrate_endpoint_singular(
                |t| {
                    let u = 1.0 - t;
                    1.0 + u + u * u + u * u * u
                },
                0.0,
                1.0,
                p,
                true,
                &s,
            )
            .unwrap();
            assert!((r.value - exact).abs() < 1e-10, "p = {p}");
        }
    }

    #[test]
    fn rejects_bad_exponent() {
        let s = QuadSpec::default();
        assert!(integrate_endpoint_singular(|_| 1.0, 0.0, 1.0, 1.0, true, &s).is_err());
        assert!(integrate_endpoint_singular(|_| 1.0, 0.0, 1.0, 0.0, true, &s).is_err());
        assert!(integrate_endpoint_singular(|_| 1.0, 1.0, 0.0, 0.5, true, &s).is_err());
    }
}
