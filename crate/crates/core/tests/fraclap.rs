use fraclab_core::{frac_laplacian_point, Ball, FracParams, Point, QuadSpec, ScalarField, TailBehavior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn params(n: usize, s: f64) -> FracParams {
    FracParams::new(n, s).unwrap()
}

fn bump2s(n: usize, s: f64) -> ScalarField {
    ScalarField::bounded(n, 1.0, move |y| (1.0 - y.norm_sq()).max(0.0).powf(s))
        .with_breaks([Ball::centered(n, 1.0).unwrap()])
}

#[test]
fn affine_fields_vanish_for_large_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = QuadSpec::default();
    for n in 1..=3 {
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let coef = Point::new(&a).unwrap();
        let u = ScalarField::new(n, move |y| coef.dot(y) + b).with_growth(coef.norm() + b.abs(), 1.0);
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
            let r = frac_laplacian_point(params(n, 0.75), &u, &Point::new(&x).unwrap(), &spec).unwrap();
            assert!(r.value.abs() < 1e-6, "n = {n}: {r:?}");
        }
    }
}

#[test]
fn half_power_bump_matches_brute_force() {
    // (2/π)(∫_0^1 (1 - sqrt(1-z²))/z² dz + ∫_1^∞ z^{-2} dz), midpoint rule with 10⁷ cells
    let m = 10_000_000;
    let hz = 1.0 / m as f64;
    let inner: f64 = (0..m)
        .map(|i| {
            let z = (i as f64 + 0.5) * hz;
            (1.0 - (1.0 - z * z).sqrt()) / (z * z)
        })
        .sum::<f64>()
        * hz;
    let oracle = 2.0 / std::f64::consts::PI * (inner + 1.0);
    assert!((oracle - 1.0).abs() < 1e-6);

    let r = frac_laplacian_point(params(1, 0.5), &bump2s(1, 0.5), &Point::zero(1), &QuadSpec::default()).unwrap();
    assert!((r.value - oracle).abs() < 1e-3, "{r:?} vs {oracle}");
}

#[test]
fn bump2s_is_constant_inside_the_ball() {
    // (-Δ)^s (1-|y|²)_+^s = 4^s Γ(1+s) Γ(n/2+s) / Γ(n/2) on the unit ball
    let spec = QuadSpec::default();
    for (n, s, x) in [(1, 0.3, vec![0.4]), (2, 0.5, vec![0.3, 0.2]), (3, 0.7, vec![0.1, -0.2, 0.3])] {
        let nn = n as f64;
        let exact = 4f64.powf(s) * gamma(1.0 + s) * gamma(nn / 2.0 + s) / gamma(nn / 2.0);
        let r = frac_laplacian_point(params(n, s), &bump2s(n, s), &Point::new(&x).unwrap(), &spec).unwrap();
        assert!((r.value - exact).abs() < 1e-3 * exact, "n = {n}, s = {s}: {r:?} vs {exact}");
    }
}

#[test]
fn riesz_kernel_is_harmonic_away_from_origin() {
    for s in [0.2, 0.35] {
        let e = 2.0 * s - 1.0;
        let u = ScalarField::new(1, move |y| y.norm().powf(e))
            .with_growth(1.0, e)
            .assert_l1s()
            .with_breaks([Ball { center: Point::zero(1), radius: 0.0 }]);
        let r = frac_laplacian_point(params(1, s), &u, &Point::on_axis(1, 1.0), &QuadSpec::default()).unwrap();
        assert!(r.value.abs() < 1e-3, "s = {s}: {r:?}");
    }
}

#[test]
fn quadratic_grows_too_fast() {
    let u = ScalarField::new(1, |y| y.norm_sq()).with_growth(1.0, 2.0);
    assert!(frac_laplacian_point(params(1, 0.5), &u, &Point::zero(1), &QuadSpec::default()).is_err());
}

#[test]
fn scaling_law() {
    // (-Δ)^s [u(λ·)](x) = λ^{2s} ((-Δ)^s u)(λx)
    let spec = QuadSpec::default();
    let p = params(2, 0.4);
    let u = ScalarField::bounded(2, 1.0, |y| (-y.norm_sq()).exp());
    let x = Point::new(&[0.3, 0.5]).unwrap();
    for lambda in [0.5, 2.0] {
        let lhs = frac_laplacian_point(p, &u.dilated(lambda), &x, &spec).unwrap().value;
        let rhs = lambda.powf(0.8) * frac_laplacian_point(p, &u, &(x * lambda), &spec).unwrap().value;
        assert!((lhs - rhs).abs() < 1e-6 * rhs.abs().max(1.0), "λ = {lambda}: {lhs} vs {rhs}");
    }
}

#[test]
fn cosine_in_two_dimensions() {
    // cos(y₁) has symbol |ξ|^{2s} = 1
    let u = ScalarField::bounded(2, 1.0, |y| y.get(0).cos())
        .with_tail(TailBehavior::Oscillatory { period: 2.0 * std::f64::consts::PI });
    let x = Point::new(&[0.7, -1.0]).unwrap();
    let r = frac_laplacian_point(params(2, 0.6), &u, &x, &QuadSpec::default()).unwrap();
    assert!((r.value - 0.7f64.cos()).abs() < 1e-3, "{r:?}");
}
