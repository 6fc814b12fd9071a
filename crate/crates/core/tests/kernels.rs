mod common;

use fraclab_core::kernels::{psi_derivative, psi_radial_derivative, psi_scaled};
use fraclab_core::{FracParams, MultiIndex, Point};

const CELLS: usize = 400_000;

fn params(n: usize, s: f64) -> FracParams {
    FracParams::new(n, s).unwrap()
}

/// Radii covering the transition layer near 1 and 4 and the far field.
fn radii() -> Vec<f64> {
    let mut r: Vec<f64> = (0..30).map(|k| 1.02 + 0.1 * k as f64).collect();
    r.extend([1.005, 3.97, 3.995, 4.0, 4.004, 4.05]);
    r.extend((1..8).map(|k| 4.0 * 1.8f64.powi(k)));
    r
}

#[test]
fn axis_derivatives_match_oracle() {
    for (n, s) in [(1, 0.5), (2, 0.25), (3, 0.75), (1, 0.9)] {
        let p = params(n, s);
        let rs = radii();
        let oracle: Vec<[f64; 5]> = rs.iter().map(|&r| common::psi_radial_derivatives(n, s, r, CELLS)).collect();
        for k in 1..=4u32 {
            let peak = oracle.iter().map(|o| o[k as usize].abs()).fold(0.0, f64::max);
            for (r, o) in rs.iter().zip(&oracle) {
                // local magnitude: the peak inside, the power-law envelope outside
                let scale = peak * (4.0 / r).min(1.0).powf(n as f64 + 2.0 * s + k as f64);
                let expect = o[k as usize];
                let radial = psi_radial_derivative(p, k, *r).unwrap();
                assert!((radial - expect).abs() < 1e-6 * scale, "n={n} s={s} k={k} rho={r}: {radial:e} vs {expect:e}");
                // on an axis, D^{k e_1} of a radial function is the radial derivative
                let d = psi_derivative(p, &MultiIndex::axis(n, 0, k), 1.0, &Point::on_axis(n, *r)).unwrap();
                assert!(d.converged, "n={n} s={s} k={k} rho={r}: {d:?}");
                assert!((d.value - expect).abs() < 1e-6 * scale);
            }
        }
    }
}

#[test]
fn mixed_derivative_matches_oracle() {
    // ∂_1 ∂_2 ψ(|y|) = y_1 y_2 (ψ''/ρ² - ψ'/ρ³)
    let (n, s, r0) = (2, 0.6, 0.8);
    let p = params(n, s);
    let gamma = MultiIndex::new(vec![1, 1]).unwrap();
    for (a, b) in [(1.1, 0.4), (-2.0, 1.3), (0.5, -3.1), (6.0, 9.0), (0.0, 2.0)] {
        let y = Point::new(&[a, b]).unwrap();
        let x = y * (1.0 / r0);
        let rho = x.norm();
        let o = common::psi_radial_derivatives(n, s, rho, CELLS);
        let expect = r0.powi(-4) * x.get(0) * x.get(1) * (o[2] / (rho * rho) - o[1] / rho.powi(3));
        let d = psi_derivative(p, &gamma, r0, &y).unwrap();
        let scale = r0.powi(-4) * o[1].abs().max(o[2].abs()) * (1.0 + rho * rho);
        assert!((d.value - expect).abs() < 1e-6 * scale, "{y:?}: {d:?} vs {expect:e}");
    }
}

#[test]
fn laplacian_of_psi_matches_radial_form() {
    // Σ_i ∂_i² Ψ = ψ'' + (n - 1) ψ'/ρ at generic points in 3D
    let (n, s) = (3, 0.35);
    let p = params(n, s);
    for y in [[1.2, -0.7, 0.9], [2.0, 1.5, -1.0], [-5.0, 3.0, 4.0]] {
        let y = Point::new(&y).unwrap();
        let rho = y.norm();
        let lap: f64 = (0..n).map(|i| psi_derivative(p, &MultiIndex::axis(n, i, 2), 1.0, &y).unwrap().value).sum();
        let o = common::psi_radial_derivatives(n, s, rho, CELLS);
        let expect = o[2] + (n as f64 - 1.0) * o[1] / rho;
        assert!((lap - expect).abs() < 1e-6 * (o[2].abs() + o[1].abs() / rho), "{y:?}: {lap:e} vs {expect:e}");
    }
}

#[test]
fn derivatives_vanish_on_the_unit_ball() {
    let p = params(2, 0.5);
    let gamma = MultiIndex::new(vec![2, 1]).unwrap();
    for r0 in [0.5, 1.0, 3.0] {
        let y = Point::new(&[0.6 * r0, -0.7 * r0]).unwrap();
        assert_eq!(psi_derivative(p, &gamma, r0, &y).unwrap().value, 0.0);
        assert_eq!(psi_scaled(p, r0, &y), 0.0);
    }
}
