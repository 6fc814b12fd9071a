//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use statrs::function::gamma::gamma;
use std::f64::consts::PI;
use std::sync::OnceLock;

/// `β_{n,s} = Γ(n/2) π^{-n/2-1} sin(πs)` from statrs' gamma.
pub fn beta_ref(n: usize, s: f64) -> f64 {
    let h = n as f64 / 2.0;
    gamma(h) * PI.powf(-h - 1.0) * (PI * s).sin()
}

/// Taylor coefficients `f^{(k)}(r) / k!`, `k = 0..=4`, of the unnormalized
/// mollifier `exp(-1 / ((r-1)(4-r)))`.
fn bump_taylor(r: f64) -> [f64; 5] {
    const K: usize = 5;
    let a = [r - 1.0, 1.0, 0.0, 0.0, 0.0];
    let b = [4.0 - r, -1.0, 0.0, 0.0, 0.0];
    let mut p = [0.0; K];
    for i in 0..K {
        for j in 0..K - i {
            p[i + j] += a[i] * b[j];
        }
    }
    // g = -1/p
    let mut inv = [0.0; K];
    inv[0] = 1.0 / p[0];
    for k in 1..K {
        let acc: f64 = (1..=k).map(|j| p[j] * inv[k - j]).sum();
        inv[k] = -acc / p[0];
    }
    let g = inv.map(|v| -v);
    let mut e = [0.0; K];
    e[0] = g[0].exp();
    for k in 1..K {
        e[k] = (1..=k).map(|j| j as f64 * g[j] * e[k - j]).sum::<f64>() / k as f64;
    }
    e
}

fn bump_mass() -> f64 {
    static Z: OnceLock<f64> = OnceLock::new();
    *Z.get_or_init(|| {
        let m = 2_000_000;
        let h = 3.0 / m as f64;
        (0..m).map(|i| bump_taylor(1.0 + (i as f64 + 0.5) * h)[0]).sum::<f64>() * h
    })
}

/// Radial derivatives `ψ^{(k)}(ρ)`, `k = 0..=4`, of `Ψ` from
/// `ψ(ρ) = β ρ^{1-n} ∫_0^1 σ^{2s} (1-σ²)^{-s} φ(ρσ) dσ`, by midpoint sums.
pub fn psi_radial_derivatives(n: usize, s: f64, rho: f64, cells: usize) -> [f64; 5] {
    let z = bump_mass();
    let fact = [1.0, 1.0, 2.0, 6.0, 24.0];
    // I_j = ∫ σ^{2s+j} (1-σ²)^{-s} φ^{(j)}(ρσ) dσ
    let mut ij = [0.0; 5];
    let lo = 1.0 / rho;
    let mut add = |sigma: f64, w: f64| {
        let t = bump_taylor(rho * sigma);
        if !(rho * sigma > 1.0 && rho * sigma < 4.0) {
            return;
        }
        for j in 0..5 {
            ij[j] += w * sigma.powf(2.0 * s + j as f64) * t[j] * fact[j] / z;
        }
    };
    if rho <= 4.0 {
        // σ = 1 - u^{1/(1-s)} removes (1-σ)^{-s}
        let e = 1.0 - s;
        let top = (1.0 - lo).powf(e);
        let h = top / cells as f64;
        for i in 0..cells {
            let u = (i as f64 + 0.5) * h;
            let sigma = 1.0 - u.powf(1.0 / e);
            add(sigma, h / e * (1.0 + sigma).powf(-s));
        }
    } else {
        let hi = 4.0 / rho;
        let h = (hi - lo) / cells as f64;
        for i in 0..cells {
            let sigma = lo + (i as f64 + 0.5) * h;
            add(sigma, h * (1.0 - sigma * sigma).powf(-s));
        }
    }
    let beta = beta_ref(n, s);
    let a = 1.0 - n as f64;
    let mut out = [0.0; 5];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..=k {
            let m = k - j;
            let falling: f64 = (0..m).map(|i| a - i as f64).product();
            let binom = fact[k] / (fact[j] * fact[m]);
            acc += binom * falling * rho.powf(a - m as f64) * ij[j];
        }
        *o = beta * acc;
    }
    out
}
