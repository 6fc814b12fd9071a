use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};
use crate::geometry::Point;

/// Sizes of the fixed spherical rules: `circle_points` uniform nodes on
/// `S^1`; Gauss–Legendre in the polar cosine times uniform azimuth on `S^2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereRule {
    pub circle_points: usize,
    pub polar_points: usize,
    pub azimuth_points: usize,
}

impl Default for SphereRule {
    fn default() -> Self {
        Self { circle_points: 64, polar_points: 32, azimuth_points: 64 }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pm = if m == 0 { 1.0 } else if m == 1 { z } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (z * pm - pm1) / (z * z - 1.0);
            let dz = pm / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wt;
        w[m - 1 - i] = wt;
    }
    (x, w)
}

/// Orthonormal frame `(a, u, v)` of `R^3` with `a` along `axis`.
pub(crate) fn frame(axis: &Point) -> (Point, Point, Point) {
    let a = axis.normalized().unwrap_or_else(|| Point::unit(3, 2));
    let helper = if a.get(0).abs() < 0.9 { Point::unit(3, 0) } else { Point::unit(3, 1) };
    let u = (helper - a * helper.dot(&a)).normalized().expect("helper not parallel");
    let v = Point::new(&[
        a.get(1) * u.get(2) - a.get(2) * u.get(1),
        a.get(2) * u.get(0) - a.get(0) * u.get(2),
        a.get(0) * u.get(1) - a.get(1) * u.get(0),
    ])
    .unwrap();
    (a, u, v)
}

impl SphereRule {
    pub fn validate(&self) -> Result<()> {
        if self.circle_points < 2 || self.polar_points < 1 || self.azimuth_points < 1 {
            return domain("sphere rule sizes too small");
        }
        Ok(())
    }

    /// Nodes and weights of the rule on `S^{n-1}`, optionally rotated so
    /// that its pole (n = 3) or angular origin (n = 2) lies along `axis`.
    pub fn nodes(&self, n: usize, axis: Option<&Point>) -> Result<Vec<(Point, f64)>> {
        self.cap_nodes(n, axis, -1.0)
    }

    /// Rule restricted to the cap `{θ : θ·axis >= cos_max}`. With
    /// `cos_max <= -1` this is the full sphere.
    pub fn cap_nodes(&self, n: usize, axis: Option<&Point>, cos_max: f64) -> Result<Vec<(Point, f64)>> {
        let full = cos_max <= -1.0;
        match n {
            1 => {
                let a = axis.map(|p| if p.get(0) < 0.0 { -1.0 } else { 1.0 }).unwrap_or(1.0);
                let mut out = vec![(Point::on_axis(1, a), 1.0)];
                if full || -1.0 >= cos_max {
                    out.push((Point::on_axis(1, -a), 1.0));
                }
                Ok(out)
            }
            2 => {
                let phi0 = axis.map(|p| p.get(1).atan2(p.get(0))).unwrap_or(0.0);
                let dir = |phi: f64| Point::new(&[(phi0 + phi).cos(), (phi0 + phi).sin()]).unwrap();
                if full {
                    let m = self.circle_points;
                    let h = 2.0 * PI / m as f64;
                    Ok((0..m).map(|k| (dir((k as f64 + 0.5) * h), h)).collect())
                } else {
                    let half = cos_max.clamp(-1.0, 1.0).acos();
                    let (x, w) = gauss_legendre(self.circle_points);
                    Ok(x.iter().zip(&w).map(|(xi, wi)| (dir(half * xi), half * wi)).collect())
                }
            }
            3 => {
                let default_axis = Point::unit(3, 2);
                let (a, u, v) = frame(axis.unwrap_or(&default_axis));
                let lo = cos_max.clamp(-1.0, 1.0);
                let (x, w) = gauss_legendre(self.polar_points);
                let k = self.azimuth_points;
                let h = 2.0 * PI / k as f64;
                let mut out = Vec::with_capacity(x.len() * k);
                for (xi, wi) in x.iter().zip(&w) {
                    let t = lo + (1.0 - lo) * 0.5 * (xi + 1.0);
                    let wt = 0.5 * (1.0 - lo) * wi;
                    let st = (1.0 - t * t).max(0.0).sqrt();
                    for j in 0..k {
                        let phi = (j as f64 + 0.5) * h;
                        let d = a * t + u * (st * phi.cos()) + v * (st * phi.sin());
                        out.push((d, wt * h));
                    }
                }
                Ok(out)
            }
            other => Err(FracError::UnsupportedDimension(other)),
        }
    }
}

/// Integral of `g` over the unit sphere `S^{n-1}` with the default rule.
pub fn integrate_sphere<G: Fn(&Point) -> f64 + Sync>(g: G, n: usize) -> Result<f64> {
    let nodes = SphereRule::default().nodes(n, None)?;
    Ok(nodes.iter().map(|(d, w)| w * g(d)).sum())
}

/// Sphere integral of a quadrature-valued integrand, nodes evaluated in
/// parallel and accumulated in node order.
pub fn integrate_sphere_with<G>(g: G, nodes: &[(Point, f64)]) -> super::QuadResult
where
    G: Fn(&Point) -> super::QuadResult + Sync,
{
    let parts: Vec<super::QuadResult> = if nodes.len() > 2 {
        nodes.par_iter().map(|(d, w)| g(d).scaled(*w)).collect()
    } else {
        nodes.iter().map(|(d, w)| g(d).scaled(*w)).collect()
    };
    parts.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_nodes_integrate_polynomials() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(a, b)| b * a.powi(k)).sum();
            let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn surface_areas() {
        assert_eq!(integrate_sphere(|_| 1.0, 1).unwrap(), 2.0);
        assert!((integrate_sphere(|_| 1.0, 2).unwrap() - 2.0 * PI).abs() < 1e-13);
        assert!((integrate_sphere(|_| 1.0, 3).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!(matches!(integrate_sphere(|_| 1.0, 4), Err(FracError::UnsupportedDimension(4))));
    }

    #[test]
    fn second_moment_is_a_third_of_the_area() {
        let e = Point::new(&[0.3, -0.5, 0.8]).unwrap().normalized().unwrap();
        let v = integrate_sphere(|y| y.dot(&e).powi(2), 3).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn rotated_rule_and_caps() {
        let axis = Point::new(&[1.0, 1.0, 0.0]).unwrap();
        let rule = SphereRule::default();
        let nodes = rule.nodes(3, Some(&axis)).unwrap();
        let area: f64 = nodes.iter().map(|(_, w)| w).sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
        // cap area 2π(1 - cos α)
        let cap = rule.cap_nodes(3, Some(&axis), 0.6).unwrap();
        let a: f64 = cap.iter().map(|(_, w)| w).sum();
        assert!((a - 2.0 * PI * 0.4).abs() < 1e-12);
        assert!(cap.iter().all(|(d, _)| d.dot(&axis.normalized().unwrap()) >= 0.6 - 1e-12));
        let arc = rule.cap_nodes(2, Some(&Point::new(&[0.0, 1.0]).unwrap()), 0.0).unwrap();
        let len: f64 = arc.iter().map(|(_, w)| w).sum();
        assert!((len - PI).abs() < 1e-13);
    }
}
