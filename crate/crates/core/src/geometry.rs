//! Points, balls and the finite ball/box unions used as domains.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{domain, FracError, Result};

pub const MAX_DIM: usize = 3;

/// A point (or vector) of `R^n` for `n <= 3`.
#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Point {
    dim: usize,
    c: [f64; MAX_DIM],
}

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIM {
            return Err(FracError::UnsupportedDimension(coords.len()));
        }
        let mut c = [0.0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Ok(Self { dim: coords.len(), c })
    }

    pub fn zero(dim: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim}");
        Self { dim, c: [0.0; MAX_DIM] }
    }

    /// The `i`-th standard basis vector.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut p = Self::zero(dim);
        p.c[i] = 1.0;
        p
    }

    /// `x * e_1`, convenient for radial experiments.
    pub fn on_axis(dim: usize, x: f64) -> Self {
        let mut p = Self::zero(dim);
        p.c[0] = x;
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.c[..self.dim]
    }

    pub fn get(&self, i: usize) -> f64 {
        self.coords()[i]
    }

    pub fn set(&mut self, i: usize, v: f64) {
        assert!(i < self.dim);
        self.c[i] = v;
    }

    pub fn dot(&self, o: &Point) -> f64 {
        debug_assert_eq!(self.dim, o.dim);
        self.c[0] * o.c[0] + self.c[1] * o.c[1] + self.c[2] * o.c[2]
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(&self, o: &Point) -> f64 {
        (*self - *o).norm()
    }

    /// `self + t * dir`.
    pub fn along(&self, dir: &Point, t: f64) -> Point {
        *self + *dir * t
    }

    /// Unit vector in the direction of `self`, or `None` for the zero vector.
    pub fn normalized(&self) -> Option<Point> {
        let r = self.norm();
        (r > 0.0).then(|| *self * (1.0 / r))
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords()).finish()
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = FracError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Point::new(&v)
    }
}

impl From<Point> for Vec<f64> {
    fn from(p: Point) -> Self {
        p.coords().to_vec()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(mut self, o: Point) -> Point {
        debug_assert_eq!(self.dim, o.dim);
        for i in 0..MAX_DIM {
            self.c[i] += o.c[i];
        }
        self
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(mut self, o: Point) -> Point {
        debug_assert_eq!(self.dim, o.dim);
        for i in 0..MAX_DIM {
            self.c[i] -= o.c[i];
        }
        self
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(mut self, k: f64) -> Point {
        for v in &mut self.c {
            *v *= k;
        }
        self
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self * -1.0
    }
}

/// Open ball `B(center, radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return domain(format!("ball radius must be positive, got {radius}"));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(dim: usize, radius: f64) -> Result<Self> {
        Self::new(Point::zero(dim), radius)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &Point) -> bool {
        x.dist(&self.center) < self.radius
    }

    /// Parameters `t` at which the ray `origin + t * dir` (|dir| = 1)
    /// crosses the boundary sphere, in increasing order.
    pub fn ray_crossings(&self, origin: &Point, dir: &Point) -> Option<(f64, f64)> {
        let d = *origin - self.center;
        let b = d.dot(dir);
        let c = d.norm_sq() - self.radius * self.radius;
        let disc = b * b - c;
        if disc <= 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // numerically stable pair
        let q = if b > 0.0 { -b - sq } else { -b + sq };
        let (t1, t2) = if q != 0.0 { (q, c / q) } else { (-sq, sq) };
        Some(if t1 < t2 { (t1, t2) } else { (t2, t1) })
    }
}

/// A region of `R^n`: a ball, an axis-aligned box, or a finite union of these.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Ball(Ball),
    Box { lo: Point, hi: Point },
    Union(Vec<Domain>),
}

impl Domain {
    pub fn ball(ball: Ball) -> Self {
        Domain::Ball(ball)
    }

    pub fn boxed(lo: Point, hi: Point) -> Result<Self> {
        if lo.dim() != hi.dim() {
            return domain("box corners have different dimensions");
        }
        if lo.coords().iter().zip(hi.coords()).any(|(a, b)| !(a < b)) {
            return domain("box needs lo < hi in every coordinate");
        }
        Ok(Domain::Box { lo, hi })
    }

    pub fn union(parts: Vec<Domain>) -> Result<Self> {
        let Some(first) = parts.first() else {
            return domain("empty union");
        };
        let dim = first.dim();
        if parts.iter().any(|p| p.dim() != dim) {
            return domain("union components have different dimensions");
        }
        Ok(Domain::Union(parts))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball(b) => b.dim(),
            Domain::Box { lo, .. } => lo.dim(),
            Domain::Union(parts) => parts[0].dim(),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Domain::Ball(b) => b.contains(x),
            Domain::Box { lo, hi } => (0..x.dim()).all(|i| lo.get(i) < x.get(i) && x.get(i) < hi.get(i)),
            Domain::Union(parts) => parts.iter().any(|p| p.contains(x)),
        }
    }

    /// Distance from `x` to the complement of the domain; 0 outside.
    ///
    /// Exact for balls, boxes and unions whose components do not overlap;
    /// for overlapping unions it is the largest per-component distance,
    /// which never exceeds the true value.
    pub fn dist_to_complement(&self, x: &Point) -> f64 {
        match self {
            Domain::Ball(b) => (b.radius - x.dist(&b.center)).max(0.0),
            Domain::Box { lo, hi } => {
                if !self.contains(x) {
                    return 0.0;
                }
                (0..x.dim())
                    .map(|i| (x.get(i) - lo.get(i)).min(hi.get(i) - x.get(i)))
                    .fold(f64::INFINITY, f64::min)
            }
            Domain::Union(parts) => parts.iter().map(|p| p.dist_to_complement(x)).fold(0.0, f64::max),
        }
    }

    /// A point outside the domain close to `x`.
    pub fn nearest_exterior(&self, x: &Point) -> Point {
        let candidates = self.exterior_candidates(x);
        candidates
            .into_iter()
            .filter(|c| !self.contains(c))
            .min_by(|a, b| a.dist(x).total_cmp(&b.dist(x)))
            .unwrap_or_else(|| {
                // every projection landed in another component: walk outward
                let mut y = *x;
                let step = Point::unit(x.dim(), 0);
                let mut t = 1.0;
                while self.contains(&y) {
                    y = x.along(&step, t);
                    t *= 2.0;
                }
                y
            })
    }

    fn exterior_candidates(&self, x: &Point) -> Vec<Point> {
        const PUSH: f64 = 1e-12;
        match self {
            Domain::Ball(b) => {
                let dir = (*x - b.center).normalized().unwrap_or_else(|| Point::unit(x.dim(), 0));
                vec![b.center.along(&dir, b.radius * (1.0 + PUSH) + PUSH)]
            }
            Domain::Box { lo, hi } => {
                let mut out = Vec::with_capacity(2 * x.dim());
                for i in 0..x.dim() {
                    let mut a = *x;
                    a.set(i, lo.get(i) - PUSH * (1.0 + lo.get(i).abs()));
                    out.push(a);
                    let mut b = *x;
                    b.set(i, hi.get(i) + PUSH * (1.0 + hi.get(i).abs()));
                    out.push(b);
                }
                out
            }
            Domain::Union(parts) => parts.iter().flat_map(|p| p.exterior_candidates(x)).collect(),
        }
    }
}
