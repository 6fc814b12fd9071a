//! Scalar fields on `R^n` with the growth information integrals need.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::FracParams;
use crate::geometry::{Ball, Point};

type FieldFn = Arc<dyn Fn(&Point) -> f64 + Send + Sync>;

/// Power-growth bound `|u(y)| <= constant * (1 + |y|)^exponent`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Growth {
    pub constant: f64,
    pub exponent: f64,
}

/// How a field behaves far away, which selects the tail strategy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TailBehavior {
    /// Eventually monotone or slowly varying: the power-law tail map applies.
    Regular,
    /// Oscillates with roughly this period: integrated panel by panel with
    /// an analytic bound for the remainder.
    Oscillatory { period: f64 },
}

/// A real function on `R^n` plus the facts needed to integrate it against
/// kernels of order `|y|^{-n-2s}`.
#[derive(Clone)]
pub struct ScalarField {
    eval: FieldFn,
    dim: usize,
    l1s_asserted: bool,
    growth: Option<Growth>,
    tail: TailBehavior,
    breaks: Vec<Ball>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("dim", &self.dim)
            .field("l1s_asserted", &self.l1s_asserted)
            .field("growth", &self.growth)
            .field("tail", &self.tail)
            .field("breaks", &self.breaks)
            .finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn new(dim: usize, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            eval: Arc::new(f),
            dim,
            l1s_asserted: false,
            growth: None,
            tail: TailBehavior::Regular,
            breaks: Vec::new(),
        }
    }

    /// A bounded field, `|u| <= bound`.
    pub fn bounded(dim: usize, bound: f64, f: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(dim, f).with_growth(bound, 0.0)
    }

    pub fn with_growth(mut self, constant: f64, exponent: f64) -> Self {
        self.growth = Some(Growth { constant, exponent });
        self
    }

    /// Assert membership in `L¹_s` without a growth bound.
    pub fn assert_l1s(mut self) -> Self {
        self.l1s_asserted = true;
        self
    }

    pub fn with_tail(mut self, tail: TailBehavior) -> Self {
        self.tail = tail;
        self
    }

    /// Declare spheres across which the field is not smooth.
    pub fn with_breaks(mut self, breaks: impl IntoIterator<Item = Ball>) -> Self {
        self.breaks.extend(breaks);
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn eval(&self, y: &Point) -> f64 {
        (self.eval)(y)
    }

    pub fn growth(&self) -> Option<Growth> {
        self.growth
    }

    pub fn tail(&self) -> TailBehavior {
        self.tail
    }

    pub fn breaks(&self) -> &[Ball] {
        &self.breaks
    }

    /// Growth exponent used for tail maps; asserted fields without a bound
    /// are treated as bounded.
    pub fn growth_exponent(&self) -> f64 {
        self.growth.map(|g| g.exponent).unwrap_or(0.0)
    }

    /// `∫ |u(y)| / (1 + |y|^{n+2s}) dy < ∞`, either asserted or implied by
    /// a growth exponent below `2s`.
    pub fn is_l1s_certified(&self, p: FracParams) -> bool {
        self.l1s_asserted || self.growth.is_some_and(|g| g.exponent < 2.0 * p.s())
    }

    /// Largest distance from `x` to the far side of any break sphere.
    pub(crate) fn break_extent(&self, x: &Point) -> f64 {
        self.breaks.iter().map(|b| x.dist(&b.center) + b.radius).fold(0.0, f64::max)
    }

    /// Break crossings of the ray `x + ρθ`, `ρ > 0`.
    pub(crate) fn ray_breaks(&self, x: &Point, theta: &Point) -> Vec<f64> {
        let mut out = Vec::new();
        for b in &self.breaks {
            if let Some((t1, t2)) = b.ray_crossings(x, theta) {
                out.extend([t1, t2].into_iter().filter(|t| *t > 0.0));
            }
        }
        out
    }

    /// `y ↦ u(y + h)`.
    pub fn translated(&self, h: Point) -> ScalarField {
        let f = self.eval.clone();
        let growth = self.growth.map(|g| Growth {
            constant: g.constant * (1.0 + h.norm()).powf(g.exponent.max(0.0)),
            exponent: g.exponent,
        });
        let breaks = self.breaks.iter().map(|b| Ball { center: b.center - h, radius: b.radius }).collect();
        ScalarField {
            eval: Arc::new(move |y| f(&(*y + h))),
            dim: self.dim,
            l1s_asserted: self.l1s_asserted,
            growth,
            tail: self.tail,
            breaks,
        }
    }

    /// `y ↦ u(λ y)`.
    pub fn dilated(&self, lambda: f64) -> ScalarField {
        let f = self.eval.clone();
        let growth = self.growth.map(|g| Growth {
            constant: g.constant * lambda.max(1.0).powf(g.exponent.max(0.0)),
            exponent: g.exponent,
        });
        let tail = match self.tail {
            TailBehavior::Oscillatory { period } => TailBehavior::Oscillatory { period: period / lambda },
            t => t,
        };
        let breaks = self.breaks.iter().map(|b| Ball { center: b.center * (1.0 / lambda), radius: b.radius / lambda }).collect();
        ScalarField {
            eval: Arc::new(move |y| f(&(*y * lambda))),
            dim: self.dim,
            l1s_asserted: self.l1s_asserted,
            growth,
            tail,
            breaks,
        }
    }

    /// `a u + b v`.
    pub fn combine(a: f64, u: &ScalarField, b: f64, v: &ScalarField) -> ScalarField {
        assert_eq!(u.dim, v.dim, "fields of different dimension");
        let (fu, fv) = (u.eval.clone(), v.eval.clone());
        let growth = match (u.growth, v.growth) {
            (Some(gu), Some(gv)) => Some(Growth {
                constant: a.abs() * gu.constant + b.abs() * gv.constant,
                exponent: gu.exponent.max(gv.exponent),
            }),
            _ => None,
        };
        let tail = match (u.tail, v.tail) {
            (TailBehavior::Oscillatory { period: p }, TailBehavior::Oscillatory { period: q }) => {
                TailBehavior::Oscillatory { period: p.min(q) }
            }
            (TailBehavior::Oscillatory { period }, _) | (_, TailBehavior::Oscillatory { period }) => {
                TailBehavior::Oscillatory { period }
            }
            _ => TailBehavior::Regular,
        };
        ScalarField {
            eval: Arc::new(move |y| a * fu(y) + b * fv(y)),
            dim: u.dim,
            l1s_asserted: u.l1s_asserted && v.l1s_asserted,
            growth,
            tail,
            breaks: u.breaks.iter().chain(&v.breaks).copied().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificate_depends_on_order() {
        let affine = ScalarField::new(1, |y| 1.0 + y.get(0)).with_growth(1.0, 1.0);
        assert!(affine.is_l1s_certified(FracParams::new(1, 0.75).unwrap()));
        assert!(!affine.is_l1s_certified(FracParams::new(1, 0.5).unwrap()));
        let raw = ScalarField::new(1, |y| y.get(0).powi(2));
        assert!(!raw.is_l1s_certified(FracParams::new(1, 0.9).unwrap()));
        assert!(raw.assert_l1s().is_l1s_certified(FracParams::new(1, 0.9).unwrap()));
    }

    #[test]
    fn translation_and_dilation() {
        let u = ScalarField::bounded(2, 1.0, |y| y.get(0).sin() * y.get(1).cos());
        let h = Point::new(&[0.3, -0.2]).unwrap();
        let x = Point::new(&[1.1, 0.4]).unwrap();
        assert_eq!(u.translated(h).eval(&x), u.eval(&(x + h)));
        assert_eq!(u.dilated(2.0).eval(&x), u.eval(&(x * 2.0)));
    }
}
