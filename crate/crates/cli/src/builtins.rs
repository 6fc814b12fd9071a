//! Named fields, exterior data, densities and the domain grammar used on the
//! command line.

use std::f64::consts::PI;

use fraclab_core::poisson::ExteriorData;
use fraclab_core::{Ball, CompactDensity, Domain, FracError, FracParams, MultiIndex, Point, Result, ScalarField, TailBehavior};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn parse_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(FracError::Parse(msg.into()))
}

/// Comma-separated reals.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| FracError::Parse(format!("not a number: {t:?} in {text:?}"))))
        .collect()
}

/// A point of dimension `n` as `x1,...,xn`.
pub fn parse_point(text: &str, n: usize) -> Result<Point> {
    let c = parse_list(text)?;
    if c.len() != n {
        return parse_err(format!("point {text:?} has {} coordinates, expected {n}", c.len()));
    }
    Point::new(&c)
}

/// A multi-index of dimension `n` as `g1,...,gn`.
pub fn parse_multi_index(text: &str, n: usize) -> Result<MultiIndex> {
    let g = text
        .split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| FracError::Parse(format!("bad multi-index entry {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if g.len() != n {
        return parse_err(format!("multi-index {text:?} has {} entries, expected {n}", g.len()));
    }
    MultiIndex::new(g)
}

/// Split at top-level occurrences of `sep`.
fn split_top(text: &str, sep: char) -> Result<Vec<&str>> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, c) in text.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
        if depth < 0 {
            return parse_err(format!("unbalanced parentheses in {text:?}"));
        }
    }
    if depth != 0 {
        return parse_err(format!("unbalanced parentheses in {text:?}"));
    }
    parts.push(&text[start..]);
    Ok(parts)
}

/// `ball(cx,...,r)`, `box(lo...,hi...)` or `union(A;B;...)`.
pub fn parse_domain(text: &str) -> Result<Domain> {
    let t = text.trim();
    let (head, rest) = t.split_once('(').ok_or_else(|| FracError::Parse(format!("expected name(...) in {t:?}")))?;
    let body = rest.strip_suffix(')').ok_or_else(|| FracError::Parse(format!("missing ')' in {t:?}")))?;
    match head.trim() {
        "ball" => {
            let v = parse_list(body)?;
            if v.len() < 2 {
                return parse_err(format!("ball needs a center and a radius: {t:?}"));
            }
            let (c, r) = v.split_at(v.len() - 1);
            Ok(Domain::ball(Ball::new(Point::new(c)?, r[0])?))
        }
        "box" => {
            let v = parse_list(body)?;
            if v.is_empty() || v.len() % 2 != 0 {
                return parse_err(format!("box needs lo and hi corners of equal length: {t:?}"));
            }
            let (lo, hi) = v.split_at(v.len() / 2);
            Domain::boxed(Point::new(lo)?, Point::new(hi)?)
        }
        "union" => {
            let parts = split_top(body, ';')?;
            if parts.len() < 2 {
                return parse_err(format!("union needs at least two parts separated by ';': {t:?}"));
            }
            Domain::union(parts.into_iter().map(parse_domain).collect::<Result<_>>()?)
        }
        other => parse_err(format!("unknown domain {other:?}; expected ball, box or union")),
    }
}

fn affine_coefficients(n: usize) -> Point {
    Point::new(&[0.7, -0.3, 0.2][..n]).expect("n <= 3")
}

/// Fields for `fraclap-eval`: `affine`, `cosine`, `bump2s`, `riesz-kernel`.
pub fn field(name: &str, p: FracParams) -> Result<ScalarField> {
    let (n, s) = (p.n(), p.s());
    match name {
        "affine" => {
            let a = affine_coefficients(n);
            Ok(ScalarField::new(n, move |y| a.dot(y) + 0.4).with_growth(a.norm() + 0.4, 1.0))
        }
        "cosine" => Ok(ScalarField::bounded(n, 1.0, |y| y.get(0).cos()).with_tail(TailBehavior::Oscillatory { period: 2.0 * PI })),
        "bump2s" => Ok(ScalarField::bounded(n, 1.0, move |y| (1.0 - y.norm_sq()).max(0.0).powf(s))
            .with_breaks([Ball::centered(n, 1.0)?])),
        "riesz-kernel" => {
            let e = 2.0 * s - n as f64;
            Ok(ScalarField::new(n, move |y| y.norm().powf(e))
                .with_growth(1.0, e)
                .with_breaks([Ball::centered(n, 1e-2)?]))
        }
        other => parse_err(format!("unknown field {other:?}; expected affine, cosine, bump2s or riesz-kernel")),
    }
}

/// `sign(y₁) + |y₁| / (1 + |y₁|)`: bounded and with no parity.
pub fn mixed_data(n: usize) -> ExteriorData {
    ExteriorData::new(ScalarField::bounded(n, 2.0, |y| {
        let t = y.get(0);
        t.signum() + t.abs() / (1.0 + t.abs())
    }))
}

/// `tanh` of a seeded sum of twelve Gaussian bumps centered in `[-4, 4]^n`.
fn bounded_noise(n: usize, seed: u64) -> ExteriorData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Point, f64)> = (0..12)
        .map(|_| {
            let c: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
            (Point::new(&c).expect("n <= 3"), rng.random_range(-2.0..2.0))
        })
        .collect();
    ExteriorData::new(ScalarField::bounded(n, 1.0, move |y| {
        bumps.iter().map(|(c, a)| a * (-y.dist(c).powi(2)).exp()).sum::<f64>().tanh()
    }))
}

/// Exterior data: `one`, `affine:<a,b>` (`a y₁ + b`), `halfspace`, `sign`,
/// `bounded-noise:<seed>`, `mixed`.
pub fn exterior(name: &str, n: usize) -> Result<ExteriorData> {
    let (head, arg) = match name.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (name, None),
    };
    match (head, arg) {
        ("one", None) => Ok(ExteriorData::new(ScalarField::bounded(n, 1.0, |_| 1.0))),
        ("affine", Some(a)) => {
            let v = parse_list(a)?;
            let [a, b] = v[..] else {
                return parse_err(format!("affine data needs two coefficients a,b: {name:?}"));
            };
            if a == 0.0 {
                return Ok(ExteriorData::new(ScalarField::bounded(n, b.abs(), move |_| b)));
            }
            Ok(ExteriorData::new(ScalarField::new(n, move |y| a * y.get(0) + b).with_growth(a.abs() + b.abs(), 1.0)))
        }
        ("halfspace", None) => {
            Ok(ExteriorData::new(ScalarField::bounded(n, 1.0, |y| if y.get(0) > 0.0 { 1.0 } else { 0.0 })))
        }
        ("sign", None) => Ok(ExteriorData::new(ScalarField::bounded(n, 1.0, |y| y.get(0).signum()))),
        ("bounded-noise", Some(seed)) => {
            let seed = seed.trim().parse().map_err(|_| FracError::Parse(format!("bad seed in {name:?}")))?;
            Ok(bounded_noise(n, seed))
        }
        ("mixed", None) => Ok(mixed_data(n)),
        _ => parse_err(format!(
            "unknown data {name:?}; expected one, affine:<a,b>, halfspace, sign, bounded-noise:<seed> or mixed"
        )),
    }
}

/// Densities for `riesz`: `bump` (`(1 - |y|²)⁴₊`) and `indicator` of the
/// unit ball.
pub fn density(name: &str, n: usize) -> Result<CompactDensity> {
    match name {
        "bump" => CompactDensity::smooth_bump(n, 1.0),
        "indicator" => CompactDensity::ball_indicator(n, 1.0),
        other => parse_err(format!("unknown density {other:?}; expected bump or indicator")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domains() {
        let d = parse_domain("ball(0,1)").unwrap();
        assert_eq!(d.dim(), 1);
        assert!(d.contains(&Point::on_axis(1, 0.5)));
        let d = parse_domain("union(ball(0,0,1); box(2,-1,3,1))").unwrap();
        assert_eq!(d.dim(), 2);
        assert!(d.contains(&Point::new(&[2.5, 0.0]).unwrap()));
        assert!(!d.contains(&Point::new(&[1.5, 0.0]).unwrap()));
        let nested = parse_domain("union(ball(0,1);union(ball(3,1);ball(6,1)))").unwrap();
        assert!(nested.contains(&Point::on_axis(1, 6.2)));
        for bad in ["ball(1)", "box(0,1,2)", "union(ball(0,1))", "ball(0,1", "disk(0,1)", "ball(0,-1)", "box(1,0)"] {
            assert!(parse_domain(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn data_and_fields() {
        let g = exterior("affine:2,1", 2).unwrap();
        assert_eq!(g.eval(&Point::new(&[1.0, 5.0]).unwrap()), 3.0);
        assert!(g.bound_hint().is_none());
        assert_eq!(exterior("mixed", 1).unwrap().bound_hint(), Some(2.0));
        let a = exterior("bounded-noise:3", 2).unwrap();
        let b = exterior("bounded-noise:3", 2).unwrap();
        let y = Point::new(&[0.3, -1.2]).unwrap();
        assert_eq!(a.eval(&y), b.eval(&y));
        assert!(a.eval(&y).abs() < 1.0);
        for bad in ["affine:1", "noise", "sign:2", "bounded-noise:x"] {
            assert!(exterior(bad, 1).is_err(), "{bad}");
        }
        let p = FracParams::new(2, 0.5).unwrap();
        assert_eq!(field("bump2s", p).unwrap().eval(&Point::zero(2)), 1.0);
        assert!(field("gauss", p).is_err());
        assert!(density("bump", 3).is_ok() && density("ring", 3).is_err());
    }

    #[test]
    fn lists_and_indices() {
        assert_eq!(parse_list("1, 2,4").unwrap(), vec![1.0, 2.0, 4.0]);
        assert!(parse_point("1,2", 3).is_err());
        assert_eq!(parse_multi_index("2,0", 2).unwrap().order(), 2);
        assert!(parse_multi_index("-1", 1).is_err());
    }
}
