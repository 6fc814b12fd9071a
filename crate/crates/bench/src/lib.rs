//! Fixtures shared by the criterion benchmarks.

use fraclab_core::poisson::ExteriorData;
use fraclab_core::{Ball, FracParams, ScalarField};

pub fn params(n: usize, s: f64) -> FracParams {
    FracParams::new(n, s).expect("valid parameters")
}

/// `(1 - |y|²)₊^s` with its break sphere declared.
pub fn bump2s(n: usize, s: f64) -> ScalarField {
    ScalarField::bounded(n, 1.0, move |y| (1.0 - y.norm_sq()).max(0.0).powf(s))
        .with_breaks([Ball::centered(n, 1.0).expect("positive radius")])
}

pub fn sign_data(n: usize) -> ExteriorData {
    ExteriorData::new(ScalarField::bounded(n, 1.0, |y| y.get(0).signum()))
}
