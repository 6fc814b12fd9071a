//! Numerical toolkit for the fractional Laplacian `(-Δ)^s`, `0 < s < 1`.
//!
//! The crate evaluates the singular-integral definition of `(-Δ)^s`, the
//! explicit Poisson kernel of a ball and its mollified average `Ψ`, the
//! Riesz potential, and builds Liouville-type decay experiments and a
//! walk-on-spheres solver on top of them.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod error;
pub mod geometry;
pub mod quadrature;

pub use constants::{constants_for, log_gamma, ConstantsTable, FracParams};
pub use error::{FracError, Result};
pub use geometry::{Ball, Domain, Point};
pub use quadrature::{QuadResult, QuadSpec, SphereRule};
pub mod kernels;
pub use kernels::{MultiIndex, PoissonKernel};
pub mod field;
pub use field::{Growth, ScalarField, TailBehavior};
pub mod fraclap;
pub use fraclap::{frac_laplacian_point, s_harmonicity_report, HarmonicityReport};
pub mod poisson;
pub use poisson::{convolve_psi, extension_field, kernel_mass, mean_value_residual, poisson_extend, ExteriorData};
pub mod liouville;
pub use liouville::{
    cauchy_estimate_record, derivative_via_kernel, difference_field, liouville_decay_experiment, localized_estimate_record,
    DecayReport, EstimateRecord,
};
pub mod riesz;
pub use riesz::{
    adjudicate_alpha, adjudicate_alpha_with, inversion_residual, riesz_potential, AlphaChoice, AlphaVerdict, CompactDensity,
    InversionReport, Smoothness,
};
pub mod wos;
pub use wos::{build_exit_sampler, sample_exit, wos_solve, wos_solve_with, ExitSampler, WalkResult};
