//! Explicit kernels: the ball Poisson kernel `P_r`, the mollified kernel
//! `Ψ` with its rescalings and derivatives, and the Riesz kernel.

use serde::{Deserialize, Serialize};

use crate::constants::{beta_ns, FracParams};
use crate::error::{domain, FracError, Result};
use crate::geometry::Point;

pub(crate) mod psi;

pub use psi::{
    mollifier_phi, psi, psi_decay_constant, psi_derivative, psi_derivative_fd, psi_radial, psi_radial_derivative,
    psi_radial_direct, psi_scaled, PsiTable, MAX_DERIVATIVE_ORDER,
};

/// Multi-index `γ ∈ N^n` selecting the partial derivative `D^γ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Result<Self> {
        if entries.is_empty() || entries.len() > crate::geometry::MAX_DIM {
            return Err(FracError::UnsupportedDimension(entries.len()));
        }
        Ok(Self(entries))
    }

    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    /// `k` times the `i`-th unit multi-index.
    pub fn axis(n: usize, i: usize, k: u32) -> Self {
        let mut e = vec![0; n];
        e[i] = k;
        Self(e)
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|γ|`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() == n {
            Ok(())
        } else {
            domain(format!("multi-index has {} entries, dimension is {n}", self.dim()))
        }
    }
}

impl std::str::FromStr for MultiIndex {
    type Err = FracError;

    /// Parses `"2"` or `"1,0,1"`.
    fn from_str(s: &str) -> Result<Self> {
        let entries = s
            .split(',')
            .map(|t| t.trim().parse::<u32>().map_err(|e| FracError::Parse(format!("multi-index {s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        MultiIndex::new(entries)
    }
}

/// The Poisson kernel of the fractional Laplacian for balls centered at 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonKernel {
    params: FracParams,
    beta: f64,
}

impl PoissonKernel {
    pub fn new(params: FracParams) -> Self {
        Self { params, beta: beta_ns(params) }
    }

    /// Kernel with a replaced normalization; used to check that the
    /// normalization tests actually detect a wrong constant.
    pub fn with_beta(params: FracParams, beta: f64) -> Self {
        Self { params, beta }
    }

    pub fn params(&self) -> FracParams {
        self.params
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `P_r(x, y)`; zero unless `|x| < r < |y|`, an error on `|y| = r`.
    pub fn eval(&self, r: f64, x: &Point, y: &Point) -> Result<f64> {
        if !(r > 0.0) {
            return domain("Poisson kernel radius must be positive");
        }
        let (ny, nx) = (y.norm(), x.norm());
        if ny == r {
            return Err(FracError::Singularity(format!("|y| = r = {r} on the Poisson kernel")));
        }
        if nx >= r || ny < r {
            return Ok(0.0);
        }
        let s = self.params.s();
        let inner = (r - nx) * (r + nx);
        let outer = (ny - r) * (ny + r);
        Ok(self.beta * (inner / outer).powf(s) * y.dist(x).powi(-(self.params.n() as i32)))
    }
}

/// `P_r(x, y)` with the exact normalization `β_{n,s}`.
pub fn poisson_kernel(p: FracParams, r: f64, x: &Point, y: &Point) -> Result<f64> {
    PoissonKernel::new(p).eval(r, x, y)
}


/// `|x - y|^{2s - n}`; the Riesz normalization is applied by callers.
pub fn riesz_kernel(p: FracParams, x: &Point, y: &Point) -> Result<f64> {
    p.require_riesz()?;
    let d = x.dist(y);
    if d == 0.0 {
        return Err(FracError::Singularity("Riesz kernel at x = y".into()));
    }
    Ok(d.powf(2.0 * p.s() - p.n() as f64))
}
