//! Finite discretizations of the transfer operator `𝓛φ(x) = Σ_{f(y)=x} φ(y)/|f'(y)|`:
//! Fourier collocation for circle maps and Ulam's method for interval maps.

mod grid;
mod operator;
mod solve;

pub use grid::{coeffs_from_values, eval_series, eval_series_deriv, values_on_grid, GridFunction};
pub(crate) use grid::{quadrature_points, FftPair, GAUSS3};
pub use operator::{
    build_circle_operator, build_ulam_operator, collocation_points, Basis, Entries, OperatorMatrix, SparseRows,
};
pub(crate) use operator::circle_preimage_table;
pub use solve::{
    eigenvalues, invariant_density, resolvent_solve, spectral_gap, Density, ResolventSolution, DENSE_LIMIT,
    POWER_CAP, POWER_TOL,
};

use crate::error::Result;
use crate::maps::MapSpec;

/// Discretization method for density computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fourier,
    Ulam,
}

impl Method {
    /// Fourier for circle maps, Ulam otherwise.
    pub fn natural_for(map: &MapSpec) -> Method {
        if map.is_circle() {
            Method::Fourier
        } else {
            Method::Ulam
        }
    }
}

/// Builds the operator for `map` with resolution `n` (modes or cells).
pub fn build_operator(map: &MapSpec, method: Method, n: usize) -> Result<OperatorMatrix> {
    match method {
        Method::Fourier => build_circle_operator(map, n),
        Method::Ulam => build_ulam_operator(map, n),
    }
}

/// Convenience: operator plus invariant density.
pub fn density_of(map: &MapSpec, method: Method, n: usize) -> Result<Density> {
    invariant_density(&build_operator(map, method, n)?)
}
