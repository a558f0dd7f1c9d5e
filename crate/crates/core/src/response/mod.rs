//! Derivatives of invariant measures along one-parameter families.

pub mod circle;
pub mod decompose;
pub mod horizontal;
pub mod series;

pub use circle::{
    density_derivative, flux_derivative, operator_derivative, operator_derivative_fd_error, response_resolvent, ruelle_sum, ruelle_terms,
    step3_residual, transfer_values, DensityDerivative, RuelleTerms,
};
pub use decompose::{density_decompose, response_pw_horizontal, DensityDecomposition, Jump, PwResponse};
pub use horizontal::{
    alpha_at, horizontal_field, horizontality_index, tce_solve, Horizontality, TceSolution, HORIZONTAL_TOL,
};
pub use series::{sigma_series, susceptibility_series, RationalForm, SeriesData};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::Family;
use crate::maps::Observable;
use crate::transfer::{density_of, Method};

/// Relative agreement of successive Richardson extrapolants that counts as converged.
pub const FD_REL_TOL: f64 = 1e-6;

/// One central difference `(∫φdμ_h − ∫φdμ_{−h}) / 2h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdPoint {
    pub h: f64,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Pairwise differences between the three response estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Deltas {
    pub fd_resolvent: f64,
    pub ruelle_resolvent: f64,
    pub fd_ruelle: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResponseReport {
    pub observable: String,
    pub fd: Vec<FdPoint>,
    pub fd_extrapolated: Option<f64>,
    pub resolvent: Option<f64>,
    pub ruelle_partials: Vec<f64>,
    pub tail_bound: f64,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Deltas>,
}

impl ResponseReport {
    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }
}

/// Central differences of `t ↦ ∫φ dμ_t` at `t = 0`, one per step `h`. A failed
/// density solve is reported on its row; the other rows are still computed.
pub fn fd_derivative(family: &Family, phi: &Observable, steps: &[f64], method: Method, n: usize) -> Vec<FdPoint> {
    crate::par::map_slice(steps, |&h| {
        let side = |t: f64| -> Result<f64> {
            let map = family.at(t)?;
            Ok(density_of(&map, method, n)?.expectation(phi))
        };
        match side(h).and_then(|p| Ok((p, side(-h)?))) {
            Ok((p, m)) => FdPoint {
                h,
                value: Some((p - m) / (2.0 * h)),
                error: None,
            },
            Err(e) => {
                log::warn!("finite difference at h = {h} failed: {e}");
                FdPoint {
                    h,
                    value: None,
                    error: Some(e.to_string()),
                }
            }
        }
    })
}

/// Richardson extrapolants `D(h₂) + (D(h₂) − D(h₁))/((h₁/h₂)² − 1)` of
/// consecutive successful rows.
pub fn richardson(points: &[FdPoint]) -> Vec<f64> {
    let ok: Vec<(f64, f64)> = points.iter().filter_map(|p| p.value.map(|v| (p.h, v))).collect();
    ok.windows(2)
        .map(|w| {
            let ((h1, d1), (h2, d2)) = (w[0], w[1]);
            let r = (h1 / h2).powi(2);
            d2 + (d2 - d1) / (r - 1.0)
        })
        .collect()
}

/// Last extrapolant and whether the last two agree within [`FD_REL_TOL`].
pub fn fd_extrapolate(points: &[FdPoint]) -> (Option<f64>, bool) {
    let r = richardson(points);
    match r.as_slice() {
        [] => (None, false),
        [one] => (Some(*one), false),
        [.., a, b] => (Some(*b), (b - a).abs() <= FD_REL_TOL * b.abs()),
    }
}

/// Dyadic steps `h₀, h₀/2, …` (`count` of them).
pub fn dyadic_steps(h0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| h0 / (1u64 << k) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, VectorField};
    use std::f64::consts::PI;

    #[test]
    fn richardson_removes_quadratic_error() {
        let pts: Vec<FdPoint> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&h| FdPoint {
                h,
                value: Some(3.0 + 2.0 * h * h),
                error: None,
            })
            .collect();
        let (v, conv) = fd_extrapolate(&pts);
        assert!((v.unwrap() - 3.0).abs() < 1e-14);
        assert!(conv);
    }

    #[test]
    fn fd_on_doubling_family() {
        let fam = Family::new(CircleMap::doubling().into(), VectorField::trig([1.0], [])).unwrap();
        let pts = fd_derivative(&fam, &VectorField::trig([], [1.0]), &dyadic_steps(1e-3, 3), Method::Fourier, 32);
        let (v, _) = fd_extrapolate(&pts);
        assert!((v.unwrap() + PI).abs() < 1e-6, "{v:?}");
    }

    #[test]
    fn fd_with_zero_field_vanishes() {
        let fam = Family::new(CircleMap::doubling().into(), VectorField::zero()).unwrap();
        let pts = fd_derivative(&fam, &VectorField::trig([], [1.0]), &[1e-2, 5e-3], Method::Fourier, 16);
        assert!(pts.iter().all(|p| p.value == Some(0.0)));
    }

    #[test]
    fn report_json_keys() {
        let json = ResponseReport::default().to_json();
        for key in ["\"fd\"", "\"resolvent\"", "\"ruelle_partials\"", "\"tail_bound\"", "\"converged\""] {
            assert!(json.contains(key), "{key} missing from {json}");
        }
    }
}
