//! Response of the invariant density of an expanding circle map along
//! `f_t = f + t·X∘f`: the operator derivative, the resolvent formula and the
//! Ruelle series.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{MapSpec, Observable, VectorField};
use crate::transfer::{
    build_circle_operator, circle_preimage_table, eval_series, eval_series_deriv, invariant_density,
    quadrature_points, resolvent_solve, values_on_grid, Density, FftPair, GridFunction, OperatorMatrix,
};

/// Largest number of Ruelle terms cross-checked by direct chain-rule quadrature.
pub const DIRECT_TERMS_MAX: usize = 6;
const DIRECT_POINTS_MAX: usize = 1 << 18;

fn require_circle(map: &MapSpec) -> Result<()> {
    if map.is_circle() {
        Ok(())
    } else {
        Err(Error::argument("this response formula needs a circle map"))
    }
}

fn fourier(f: &GridFunction) -> Result<&[Complex64]> {
    f.as_fourier()
        .ok_or_else(|| Error::argument("expected a Fourier grid function"))
}

/// `(𝓛ψ)(k/m)` for `k = 0..m`, summing over exact preimages.
pub fn transfer_values(map: &MapSpec, m: usize, psi: impl Fn(f64) -> f64 + Sync) -> Result<Vec<f64>> {
    require_circle(map)?;
    let table = circle_preimage_table(map, m)?;
    Ok(crate::par::map_slice(&table, |pre| pre.iter().map(|&(y, w)| w * psi(y)).sum()))
}

fn operator_derivative_values(map: &MapSpec, x: &VectorField, coeffs: &[Complex64], m: usize) -> Result<Vec<f64>> {
    let table = circle_preimage_table(map, m)?;
    Ok(crate::par::map_range(m, |k| {
        let xk = k as f64 / m as f64;
        let (mut l1, mut l2, mut l3) = (0.0, 0.0, 0.0);
        for &(y, w) in &table[k] {
            let (d1, d2) = (map.d1_raw(y), map.d2_raw(y));
            let p = eval_series(coeffs, y).re;
            let dp = eval_series_deriv(coeffs, y).re;
            l1 += w * p;
            l2 += w * dp / d1;
            l3 += w * p * d2 / (d1 * d1);
        }
        -x.deriv(xk) * l1 - x.eval(xk) * l2 + x.eval(xk) * l3
    }))
}

/// `M(φ) = −X'·𝓛φ − X·𝓛(φ'/f') + X·𝓛(φ f''/f'²)`, the derivative of `t ↦ 𝓛_t φ`
/// at `t = 0`, projected onto the modes of `φ`.
pub fn operator_derivative(map: &MapSpec, x: &VectorField, phi: &GridFunction) -> Result<GridFunction> {
    require_circle(map)?;
    let coeffs = fourier(phi)?;
    let modes = coeffs.len() / 2;
    if x.is_zero() {
        return Ok(GridFunction::fourier_zero(modes));
    }
    let m = quadrature_points(modes);
    let values = operator_derivative_values(map, x, coeffs, m)?
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    Ok(GridFunction::Fourier {
        coeffs: FftPair::new(m).analyze(values, modes),
    })
}

/// `sup_k |(𝓛_h φ − 𝓛φ)(x_k)/h − M(φ)(x_k)|` on `m` equispaced points, for the
/// family `f + h·X∘f`.
pub fn operator_derivative_fd_error(map: &MapSpec, x: &VectorField, phi: &Observable, m: usize, h: f64) -> Result<f64> {
    require_circle(map)?;
    let modes = phi
        .trig_degree()
        .ok_or_else(|| Error::argument("the finite-difference check needs a trigonometric observable"))?
        .max(1);
    let coeffs = GridFunction::from_trig(phi, modes)?;
    let coeffs = fourier(&coeffs)?;
    let base = transfer_values(map, m, |y| phi.eval(y))?;
    let moved = transfer_values(&map.pushed(h, x)?, m, |y| phi.eval(y))?;
    let exact = operator_derivative_values(map, x, coeffs, m)?;
    Ok(base
        .iter()
        .zip(&moved)
        .zip(&exact)
        .map(|((b, p), e)| ((p - b) / h - e).abs())
        .fold(0.0, f64::max))
}

/// `sup_k |𝓛(ρ'/f' − ρf''/f'²)(x_k) − ρ'(x_k)|` on the collocation grid.
pub fn step3_residual(map: &MapSpec, rho: &GridFunction) -> Result<f64> {
    let coeffs = fourier(rho)?;
    let m = quadrature_points(coeffs.len() / 2);
    let lhs = transfer_values(map, m, |y| {
        let (d1, d2) = (map.d1_raw(y), map.d2_raw(y));
        eval_series_deriv(coeffs, y).re / d1 - eval_series(coeffs, y).re * d2 / (d1 * d1)
    })?;
    let rhs_fn = GridFunction::Fourier { coeffs: coeffs.to_vec() }.fourier_derivative()?;
    let rhs = values_on_grid(fourier(&rhs_fn)?, m);
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r.re).abs())
        .fold(0.0, f64::max))
}

/// `(Xρ)'` projected onto the modes of `ρ`.
pub fn flux_derivative(x: &VectorField, rho: &GridFunction) -> Result<GridFunction> {
    let coeffs = fourier(rho)?;
    let modes = coeffs.len() / 2;
    let m = quadrature_points(modes);
    let fft = FftPair::new(m);
    let prod: Vec<Complex64> = fft
        .synthesize(coeffs)
        .iter()
        .enumerate()
        .map(|(k, v)| Complex64::new(v.re * x.eval(k as f64 / m as f64), 0.0))
        .collect();
    GridFunction::Fourier {
        coeffs: fft.analyze(prod, modes),
    }
    .fourier_derivative()
}

/// The pieces of `∂ρ = −(1 − 𝓛)⁻¹((Xρ)')`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityDerivative {
    pub rho: Density,
    pub drho: GridFunction,
    pub discarded_mass: f64,
    pub relative_residual: f64,
}

pub fn density_derivative(op: &OperatorMatrix, x: &VectorField) -> Result<DensityDerivative> {
    let rho = invariant_density(op)?;
    let g = flux_derivative(x, rho.function())?;
    let sol = resolvent_solve(op, &g)?;
    let mut drho = sol.u;
    drho.scale(-1.0);
    Ok(DensityDerivative {
        rho,
        drho,
        discarded_mass: sol.discarded_mass,
        relative_residual: sol.relative_residual,
    })
}

/// `∫ φ·∂ρ dx` with `∂ρ = −(1 − 𝓛)⁻¹((Xρ)')`, at `modes` Fourier modes.
pub fn response_resolvent(map: &MapSpec, x: &VectorField, phi: &Observable, modes: usize) -> Result<f64> {
    require_circle(map)?;
    let op = build_circle_operator(map, modes)?;
    Ok(density_derivative(&op, x)?.drho.pair_with(phi))
}

/// Ruelle/susceptibility coefficients `κ_j = ∫ X·(φ∘f^j)' dμ`, `j < terms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuelleTerms {
    pub kappa: Vec<f64>,
    /// Leading terms also evaluated by chain-rule quadrature. All terms use
    /// `κ_j = −∫ φ·𝓛^j((Xρ)') dx`.
    pub direct: usize,
    /// Largest disagreement between the two evaluations.
    pub consistency: f64,
    /// `sup|X|·sup|φ'|·sup ρ`.
    pub integrand_bound: f64,
}

fn direct_points(map: &MapSpec, x: &VectorField, phi: &Observable, j: usize, modes: usize) -> Option<usize> {
    let kphi = phi.trig_degree()?;
    let kx = x.trig_degree().unwrap_or(0);
    let band = (map.degree() as f64).powi(j as i32) * kphi as f64 + (kx + modes) as f64;
    let q = (16.0 * band).max(64.0) as usize;
    let q = q.next_power_of_two();
    (q <= DIRECT_POINTS_MAX).then_some(q)
}

fn direct_term(map: &MapSpec, x: &VectorField, phi: &Observable, rho: &[Complex64], j: usize, q: usize) -> f64 {
    let rvals = values_on_grid(rho, q);
    let parts = crate::par::map_range(q, |k| {
        let xk = k as f64 / q as f64;
        let mut y = xk;
        let mut d = 1.0;
        for _ in 0..j {
            d *= map.d1_raw(y);
            y = map.eval_raw(y);
        }
        x.eval(xk) * rvals[k].re * phi.deriv(y) * d
    });
    crate::dd::compensated_sum(parts) / q as f64
}

pub fn ruelle_terms(map: &MapSpec, x: &VectorField, phi: &Observable, terms: usize, modes: usize) -> Result<RuelleTerms> {
    require_circle(map)?;
    if terms == 0 {
        return Err(Error::argument("need at least one term"));
    }
    let op = build_circle_operator(map, modes)?;
    let rho = invariant_density(&op)?;
    let rho_c = fourier(rho.function())?.to_vec();
    let rho_sup = values_on_grid(&rho_c, quadrature_points(modes))
        .iter()
        .map(|v| v.re.abs())
        .fold(0.0, f64::max);
    let integrand_bound = x.abs_bound() * phi.deriv_bound() * rho_sup;
    let mut v = flux_derivative(x, rho.function())?;
    let mut kappa = Vec::with_capacity(terms);
    for j in 0..terms {
        kappa.push(-v.pair_with(phi));
        if j + 1 < terms {
            v = op.apply(&v)?;
        }
    }
    let mut direct = 0;
    let mut consistency: f64 = 0.0;
    if phi.is_periodic() {
        while direct < terms.min(DIRECT_TERMS_MAX) {
            let Some(q) = direct_points(map, x, phi, direct, modes) else {
                break;
            };
            let d = direct_term(map, x, phi, &rho_c, direct, q);
            consistency = consistency.max((d - kappa[direct]).abs());
            direct += 1;
        }
    }
    Ok(RuelleTerms {
        kappa,
        direct,
        consistency,
        integrand_bound,
    })
}

/// Partial sums `S_j = Σ_{i≤j} κ_i` with the tail bound `C·λ^{-J}/(λ−1)`.
pub fn ruelle_sum(
    map: &MapSpec,
    x: &VectorField,
    phi: &Observable,
    terms: usize,
    modes: usize,
) -> Result<super::ResponseReport> {
    let lambda = map
        .expansion_floor()
        .ok_or_else(|| Error::precondition("Ruelle tail bound needs an expanding map"))?;
    let rt = ruelle_terms(map, x, phi, terms, modes)?;
    let mut partials = Vec::with_capacity(terms);
    let mut acc = crate::dd::CompensatedSum::new();
    for k in &rt.kappa {
        acc.add(*k);
        partials.push(acc.value());
    }
    let tail_bound = rt.integrand_bound * lambda.powi(-(terms as i32)) / (lambda - 1.0);
    let last = rt.kappa.last().copied().unwrap_or(0.0).abs();
    Ok(super::ResponseReport {
        observable: phi.describe(),
        ruelle_partials: partials,
        tail_bound,
        converged: last <= tail_bound * (lambda - 1.0) * lambda || last == 0.0,
        ..Default::default()
    })
}
