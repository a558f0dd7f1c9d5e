//! Splitting a tent-map density into jumps along the postcritical orbit and a
//! continuous remainder, and the piecewise expanding response formula built on it.

use serde::{Deserialize, Serialize};

use super::horizontal::{alpha_at, horizontality_index, HORIZONTAL_TOL};
use crate::error::{Error, Result};
use crate::maps::orbit::{markov_with_tolerance, MARKOV_TOL};
use crate::maps::{critical_orbit, MapSpec, Observable, VectorField};
use crate::transfer::{build_ulam_operator, invariant_density, resolvent_solve, GridFunction, GAUSS3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    /// Index `k` of the postcritical point `c_k`.
    pub k: usize,
    pub location: f64,
    /// `ρ(c_k+) − ρ(c_k−)`.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityDecomposition {
    pub jumps: Vec<Jump>,
    pub regular: GridFunction,
    /// `exp` of the slope of `log|w_k|` against `k`, when at least two jumps are nonzero.
    pub decay_rate: Option<f64>,
}

impl DensityDecomposition {
    /// Cell averages of `Σ_k w_k·H(x − c_k)`.
    pub fn singular(&self) -> GridFunction {
        let GridFunction::Cells { values, lo, hi } = &self.regular else {
            unreachable!()
        };
        GridFunction::Cells {
            values: step_cells(&self.jumps, values.len(), *lo, *hi),
            lo: *lo,
            hi: *hi,
        }
    }

    pub fn reassemble(&self) -> GridFunction {
        let mut out = self.regular.clone();
        out.axpy(1.0, &self.singular()).expect("same grid");
        out
    }

    /// CSV with header `k,location,weight`.
    pub fn jumps_csv(&self) -> String {
        let mut w = crate::io::CsvWriter::new(&["k", "location", "weight"]);
        for j in &self.jumps {
            w.row(&[j.k.to_string(), crate::io::fmt_f64(j.location), crate::io::fmt_f64(j.weight)]);
        }
        w.finish()
    }
}

fn step_cells(jumps: &[Jump], n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let w = (hi - lo) / n as f64;
    (0..n)
        .map(|i| {
            let (a, b) = (lo + i as f64 * w, lo + (i + 1) as f64 * w);
            jumps
                .iter()
                .map(|j| j.weight * ((b - j.location) / (b - a)).clamp(0.0, 1.0))
                .sum()
        })
        .collect()
}

/// Cells skipped on each side of a jump; Ulam smears a jump over about two cells.
const JUMP_SKIP: usize = 3;
/// Cells fitted on each side beyond the skipped ones.
const JUMP_WINDOW: usize = 8;

/// Least-squares line through `(center, value)` evaluated at `p`.
fn line_at(pts: &[(f64, f64)], p: f64) -> f64 {
    match pts {
        [] => 0.0,
        [(_, v)] => *v,
        _ => {
            let n = pts.len() as f64;
            let mx = pts.iter().map(|q| q.0).sum::<f64>() / n;
            let my = pts.iter().map(|q| q.1).sum::<f64>() / n;
            let sxx: f64 = pts.iter().map(|q| (q.0 - mx).powi(2)).sum();
            let sxy: f64 = pts.iter().map(|q| (q.0 - mx) * (q.1 - my)).sum();
            my + sxy / sxx * (p - mx)
        }
    }
}

/// One-sided limits at `p` from a line fitted to the cells
/// `JUMP_SKIP..JUMP_SKIP + JUMP_WINDOW` away on each side; zero outside the
/// phase interval.
fn one_sided(values: &[f64], lo: f64, hi: f64, p: f64) -> (f64, f64) {
    let n = values.len();
    let w = (hi - lo) / n as f64;
    let center = |i: usize| lo + (i as f64 + 0.5) * w;
    let side = |dir: f64| -> Vec<(f64, f64)> {
        (0..n)
            .filter(|&i| {
                let d = dir * (center(i) - p) / w;
                d > JUMP_SKIP as f64 && d <= (JUMP_SKIP + JUMP_WINDOW) as f64
            })
            .map(|i| (center(i), values[i]))
            .collect()
    };
    (line_at(&side(-1.0), p), line_at(&side(1.0), p))
}

/// Replaces the cells within `JUMP_SKIP` of a jump, where Ulam smears the
/// step, by linear interpolation between the nearest clean cells.
fn bridge_jumps(values: &[f64], lo: f64, hi: f64, jumps: &[Jump]) -> Vec<f64> {
    let n = values.len();
    let w = (hi - lo) / n as f64;
    let center = |i: usize| lo + (i as f64 + 0.5) * w;
    let masked: Vec<bool> = (0..n)
        .map(|i| jumps.iter().any(|j| (center(i) - j.location).abs() <= (JUMP_SKIP as f64 + 0.5) * w))
        .collect();
    let mut out = values.to_vec();
    let mut i = 0;
    while i < n {
        if !masked[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && masked[i] {
            i += 1;
        }
        let left = start.checked_sub(1).map(|k| (center(k), values[k]));
        let right = (i < n).then(|| (center(i), values[i]));
        for (k, v) in out.iter_mut().enumerate().take(i).skip(start) {
            *v = match (left, right) {
                (Some((xa, va)), Some((xb, vb))) => va + (vb - va) * (center(k) - xa) / (xb - xa),
                (Some((_, va)), None) => va,
                (None, Some((_, vb))) => vb,
                (None, None) => 0.0,
            };
        }
    }
    out
}

/// Jumps of an Ulam density at the distinct points among `c₁..c_K`.
pub fn density_decompose(density: &GridFunction, map: &MapSpec, max_jumps: usize) -> Result<DensityDecomposition> {
    let GridFunction::Cells { values, lo, hi } = density else {
        return Err(Error::argument("decomposition needs a cell density"));
    };
    let (lo, hi) = (*lo, *hi);
    let n = values.len();
    let w = (hi - lo) / n as f64;
    if max_jumps == 0 {
        return Ok(DensityDecomposition {
            jumps: vec![],
            regular: density.clone(),
            decay_rate: None,
        });
    }
    let orbit = critical_orbit(map, max_jumps)?;
    let mut points: Vec<(usize, f64)> = Vec::new();
    for (idx, &c) in orbit.iter().enumerate() {
        if points.iter().all(|&(_, q)| (q - c).abs() > 1e-12) {
            points.push((idx + 1, c));
        }
    }
    for (a, &(ka, pa)) in points.iter().enumerate() {
        for &(kb, pb) in &points[a + 1..] {
            if (pa - pb).abs() < (2 * (JUMP_SKIP + JUMP_WINDOW)) as f64 * w {
                return Err(Error::precondition(format!(
                    "c_{ka} and c_{kb} are {} cells apart; refine the grid",
                    crate::io::fmt_f64((pa - pb).abs() / w)
                )));
            }
        }
    }
    let jumps: Vec<Jump> = points
        .iter()
        .map(|&(k, p)| {
            let (l, r) = one_sided(values, lo, hi, p);
            Jump {
                k,
                location: p,
                weight: r - l,
            }
        })
        .collect();
    let steps = step_cells(&jumps, n, lo, hi);
    let regular = GridFunction::Cells {
        values: values.iter().zip(&steps).map(|(v, s)| v - s).collect(),
        lo,
        hi,
    };
    let decay_rate = {
        let pts: Vec<(f64, f64)> = jumps
            .iter()
            .filter(|j| j.weight.abs() > 1e-14)
            .map(|j| (j.k as f64, j.weight.abs().ln()))
            .collect();
        crate::experiments::fit::linear_fit(&pts).map(|f| f.slope.exp())
    };
    Ok(DensityDecomposition {
        jumps,
        regular,
        decay_rate,
    })
}

/// Terms of the piecewise expanding response formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PwResponse {
    pub value: f64,
    /// `−Σ_k w_k·α(c_k)·φ(c_k)`.
    pub dirac_term: f64,
    /// `−∫ φ·(1 − 𝓛)⁻¹(X'ρ^sing + (Xρ^reg)')`.
    pub resolvent_term: f64,
    /// Total mass `−Σ_k w_k α(c_k)` of the Dirac part, compensated along `ρ`.
    pub dirac_mass: f64,
    pub discarded_mass: f64,
    pub horizontality: f64,
}

/// `∂_t ∫φ dμ_t` for a horizontal `X` at a Markov tent map.
pub fn response_pw_horizontal(
    map: &MapSpec,
    x: &VectorField,
    phi: &Observable,
    cells: usize,
    depth: usize,
) -> Result<PwResponse> {
    let h = horizontality_index(map, x, depth)?;
    if h.value.abs() > HORIZONTAL_TOL {
        return Err(Error::precondition(format!(
            "vector field is not horizontal: J = {}",
            crate::io::fmt_f64(h.value)
        )));
    }
    let markov = markov_with_tolerance(map, crate::maps::orbit::DD_STEPS, MARKOV_TOL)?
        .ok_or_else(|| Error::precondition("the response formula needs a Markov (preperiodic) tent map"))?;
    if x.is_zero() {
        return Ok(PwResponse {
            value: 0.0,
            dirac_term: 0.0,
            resolvent_term: 0.0,
            dirac_mass: 0.0,
            discarded_mass: 0.0,
            horizontality: h.value,
        });
    }
    let op = build_ulam_operator(map, cells)?;
    let rho = invariant_density(&op)?;
    let dec = density_decompose(rho.function(), map, markov.preperiod + markov.period - 1)?;
    let sing = dec.singular();
    let (GridFunction::Cells { values: s, lo, hi }, GridFunction::Cells { values: r, .. }) = (&sing, &dec.regular)
    else {
        unreachable!()
    };
    let (lo, hi) = (*lo, *hi);
    let r = &bridge_jumps(r, lo, hi, &dec.jumps);
    let n = s.len();
    let w = (hi - lo) / n as f64;
    let edge_value = |e: usize| -> f64 {
        match e {
            0 => r[0],
            e if e == n => r[n - 1],
            e => 0.5 * (r[e - 1] + r[e]),
        }
    };
    let g: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (lo + i as f64 * w, lo + (i + 1) as f64 * w);
            let mid = 0.5 * (a + b);
            let dx_avg: f64 = GAUSS3.iter().map(|&(t, gw)| 0.5 * gw * x.deriv(mid + 0.5 * w * t)).sum();
            let flux = (x.eval(b) * edge_value(i + 1) - x.eval(a) * edge_value(i)) / w;
            dx_avg * s[i] + flux
        })
        .collect();
    let g = GridFunction::Cells { values: g, lo, hi };
    let sol = resolvent_solve(&op, &g)?;
    let resolvent_term = -sol.u.pair_with(phi);
    let resolvent_mass = -sol.u.integral();
    let mut dirac_term = 0.0;
    let mut dirac_mass = 0.0;
    for j in &dec.jumps {
        let a = alpha_at(map, x, j.location, depth).ok_or_else(|| {
            Error::Numeric(format!("α is undefined at c_{} (orbit meets the turning point)", j.k))
        })?;
        dirac_term -= j.weight * a * phi.eval(j.location);
        dirac_mass -= j.weight * a;
    }
    // (1 − 𝓛)⁻¹ fixes the response only up to multiples of ρ; the total mass must vanish
    let mean = rho.expectation(phi);
    Ok(PwResponse {
        value: dirac_term + resolvent_term - (dirac_mass + resolvent_mass) * mean,
        dirac_term,
        resolvent_term,
        dirac_mass,
        discarded_mass: sol.discarded_mass,
        horizontality: h.value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::TentMap;

    fn silver() -> MapSpec {
        TentMap::new(std::f64::consts::SQRT_2 - 1.0, 0.0).unwrap().into()
    }

    #[test]
    fn full_tent_jumps_sit_at_the_ends() {
        let map: MapSpec = TentMap::full().into();
        let rho = crate::transfer::density_of(&map, crate::transfer::Method::Ulam, 1024).unwrap();
        let dec = density_decompose(rho.function(), &map, 5).unwrap();
        assert_eq!(dec.jumps.len(), 2);
        assert!((dec.jumps[0].weight + 0.5).abs() < 1e-9);
        assert!((dec.jumps[1].weight - 0.5).abs() < 1e-9);
        assert!(dec.regular.max_abs() < 1e-9);
    }

    #[test]
    fn silver_density_is_piecewise_constant() {
        let map = silver();
        let rho = crate::transfer::density_of(&map, crate::transfer::Method::Ulam, 4096).unwrap();
        let dec = density_decompose(rho.function(), &map, 6).unwrap();
        assert_eq!(dec.jumps.len(), 3);
        let reg = dec.regular.as_cells().unwrap();
        let max = reg.iter().cloned().fold(f64::MIN, f64::max);
        let min = reg.iter().cloned().fold(f64::MAX, f64::min);
        // cells straddling a jump carry the discretization error; skip them
        let w = 2.0 / 4096.0;
        let mut spread: f64 = 0.0;
        for (i, v) in reg.iter().enumerate() {
            let x = -1.0 + (i as f64 + 0.5) * w;
            if dec.jumps.iter().all(|j| (x - j.location).abs() > 32.0 * w) {
                spread = spread.max((v - reg[0]).abs());
            }
        }
        assert!(spread < 1e-2, "spread {spread} (range {min}..{max})");
        let l1: f64 = reg.iter().map(|v| v.abs() * w).sum();
        assert!(l1 < 1e-2, "regular part has L1 norm {l1}");
        let back = dec.reassemble();
        assert!(back.l1_distance(rho.function()).unwrap() < 1e-12);
    }

    #[test]
    fn non_horizontal_field_is_rejected() {
        let err = response_pw_horizontal(&silver(), &VectorField::poly([0.0, 1.0]), &VectorField::poly([0.0, 1.0]), 512, 60)
            .unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    /// `∫x^k dμ_t` for the silver tent pushed by the constant field: the
    /// Markov structure persists, with density `A` on `[c₂, c₃]` and `√2·A` on `[c₃, c₁]`.
    fn silver_moment(t: f64, k: i32) -> f64 {
        let r2 = std::f64::consts::SQRT_2;
        let a = r2 - 1.0;
        let (c1, c2, c3) = (a + t, -a * a + t * (1.0 - r2), (a + t) / (1.0 + r2));
        let big_a = 1.0 / ((c3 - c2) + r2 * (c1 - c3));
        let m = |lo: f64, hi: f64| (hi.powi(k + 1) - lo.powi(k + 1)) / (k + 1) as f64;
        big_a * m(c2, c3) + r2 * big_a * m(c3, c1)
    }

    #[test]
    fn silver_response_matches_closed_form() {
        let x = VectorField::constant(1.0);
        for k in [1, 2] {
            let h = 1e-6;
            let exact = (silver_moment(h, k) - silver_moment(-h, k)) / (2.0 * h);
            let phi = VectorField::poly(if k == 1 { vec![0.0, 1.0] } else { vec![0.0, 0.0, 1.0] });
            let r = response_pw_horizontal(&silver(), &x, &phi, 1 << 14, 60).unwrap();
            assert!((r.value - exact).abs() < 1e-3, "k = {k}: {} vs {exact}", r.value);
        }
    }

    #[test]
    fn zero_field_has_zero_response() {
        let r = response_pw_horizontal(&silver(), &VectorField::zero(), &VectorField::poly([0.0, 1.0]), 512, 60).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
