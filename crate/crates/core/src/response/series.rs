//! Susceptibility `Ψ_φ(z) = Σ κ_j z^j` and `σ_φ(z) = Σ φ(c_{j+1}) z^j`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::orbit::{markov_with_tolerance, MARKOV_TOL};
use crate::maps::{critical_orbit, MapSpec, MarkovData, Observable, VectorField};
use crate::transfer::{build_ulam_operator, invariant_density, GAUSS3};

/// `σ(z) = P(z) + z^shift·Q(z)/(1 − z^period)` for eventually periodic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RationalForm {
    pub prefix: Vec<f64>,
    pub cycle: Vec<f64>,
}

impl RationalForm {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let p = horner(&self.prefix, z);
        let q = horner(&self.cycle, z);
        p + z.powu(self.prefix.len() as u32) * q / (Complex64::new(1.0, 0.0) - z.powu(self.cycle.len() as u32))
    }

    /// Coefficient of `z^j`.
    pub fn coefficient(&self, j: usize) -> f64 {
        if j < self.prefix.len() {
            self.prefix[j]
        } else {
            self.cycle[(j - self.prefix.len()) % self.cycle.len()]
        }
    }
}

fn horner(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesData {
    pub coeffs: Vec<f64>,
    /// Root-test estimate of the radius of convergence from the stored prefix.
    pub radius_hint: f64,
    pub rational: Option<RationalForm>,
}

impl SeriesData {
    pub fn new(coeffs: Vec<f64>, rational: Option<RationalForm>) -> Self {
        let radius_hint = root_test(&coeffs);
        SeriesData {
            coeffs,
            radius_hint,
            rational,
        }
    }

    /// Horner evaluation of the stored prefix.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        horner(&self.coeffs, z)
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = crate::dd::CompensatedSum::new();
        self.coeffs
            .iter()
            .map(|&c| {
                acc.add(c);
                acc.value()
            })
            .collect()
    }

    /// Values along the ray `z = r·e^{iω}` for each `r` in `radii`.
    pub fn radial_probe(&self, omega: f64, radii: &[f64]) -> Vec<(f64, Complex64)> {
        radii
            .iter()
            .map(|&r| {
                let z = Complex64::from_polar(r, omega);
                let v = match &self.rational {
                    Some(form) => form.eval(z),
                    None => self.eval(z),
                };
                (r, v)
            })
            .collect()
    }

    /// CSV with header `j,coefficient`.
    pub fn to_csv(&self) -> String {
        let mut w = crate::io::CsvWriter::new(&["j", "coefficient"]);
        for (j, c) in self.coeffs.iter().enumerate() {
            w.row(&[j.to_string(), crate::io::fmt_f64(*c)]);
        }
        w.finish()
    }
}

fn root_test(c: &[f64]) -> f64 {
    let start = c.len() / 2;
    let sup = c
        .iter()
        .enumerate()
        .skip(start.max(1))
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| v.abs().powf(1.0 / j as f64))
        .fold(0.0, f64::max);
    if sup == 0.0 {
        f64::INFINITY
    } else {
        1.0 / sup
    }
}

/// `κ_j = ∫ (φ∘f^j)'·X dμ` for `j < terms`. Circle maps use the Fourier
/// discretization with `n` modes; interval maps the Ulam density on `n` cells.
pub fn susceptibility_series(
    map: &MapSpec,
    x: &VectorField,
    phi: &Observable,
    terms: usize,
    n: usize,
) -> Result<SeriesData> {
    if terms == 0 {
        return Err(Error::argument("need at least one term"));
    }
    let kappa = if map.is_circle() {
        super::circle::ruelle_terms(map, x, phi, terms, n)?.kappa
    } else {
        interval_kappa(map, x, phi, terms, n)?
    };
    Ok(SeriesData::new(kappa, None))
}

/// Cell-sum pairing: on each cell `A = [a, b]`,
/// `∫_A X (φ∘f^j)' = [X·φ∘f^j]_a^b − ∫_A X'·φ∘f^j`, which never differentiates
/// the iterate.
fn interval_kappa(map: &MapSpec, x: &VectorField, phi: &Observable, terms: usize, cells: usize) -> Result<Vec<f64>> {
    let op = build_ulam_operator(map, cells)?;
    let rho = invariant_density(&op)?;
    let (values, lo, hi) = match rho.function() {
        crate::transfer::GridFunction::Cells { values, lo, hi } => (values.clone(), *lo, *hi),
        _ => unreachable!(),
    };
    let w = (hi - lo) / cells as f64;
    const SUB: usize = 4;
    let iterate = |mut y: f64, j: usize| {
        for _ in 0..j {
            y = map.eval_raw(y);
        }
        y
    };
    Ok(crate::par::map_range(terms, |j| {
        let parts = (0..cells).map(|i| {
            let r = values[i];
            if r == 0.0 {
                return 0.0;
            }
            let (a, b) = (lo + i as f64 * w, lo + (i + 1) as f64 * w);
            let boundary = x.eval(b) * phi.eval(iterate(b, j)) - x.eval(a) * phi.eval(iterate(a, j));
            let sw = w / SUB as f64;
            let mut interior = 0.0;
            for s in 0..SUB {
                let mid = a + (s as f64 + 0.5) * sw;
                for &(g, gw) in &GAUSS3 {
                    let p = mid + 0.5 * sw * g;
                    interior += 0.5 * sw * gw * x.deriv(p) * phi.eval(iterate(p, j));
                }
            }
            r * (boundary - interior)
        });
        crate::dd::compensated_sum(parts)
    }))
}

/// `σ_φ` coefficients `φ(c_{j+1})`, `j < terms`. Markov maps repeat the detected
/// cycle exactly and carry the closed rational form.
pub fn sigma_series(map: &MapSpec, phi: &Observable, terms: usize) -> Result<SeriesData> {
    if terms == 0 {
        return Err(Error::argument("need at least one term"));
    }
    let depth = terms.max(64);
    let orbit = critical_orbit(map, depth)?;
    let markov = markov_with_tolerance(map, depth.min(crate::maps::orbit::DD_STEPS), MARKOV_TOL)?;
    match markov {
        Some(MarkovData { preperiod, period, .. }) => {
            // orbit[k] = c_{k+1}; coefficient m is φ(c_{m+1}); periodic from m = preperiod − 1
            let shift = preperiod - 1;
            let prefix: Vec<f64> = orbit[..shift].iter().map(|&c| phi.eval(c)).collect();
            let cycle: Vec<f64> = orbit[shift..shift + period].iter().map(|&c| phi.eval(c)).collect();
            let form = RationalForm { prefix, cycle };
            let coeffs = (0..terms).map(|j| form.coefficient(j)).collect();
            Ok(SeriesData::new(coeffs, Some(form)))
        }
        None => Ok(SeriesData::new(
            orbit[..terms].iter().map(|&c| phi.eval(c)).collect(),
            None,
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, TentMap};
    use std::f64::consts::PI;

    #[test]
    fn doubling_susceptibility() {
        let s = susceptibility_series(
            &CircleMap::doubling().into(),
            &VectorField::trig([1.0], []),
            &VectorField::trig([], [1.0]),
            12,
            16,
        )
        .unwrap();
        assert!((s.coeffs[0] + PI).abs() < 1e-12);
        assert!(s.coeffs[1..].iter().all(|k| k.abs() < 1e-10));
        assert_eq!(s.eval(Complex64::new(0.0, 0.0)).re, s.coeffs[0]);
    }

    #[test]
    fn constant_observable_has_zero_susceptibility() {
        let map: MapSpec = TentMap::new(0.7, 0.0).unwrap().into();
        let s = susceptibility_series(&map, &VectorField::poly([1.0, 1.0]), &VectorField::constant(2.0), 6, 256).unwrap();
        assert!(s.coeffs.iter().all(|k| k.abs() < 1e-12), "{:?}", s.coeffs);
    }

    #[test]
    fn full_tent_sigma() {
        let s = sigma_series(&TentMap::full().into(), &VectorField::poly([0.0, 1.0]), 10).unwrap();
        assert_eq!(s.coeffs[0], 1.0);
        assert!(s.coeffs[1..].iter().all(|&c| c == -1.0));
        let z = Complex64::new(0.3, 0.2);
        let expected = 1.0 - z / (1.0 - z);
        assert!((s.rational.as_ref().unwrap().eval(z) - expected).norm() < 1e-15);
    }

    #[test]
    fn silver_sigma_is_eventually_constant() {
        let map: MapSpec = TentMap::new(std::f64::consts::SQRT_2 - 1.0, 0.0).unwrap().into();
        let s = sigma_series(&map, &VectorField::poly([0.1, 2.0, -1.0]), 200).unwrap();
        let form = s.rational.as_ref().unwrap();
        assert_eq!(form.prefix.len(), 2);
        assert_eq!(form.cycle.len(), 1);
        assert!(s.coeffs[2..].iter().all(|&c| c == s.coeffs[2]));
    }

    #[test]
    fn zero_observable_sigma() {
        let s = sigma_series(&TentMap::full().into(), &VectorField::zero(), 5).unwrap();
        assert!(s.coeffs.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn partial_sums_match_prefix() {
        let s = SeriesData::new(vec![1.0, 0.5, 0.25], None);
        assert_eq!(s.partial_sums(), vec![1.0, 1.5, 1.75]);
        assert_eq!(s.eval(Complex64::new(1.0, 0.0)).re, 1.75);
    }
}
