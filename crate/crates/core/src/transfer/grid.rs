//! Function representations shared by the discretizations: truncated Fourier
//! series on the circle and piecewise-constant cell values on an interval.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::Observable;

pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (-0.774_596_669_241_483_4, 5.0 / 9.0),
    (0.0, 8.0 / 9.0),
    (0.774_596_669_241_483_4, 5.0 / 9.0),
];

/// A function on the phase space in one of the two discrete bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "lowercase")]
pub enum GridFunction {
    /// Coefficients of `e^{2πinx}` for `n = -N..=N`, stored at index `n + N`.
    Fourier { coeffs: Vec<Complex64> },
    /// Cell values on a uniform partition of `[lo, hi]`.
    Cells { values: Vec<f64>, lo: f64, hi: f64 },
}

impl GridFunction {
    pub fn fourier_zero(modes: usize) -> Self {
        GridFunction::Fourier {
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * modes + 1],
        }
    }

    pub fn cells_zero(cells: usize, lo: f64, hi: f64) -> Self {
        GridFunction::Cells {
            values: vec![0.0; cells],
            lo,
            hi,
        }
    }

    /// A trigonometric observable projected onto `modes` Fourier modes.
    pub fn from_trig(f: &Observable, modes: usize) -> Result<Self> {
        let coeffs = f
            .fourier_coeffs(modes)
            .ok_or_else(|| Error::argument("Fourier functions need a trigonometric field"))?;
        Ok(GridFunction::Fourier { coeffs })
    }

    /// Cell averages of `f` (3-point Gauss per cell).
    pub fn from_fn_cells(f: impl Fn(f64) -> f64, cells: usize, lo: f64, hi: f64) -> Self {
        let w = (hi - lo) / cells as f64;
        let values = (0..cells)
            .map(|i| {
                let mid = lo + (i as f64 + 0.5) * w;
                GAUSS3.iter().map(|&(g, wt)| 0.5 * wt * f(mid + 0.5 * w * g)).sum()
            })
            .collect();
        GridFunction::Cells { values, lo, hi }
    }

    pub fn len(&self) -> usize {
        match self {
            GridFunction::Fourier { coeffs } => coeffs.len(),
            GridFunction::Cells { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn modes(&self) -> Option<usize> {
        match self {
            GridFunction::Fourier { coeffs } => Some(coeffs.len() / 2),
            GridFunction::Cells { .. } => None,
        }
    }

    pub fn cell_width(&self) -> Option<f64> {
        match self {
            GridFunction::Cells { values, lo, hi } => Some((hi - lo) / values.len() as f64),
            GridFunction::Fourier { .. } => None,
        }
    }

    pub fn as_cells(&self) -> Option<&[f64]> {
        match self {
            GridFunction::Cells { values, .. } => Some(values),
            GridFunction::Fourier { .. } => None,
        }
    }

    pub fn as_fourier(&self) -> Option<&[Complex64]> {
        match self {
            GridFunction::Fourier { coeffs } => Some(coeffs),
            GridFunction::Cells { .. } => None,
        }
    }

    /// `∫ f dx` over the phase space.
    pub fn integral(&self) -> f64 {
        match self {
            GridFunction::Fourier { coeffs } => coeffs[coeffs.len() / 2].re,
            GridFunction::Cells { values, lo, hi } => {
                let w = (hi - lo) / values.len() as f64;
                crate::dd::compensated_sum(values.iter().map(|v| v * w))
            }
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            GridFunction::Fourier { coeffs } => eval_series(coeffs, x).re,
            GridFunction::Cells { values, lo, hi } => {
                let n = values.len();
                let pos = ((x - lo) / (hi - lo) * n as f64).floor();
                if pos < 0.0 || x > *hi {
                    0.0
                } else {
                    values[(pos as usize).min(n - 1)]
                }
            }
        }
    }

    /// `∫ f·φ dx`.
    pub fn pair_with(&self, phi: &Observable) -> f64 {
        match self {
            GridFunction::Fourier { coeffs } => {
                let modes = coeffs.len() / 2;
                match phi.fourier_coeffs(modes) {
                    Some(p) => {
                        // ∫ f φ = Σ_n f̂_n φ̂_{-n}
                        let s: Complex64 = (0..coeffs.len())
                            .map(|i| coeffs[i] * p[coeffs.len() - 1 - i])
                            .sum();
                        s.re
                    }
                    None => {
                        let m = quadrature_points(modes);
                        let vals = values_on_grid(coeffs, m);
                        let s = crate::dd::compensated_sum(
                            vals.iter()
                                .enumerate()
                                .map(|(k, v)| v.re * phi.eval(k as f64 / m as f64)),
                        );
                        s / m as f64
                    }
                }
            }
            GridFunction::Cells { values, lo, hi } => {
                let n = values.len();
                let w = (hi - lo) / n as f64;
                crate::dd::compensated_sum(values.iter().enumerate().map(|(i, &v)| {
                    let mid = lo + (i as f64 + 0.5) * w;
                    let avg: f64 = GAUSS3
                        .iter()
                        .map(|&(g, wt)| 0.5 * wt * phi.eval(mid + 0.5 * w * g))
                        .sum();
                    v * avg * w
                }))
            }
        }
    }

    /// `∫ f·g dx` for two functions in the same basis.
    pub fn inner(&self, other: &GridFunction) -> Result<f64> {
        match (self, other) {
            (GridFunction::Fourier { coeffs: a }, GridFunction::Fourier { coeffs: b }) => {
                if a.len() != b.len() {
                    return Err(Error::argument("mode counts differ"));
                }
                let s: Complex64 = (0..a.len()).map(|i| a[i] * b[a.len() - 1 - i]).sum();
                Ok(s.re)
            }
            (GridFunction::Cells { values: a, lo, hi }, GridFunction::Cells { values: b, .. }) => {
                if a.len() != b.len() {
                    return Err(Error::argument("cell counts differ"));
                }
                let w = (hi - lo) / a.len() as f64;
                Ok(crate::dd::compensated_sum(a.iter().zip(b).map(|(x, y)| x * y * w)))
            }
            _ => Err(Error::argument("functions live in different bases")),
        }
    }

    /// `‖f - g‖_{L¹}`; Fourier functions are compared on a common quadrature grid.
    pub fn l1_distance(&self, other: &GridFunction) -> Result<f64> {
        match (self, other) {
            (GridFunction::Fourier { coeffs: a }, GridFunction::Fourier { coeffs: b }) => {
                let modes = (a.len() / 2).max(b.len() / 2);
                let m = quadrature_points(modes);
                let va = values_on_grid(a, m);
                let vb = values_on_grid(b, m);
                let s = crate::dd::compensated_sum(va.iter().zip(&vb).map(|(x, y)| (x.re - y.re).abs()));
                Ok(s / m as f64)
            }
            (GridFunction::Cells { values: a, lo, hi }, GridFunction::Cells { values: b, lo: lo2, hi: hi2 }) => {
                if a.len() != b.len() || lo != lo2 || hi != hi2 {
                    return Err(Error::argument("cell grids differ"));
                }
                let w = (hi - lo) / a.len() as f64;
                Ok(crate::dd::compensated_sum(a.iter().zip(b).map(|(x, y)| (x - y).abs() * w)))
            }
            _ => Err(Error::argument("functions live in different bases")),
        }
    }

    pub fn scale(&mut self, s: f64) {
        match self {
            GridFunction::Fourier { coeffs } => coeffs.iter_mut().for_each(|c| *c *= s),
            GridFunction::Cells { values, .. } => values.iter_mut().for_each(|v| *v *= s),
        }
    }

    /// `self += s·other`.
    pub fn axpy(&mut self, s: f64, other: &GridFunction) -> Result<()> {
        match (self, other) {
            (GridFunction::Fourier { coeffs: a }, GridFunction::Fourier { coeffs: b }) if a.len() == b.len() => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y * s);
                Ok(())
            }
            (GridFunction::Cells { values: a, .. }, GridFunction::Cells { values: b, .. }) if a.len() == b.len() => {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y * s);
                Ok(())
            }
            _ => Err(Error::argument("incompatible grid functions")),
        }
    }

    /// Largest coefficient / cell-value magnitude.
    pub fn max_abs(&self) -> f64 {
        match self {
            GridFunction::Fourier { coeffs } => coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max),
            GridFunction::Cells { values, .. } => values.iter().map(|v| v.abs()).fold(0.0, f64::max),
        }
    }

    /// Derivative of a Fourier series (multiplication by `2πin`).
    pub fn fourier_derivative(&self) -> Result<GridFunction> {
        let GridFunction::Fourier { coeffs } = self else {
            return Err(Error::argument("spectral derivative needs a Fourier function"));
        };
        let modes = coeffs.len() as i64 / 2;
        Ok(GridFunction::Fourier {
            coeffs: coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * Complex64::new(0.0, TAU * (i as i64 - modes) as f64))
                .collect(),
        })
    }
}

/// Quadrature grid size used for Fourier functions with `modes` modes.
pub(crate) fn quadrature_points(modes: usize) -> usize {
    (8 * modes.max(4)).next_power_of_two()
}

/// `Σ_n c_n e^{2πinx}`.
pub fn eval_series(coeffs: &[Complex64], x: f64) -> Complex64 {
    let modes = coeffs.len() as i64 / 2;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate() {
        let n = (i as i64 - modes) as f64;
        let phase = TAU * (n * x).rem_euclid(1.0);
        acc += c * Complex64::from_polar(1.0, phase);
    }
    acc
}

/// `Σ_n 2πin·c_n e^{2πinx}`.
pub fn eval_series_deriv(coeffs: &[Complex64], x: f64) -> Complex64 {
    let modes = coeffs.len() as i64 / 2;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, c) in coeffs.iter().enumerate() {
        let n = (i as i64 - modes) as f64;
        let phase = TAU * (n * x).rem_euclid(1.0);
        acc += c * Complex64::new(0.0, TAU * n) * Complex64::from_polar(1.0, phase);
    }
    acc
}

pub(crate) struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    m: usize,
}

impl FftPair {
    pub(crate) fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftPair {
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            m,
        }
    }

    /// Samples at `x_k = k/m` → coefficients `n = -modes..=modes`.
    pub(crate) fn analyze(&self, mut values: Vec<Complex64>, modes: usize) -> Vec<Complex64> {
        assert_eq!(values.len(), self.m);
        assert!(2 * modes < self.m);
        self.forward.process(&mut values);
        let scale = 1.0 / self.m as f64;
        (0..=2 * modes)
            .map(|i| {
                let n = i as i64 - modes as i64;
                values[n.rem_euclid(self.m as i64) as usize] * scale
            })
            .collect()
    }

    /// Coefficients → samples at `x_k = k/m`.
    pub(crate) fn synthesize(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let modes = coeffs.len() / 2;
        assert!(2 * modes < self.m);
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m];
        for (i, c) in coeffs.iter().enumerate() {
            let n = i as i64 - modes as i64;
            buf[n.rem_euclid(self.m as i64) as usize] = *c;
        }
        self.inverse.process(&mut buf);
        buf
    }
}

/// Values of a Fourier series at `k/m`, `k = 0..m`.
pub fn values_on_grid(coeffs: &[Complex64], m: usize) -> Vec<Complex64> {
    FftPair::new(m).synthesize(coeffs)
}

/// Fourier coefficients (`modes` each side) of samples at `k/m`.
pub fn coeffs_from_values(values: &[f64], modes: usize) -> Vec<Complex64> {
    let m = values.len();
    FftPair::new(m).analyze(values.iter().map(|&v| Complex64::new(v, 0.0)).collect(), modes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::VectorField;

    #[test]
    fn synthesize_and_analyze_round_trip() {
        let f = VectorField::trig_with_constant(0.5, [0.3, 0.0, 0.1], [0.2]);
        let c = f.fourier_coeffs(5).unwrap();
        let vals = values_on_grid(&c, 64);
        for (k, v) in vals.iter().enumerate() {
            assert!((v.re - f.eval(k as f64 / 64.0)).abs() < 1e-14);
        }
        let real: Vec<f64> = vals.iter().map(|v| v.re).collect();
        let back = coeffs_from_values(&real, 5);
        for (a, b) in c.iter().zip(&back) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn pairing_matches_orthogonality() {
        let cos1 = GridFunction::from_trig(&VectorField::trig([], [1.0]), 4).unwrap();
        assert!((cos1.pair_with(&VectorField::trig([], [1.0])) - 0.5).abs() < 1e-15);
        assert!(cos1.pair_with(&VectorField::trig([1.0], [])).abs() < 1e-15);
    }

    #[test]
    fn cell_integrals() {
        let f = GridFunction::from_fn_cells(|x| x * x, 100, 0.0, 1.0);
        assert!((f.integral() - 1.0 / 3.0).abs() < 1e-14);
        assert!((f.eval(0.505) - f.as_cells().unwrap()[50]).abs() == 0.0);
        assert_eq!(f.eval(1.5), 0.0);
    }
}
