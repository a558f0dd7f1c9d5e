use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;

/// A smooth scalar function on the phase space, used both as the vector field
/// `X` of a family (`v = X ∘ f`) and as an observable `φ`.
///
/// `Trig` is 1-periodic: `constant + Σ_k sin[k-1]·sin(2πkx) + cos[k-1]·cos(2πkx)`.
/// `Poly` lists monomial coefficients constant-first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum VectorField {
    Trig {
        constant: f64,
        sin: Vec<f64>,
        cos: Vec<f64>,
    },
    Poly {
        coeffs: Vec<f64>,
    },
}

/// Observables share the representation of vector fields.
pub type Observable = VectorField;

impl VectorField {
    pub fn zero() -> Self {
        VectorField::Poly { coeffs: vec![] }
    }

    pub fn constant(c: f64) -> Self {
        VectorField::Poly { coeffs: vec![c] }
    }

    pub fn poly(coeffs: impl Into<Vec<f64>>) -> Self {
        VectorField::Poly {
            coeffs: coeffs.into(),
        }
    }

    pub fn trig(sin: impl Into<Vec<f64>>, cos: impl Into<Vec<f64>>) -> Self {
        VectorField::Trig {
            constant: 0.0,
            sin: sin.into(),
            cos: cos.into(),
        }
    }

    pub fn trig_with_constant(constant: f64, sin: impl Into<Vec<f64>>, cos: impl Into<Vec<f64>>) -> Self {
        VectorField::Trig {
            constant,
            sin: sin.into(),
            cos: cos.into(),
        }
    }

    /// The field in the command-line mini-language.
    pub fn describe(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| crate::io::fmt_f64(*x)).collect::<Vec<_>>().join(",");
        match self {
            VectorField::Poly { coeffs } if coeffs.is_empty() => "poly:0".into(),
            VectorField::Poly { coeffs } => format!("poly:{}", list(coeffs)),
            VectorField::Trig { constant, sin, cos } => {
                let mut parts = vec![];
                if *constant != 0.0 {
                    parts.push(format!("const={}", crate::io::fmt_f64(*constant)));
                }
                if !sin.is_empty() {
                    parts.push(format!("sin={}", list(sin)));
                }
                if !cos.is_empty() {
                    parts.push(format!("cos={}", list(cos)));
                }
                if parts.is_empty() {
                    parts.push("const=0".into());
                }
                format!("trig:{}", parts.join(","))
            }
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, VectorField::Trig { .. })
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VectorField::Trig { constant, sin, cos } => {
                *constant == 0.0 && sin.iter().chain(cos).all(|&c| c == 0.0)
            }
            VectorField::Poly { coeffs } => coeffs.iter().all(|&c| c == 0.0),
        }
    }

    /// True when the function is constant (its derivative vanishes identically).
    pub fn is_constant(&self) -> bool {
        match self {
            VectorField::Trig { sin, cos, .. } => sin.iter().chain(cos).all(|&c| c == 0.0),
            VectorField::Poly { coeffs } => coeffs.iter().skip(1).all(|&c| c == 0.0),
        }
    }

    /// Polynomial degree (highest nonzero power), or `None` for trigonometric fields.
    pub fn poly_degree(&self) -> Option<usize> {
        match self {
            VectorField::Poly { coeffs } => {
                Some(coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0))
            }
            VectorField::Trig { .. } => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            VectorField::Trig { constant, sin, cos } => {
                let mut acc = *constant;
                for (k, &a) in sin.iter().enumerate() {
                    acc += a * (TAU * (k + 1) as f64 * x).sin();
                }
                for (k, &b) in cos.iter().enumerate() {
                    acc += b * (TAU * (k + 1) as f64 * x).cos();
                }
                acc
            }
            VectorField::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            VectorField::Trig { sin, cos, .. } => {
                let mut acc = 0.0;
                for (k, &a) in sin.iter().enumerate() {
                    let w = TAU * (k + 1) as f64;
                    acc += a * w * (w * x).cos();
                }
                for (k, &b) in cos.iter().enumerate() {
                    let w = TAU * (k + 1) as f64;
                    acc -= b * w * (w * x).sin();
                }
                acc
            }
            VectorField::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + k as f64 * c),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self {
            VectorField::Trig { sin, cos, .. } => {
                let mut acc = 0.0;
                for (k, &a) in sin.iter().enumerate() {
                    let w = TAU * (k + 1) as f64;
                    acc -= a * w * w * (w * x).sin();
                }
                for (k, &b) in cos.iter().enumerate() {
                    let w = TAU * (k + 1) as f64;
                    acc -= b * w * w * (w * x).cos();
                }
                acc
            }
            VectorField::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(2)
                .rev()
                .fold(0.0, |acc, (k, &c)| acc * x + (k * (k - 1)) as f64 * c),
        }
    }

    /// Evaluation in double-double; trigonometric fields fall back to `f64`.
    pub fn eval_dd(&self, x: DoubleDouble) -> DoubleDouble {
        match self {
            VectorField::Poly { coeffs } => coeffs
                .iter()
                .rev()
                .fold(DoubleDouble::ZERO, |acc, &c| acc * x + DoubleDouble::new(c)),
            VectorField::Trig { .. } => DoubleDouble::new(self.eval(x.to_f64())),
        }
    }

    pub fn deriv_dd(&self, x: DoubleDouble) -> DoubleDouble {
        match self {
            VectorField::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(DoubleDouble::ZERO, |acc, (k, &c)| {
                    acc * x + DoubleDouble::new(c).mul_f64(k as f64)
                }),
            VectorField::Trig { .. } => DoubleDouble::new(self.deriv(x.to_f64())),
        }
    }

    /// An upper bound for `sup |X|` on `|x| ≤ 1` (any `x` for trigonometric fields).
    pub fn abs_bound(&self) -> f64 {
        match self {
            VectorField::Trig { constant, sin, cos } => {
                constant.abs() + sin.iter().chain(cos).map(|c| c.abs()).sum::<f64>()
            }
            VectorField::Poly { coeffs } => coeffs.iter().map(|c| c.abs()).sum(),
        }
    }

    /// An upper bound for `sup |X'|` on `|x| ≤ 1`.
    pub fn deriv_bound(&self) -> f64 {
        match self {
            VectorField::Trig { sin, cos, .. } => {
                let s: f64 = sin.iter().enumerate().map(|(k, a)| (k + 1) as f64 * a.abs()).sum();
                let c: f64 = cos.iter().enumerate().map(|(k, b)| (k + 1) as f64 * b.abs()).sum();
                TAU * (s + c)
            }
            VectorField::Poly { coeffs } => coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c.abs())
                .sum(),
        }
    }

    /// Exponential Fourier coefficients `ĉ_n`, `n = -modes..=modes`, stored at
    /// index `n + modes`. Only defined for trigonometric fields; harmonics above
    /// `modes` are dropped.
    pub fn fourier_coeffs(&self, modes: usize) -> Option<Vec<Complex64>> {
        let VectorField::Trig { constant, sin, cos } = self else {
            return None;
        };
        let mut out = vec![Complex64::new(0.0, 0.0); 2 * modes + 1];
        out[modes] = Complex64::new(*constant, 0.0);
        for k in 1..=modes {
            let a = sin.get(k - 1).copied().unwrap_or(0.0);
            let b = cos.get(k - 1).copied().unwrap_or(0.0);
            // a sin + b cos = (b - i a)/2 e^{+} + (b + i a)/2 e^{-}
            out[modes + k] = Complex64::new(b / 2.0, -a / 2.0);
            out[modes - k] = Complex64::new(b / 2.0, a / 2.0);
        }
        Some(out)
    }

    /// Highest frequency of a trigonometric field.
    pub fn trig_degree(&self) -> Option<usize> {
        match self {
            VectorField::Trig { sin, cos, .. } => Some(sin.len().max(cos.len())),
            VectorField::Poly { .. } => None,
        }
    }

    /// Linear combination `alpha·self + beta·other` when both share a kind.
    pub fn combine(&self, alpha: f64, other: &VectorField, beta: f64) -> Option<VectorField> {
        fn lin(a: &[f64], alpha: f64, b: &[f64], beta: f64) -> Vec<f64> {
            let n = a.len().max(b.len());
            (0..n)
                .map(|i| alpha * a.get(i).copied().unwrap_or(0.0) + beta * b.get(i).copied().unwrap_or(0.0))
                .collect()
        }
        match (self, other) {
            (VectorField::Poly { coeffs: a }, VectorField::Poly { coeffs: b }) => Some(VectorField::Poly {
                coeffs: lin(a, alpha, b, beta),
            }),
            (
                VectorField::Trig { constant: c1, sin: s1, cos: k1 },
                VectorField::Trig { constant: c2, sin: s2, cos: k2 },
            ) => Some(VectorField::Trig {
                constant: alpha * c1 + beta * c2,
                sin: lin(s1, alpha, s2, beta),
                cos: lin(k1, alpha, k2, beta),
            }),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_eval_and_derivatives() {
        let p = VectorField::poly([1.0, -2.0, 3.0]);
        assert_eq!(p.eval(2.0), 1.0 - 4.0 + 12.0);
        assert_eq!(p.deriv(2.0), -2.0 + 12.0);
        assert_eq!(p.deriv2(2.0), 6.0);
        assert_eq!(p.poly_degree(), Some(2));
    }

    #[test]
    fn trig_derivatives_match_finite_differences() {
        let f = VectorField::trig_with_constant(0.3, [0.5, -0.2], [0.1]);
        let h = 1e-5;
        for &x in &[0.0, 0.13, 0.77] {
            let fd1 = (f.eval(x + h) - f.eval(x - h)) / (2.0 * h);
            let fd2 = (f.eval(x + h) - 2.0 * f.eval(x) + f.eval(x - h)) / (h * h);
            assert!((fd1 - f.deriv(x)).abs() < 1e-7);
            assert!((fd2 - f.deriv2(x)).abs() < 1e-3);
        }
    }

    #[test]
    fn fourier_coefficients_reconstruct_values() {
        let f = VectorField::trig_with_constant(0.25, [1.0, 0.0, 0.5], [0.0, -0.3]);
        let m = 4;
        let c = f.fourier_coeffs(m).unwrap();
        for &x in &[0.1, 0.45, 0.9] {
            let v: Complex64 = (0..c.len())
                .map(|i| {
                    let n = i as f64 - m as f64;
                    c[i] * Complex64::from_polar(1.0, TAU * n * x)
                })
                .sum();
            assert!((v.re - f.eval(x)).abs() < 1e-14);
            assert!(v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn zero_and_constant_detection() {
        assert!(VectorField::zero().is_zero());
        assert!(VectorField::constant(2.0).is_constant());
        assert!(!VectorField::constant(2.0).is_zero());
        assert!(VectorField::trig_with_constant(1.0, [], []).is_constant());
    }
}
