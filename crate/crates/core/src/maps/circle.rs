use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points used to certify `inf |f'|` on construction.
pub(crate) const CERTIFY_GRID: usize = 8192;

/// A degree-`d` circle map given by its lift
/// `h(x) = d·x + Σ_k sin[k-1]·sin(2πkx) + cos[k-1]·cos(2πkx)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleMap {
    degree: u32,
    sin: Vec<f64>,
    cos: Vec<f64>,
    expansion_floor: f64,
}

impl CircleMap {
    pub fn new(degree: u32, sin: Vec<f64>, cos: Vec<f64>) -> Result<Self> {
        if degree < 2 {
            return Err(Error::precondition(format!(
                "circle map degree must be at least 2, got {degree}"
            )));
        }
        if sin.iter().chain(&cos).any(|c| !c.is_finite()) {
            return Err(Error::argument("non-finite lift coefficient"));
        }
        let mut map = CircleMap {
            degree,
            sin,
            cos,
            expansion_floor: 0.0,
        };
        let floor = (0..CERTIFY_GRID)
            .map(|i| map.lift_d1(i as f64 / CERTIFY_GRID as f64).abs())
            .fold(f64::INFINITY, f64::min);
        if floor <= 1.0 {
            return Err(Error::precondition(format!(
                "circle map is not expanding: inf |f'| = {floor} on the certification grid"
            )));
        }
        map.expansion_floor = floor;
        Ok(map)
    }

    /// `x ↦ d·x mod 1`.
    pub fn linear(degree: u32) -> Result<Self> {
        Self::new(degree, vec![], vec![])
    }

    pub fn doubling() -> Self {
        Self::linear(2).expect("doubling map is expanding")
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    /// Grid-certified `inf |f'|`.
    pub fn expansion_floor(&self) -> f64 {
        self.expansion_floor
    }

    pub fn lift(&self, x: f64) -> f64 {
        let mut h = self.degree as f64 * x;
        for (k, &a) in self.sin.iter().enumerate() {
            h += a * (TAU * (k + 1) as f64 * x).sin();
        }
        for (k, &b) in self.cos.iter().enumerate() {
            h += b * (TAU * (k + 1) as f64 * x).cos();
        }
        h
    }

    pub fn lift_d1(&self, x: f64) -> f64 {
        let mut d = self.degree as f64;
        for (k, &a) in self.sin.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            d += a * w * (w * x).cos();
        }
        for (k, &b) in self.cos.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            d -= b * w * (w * x).sin();
        }
        d
    }

    pub fn lift_d2(&self, x: f64) -> f64 {
        let mut d = 0.0;
        for (k, &a) in self.sin.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            d -= a * w * w * (w * x).sin();
        }
        for (k, &b) in self.cos.iter().enumerate() {
            let w = TAU * (k + 1) as f64;
            d -= b * w * w * (w * x).cos();
        }
        d
    }

    pub fn describe(&self) -> String {
        let list = |v: &[f64]| v.iter().map(|x| crate::io::fmt_f64(*x)).collect::<Vec<_>>().join(",");
        let mut s = format!("circle:d={}", self.degree);
        if !self.sin.is_empty() {
            s += &format!(",sin={}", list(&self.sin));
        }
        if !self.cos.is_empty() {
            s += &format!(",cos={}", list(&self.cos));
        }
        s
    }
}

/// Reduces to `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lift_is_consistent_with_degree() {
        let f = CircleMap::new(3, vec![0.05, 0.01], vec![0.02]).unwrap();
        for &x in &[0.0, 0.2, 0.71] {
            assert!((f.lift(x + 1.0) - f.lift(x) - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn non_expanding_map_is_rejected() {
        // d = 2 with a strong sine term: h' = 2 + 0.3·2π cos dips below 1
        let err = CircleMap::new(2, vec![0.3], vec![]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
        assert!(CircleMap::linear(1).is_err());
    }

    #[test]
    fn expansion_floor_is_certified() {
        let f = CircleMap::new(2, vec![0.05], vec![]).unwrap();
        let expected = 2.0 - 0.05 * TAU;
        assert!((f.expansion_floor() - expected).abs() < 1e-6);
    }

    #[test]
    fn wrap_stays_in_unit_interval() {
        assert_eq!(wrap_unit(-1e-18), 0.0);
        assert_eq!(wrap_unit(1.5), 0.5);
    }
}
