use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The symmetric tent family on `[-1, 1]`:
/// `f(x) = (a + t) - (a + t + 1)·|x|`, kink at `c = 0`, `f(±1) = -1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TentMap {
    a: f64,
    t: f64,
}

impl TentMap {
    pub fn new(a: f64, t: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::precondition(format!("tent height a = {a} must lie in (0, 1]")));
        }
        let peak = a + t;
        if peak.is_nan() || peak <= 0.0 {
            return Err(Error::precondition(format!(
                "tent slope a + t + 1 = {} must exceed 1",
                peak + 1.0
            )));
        }
        if peak > 1.0 {
            return Err(Error::precondition(format!(
                "tent peak a + t = {peak} leaves [-1, 1]"
            )));
        }
        Ok(TentMap { a, t })
    }

    pub fn full() -> Self {
        TentMap { a: 1.0, t: 0.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// `f(0) = a + t`.
    pub fn peak(&self) -> f64 {
        self.a + self.t
    }

    /// `|f'| = a + t + 1` away from the kink.
    pub fn slope(&self) -> f64 {
        self.a + self.t + 1.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.peak() - self.slope() * x.abs()
    }

    /// Derivative with the left-branch convention at the kink.
    pub fn d1(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.slope()
        } else {
            -self.slope()
        }
    }

    /// The vector field `X₀(y) = (y + 1)/(a + 1)` for which the `t`-parameter
    /// path satisfies `∂_t f_t = X₀ ∘ f_t` at `t = 0`.
    pub fn native_field(&self) -> crate::maps::VectorField {
        let k = 1.0 / (self.a + 1.0);
        crate::maps::VectorField::poly([k, k])
    }

    pub fn describe(&self) -> String {
        if self.t == 0.0 {
            format!("tent:a={}", crate::io::fmt_f64(self.a))
        } else {
            format!("tent:a={},t={}", crate::io::fmt_f64(self.a), crate::io::fmt_f64(self.t))
        }
    }
}

/// The logistic family `f(x) = t·x·(1 - x)` on `[0, 1]`, critical point `1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticMap {
    t: f64,
}

impl LogisticMap {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t <= 4.0) {
            return Err(Error::precondition(format!(
                "logistic parameter t = {t} must lie in (0, 4]"
            )));
        }
        Ok(LogisticMap { t })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.t * x * (1.0 - x)
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.t * (1.0 - 2.0 * x)
    }

    pub fn describe(&self) -> String {
        format!("logistic:t={}", crate::io::fmt_f64(self.t))
    }

    /// Preimage of `u ∈ [0, t/4]` on the left (`x ≤ 1/2`) branch, in the
    /// cancellation-free form `x = (2u/t) / (1 + √(1 - 4u/t))`.
    pub fn left_inverse(&self, u: f64) -> f64 {
        let disc = (1.0 - 4.0 * u / self.t).max(0.0);
        (2.0 * u / self.t) / (1.0 + disc.sqrt())
    }
}
