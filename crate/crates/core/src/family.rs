//! One-parameter families `f_t = f₀ + t·X∘f₀`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::maps::{MapSpec, VectorField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub base: MapSpec,
    pub field: VectorField,
}

impl Family {
    pub fn new(base: MapSpec, field: VectorField) -> Result<Self> {
        // validates the field against the phase space
        base.pushed(0.0, &field)?;
        Ok(Family { base, field })
    }

    /// The member `f_t`; fails when `f_t` leaves the admissible class.
    pub fn at(&self, t: f64) -> Result<MapSpec> {
        if t == 0.0 {
            return Ok(self.base.clone());
        }
        self.base.pushed(t, &self.field)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, TentMap};

    #[test]
    fn tangent_is_field_of_image() {
        let fam = Family::new(CircleMap::doubling().into(), VectorField::trig([0.05], [])).unwrap();
        let h = 1e-6;
        let (p, m) = (fam.at(h).unwrap(), fam.at(-h).unwrap());
        for x in [0.1, 0.37, 0.8] {
            let v = (p.lift_raw(x) - m.lift_raw(x)) / (2.0 * h);
            let f0 = fam.base.eval_raw(x);
            assert!((v - fam.field.eval(f0)).abs() < 1e-8);
        }
    }

    #[test]
    fn tent_native_family() {
        let tent = TentMap::new(0.5, 0.0).unwrap();
        let fam = Family::new(tent.into(), tent.native_field()).unwrap();
        let ft = fam.at(0.1).unwrap();
        assert!((ft.eval(0.0).unwrap() - 0.6).abs() < 1e-15);
        assert!(fam.at(0.6).is_err());
    }
}
