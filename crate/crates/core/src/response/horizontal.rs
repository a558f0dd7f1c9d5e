//! Horizontality index `J(f, v)` and the twisted cohomological equation
//! `v = α∘f − f'·α` for piecewise expanding tent maps.

use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::maps::{critical_orbit_dd, MapSpec, VectorField};

/// Threshold on `|J|` below which a path counts as horizontal.
pub const HORIZONTAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Horizontality {
    pub value: f64,
    pub tail_bound: f64,
    pub terms: usize,
}

fn expansion(map: &MapSpec) -> Result<f64> {
    if map.critical_point().is_none() {
        return Err(Error::argument("horizontality is defined for interval maps"));
    }
    map.expansion_floor()
        .ok_or_else(|| Error::precondition("horizontality needs a uniformly expanding (tent) map"))
}

/// `Σ_{j<J} X(c_{j+1}) / (f^j)'(c₁)` with `sup|X|·λ^{-J}/(1 − λ⁻¹)` bounding the tail.
pub fn horizontality_index(map: &MapSpec, x: &VectorField, terms: usize) -> Result<Horizontality> {
    let lambda = expansion(map)?;
    if terms == 0 {
        return Err(Error::argument("need at least one term"));
    }
    let c = map.critical_point().unwrap();
    let orbit = critical_orbit_dd(map, terms)?;
    let mut sum = DoubleDouble::ZERO;
    let mut deriv = DoubleDouble::ONE;
    for j in 0..terms {
        if j > 0 {
            let cj = orbit[j - 1];
            if cj.to_f64() == c && cj.lo == 0.0 {
                return Err(Error::precondition(format!(
                    "critical orbit returns to the turning point at c_{j}; J is undefined"
                )));
            }
            deriv = deriv * map.d1_dd(cj);
        }
        sum = sum + x.eval_dd(orbit[j]) / deriv;
    }
    let tail_bound = x.abs_bound() * lambda.powi(-(terms as i32)) / (1.0 - 1.0 / lambda);
    Ok(Horizontality {
        value: sum.to_f64(),
        tail_bound,
        terms,
    })
}

/// The horizontal field `β(x+1) + 1` (or `x+1` when that alone has `J = 0`).
pub fn horizontal_field(map: &MapSpec, terms: usize) -> Result<(VectorField, Horizontality)> {
    let one = VectorField::constant(1.0);
    let lin = VectorField::poly([1.0, 1.0]);
    let a = horizontality_index(map, &one, terms)?.value;
    let b = horizontality_index(map, &lin, terms)?.value;
    let field = if b == 0.0 {
        lin
    } else {
        let beta = -a / b;
        VectorField::poly([1.0 + beta, beta])
    };
    let h = horizontality_index(map, &field, terms)?;
    Ok((field, h))
}

/// Partial sum `−Σ_{j<depth} X(f^{j+1}x) / (f^{j+1})'(x)`; `None` when the
/// orbit of `x` lands on the turning point.
pub fn alpha_at(map: &MapSpec, x: &VectorField, point: f64, depth: usize) -> Option<f64> {
    let c = map.critical_point()?;
    let mut y = point;
    let mut deriv = 1.0;
    let mut sum = 0.0;
    for _ in 0..depth {
        if y == c {
            return None;
        }
        deriv *= map.d1_raw(y);
        y = map.eval_raw(y);
        sum -= x.eval(y) / deriv;
    }
    Some(sum)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TceSolution {
    pub grid: Vec<f64>,
    pub alpha: Vec<f64>,
    /// Grid and test points dropped because their orbit hit the turning point.
    pub skipped: usize,
    /// `sup |v − (α∘f − f'·α)|` over a grid disjoint from `grid`.
    pub residual_norm: f64,
    pub left_limit: f64,
    pub right_limit: f64,
    pub horizontality: f64,
    pub warning: Option<String>,
}

impl TceSolution {
    pub fn jump(&self) -> f64 {
        self.right_limit - self.left_limit
    }

    /// CSV with header `x,alpha`.
    pub fn to_csv(&self) -> String {
        let mut w = crate::io::CsvWriter::new(&["x", "alpha"]);
        for (x, a) in self.grid.iter().zip(&self.alpha) {
            w.row(&[crate::io::fmt_f64(*x), crate::io::fmt_f64(*a)]);
        }
        w.finish()
    }
}

/// Solves the twisted cohomological equation by the forward series on
/// `points` cell midpoints.
pub fn tce_solve(map: &MapSpec, x: &VectorField, depth: usize, points: usize) -> Result<TceSolution> {
    if depth == 0 || points < 2 {
        return Err(Error::argument("depth and grid size must be positive"));
    }
    let c = map.critical_point().unwrap_or(f64::NAN);
    let h = horizontality_index(map, x, depth.max(1))?;
    let warning = (h.value.abs() > HORIZONTAL_TOL).then(|| {
        format!(
            "path is not horizontal (J = {}); α is discontinuous at the turning point",
            crate::io::fmt_f64(h.value)
        )
    });
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    let (lo, hi) = map.phase().bounds();
    let width = (hi - lo) / points as f64;
    let evals = crate::par::map_range(points, |i| {
        let p = lo + (i as f64 + 0.5) * width;
        (p, alpha_at(map, x, p, depth))
    });
    let mut skipped = 0;
    let (mut grid, mut alpha) = (Vec::with_capacity(points), Vec::with_capacity(points));
    for (p, a) in evals {
        match a {
            Some(a) => {
                grid.push(p);
                alpha.push(a);
            }
            None => skipped += 1,
        }
    }
    let test_points = points + 1;
    let test_width = (hi - lo) / test_points as f64;
    let residuals = crate::par::map_range(test_points, |i| {
        let p = lo + (i as f64 + 1.0 / 3.0) * test_width;
        let fp = map.eval_raw(p);
        let (a, afp) = (alpha_at(map, x, p, depth)?, alpha_at(map, x, fp, depth)?);
        let v = x.eval(fp);
        Some((v - (afp - map.d1_raw(p) * a)).abs())
    });
    let mut residual_norm: f64 = 0.0;
    for r in residuals {
        match r {
            Some(r) => residual_norm = residual_norm.max(r),
            None => skipped += 1,
        }
    }
    let eps = 1e-12 * (hi - lo);
    let left_limit = alpha_at(map, x, c - eps, depth).unwrap_or(f64::NAN);
    let right_limit = alpha_at(map, x, c + eps, depth).unwrap_or(f64::NAN);
    Ok(TceSolution {
        grid,
        alpha,
        skipped,
        residual_norm,
        left_limit,
        right_limit,
        horizontality: h.value,
        warning,
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
    fn full_tent_native_field_has_index_one() {
        let map: MapSpec = TentMap::full().into();
        let h = horizontality_index(&map, &VectorField::poly([0.5, 0.5]), 60).unwrap();
        assert_eq!(h.value, 1.0);
        assert!(h.tail_bound < 1e-17);
    }

    #[test]
    fn constant_field_is_horizontal_for_silver() {
        // 1 − 1/s − (1/s²)/(1 + 1/s) = 0 when s = √2
        let h = horizontality_index(&silver(), &VectorField::constant(1.0), 80).unwrap();
        assert!(h.value.abs() < 1e-12);
    }

    #[test]
    fn zero_field_has_zero_index() {
        let h = horizontality_index(&silver(), &VectorField::zero(), 30).unwrap();
        assert_eq!(h.value, 0.0);
    }

    #[test]
    fn hand_summed_silver_index() {
        // c1 = a, c2 = -a², then the fixed point c3 = a(1 - sa) with slope -s
        let a = std::f64::consts::SQRT_2 - 1.0;
        let s = a + 1.0;
        let (c1, c2) = (a, -a * a);
        let c3 = a - s * a * a;
        let x = VectorField::poly([0.25, -0.5, 2.0]);
        let xe = |u: f64| 0.25 - 0.5 * u + 2.0 * u * u;
        // (f^1)'(c1) = -s, (f^2)'(c1) = -s·s, then each step multiplies by -s
        let mut expected = xe(c1) + xe(c2) / -s;
        let mut d = -s * s;
        for _ in 2..80 {
            expected += xe(c3) / d;
            d *= -s;
        }
        let h = horizontality_index(&silver(), &x, 80).unwrap();
        assert!((h.value - expected).abs() < 1e-12, "{} vs {expected}", h.value);
    }

    #[test]
    fn constructed_field_is_horizontal() {
        let (x, h) = horizontal_field(&silver(), 200).unwrap();
        assert!(h.value.abs() <= 1e-12);
        let sol = tce_solve(&silver(), &x, 60, 2000).unwrap();
        assert!(sol.residual_norm <= 1e-6);
        assert!(sol.warning.is_none());
        assert!(sol.jump().abs() < 1e-6);
    }

    #[test]
    fn non_horizontal_jump_matches_index() {
        let map = silver();
        let x = VectorField::poly([0.0, 1.0]);
        let sol = tce_solve(&map, &x, 80, 500).unwrap();
        assert!(sol.warning.is_some());
        let s = std::f64::consts::SQRT_2;
        assert!((sol.jump() - 2.0 * sol.horizontality / s).abs() < 1e-8);
        assert!(sol.residual_norm < 1e-9);
    }

    #[test]
    fn zero_field_tce() {
        let sol = tce_solve(&silver(), &VectorField::zero(), 60, 100).unwrap();
        assert!(sol.alpha.iter().all(|&a| a == 0.0));
        assert_eq!(sol.residual_norm, 0.0);
    }
}
