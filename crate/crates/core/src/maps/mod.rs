//! Parametric one-dimensional maps: expanding circle maps, the tent family and
//! the logistic family, plus image perturbations `f + s·X∘f`.

mod circle;
mod field;
mod interval;
pub mod orbit;
pub mod spec;

pub use circle::{wrap_unit, CircleMap};
pub use field::{Observable, VectorField};
pub use interval::{LogisticMap, TentMap};
pub use orbit::{critical_orbit, critical_orbit_dd, orbit_stats, MarkovData, OrbitStats};

use serde::{Deserialize, Serialize};

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};

const NEWTON_CAP: usize = 100;
const NEWTON_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MapKind {
    Circle(CircleMap),
    Tent(TentMap),
    Logistic(LogisticMap),
}

/// Perturbation in the image point: the map becomes `u + t·X(u)` with `u = f(x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Push {
    pub t: f64,
    pub field: VectorField,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseSpace {
    Circle,
    Interval { lo: f64, hi: f64 },
}

impl PhaseSpace {
    pub fn bounds(&self) -> (f64, f64) {
        match *self {
            PhaseSpace::Circle => (0.0, 1.0),
            PhaseSpace::Interval { lo, hi } => (lo, hi),
        }
    }
}

/// First or second derivative; `kink` marks the tent turning point, where the
/// left-branch value is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub kink: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preimage {
    pub branch: usize,
    pub x: f64,
}

/// A concrete map: one of the three families, optionally pushed along a field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    kind: MapKind,
    push: Option<Push>,
    expansion: Option<f64>,
}

impl From<CircleMap> for MapSpec {
    fn from(c: CircleMap) -> Self {
        let floor = c.expansion_floor();
        MapSpec {
            kind: MapKind::Circle(c),
            push: None,
            expansion: Some(floor),
        }
    }
}

impl From<TentMap> for MapSpec {
    fn from(t: TentMap) -> Self {
        let s = t.slope();
        MapSpec {
            kind: MapKind::Tent(t),
            push: None,
            expansion: Some(s),
        }
    }
}

impl From<LogisticMap> for MapSpec {
    fn from(l: LogisticMap) -> Self {
        MapSpec {
            kind: MapKind::Logistic(l),
            push: None,
            expansion: None,
        }
    }
}

impl MapSpec {
    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn push(&self) -> Option<&Push> {
        self.push.as_ref()
    }

    /// Returns `f + t·X∘f` for an unperturbed `self`.
    pub fn pushed(&self, t: f64, field: &VectorField) -> Result<MapSpec> {
        if self.push.is_some() {
            return Err(Error::argument("map is already perturbed"));
        }
        if !t.is_finite() {
            return Err(Error::argument("non-finite family parameter"));
        }
        if t == 0.0 || field.is_zero() {
            return Ok(self.clone());
        }
        if matches!(self.kind, MapKind::Circle(_)) && !field.is_periodic() && !field.is_constant() {
            return Err(Error::precondition(
                "circle families need a periodic (trig) vector field",
            ));
        }
        let mut out = MapSpec {
            kind: self.kind.clone(),
            push: Some(Push {
                t,
                field: field.clone(),
            }),
            expansion: None,
        };
        // u ↦ u + tX(u) must be increasing on the range of the base map.
        if let Some((ulo, uhi)) = out.base_range() {
            let n = 1024;
            for i in 0..=n {
                let u = ulo + (uhi - ulo) * i as f64 / n as f64;
                if 1.0 + t * field.deriv(u) <= 0.0 {
                    return Err(Error::precondition(format!(
                        "image perturbation with t = {t} folds the range at u = {u}"
                    )));
                }
            }
        }
        match out.kind {
            MapKind::Circle(_) | MapKind::Tent(_) => {
                let (lo, hi) = out.phase().bounds();
                let n = circle::CERTIFY_GRID;
                let floor = (0..n)
                    .map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64)
                    .map(|x| out.d1_raw(x).abs())
                    .fold(f64::INFINITY, f64::min);
                if floor <= 1.0 {
                    return Err(Error::precondition(format!(
                        "perturbed map at t = {t} is not expanding (inf |f'| = {floor})"
                    )));
                }
                out.expansion = Some(floor);
            }
            MapKind::Logistic(_) => {}
        }
        if let MapKind::Tent(tm) = &out.kind {
            let peak = out.eval_raw(0.0);
            if peak > 1.0 {
                return Err(Error::precondition(format!(
                    "perturbed tent peak {peak} leaves [-1, 1] ({})",
                    tm.describe()
                )));
            }
        }
        if let MapKind::Logistic(_) = &out.kind {
            let peak = out.eval_raw(0.5);
            if !(0.0..=1.0).contains(&peak) {
                return Err(Error::precondition(format!(
                    "perturbed logistic peak {peak} leaves [0, 1]"
                )));
            }
        }
        Ok(out)
    }

    pub fn phase(&self) -> PhaseSpace {
        match self.kind {
            MapKind::Circle(_) => PhaseSpace::Circle,
            MapKind::Tent(_) => PhaseSpace::Interval { lo: -1.0, hi: 1.0 },
            MapKind::Logistic(_) => PhaseSpace::Interval { lo: 0.0, hi: 1.0 },
        }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self.kind, MapKind::Circle(_))
    }

    pub fn as_tent(&self) -> Option<&TentMap> {
        match &self.kind {
            MapKind::Tent(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_circle(&self) -> Option<&CircleMap> {
        match &self.kind {
            MapKind::Circle(c) => Some(c),
            _ => None,
        }
    }

    /// Circle degree, or 2 for the unimodal families.
    pub fn degree(&self) -> usize {
        match &self.kind {
            MapKind::Circle(c) => c.degree() as usize,
            _ => 2,
        }
    }

    /// Certified lower bound of `|f'|`, when the map is uniformly expanding.
    pub fn expansion_floor(&self) -> Option<f64> {
        self.expansion
    }

    pub fn critical_point(&self) -> Option<f64> {
        match self.kind {
            MapKind::Circle(_) => None,
            MapKind::Tent(_) => Some(0.0),
            MapKind::Logistic(_) => Some(0.5),
        }
    }

    pub fn describe(&self) -> String {
        let base = match &self.kind {
            MapKind::Circle(c) => c.describe(),
            MapKind::Tent(t) => t.describe(),
            MapKind::Logistic(l) => l.describe(),
        };
        match &self.push {
            None => base,
            Some(p) => format!("{base} pushed by t={} along {}", crate::io::fmt_f64(p.t), p.field.describe()),
        }
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let ok = match self.phase() {
            PhaseSpace::Circle => x.is_finite(),
            PhaseSpace::Interval { lo, hi } => x >= lo && x <= hi,
        };
        if ok {
            Ok(())
        } else {
            let domain = match self.kind {
                MapKind::Circle(_) => "S¹",
                MapKind::Tent(_) => "[-1, 1]",
                MapKind::Logistic(_) => "[0, 1]",
            };
            Err(Error::Domain { x, domain })
        }
    }

    /// Range of the unperturbed map on its phase space (interval maps only).
    fn base_range(&self) -> Option<(f64, f64)> {
        match &self.kind {
            MapKind::Circle(_) => None,
            MapKind::Tent(t) => Some((t.peak() - t.slope(), t.peak())),
            MapKind::Logistic(l) => Some((0.0, l.t() / 4.0)),
        }
    }

    /// Unperturbed lift / map value.
    #[inline]
    fn base(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Circle(c) => c.lift(x),
            MapKind::Tent(t) => t.eval(x),
            MapKind::Logistic(l) => l.eval(x),
        }
    }

    #[inline]
    fn base_d1(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Circle(c) => c.lift_d1(x),
            MapKind::Tent(t) => t.d1(x),
            MapKind::Logistic(l) => l.d1(x),
        }
    }

    #[inline]
    fn base_d2(&self, x: f64) -> f64 {
        match &self.kind {
            MapKind::Circle(c) => c.lift_d2(x),
            MapKind::Tent(_) => 0.0,
            MapKind::Logistic(l) => -2.0 * l.t(),
        }
    }

    /// The lift (circle) or map value without domain checks or reduction.
    #[inline]
    pub fn lift_raw(&self, x: f64) -> f64 {
        let u = self.base(x);
        match &self.push {
            None => u,
            Some(p) => u + p.t * p.field.eval(u),
        }
    }

    /// `f(x)` without domain checks; circle values reduced to `[0, 1)`.
    #[inline]
    pub fn eval_raw(&self, x: f64) -> f64 {
        let y = self.lift_raw(x);
        if self.is_circle() {
            wrap_unit(y)
        } else {
            y
        }
    }

    /// `f'(x)` without checks (left-branch value at the tent kink).
    #[inline]
    pub fn d1_raw(&self, x: f64) -> f64 {
        let b1 = self.base_d1(x);
        match &self.push {
            None => b1,
            Some(p) => (1.0 + p.t * p.field.deriv(self.base(x))) * b1,
        }
    }

    #[inline]
    pub fn d2_raw(&self, x: f64) -> f64 {
        let b2 = self.base_d2(x);
        match &self.push {
            None => b2,
            Some(p) => {
                let u = self.base(x);
                let b1 = self.base_d1(x);
                p.t * p.field.deriv2(u) * b1 * b1 + (1.0 + p.t * p.field.deriv(u)) * b2
            }
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.eval_raw(x))
    }

    pub fn deriv(&self, x: f64, order: u8) -> Result<Derivative> {
        self.check_domain(x)?;
        let kink = matches!(self.kind, MapKind::Tent(_)) && x == 0.0;
        let value = match order {
            1 => self.d1_raw(x),
            2 => self.d2_raw(x),
            _ => {
                return Err(Error::argument(format!(
                    "derivative order must be 1 or 2, got {order}"
                )))
            }
        };
        Ok(Derivative { value, kink })
    }

    /// Solves `u + t·X(u) = y` for `u` in the base range.
    fn unpush(&self, y: f64) -> Option<f64> {
        let Some(p) = &self.push else {
            return Some(y);
        };
        let (ulo, uhi) = self.base_range()?;
        if let Some(deg) = p.field.poly_degree() {
            if deg <= 1 {
                let (c0, c1) = match &p.field {
                    VectorField::Poly { coeffs } => (
                        coeffs.first().copied().unwrap_or(0.0),
                        coeffs.get(1).copied().unwrap_or(0.0),
                    ),
                    VectorField::Trig { .. } => unreachable!(),
                };
                let u = (y - p.t * c0) / (1.0 + p.t * c1);
                return Some(u);
            }
        }
        let g = |u: f64| u + p.t * p.field.eval(u);
        let dg = |u: f64| 1.0 + p.t * p.field.deriv(u);
        // Extend the bracket slightly so endpoint values still solve.
        let span = uhi - ulo;
        let (lo, hi) = (ulo - 0.5 * span, uhi + 0.5 * span);
        newton_bisect(g, dg, y, lo, hi).ok()
    }

    /// Inverse of the monotone lift branch `H(x) = y` on `[0, 1]` (circle).
    fn circle_branch(&self, target: f64, branch: usize) -> Result<f64> {
        let (lo, hi) = (0.0, 1.0);
        newton_bisect(|x| self.lift_raw(x), |x| self.d1_raw(x), target, lo, hi)
            .map_err(|_| Error::BranchSolve { branch, y: target })
    }

    /// Monotone pieces of an interval map, ordered left to right.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        match self.phase() {
            PhaseSpace::Circle => vec![(0.0, 1.0)],
            PhaseSpace::Interval { lo, hi } => {
                let c = self.critical_point().expect("interval maps have a turning point");
                vec![(lo, c), (c, hi)]
            }
        }
    }

    /// Preimage of `y` on monotone piece `piece` (0 = left of the turning
    /// point). Returns `None` when `y` is not attained on that piece.
    pub fn piece_inverse(&self, piece: usize, y: f64) -> Option<f64> {
        let u = self.unpush(y)?;
        let x = match &self.kind {
            MapKind::Circle(_) => return None,
            MapKind::Tent(t) => {
                let r = (t.peak() - u) / t.slope();
                if !(-1e-15..=1.0 + 1e-15).contains(&r) {
                    return None;
                }
                let r = r.clamp(0.0, 1.0);
                if piece == 0 {
                    -r
                } else {
                    r
                }
            }
            MapKind::Logistic(l) => {
                if u < -1e-15 || u > l.t() / 4.0 + 1e-15 {
                    return None;
                }
                let xl = l.left_inverse(u.clamp(0.0, l.t() / 4.0));
                if piece == 0 {
                    xl
                } else {
                    1.0 - xl
                }
            }
        };
        Some(x)
    }

    /// All solutions of `f(x) = y`, one per monotone branch that attains `y`.
    pub fn inverse_branches(&self, y: f64) -> Result<Vec<Preimage>> {
        self.check_domain(y)?;
        match &self.kind {
            MapKind::Circle(_) => {
                let y = wrap_unit(y);
                let h0 = self.lift_raw(0.0);
                let d = self.degree();
                let m0 = (h0 - y).ceil();
                let mut out = Vec::with_capacity(d);
                for branch in 0..d {
                    let target = y + m0 + branch as f64;
                    let x = self.circle_branch(target, branch)?;
                    out.push(Preimage {
                        branch,
                        x: wrap_unit(x),
                    });
                }
                Ok(out)
            }
            MapKind::Tent(_) | MapKind::Logistic(_) => {
                let c = self.critical_point().unwrap();
                let peak = self.eval_raw(c);
                if y > peak {
                    return Ok(vec![]);
                }
                if y == peak {
                    return Ok(vec![Preimage { branch: 0, x: c }]);
                }
                let mut out = Vec::with_capacity(2);
                for piece in 0..2 {
                    if let Some(x) = self.piece_inverse(piece, y) {
                        let (lo, hi) = self.pieces()[piece];
                        if x >= lo && x <= hi && self.eval_raw(lo).min(self.eval_raw(hi)) <= y {
                            out.push(Preimage { branch: piece, x });
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// `f` in double-double (interval maps; circle lifts fall back to `f64`).
    pub fn eval_dd(&self, x: DoubleDouble) -> DoubleDouble {
        let u = match &self.kind {
            MapKind::Circle(_) => return DoubleDouble::new(self.eval_raw(x.to_f64())),
            MapKind::Tent(t) => {
                let peak = DoubleDouble::new(t.a()) + DoubleDouble::new(t.t());
                let slope = peak + DoubleDouble::ONE;
                peak - slope * x.abs()
            }
            MapKind::Logistic(l) => (x * (DoubleDouble::ONE - x)).mul_f64(l.t()),
        };
        match &self.push {
            None => u,
            Some(p) => u + p.field.eval_dd(u).mul_f64(p.t),
        }
    }

    /// `f'` in double-double (left-branch value at the kink).
    pub fn d1_dd(&self, x: DoubleDouble) -> DoubleDouble {
        let (u, b1) = match &self.kind {
            MapKind::Circle(_) => return DoubleDouble::new(self.d1_raw(x.to_f64())),
            MapKind::Tent(t) => {
                let peak = DoubleDouble::new(t.a()) + DoubleDouble::new(t.t());
                let slope = peak + DoubleDouble::ONE;
                let u = peak - slope * x.abs();
                let b1 = if x.to_f64() <= 0.0 { slope } else { -slope };
                (u, b1)
            }
            MapKind::Logistic(l) => {
                let u = (x * (DoubleDouble::ONE - x)).mul_f64(l.t());
                let b1 = (DoubleDouble::ONE - x.mul_f64(2.0)).mul_f64(l.t());
                (u, b1)
            }
        };
        match &self.push {
            None => b1,
            Some(p) => (DoubleDouble::ONE + p.field.deriv_dd(u).mul_f64(p.t)) * b1,
        }
    }
}

/// Safeguarded Newton iteration for an increasing `g` on `[lo, hi]`.
pub(crate) fn newton_bisect(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
) -> std::result::Result<f64, f64> {
    let (glo, ghi) = (g(lo) - target, g(hi) - target);
    if glo > 0.0 || ghi < 0.0 {
        // Not bracketed; allow a hair of slack for endpoint roots.
        if glo.abs() <= 4.0 * NEWTON_TOL {
            return Ok(lo);
        }
        if ghi.abs() <= 4.0 * NEWTON_TOL {
            return Ok(hi);
        }
        return Err(glo.min(ghi.abs()));
    }
    let mut x = lo + (hi - lo) * (-glo) / (ghi - glo);
    for _ in 0..NEWTON_CAP {
        let r = g(x) - target;
        if r.abs() <= NEWTON_TOL {
            return Ok(x);
        }
        if r < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let step = r / dg(x);
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-17 {
            return Ok(next);
        }
        x = next;
    }
    let r = g(x) - target;
    if r.abs() <= 1e-12 {
        Ok(x)
    } else {
        Err(r.abs())
    }
}
