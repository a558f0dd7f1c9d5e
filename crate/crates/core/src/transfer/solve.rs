//! Fixed points, resolvents and spectral gaps of discretized transfer operators.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use super::operator::{Basis, Entries, OperatorMatrix};
use crate::error::{Error, Result};

pub const POWER_TOL: f64 = 1e-12;
pub const POWER_CAP: usize = 100_000;
/// Contraction-rate threshold below which power iteration hands over to a
/// dense solve.
pub const GAP_FALLBACK: f64 = 1e-3;
/// Largest dimension for which dense factorizations are attempted.
pub const DENSE_LIMIT: usize = 4096;
pub const DENSITY_RESIDUAL_MAX: f64 = 1e-8;
pub const RESOLVENT_REL_TOL: f64 = 1e-10;
pub const MEAN_TOL: f64 = 1e-8;
const CHOP: f64 = 1e-14;

/// Invariant probability density `𝓛ρ = ρ`, `∫ρ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Density {
    function: GridFunction,
    residual: f64,
}

impl Density {
    pub fn function(&self) -> &GridFunction {
        &self.function
    }

    pub fn into_function(self) -> GridFunction {
        self.function
    }

    /// `‖𝓛ρ - ρ‖` at the end of the solve.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// `∫ φ dμ`.
    pub fn expectation(&self, phi: &crate::maps::Observable) -> f64 {
        self.function.pair_with(phi)
    }

    pub fn l1_distance(&self, other: &Density) -> Result<f64> {
        self.function.l1_distance(&other.function)
    }

    /// CSV with header `index,value` (cells) or `index,re,im` (Fourier, by mode).
    pub fn to_csv(&self) -> String {
        crate::io::grid_function_csv(&self.function)
    }
}

fn l1(v: &[f64], w: f64) -> f64 {
    v.iter().map(|x| x.abs()).sum::<f64>() * w
}

/// Eigenvector of `𝓛` for the eigenvalue 1, normalized to unit mass.
pub fn invariant_density(op: &OperatorMatrix) -> Result<Density> {
    match (op.entries(), op.basis()) {
        (Entries::Dense(m), Basis::Fourier { modes }) => fourier_density(m, modes),
        (Entries::Sparse(_), Basis::Ulam { cells, lo, hi }) => ulam_density(op, cells, lo, hi),
        _ => Err(Error::argument("operator has an inconsistent basis")),
    }
}

fn fourier_density(m: &DMatrix<Complex64>, modes: usize) -> Result<Density> {
    let dim = 2 * modes + 1;
    let mut v = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    v[modes] = Complex64::new(1.0, 0.0);
    let mut prev_res = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 0..POWER_CAP {
        let w = m * &v;
        let scale = w[modes];
        if scale.norm() == 0.0 {
            break;
        }
        let w = w / scale;
        residual = (&w - &v).norm();
        v = w;
        if residual <= POWER_TOL {
            break;
        }
        if it > 20 && residual > 0.0 && prev_res.is_finite() && 1.0 - residual / prev_res < GAP_FALLBACK {
            log::debug!("slow power iteration (rate {}); dense solve", residual / prev_res);
            break;
        }
        prev_res = residual;
    }
    if residual > POWER_TOL {
        let (sol, res) = dense_fixed_point(m, modes)?;
        v = sol;
        residual = res;
    }
    if residual > DENSITY_RESIDUAL_MAX {
        return Err(Error::Convergence {
            what: "Fourier invariant density".into(),
            residual,
        });
    }
    // Enforce real-valuedness: c_{-n} = conj(c_n).
    let mut coeffs: Vec<Complex64> = v.iter().copied().collect();
    for k in 0..=modes {
        let a = coeffs[modes + k];
        let b = coeffs[modes - k].conj();
        let avg = (a + b) * 0.5;
        coeffs[modes + k] = avg;
        coeffs[modes - k] = avg.conj();
    }
    coeffs[modes] = Complex64::new(1.0, 0.0);
    Ok(Density {
        function: GridFunction::Fourier { coeffs },
        residual,
    })
}

/// Solves `(I - A)v = 0` with the constant-mode equation replaced by `v₀ = 1`.
fn dense_fixed_point(m: &DMatrix<Complex64>, modes: usize) -> Result<(DVector<Complex64>, f64)> {
    let dim = m.nrows();
    if dim > DENSE_LIMIT {
        return Err(Error::Numeric("dense fallback exceeds the size limit".into()));
    }
    let mut a = DMatrix::<Complex64>::identity(dim, dim) - m;
    let mut rhs = DVector::from_element(dim, Complex64::new(0.0, 0.0));
    for j in 0..dim {
        a[(modes, j)] = Complex64::new(0.0, 0.0);
    }
    a[(modes, modes)] = Complex64::new(1.0, 0.0);
    rhs[modes] = Complex64::new(1.0, 0.0);
    let v = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular fixed-point system".into()))?;
    let res = (m * &v - &v).norm();
    Ok((v, res))
}

fn ulam_density(op: &OperatorMatrix, cells: usize, lo: f64, hi: f64) -> Result<Density> {
    let Entries::Sparse(s) = op.entries() else { unreachable!() };
    let w = (hi - lo) / cells as f64;
    let mut p = vec![1.0 / (hi - lo); cells];
    let mut next = vec![0.0; cells];
    let mut residual = f64::INFINITY;
    let mut prev_res = f64::INFINITY;
    let mut slow = false;
    for it in 0..POWER_CAP {
        s.transpose_apply(&p, &mut next);
        residual = l1(
            &next.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>(),
            w,
        );
        // Lazy step (I + 𝓛)/2 has the same fixed point and no eigenvalue -1.
        for (pi, ni) in p.iter_mut().zip(&next) {
            *pi = 0.5 * (*pi + ni);
        }
        let mass = l1(&p, w);
        p.iter_mut().for_each(|x| *x /= mass);
        if residual <= POWER_TOL {
            break;
        }
        if it > 200 && it % 50 == 0 {
            if prev_res.is_finite() && (1.0 - (residual / prev_res).powf(1.0 / 50.0)) < GAP_FALLBACK {
                slow = true;
                break;
            }
            prev_res = residual;
        } else if it == 200 {
            prev_res = residual;
        }
    }
    if residual > POWER_TOL && (slow || residual > DENSITY_RESIDUAL_MAX) && cells <= DENSE_LIMIT {
        log::debug!("Ulam power iteration stalled at {residual:e}; dense solve");
        let dense = s.to_dense().transpose();
        let mut a = DMatrix::<f64>::identity(cells, cells) - &dense;
        let mut rhs = DVector::zeros(cells);
        for j in 0..cells {
            a[(0, j)] = w;
        }
        rhs[0] = 1.0;
        let v = a
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numeric("singular Ulam fixed-point system".into()))?;
        p = v.iter().copied().collect();
        s.transpose_apply(&p, &mut next);
        residual = l1(&next.iter().zip(&p).map(|(a, b)| a - b).collect::<Vec<_>>(), w);
    }
    if residual > DENSITY_RESIDUAL_MAX {
        return Err(Error::Convergence {
            what: "Ulam invariant density".into(),
            residual,
        });
    }
    if let Some(&min) = p.iter().min_by(|a, b| a.total_cmp(b)) {
        if min < -1e-10 {
            return Err(Error::Numeric(format!("density has negative cell value {min}")));
        }
    }
    p.iter_mut().for_each(|x| *x = x.max(0.0));
    let mass: f64 = crate::dd::compensated_sum(p.iter().map(|x| x * w));
    p.iter_mut().for_each(|x| *x /= mass);
    Ok(Density {
        function: GridFunction::Cells { values: p, lo, hi },
        residual,
    })
}

/// Solution of `(1 - 𝓛)u = g` on mean-zero functions.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolventSolution {
    pub u: GridFunction,
    /// `∫g` removed before solving (zero when `g` was already mean-free).
    pub discarded_mass: f64,
    /// `‖(1 - 𝓛)u - g‖ / ‖g‖` after projection.
    pub relative_residual: f64,
}

/// Solves `(1 - 𝓛)u = g`, `∫u = 0`. Inputs with `|∫g| > 1e-8` are first projected
/// by `g ↦ g - (∫g)ρ` and the removed mass is reported.
pub fn resolvent_solve(op: &OperatorMatrix, g: &GridFunction) -> Result<ResolventSolution> {
    if g.len() != op.dim() {
        return Err(Error::argument("function does not match the operator basis"));
    }
    let mut g = g.clone();
    let mass = g.integral();
    let discarded_mass = if mass.abs() > MEAN_TOL {
        log::info!("resolvent input has mass {mass:e}; projecting to mean zero");
        let rho = invariant_density(op)?;
        g.axpy(-mass, rho.function())?;
        mass
    } else {
        0.0
    };
    if g.max_abs() == 0.0 {
        return Ok(ResolventSolution {
            u: g,
            discarded_mass,
            relative_residual: 0.0,
        });
    }
    let u = match (op.entries(), &g) {
        (Entries::Dense(m), GridFunction::Fourier { coeffs }) => {
            let modes = coeffs.len() / 2;
            let dim = coeffs.len();
            let mut a = DMatrix::<Complex64>::identity(dim, dim) - m;
            let mut rhs = DVector::from_column_slice(coeffs);
            for j in 0..dim {
                a[(modes, j)] = Complex64::new(0.0, 0.0);
            }
            a[(modes, modes)] = Complex64::new(1.0, 0.0);
            rhs[modes] = Complex64::new(0.0, 0.0);
            let v = a
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::Numeric("singular resolvent system".into()))?;
            let mut coeffs: Vec<Complex64> = v.iter().copied().collect();
            coeffs[modes] = Complex64::new(0.0, 0.0);
            GridFunction::Fourier { coeffs }
        }
        (Entries::Sparse(s), GridFunction::Cells { values, lo, hi }) => {
            GridFunction::Cells {
                values: ulam_resolvent(s, values, (hi - lo) / values.len() as f64)?,
                lo: *lo,
                hi: *hi,
            }
        }
        _ => return Err(Error::argument("operator has an inconsistent basis")),
    };
    let lu = op.apply(&u)?;
    let mut r = u.clone();
    r.axpy(-1.0, &lu)?;
    r.axpy(-1.0, &g)?;
    let gnorm = norm(&g);
    let relative_residual = norm(&r) / gnorm;
    if relative_residual > RESOLVENT_REL_TOL {
        return Err(Error::Convergence {
            what: "resolvent solve".into(),
            residual: relative_residual,
        });
    }
    Ok(ResolventSolution {
        u,
        discarded_mass,
        relative_residual,
    })
}

fn norm(f: &GridFunction) -> f64 {
    match f {
        GridFunction::Fourier { coeffs } => coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
        GridFunction::Cells { values, lo, hi } => l1(values, (hi - lo) / values.len() as f64),
    }
}

/// Neumann series of the lazy operator: `u = Σ_k ((1+𝓛)/2)^k g/2`.
fn ulam_resolvent(s: &super::operator::SparseRows, g: &[f64], w: f64) -> Result<Vec<f64>> {
    let n = g.len();
    let mut term: Vec<f64> = g.iter().map(|x| 0.5 * x).collect();
    let mut u = term.clone();
    let mut next = vec![0.0; n];
    let gnorm = l1(g, w);
    for _ in 0..POWER_CAP {
        s.transpose_apply(&term, &mut next);
        for (t, nx) in term.iter_mut().zip(&next) {
            *t = 0.5 * (*t + nx);
        }
        let tn = l1(&term, w);
        for (ui, ti) in u.iter_mut().zip(&term) {
            *ui += ti;
        }
        if tn <= 1e-3 * RESOLVENT_REL_TOL * gnorm {
            let mean = crate::dd::compensated_sum(u.iter().map(|x| x * w)) / (w * n as f64);
            u.iter_mut().for_each(|x| *x -= mean);
            return Ok(u);
        }
    }
    Err(Error::Convergence {
        what: "Ulam resolvent series".into(),
        residual: l1(&term, w) / gnorm,
    })
}

/// Modulus of the second largest eigenvalue of the discretized operator.
pub fn spectral_gap(op: &OperatorMatrix) -> Result<f64> {
    let dim = op.dim();
    if dim <= 1 {
        return Ok(0.0);
    }
    if dim <= 1024 {
        let eig = eigenvalues(op)?;
        let mut sorted: Vec<Complex64> = eig;
        // Drop the eigenvalue closest to 1.
        let idx = sorted
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
            .map(|(i, _)| i)
            .unwrap();
        sorted.remove(idx);
        let schur = sorted.iter().map(|z| z.norm()).fold(0.0, f64::max);
        return Ok(match gelfand_bound(op)? {
            Some(g) => schur.min(g),
            None => schur,
        });
    }
    deflated_radius(op)
}

/// `‖B^m‖^{1/m}` for `m = 2^10`, `B = 𝓛 - ρ⊗Leb`, by repeated squaring. An upper
/// bound on the second eigenvalue that is exact (zero) for nilpotent `B`, where
/// Schur values are polluted at the level `eps^{1/k}` by Jordan blocks.
fn gelfand_bound(op: &OperatorMatrix) -> Result<Option<f64>> {
    let Entries::Dense(m) = op.entries() else {
        return Ok(None);
    };
    if m.nrows() > 256 {
        return Ok(None);
    }
    let Basis::Fourier { modes } = op.basis() else {
        return Ok(None);
    };
    let rho = invariant_density(op)?;
    let rho = rho.function().as_fourier().unwrap();
    let mut b = m.map(|z| if z.norm() < CHOP { Complex64::new(0.0, 0.0) } else { z });
    for i in 0..b.nrows() {
        b[(i, modes)] -= rho[i];
    }
    let mut log_scale = 0.0;
    let mut power = 1.0;
    for _ in 0..10 {
        b = &b * &b;
        power *= 2.0;
        let n = b.norm();
        if n == 0.0 || !n.is_finite() {
            return Ok(if n == 0.0 { Some(0.0) } else { None });
        }
        // keep the iterate normalized; track the scale in logs
        log_scale = 2.0 * log_scale + n.ln();
        b /= Complex64::new(n, 0.0);
    }
    Ok(Some((log_scale / power).exp()))
}

/// All eigenvalues of a dense operator.
pub fn eigenvalues(op: &OperatorMatrix) -> Result<Vec<Complex64>> {
    match op.entries() {
        Entries::Dense(m) => {
            // Collocation leaves roundoff where entries vanish exactly; nilpotent
            // blocks would turn it into spurious eigenvalues of size eps^(1/k).
            let chopped = m.map(|z| if z.norm() < CHOP { Complex64::new(0.0, 0.0) } else { z });
            let schur = Schur::try_new(chopped, 1e-15, 100_000)
                .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
            let (_, t) = schur.unpack();
            Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
        }
        Entries::Sparse(s) => {
            let d = s.to_dense();
            Ok(d.complex_eigenvalues().iter().copied().collect())
        }
    }
}

/// Growth rate of `𝓛` restricted to mean-zero cell functions.
fn deflated_radius(op: &OperatorMatrix) -> Result<f64> {
    let Entries::Sparse(s) = op.entries() else {
        return Err(Error::Numeric("dense operator too large for Schur".into()));
    };
    let n = s.dim();
    let rho = invariant_density(op)?;
    let rho = rho.function().as_cells().unwrap().to_vec();
    let w = match op.basis() {
        Basis::Ulam { lo, hi, .. } => (hi - lo) / n as f64,
        _ => unreachable!(),
    };
    // deterministic mean-zero start
    let mut v: Vec<f64> = (0..n).map(|i| ((i * 7919) % 97) as f64 / 97.0 - 0.5).collect();
    let project = |v: &mut Vec<f64>| {
        let m: f64 = v.iter().sum::<f64>() * w;
        v.iter_mut().zip(&rho).for_each(|(x, r)| *x -= m * r);
    };
    project(&mut v);
    let mut next = vec![0.0; n];
    let mut log_growth = 0.0;
    let steps = 400;
    let warmup = 100;
    for k in 0..steps {
        s.transpose_apply(&v, &mut next);
        std::mem::swap(&mut v, &mut next);
        project(&mut v);
        let nv = l1(&v, w);
        if nv == 0.0 {
            return Ok(0.0);
        }
        if k >= warmup {
            log_growth += nv.ln();
        }
        v.iter_mut().for_each(|x| *x /= nv);
    }
    Ok((log_growth / (steps - warmup) as f64).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, MapSpec, TentMap, VectorField};
    use crate::transfer::{build_circle_operator, build_ulam_operator};

    #[test]
    fn doubling_density_is_lebesgue() {
        let op = build_circle_operator(&CircleMap::doubling().into(), 8).unwrap();
        let rho = invariant_density(&op).unwrap();
        let c = rho.function().as_fourier().unwrap();
        for (i, v) in c.iter().enumerate() {
            let expected = if i == 8 { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn full_tent_density_is_one_half() {
        let op = build_ulam_operator(&TentMap::full().into(), 64).unwrap();
        let rho = invariant_density(&op).unwrap();
        for &v in rho.function().as_cells().unwrap() {
            assert!((v - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn resolvent_examples_on_doubling() {
        let op = build_circle_operator(&CircleMap::doubling().into(), 8).unwrap();
        // g = 2 cos 2πx: 𝓛g = 0 so u = g
        let g = GridFunction::from_trig(&VectorField::trig([], [2.0]), 8).unwrap();
        let sol = resolvent_solve(&op, &g).unwrap();
        assert!(sol.u.l1_distance(&g).unwrap() < 1e-14);
        // g = e₂ → u = e₂ + e₁
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 17];
        coeffs[8 + 2] = Complex64::new(1.0, 0.0);
        let sol = resolvent_solve(&op, &GridFunction::Fourier { coeffs }).unwrap();
        let u = sol.u.as_fourier().unwrap();
        for (i, v) in u.iter().enumerate() {
            let expected = if i == 10 || i == 9 { 1.0 } else { 0.0 };
            assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-14);
        }
        // g = 0 → u = 0
        let sol = resolvent_solve(&op, &GridFunction::fourier_zero(8)).unwrap();
        assert_eq!(sol.u.max_abs(), 0.0);
    }

    #[test]
    fn resolvent_projects_massive_input() {
        let op = build_circle_operator(&CircleMap::doubling().into(), 8).unwrap();
        let g = GridFunction::from_trig(&VectorField::trig_with_constant(0.5, [], [1.0]), 8).unwrap();
        let sol = resolvent_solve(&op, &g).unwrap();
        assert!((sol.discarded_mass - 0.5).abs() < 1e-15);
        assert!(sol.u.integral().abs() < 1e-15);
    }

    #[test]
    fn ulam_resolvent_residual() {
        let map: MapSpec = TentMap::new(0.8, 0.0).unwrap().into();
        let op = build_ulam_operator(&map, 512).unwrap();
        let rho = invariant_density(&op).unwrap();
        let mut g = GridFunction::from_fn_cells(|x| x, 512, -1.0, 1.0);
        let m = g.integral();
        g.axpy(-m, rho.function()).unwrap();
        let sol = resolvent_solve(&op, &g).unwrap();
        assert!(sol.relative_residual < 1e-10);
        assert!(sol.u.integral().abs() < 1e-12);
    }

    #[test]
    fn spectral_gap_examples() {
        let op = build_ulam_operator(&TentMap::full().into(), 2).unwrap();
        assert!(spectral_gap(&op).unwrap() < 1e-14);
        let op = build_circle_operator(&CircleMap::doubling().into(), 16).unwrap();
        assert!(spectral_gap(&op).unwrap() < 1e-6);
    }
}
