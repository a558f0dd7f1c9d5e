use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::grid::{quadrature_points, FftPair, GridFunction};
use crate::error::{Error, Result};
use crate::maps::{MapSpec, PhaseSpace};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Basis {
    /// Exponentials `e^{2πinx}`, `|n| ≤ modes`.
    Fourier { modes: usize },
    /// Indicator functions of `cells` equal cells of `[lo, hi]`.
    Ulam { cells: usize, lo: f64, hi: f64 },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::Fourier { modes } => 2 * modes + 1,
            Basis::Ulam { cells, .. } => cells,
        }
    }
}

/// Row-compressed sparse real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRows {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (j, v) in row {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseRows {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).filter(|&(c, _)| c == j).map(|(_, v)| v).sum()
    }

    /// `out = Mᵀ·u`.
    pub fn transpose_apply(&self, u: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (i, &ui) in u.iter().enumerate().take(self.n) {
            if ui == 0.0 {
                continue;
            }
            for (j, v) in self.row(i) {
                out[j] += ui * v;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Entries {
    Dense(DMatrix<Complex64>),
    Sparse(SparseRows),
}

/// A finite section of the transfer operator.
///
/// In the Fourier basis `entry(m, n)` is the `e_m` coefficient of `𝓛e_n`, so the
/// operator acts on coefficient columns. In the Ulam basis the matrix is the
/// row-stochastic transition matrix `m(A_i ∩ f⁻¹A_j)/m(A_i)`, and `𝓛` acts on
/// cell values by its transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: Entries,
    basis: Basis,
    map_tag: String,
}

impl OperatorMatrix {
    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn map_tag(&self) -> &str {
        &self.map_tag
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Entry in the basis convention described on the type.
    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        match &self.entries {
            Entries::Dense(m) => m[(i, j)],
            Entries::Sparse(s) => Complex64::new(s.get(i, j), 0.0),
        }
    }

    /// Index of Fourier mode `n` (for Fourier operators).
    pub fn mode_index(&self, n: i64) -> Option<usize> {
        match self.basis {
            Basis::Fourier { modes } if n.unsigned_abs() as usize <= modes => Some((n + modes as i64) as usize),
            _ => None,
        }
    }

    /// Matrix of `𝓛` acting on coefficient vectors / cell values.
    pub fn action_matrix(&self) -> DMatrix<Complex64> {
        match &self.entries {
            Entries::Dense(m) => m.clone(),
            Entries::Sparse(s) => s.to_dense().transpose().map(|v| Complex64::new(v, 0.0)),
        }
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match (&self.entries, f) {
            (Entries::Dense(m), GridFunction::Fourier { coeffs }) if coeffs.len() == m.ncols() => {
                let v = nalgebra::DVector::from_column_slice(coeffs);
                Ok(GridFunction::Fourier {
                    coeffs: (m * v).iter().copied().collect(),
                })
            }
            (Entries::Sparse(s), GridFunction::Cells { values, lo, hi }) if values.len() == s.dim() => {
                let mut out = vec![0.0; values.len()];
                s.transpose_apply(values, &mut out);
                Ok(GridFunction::Cells {
                    values: out,
                    lo: *lo,
                    hi: *hi,
                })
            }
            _ => Err(Error::argument("function does not match the operator basis")),
        }
    }

    /// CSV with header `row,col,re,im`, one line per stored nonzero entry.
    pub fn to_csv(&self) -> String {
        use crate::io::fmt_f64;
        let mut out = String::from("row,col,re,im\n");
        match &self.entries {
            Entries::Dense(m) => {
                for i in 0..m.nrows() {
                    for j in 0..m.ncols() {
                        let v = m[(i, j)];
                        if v.re != 0.0 || v.im != 0.0 {
                            out.push_str(&format!("{i},{j},{},{}\n", fmt_f64(v.re), fmt_f64(v.im)));
                        }
                    }
                }
            }
            Entries::Sparse(s) => {
                for i in 0..s.dim() {
                    for (j, v) in s.row(i) {
                        out.push_str(&format!("{i},{j},{},0\n", fmt_f64(v)));
                    }
                }
            }
        }
        out
    }
}

/// Inverse branches of a circle map at the collocation points `k/m`, with
/// weights `1/|f'(y)|`.
pub(crate) fn circle_preimage_table(map: &MapSpec, m: usize) -> Result<Vec<Vec<(f64, f64)>>> {
    let rows = par::map_range(m, |k| -> Result<Vec<(f64, f64)>> {
        let x = k as f64 / m as f64;
        Ok(map
            .inverse_branches(x)?
            .into_iter()
            .map(|p| (p.x, 1.0 / map.d1_raw(p.x).abs()))
            .collect())
    });
    rows.into_iter().collect()
}

/// Number of collocation points for a Fourier operator with `modes` modes.
pub fn collocation_points(modes: usize) -> usize {
    quadrature_points(modes)
}

/// Fourier matrix of `𝓛φ(x) = Σ_{f(y)=x} φ(y)/|f'(y)|` by collocation.
pub fn build_circle_operator(map: &MapSpec, modes: usize) -> Result<OperatorMatrix> {
    if !map.is_circle() {
        return Err(Error::argument("Fourier operators need a circle map"));
    }
    if modes < 4 {
        return Err(Error::argument(format!("need at least 4 Fourier modes, got {modes}")));
    }
    let m = collocation_points(modes);
    let table = circle_preimage_table(map, m)?;
    let fft = FftPair::new(m);
    let dim = 2 * modes + 1;
    let columns = par::map_range(dim, |col| {
        let n = col as f64 - modes as f64;
        let samples: Vec<Complex64> = table
            .iter()
            .map(|pre| {
                pre.iter()
                    .map(|&(y, w)| Complex64::from_polar(w, TAU * (n * y).rem_euclid(1.0)))
                    .sum()
            })
            .collect();
        fft.analyze(samples, modes)
    });
    let mut entries = DMatrix::zeros(dim, dim);
    for (col, c) in columns.into_iter().enumerate() {
        for (row, v) in c.into_iter().enumerate() {
            entries[(row, col)] = v;
        }
    }
    Ok(OperatorMatrix {
        entries: Entries::Dense(entries),
        basis: Basis::Fourier { modes },
        map_tag: map.describe(),
    })
}

/// Ulam transition matrix on `cells` equal cells of the phase interval.
///
/// Preimage intervals come from the closed-form branch inverses. Image mass
/// that falls outside the interval (possible for perturbed maps) is reinjected
/// into the cell holding the critical value, so rows stay stochastic and the
/// escaping cells stay transient. Clamping it to the boundary cell instead
/// would turn that cell into a spurious absorbing state.
pub fn build_ulam_operator(map: &MapSpec, cells: usize) -> Result<OperatorMatrix> {
    let PhaseSpace::Interval { lo, hi } = map.phase() else {
        return Err(Error::argument("Ulam operators need an interval map"));
    };
    if cells < 2 {
        return Err(Error::argument(format!("need at least 2 Ulam cells, got {cells}")));
    }
    let width = (hi - lo) / cells as f64;
    let edge = |i: usize| if i == cells { hi } else { lo + i as f64 * width };
    let pieces = map.pieces();
    let reinject = map
        .critical_point()
        .map(|c| map.eval_raw(c))
        .filter(|v| v.is_finite())
        .map(|v| (((v.clamp(lo, hi) - lo) / width).floor() as usize).min(cells - 1));
    let rows = par::map_range(cells, |i| {
        let (a, b) = (edge(i), edge(i + 1));
        let mut row: Vec<(usize, f64)> = Vec::new();
        for (piece, &(plo, phi)) in pieces.iter().enumerate() {
            let (p, q) = (a.max(plo), b.min(phi));
            if q <= p {
                continue;
            }
            let (fp, fq) = (map.eval_raw(p), map.eval_raw(q));
            let inv = |y: f64| -> f64 {
                if y == fp {
                    p
                } else if y == fq {
                    q
                } else {
                    map.piece_inverse(piece, y)
                        .unwrap_or(if (y - fp).abs() < (y - fq).abs() { p } else { q })
                        .clamp(p, q)
                }
            };
            let (ymin, ymax) = (fp.min(fq), fp.max(fq));
            let mut add = |j: usize, mass: f64| {
                if mass > 0.0 {
                    match row.iter_mut().find(|(c, _)| *c == j) {
                        Some(e) => e.1 += mass,
                        None => row.push((j, mass)),
                    }
                }
            };
            if ymin < lo {
                let top = ymax.min(lo);
                add(reinject.unwrap_or(0), (inv(top) - inv(ymin)).abs());
            }
            if ymax > hi {
                let bottom = ymin.max(hi);
                add(reinject.unwrap_or(cells - 1), (inv(ymax) - inv(bottom)).abs());
            }
            let (ya, yb) = (ymin.max(lo), ymax.min(hi));
            if yb <= ya {
                continue;
            }
            let j0 = (((ya - lo) / width).floor() as usize).min(cells - 1);
            let j1 = (((yb - lo) / width).ceil() as usize).clamp(j0 + 1, cells);
            for j in j0..j1 {
                let (yl, yr) = (ya.max(edge(j)), yb.min(edge(j + 1)));
                if yr > yl {
                    add(j, (inv(yr) - inv(yl)).abs());
                }
            }
        }
        row.sort_by_key(|&(j, _)| j);
        row.into_iter().map(|(j, m)| (j, (m / width).min(1.0))).collect::<Vec<_>>()
    });
    Ok(OperatorMatrix {
        entries: Entries::Sparse(SparseRows::from_rows(rows)),
        basis: Basis::Ulam { cells, lo, hi },
        map_tag: map.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, LogisticMap, TentMap};

    #[test]
    fn doubling_matrix_halves_even_modes() {
        let op = build_circle_operator(&CircleMap::doubling().into(), 4).unwrap();
        for m in -4i64..=4 {
            for n in -4i64..=4 {
                let v = op.entry(op.mode_index(m).unwrap(), op.mode_index(n).unwrap());
                let expected = if n == 2 * m { 1.0 } else { 0.0 };
                assert!((v - Complex64::new(expected, 0.0)).norm() < 1e-14, "({m},{n}) = {v}");
            }
        }
    }

    #[test]
    fn constant_mode_row_conserves_mass() {
        let map = MapSpec::from(CircleMap::new(3, vec![0.05], vec![0.02]).unwrap());
        let op = build_circle_operator(&map, 16).unwrap();
        let zero = op.mode_index(0).unwrap();
        for n in 0..op.dim() {
            let expected = if n == zero { 1.0 } else { 0.0 };
            assert!((op.entry(zero, n) - Complex64::new(expected, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn full_tent_two_cells() {
        let op = build_ulam_operator(&TentMap::full().into(), 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((op.entry(i, j).re - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ulam_rows_are_stochastic() {
        let maps: Vec<MapSpec> = vec![
            TentMap::new(0.4142, 0.0).unwrap().into(),
            LogisticMap::new(3.7).unwrap().into(),
            LogisticMap::new(4.0).unwrap().into(),
        ];
        for map in maps {
            let op = build_ulam_operator(&map, 257).unwrap();
            let Entries::Sparse(s) = op.entries() else { panic!() };
            for i in 0..s.dim() {
                let sum: f64 = s.row(i).map(|(_, v)| v).sum();
                assert!((sum - 1.0).abs() < 1e-12, "row {i} sums to {sum}");
                assert!(s.row(i).all(|(_, v)| (0.0..=1.0 + 1e-15).contains(&v)));
            }
        }
    }

    #[test]
    fn leaking_images_stay_stochastic() {
        let base: MapSpec = TentMap::new(0.5, 0.0).unwrap().into();
        let f = base
            .pushed(-0.01, &crate::maps::VectorField::poly([1.0, 0.2]))
            .unwrap();
        let op = build_ulam_operator(&f, 100).unwrap();
        let Entries::Sparse(s) = op.entries() else { panic!() };
        let sum: f64 = s.row(0).map(|(_, v)| v).sum();
        assert!((sum - 1.0).abs() < 1e-12);
        let peak_cell = ((f.eval_raw(0.0) + 1.0) / 0.02).floor() as usize;
        assert!(s.row(0).any(|(j, _)| j == peak_cell), "escaping mass is reinjected at the critical value");
    }
}
