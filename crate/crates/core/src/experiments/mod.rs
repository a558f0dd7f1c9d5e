//! Parameter scans: moduli of continuity of `t ↦ μ_t` and the three-way
//! response comparison.

pub mod fit;
mod holder;
mod modulus;

pub use holder::{birkhoff_estimate, holder_scan, BirkhoffEstimate, HolderConfig, LYAPUNOV_FLOOR};
pub use modulus::{modulus_scan, ModulusConfig};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::family::Family;
use crate::io::{fmt_f64, CsvWriter};
use crate::maps::Observable;
use crate::response::{fd_derivative, fd_extrapolate, response_resolvent, ruelle_sum, Deltas, ResponseReport};
use crate::transfer::Method;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub t: f64,
    /// `‖ρ_t − ρ_{t₀}‖₁` or `|∫φdμ_t − ∫φdμ_{t₀}|`.
    pub delta: f64,
    pub stderr: Option<f64>,
    pub resolution: usize,
    pub accepted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScanFit {
    /// Exponent of `delta ≈ C|Δt|^β`.
    pub beta: Option<f64>,
    pub beta_ci_lo: Option<f64>,
    pub beta_ci_hi: Option<f64>,
    /// Slope of `delta/|Δt|` against `log(1/|Δt|)`.
    pub log_coeff: Option<f64>,
    /// Exponent against `|Δt|·log(1/|Δt|)`.
    pub beta_log: Option<f64>,
    /// `max/min` of `delta / (|Δt|·log(1/|Δt|))` over accepted rows.
    pub log_ratio_spread: Option<f64>,
    pub degenerate: bool,
    pub accepted: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridMeta {
    pub t0: f64,
    pub resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seeds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orbit_len: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    /// Parameters whose density solve failed, with the error.
    pub dropped: Vec<(f64, String)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub fit: ScanFit,
    pub meta: GridMeta,
}

/// Distances at or below this count as zero when fitting.
pub const NOISE_FLOOR: f64 = 1e-13;

impl ScanReport {
    pub(crate) fn new(mut rows: Vec<ScanRow>, meta: GridMeta) -> Self {
        let t0 = meta.t0;
        rows.sort_by(|a, b| {
            (a.t - t0)
                .abs()
                .total_cmp(&(b.t - t0).abs())
                .then(a.t.total_cmp(&b.t))
        });
        let fit = fit_rows(&rows, t0);
        ScanReport { rows, fit, meta }
    }

    /// CSV with header `t,delta,stderr,resolution,accepted`; missing standard
    /// errors are left empty.
    pub fn to_csv(&self) -> String {
        let mut w = CsvWriter::new(&["t", "delta", "stderr", "resolution", "accepted"]);
        for r in &self.rows {
            w.row(&[
                fmt_f64(r.t),
                fmt_f64(r.delta),
                r.stderr.map(fmt_f64).unwrap_or_default(),
                r.resolution.to_string(),
                r.accepted.to_string(),
            ]);
        }
        w.finish()
    }

    /// JSON sidecar: the fit keys at top level plus grid metadata and the
    /// excluded rows.
    pub fn sidecar_json(&self) -> String {
        #[derive(Serialize)]
        struct Excluded {
            t: f64,
            lyapunov: Option<f64>,
        }
        #[derive(Serialize)]
        struct Sidecar<'a> {
            #[serde(flatten)]
            fit: &'a ScanFit,
            meta: &'a GridMeta,
            excluded: Vec<Excluded>,
        }
        crate::io::to_json(&Sidecar {
            fit: &self.fit,
            meta: &self.meta,
            excluded: self
                .rows
                .iter()
                .filter(|r| !r.accepted)
                .map(|r| Excluded {
                    t: r.t,
                    lyapunov: r.lyapunov,
                })
                .collect(),
        })
    }
}

fn fit_rows(rows: &[ScanRow], t0: f64) -> ScanFit {
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.accepted && r.delta > NOISE_FLOOR && r.t != t0)
        .map(|r| ((r.t - t0).abs(), r.delta))
        .collect();
    let accepted = rows.iter().filter(|r| r.accepted).count();
    let degenerate = usable.len() < 2;
    if degenerate {
        return ScanFit {
            degenerate,
            accepted,
            ..Default::default()
        };
    }
    let plain: Vec<(f64, f64)> = usable.iter().map(|&(dt, d)| (dt.ln(), d.ln())).collect();
    let fit = fit::linear_fit(&plain);
    let logged: Vec<(f64, f64)> = usable
        .iter()
        .filter(|&&(dt, _)| dt < 1.0)
        .map(|&(dt, d)| ((dt * (1.0 / dt).ln()).ln(), d.ln()))
        .collect();
    let coeff: Vec<(f64, f64)> = usable.iter().map(|&(dt, d)| ((1.0 / dt).ln(), d / dt)).collect();
    let ratios: Vec<f64> = usable
        .iter()
        .filter(|&&(dt, _)| dt < 1.0)
        .map(|&(dt, d)| d / (dt * (1.0 / dt).ln()))
        .collect();
    let spread = (!ratios.is_empty()).then(|| {
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    });
    ScanFit {
        beta: fit.map(|f| f.slope),
        beta_ci_lo: fit.map(|f| f.slope_ci().0),
        beta_ci_hi: fit.map(|f| f.slope_ci().1),
        log_coeff: fit::linear_fit(&coeff).map(|f| f.slope),
        beta_log: fit::linear_fit(&logged).map(|f| f.slope),
        log_ratio_spread: spread,
        degenerate,
        accepted,
    }
}

/// Finite differences, resolvent formula and Ruelle series for one circle family.
pub fn three_way_report(
    family: &Family,
    phi: &Observable,
    terms: usize,
    steps: &[f64],
    modes: usize,
) -> Result<ResponseReport> {
    let fd = fd_derivative(family, phi, steps, Method::Fourier, modes);
    let (fd_extrapolated, fd_converged) = fd_extrapolate(&fd);
    let resolvent = response_resolvent(&family.base, &family.field, phi, modes)?;
    let mut report = ruelle_sum(&family.base, &family.field, phi, terms, modes)?;
    let s = report.ruelle_partials.last().copied().unwrap_or(0.0);
    let deltas = fd_extrapolated.map(|fd| Deltas {
        fd_resolvent: (fd - resolvent).abs(),
        ruelle_resolvent: (s - resolvent).abs(),
        fd_ruelle: (fd - s).abs(),
    });
    report.converged = report.converged
        && fd_converged
        && deltas.is_some_and(|d| d.fd_resolvent <= 1e-6 && d.ruelle_resolvent <= report.tail_bound.max(1e-6));
    report.fd = fd;
    report.fd_extrapolated = fd_extrapolated;
    report.resolvent = Some(resolvent);
    report.deltas = deltas;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, VectorField};
    use crate::response::dyadic_steps;
    use std::f64::consts::PI;

    #[test]
    fn three_way_on_doubling() {
        let fam = Family::new(CircleMap::doubling().into(), VectorField::trig([1.0], [])).unwrap();
        let r = three_way_report(&fam, &VectorField::trig([], [1.0]), 10, &dyadic_steps(1e-3, 3), 32).unwrap();
        assert!((r.resolvent.unwrap() + PI).abs() < 1e-10);
        assert!((r.ruelle_partials.last().unwrap() + PI).abs() < 1e-10);
        assert!((r.fd_extrapolated.unwrap() + PI).abs() < 1e-6);
    }

    #[test]
    fn three_way_zero_field() {
        let fam = Family::new(CircleMap::doubling().into(), VectorField::trig([], [])).unwrap();
        let r = three_way_report(&fam, &VectorField::trig([], [1.0]), 5, &[1e-2, 5e-3], 16).unwrap();
        assert_eq!(r.resolvent, Some(0.0));
        assert!(r.ruelle_partials.iter().all(|&s| s == 0.0));
        assert_eq!(r.fd_extrapolated, Some(0.0));
    }

    #[test]
    fn rows_sorted_and_csv_header() {
        let rows = vec![
            ScanRow { t: 0.5, delta: 0.1, stderr: None, resolution: 8, accepted: true, lyapunov: None },
            ScanRow { t: -0.25, delta: 0.05, stderr: Some(0.01), resolution: 8, accepted: true, lyapunov: None },
        ];
        let r = ScanReport::new(rows, GridMeta::default());
        assert_eq!(r.rows[0].t, -0.25);
        assert!(r.to_csv().starts_with("t,delta,stderr,resolution,accepted\n-0.25,0.05,0.01,8,true\n0.5,0.1,,8,true\n"));
        let json = r.sidecar_json();
        for key in ["beta", "beta_ci_lo", "beta_ci_hi", "log_coeff"] {
            assert!(json.contains(&format!("\"{key}\"")));
        }
    }
}
