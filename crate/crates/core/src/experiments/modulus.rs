//! `‖ρ_t − ρ_{t₀}‖₁` along dyadic parameter offsets.

use serde::{Deserialize, Serialize};

use super::{GridMeta, ScanReport, ScanRow};
use crate::error::{Error, Result};
use crate::family::Family;
use crate::maps::orbit::{markov_with_tolerance, DD_STEPS, MARKOV_TOL};
use crate::transfer::{density_of, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusConfig {
    pub t0: f64,
    pub k_min: u32,
    pub k_max: u32,
    /// Ulam cells or Fourier modes.
    pub resolution: usize,
}

/// Scans `t = t₀ ± 2^{-k}`, `k_min ≤ k ≤ k_max`. Interval families must be
/// Markov at `t₀`; circle families use Fourier densities.
pub fn modulus_scan(family: &Family, cfg: &ModulusConfig) -> Result<ScanReport> {
    if cfg.k_min > cfg.k_max || cfg.k_max > 52 {
        return Err(Error::argument(format!("bad k range {}..{}", cfg.k_min, cfg.k_max)));
    }
    let base = family.at(cfg.t0)?;
    let method = Method::natural_for(&base);
    if method == Method::Ulam && markov_with_tolerance(&base, DD_STEPS, MARKOV_TOL)?.is_none() {
        return Err(Error::precondition(format!(
            "{} has no preperiodic critical orbit; the modulus scan needs a Markov base",
            base.describe()
        )));
    }
    let rho0 = density_of(&base, method, cfg.resolution)?;
    let params: Vec<f64> = (cfg.k_min..=cfg.k_max)
        .flat_map(|k| {
            let dt = (-(k as f64)).exp2();
            [cfg.t0 - dt, cfg.t0 + dt]
        })
        .collect();
    let results = crate::par::map_slice(&params, |&t| -> Result<f64> {
        let map = family.at(t)?;
        density_of(&map, method, cfg.resolution)?.l1_distance(&rho0)
    });
    let mut rows = Vec::new();
    let mut meta = GridMeta {
        t0: cfg.t0,
        resolution: cfg.resolution,
        ..Default::default()
    };
    for (t, r) in params.into_iter().zip(results) {
        match r {
            Ok(delta) => rows.push(ScanRow {
                t,
                delta,
                stderr: None,
                resolution: cfg.resolution,
                accepted: true,
                lyapunov: None,
            }),
            Err(e) => {
                log::warn!("dropping t = {t}: {e}");
                meta.dropped.push((t, e.to_string()));
            }
        }
    }
    Ok(ScanReport::new(rows, meta))
}
