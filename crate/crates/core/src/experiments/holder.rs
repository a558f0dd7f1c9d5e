//! Birkhoff estimates of `∫φ dμ_t` for logistic maps near a
//! Misiurewicz–Thurston parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{GridMeta, ScanReport, ScanRow};
use crate::error::{Error, Result};
use crate::maps::orbit::{markov_with_tolerance, DD_STEPS, MARKOV_TOL};
use crate::maps::{LogisticMap, MapSpec, Observable, VectorField};

pub const LYAPUNOV_FLOOR: f64 = 0.05;
pub const BURN_IN: usize = 1_000;
pub const MOM_BLOCKS: usize = 8;
const LANES: usize = 8;
const LOG_BLOCK: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolderConfig {
    pub t0: f64,
    pub param_count: usize,
    pub orbit_len: usize,
    pub seeds: usize,
    pub master_seed: u64,
    pub dt_min: f64,
    pub dt_max: f64,
}

impl Default for HolderConfig {
    fn default() -> Self {
        HolderConfig {
            t0: 4.0,
            param_count: 40,
            orbit_len: 10_000_000,
            seeds: 64,
            master_seed: 0,
            dt_min: 1e-5,
            dt_max: 1e-2,
        }
    }
}

/// Median-of-means Birkhoff average with its spread over starting points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffEstimate {
    pub value: f64,
    /// Standard deviation of per-seed averages over `√seeds`.
    pub stderr: f64,
    /// Mean over seeds of the orbit average of `log|f'|`.
    pub lyapunov: f64,
    pub restarts: usize,
}

struct LaneResult {
    mean: f64,
    lyapunov: f64,
    restarts: usize,
}

/// A polynomial observable evaluates by Horner without matching on the variant.
fn observable_fn(phi: &Observable) -> impl Fn(f64) -> f64 + Sync + '_ {
    move |x| match phi {
        VectorField::Poly { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c),
        other => other.eval(x),
    }
}

/// Runs up to [`LANES`] independent orbits interleaved, which hides the latency
/// of the logistic recurrence.
fn run_lanes(t: f64, starts: &[f64], len: usize, phi: &(impl Fn(f64) -> f64 + Sync), rng: &mut ChaCha8Rng) -> Vec<LaneResult> {
    let k = starts.len();
    debug_assert!(k <= LANES);
    let mut x = [0.5f64; LANES];
    x[..k].copy_from_slice(starts);
    let mut restarts = [0usize; LANES];
    let fresh = |rng: &mut ChaCha8Rng| -> f64 { rng.random_range(1e-6..1.0 - 1e-6) };
    let step = |x: f64| t * x * (1.0 - x);
    for _ in 0..BURN_IN {
        for xi in x.iter_mut().take(k) {
            *xi = step(*xi);
        }
    }
    for lane in 0..k {
        if x[lane] <= 0.0 || x[lane] >= 1.0 {
            x[lane] = fresh(rng);
            restarts[lane] += 1;
        }
    }
    let mut sum = [0.0f64; LANES];
    let mut logsum = [0.0f64; LANES];
    let mut done = 0;
    while done < len {
        let block = LOG_BLOCK.min(len - done);
        let mut prod = [1.0f64; LANES];
        for _ in 0..block {
            for lane in 0..LANES {
                let xi = x[lane];
                prod[lane] *= (t * (1.0 - 2.0 * xi)).abs();
                let next = step(xi);
                sum[lane] += phi(next);
                x[lane] = next;
            }
        }
        for lane in 0..k {
            let p = prod[lane];
            // An exact hit on 0, 1 or the critical point collapses the orbit.
            if p == 0.0 || x[lane] <= 0.0 || x[lane] >= 1.0 || !p.is_finite() {
                x[lane] = fresh(rng);
                restarts[lane] += 1;
                logsum[lane] += if p > 0.0 && p.is_finite() { p.ln() } else { 0.0 };
            } else {
                logsum[lane] += p.ln();
            }
        }
        done += block;
    }
    (0..k)
        .map(|lane| LaneResult {
            mean: sum[lane] / len as f64,
            lyapunov: logsum[lane] / len as f64,
            restarts: restarts[lane],
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median of [`MOM_BLOCKS`] block means over `seeds` orbits of length `len`.
/// Orbit starts and restarts come from the stream `(master_seed, stream)`.
pub fn birkhoff_estimate(t: f64, phi: &Observable, seeds: usize, len: usize, master_seed: u64, stream: u64) -> Result<BirkhoffEstimate> {
    if !(0.0 < t && t <= 4.0) {
        return Err(Error::argument(format!("logistic parameter {t} outside (0, 4]")));
    }
    if seeds == 0 || len == 0 {
        return Err(Error::argument("need at least one seed and one iterate"));
    }
    let f = observable_fn(phi);
    let groups: Vec<usize> = (0..seeds.div_ceil(LANES)).collect();
    let per_group = crate::par::map_slice(&groups, |&g| {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream);
        rng.set_word_pos((g as u128) << 40);
        let k = LANES.min(seeds - g * LANES);
        let starts: Vec<f64> = (0..k).map(|_| rng.random_range(1e-6..1.0 - 1e-6)).collect();
        run_lanes(t, &starts, len, &f, &mut rng)
    });
    let lanes: Vec<LaneResult> = per_group.into_iter().flatten().collect();
    let means: Vec<f64> = lanes.iter().map(|l| l.mean).collect();
    let n = means.len() as f64;
    let avg = means.iter().sum::<f64>() / n;
    let var = if means.len() > 1 {
        means.iter().map(|m| (m - avg).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let blocks = MOM_BLOCKS.min(means.len());
    let mut block_means: Vec<f64> = (0..blocks)
        .map(|b| {
            let chunk: Vec<f64> = means.iter().skip(b).step_by(blocks).copied().collect();
            chunk.iter().sum::<f64>() / chunk.len() as f64
        })
        .collect();
    Ok(BirkhoffEstimate {
        value: median(&mut block_means),
        stderr: (var / n).sqrt(),
        lyapunov: lanes.iter().map(|l| l.lyapunov).sum::<f64>() / n,
        restarts: lanes.iter().map(|l| l.restarts).sum(),
    })
}

/// `|∫φdμ_t − ∫φdμ_{t₀}|` for `param_count` log-spaced offsets in
/// `[dt_min, dt_max]`; one-sided below `t₀ = 4`. Rows whose Lyapunov estimate
/// is at most [`LYAPUNOV_FLOOR`] are kept but marked excluded.
pub fn holder_scan(phi: &Observable, cfg: &HolderConfig) -> Result<ScanReport> {
    if cfg.param_count == 0 || !(cfg.dt_min > 0.0 && cfg.dt_min <= cfg.dt_max) {
        return Err(Error::argument("need a positive parameter count and 0 < dt_min ≤ dt_max"));
    }
    let base: MapSpec = LogisticMap::new(cfg.t0)?.into();
    if markov_with_tolerance(&base, DD_STEPS, MARKOV_TOL)?.is_none() {
        return Err(Error::precondition(format!(
            "logistic:t={} is not Misiurewicz–Thurston (critical orbit not preperiodic)",
            crate::io::fmt_f64(cfg.t0)
        )));
    }
    let one_sided = cfg.t0 >= 4.0;
    let params: Vec<f64> = (0..cfg.param_count)
        .map(|i| {
            let frac = if cfg.param_count == 1 {
                0.0
            } else {
                i as f64 / (cfg.param_count - 1) as f64
            };
            let dt = (cfg.dt_min.ln() + frac * (cfg.dt_max / cfg.dt_min).ln()).exp();
            if one_sided || i % 2 == 0 {
                cfg.t0 - dt
            } else {
                cfg.t0 + dt
            }
        })
        .collect();
    let reference = birkhoff_estimate(cfg.t0, phi, cfg.seeds, cfg.orbit_len, cfg.master_seed, cfg.param_count as u64)?;
    let mut rows = Vec::with_capacity(params.len());
    let mut dropped = Vec::new();
    for (i, &t) in params.iter().enumerate() {
        match birkhoff_estimate(t, phi, cfg.seeds, cfg.orbit_len, cfg.master_seed, i as u64) {
            Ok(e) => rows.push(ScanRow {
                t,
                delta: (e.value - reference.value).abs(),
                stderr: Some(e.stderr.hypot(reference.stderr)),
                resolution: cfg.orbit_len,
                accepted: e.lyapunov > LYAPUNOV_FLOOR,
                lyapunov: Some(e.lyapunov),
            }),
            Err(e) => dropped.push((t, e.to_string())),
        }
    }
    let meta = GridMeta {
        t0: cfg.t0,
        resolution: cfg.orbit_len,
        seeds: Some(cfg.seeds),
        orbit_len: Some(cfg.orbit_len),
        master_seed: Some(cfg.master_seed),
        dropped,
        reference_value: Some(reference.value),
    };
    Ok(ScanReport::new(rows, meta))
}
