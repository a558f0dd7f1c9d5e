//! Critical orbits, Collet–Eckmann growth and Misiurewicz–Thurston detection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MapSpec;
use crate::dd::DoubleDouble;
use crate::error::{Error, Result};

/// Steps iterated in double-double before switching to `f64`.
pub const DD_STEPS: usize = 200;
/// Orbit-prefix matching tolerance for Markov detection.
pub const MARKOV_TOL: f64 = 1e-9;

const LYAPUNOV_BURN_IN: usize = 1_000;
const LYAPUNOV_LEN: usize = 1_000_000;
const MAX_RESTARTS: usize = 16;

/// Preperiodic critical orbit: `c_{j+p} = c_j` with `|(f^p)'(c_j)| > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovData {
    pub preperiod: usize,
    pub period: usize,
    pub multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitStats {
    pub lyapunov: f64,
    /// `(k, |(f^k)'(c₁)|^{1/k})`.
    pub ce_growth: Vec<(usize, f64)>,
    pub markov: Option<MarkovData>,
    /// `c₁..c_N`.
    pub postcritical_prefix: Vec<f64>,
    /// Number of Lyapunov restarts caused by landing on the critical point.
    pub restarts: usize,
}

fn require_interval(map: &MapSpec) -> Result<f64> {
    map.critical_point()
        .ok_or_else(|| Error::argument("critical orbits are defined for tent and logistic maps"))
}

/// `c₁..c_n` in double-double for the first [`DD_STEPS`] steps, `f64` after.
pub fn critical_orbit_dd(map: &MapSpec, n: usize) -> Result<Vec<DoubleDouble>> {
    let c = require_interval(map)?;
    if n == 0 {
        return Err(Error::argument("orbit length must be at least 1"));
    }
    let mut out = Vec::with_capacity(n);
    let mut x = DoubleDouble::new(c);
    for k in 0..n {
        x = if k < DD_STEPS {
            map.eval_dd(x)
        } else {
            DoubleDouble::new(map.eval_raw(x.to_f64()))
        };
        out.push(x);
    }
    Ok(out)
}

/// `c₁ = f(c)`, `c_{k+1} = f(c_k)`, rounded to `f64`.
pub fn critical_orbit(map: &MapSpec, n: usize) -> Result<Vec<f64>> {
    Ok(critical_orbit_dd(map, n)?.into_iter().map(DoubleDouble::to_f64).collect())
}

fn detect_markov(map: &MapSpec, orbit: &[DoubleDouble], tol: f64) -> Option<MarkovData> {
    let c = map.critical_point()?;
    let n = orbit.len();
    let as_f64: Vec<f64> = orbit.iter().map(|x| x.to_f64()).collect();
    // orbit[k] holds c_{k+1}
    let max_period = (n / 4).max(1);
    for j in 1..n {
        for p in 1..=max_period {
            if j + 2 * p > n {
                break;
            }
            let cj = as_f64[j - 1];
            let matched = (as_f64[j + p - 1] - cj).abs() <= tol
                && (as_f64[j + 2 * p - 1] - as_f64[j + p - 1]).abs() <= tol;
            if !matched {
                continue;
            }
            // Confirm at double-double precision.
            let diff = (orbit[j + p - 1] - orbit[j - 1]).abs().to_f64();
            if diff > tol {
                continue;
            }
            let cycle = &orbit[j - 1..j - 1 + p];
            if cycle.iter().any(|x| (x.to_f64() - c).abs() <= tol) {
                return None;
            }
            let mult = cycle
                .iter()
                .fold(DoubleDouble::ONE, |acc, &x| acc * map.d1_dd(x))
                .abs()
                .to_f64();
            if mult > 1.0 {
                return Some(MarkovData {
                    preperiod: j,
                    period: p,
                    multiplier: mult,
                });
            }
            return None;
        }
    }
    None
}

/// Markov detection with an explicit tolerance, on an orbit of length `depth`.
pub fn markov_with_tolerance(map: &MapSpec, depth: usize, tol: f64) -> Result<Option<MarkovData>> {
    let orbit = critical_orbit_dd(map, depth)?;
    Ok(detect_markov(map, &orbit, tol))
}

/// Expansion statistics for an interval map, or a Lyapunov estimate alone for
/// circle maps.
pub fn orbit_stats(map: &MapSpec, depth: usize, seed: u64) -> Result<OrbitStats> {
    if depth < 10 {
        return Err(Error::argument(format!("orbit depth must be at least 10, got {depth}")));
    }
    let (lyapunov, restarts) = lyapunov_estimate(map, seed, LYAPUNOV_LEN)?;
    if map.critical_point().is_none() {
        return Ok(OrbitStats {
            lyapunov,
            ce_growth: vec![],
            markov: None,
            postcritical_prefix: vec![],
            restarts,
        });
    }
    let orbit = critical_orbit_dd(map, depth)?;
    let markov = detect_markov(map, &orbit, MARKOV_TOL);

    // For Markov maps, continue the orbit along the detected cycle so that
    // rounding drift near the repelling cycle does not pollute the table.
    let point = |k: usize| -> DoubleDouble {
        match markov {
            Some(m) if k + 1 >= m.preperiod => {
                let offset = (k + 1 - m.preperiod) % m.period;
                orbit[m.preperiod - 1 + offset]
            }
            _ => orbit[k],
        }
    };
    let mut log_deriv = 0.0;
    let mut ce_growth = Vec::with_capacity(depth);
    for k in 1..=depth {
        let d = map.d1_dd(point(k - 1)).abs().to_f64();
        log_deriv += d.ln();
        ce_growth.push((k, (log_deriv / k as f64).exp()));
    }
    Ok(OrbitStats {
        lyapunov,
        ce_growth,
        markov,
        postcritical_prefix: (0..depth).map(|k| point(k).to_f64()).collect(),
        restarts,
    })
}

/// Burned-in orbit average of `log|f'|` from a random start; restarts from a
/// perturbed point when the orbit lands on the critical point.
pub fn lyapunov_estimate(map: &MapSpec, seed: u64, len: usize) -> Result<(f64, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = map.phase().bounds();
    let mut x: f64 = lo + (hi - lo) * rng.random::<f64>();
    for restart in 0..MAX_RESTARTS {
        match lyapunov_run(map, x, len) {
            Some(l) => return Ok((l, restart)),
            None => {
                log::debug!("orbit hit the critical point; restarting (seed {seed})");
                x = lo + (hi - lo) * rng.random::<f64>();
            }
        }
    }
    Err(Error::Numeric(
        "every Lyapunov restart hit the critical point".into(),
    ))
}

fn lyapunov_run(map: &MapSpec, mut x: f64, len: usize) -> Option<f64> {
    for _ in 0..LYAPUNOV_BURN_IN {
        x = map.eval_raw(x);
    }
    // Products over short blocks keep the number of logarithms small.
    let mut acc = 0.0;
    let mut prod = 1.0;
    for i in 0..len {
        let d = map.d1_raw(x).abs();
        if d == 0.0 {
            return None;
        }
        prod *= d;
        if i % 16 == 15 {
            acc += prod.ln();
            prod = 1.0;
        }
        x = map.eval_raw(x);
    }
    acc += prod.ln();
    Some(acc / len as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{CircleMap, LogisticMap, TentMap};

    fn sqrt2_tent() -> MapSpec {
        TentMap::new(std::f64::consts::SQRT_2 - 1.0, 0.0).unwrap().into()
    }

    #[test]
    fn critical_orbit_examples() {
        let l4: MapSpec = LogisticMap::new(4.0).unwrap().into();
        assert_eq!(critical_orbit(&l4, 3).unwrap(), vec![1.0, 0.0, 0.0]);
        let t1: MapSpec = TentMap::full().into();
        assert_eq!(critical_orbit(&t1, 3).unwrap(), vec![1.0, -1.0, -1.0]);
        let l2: MapSpec = LogisticMap::new(2.0).unwrap().into();
        assert_eq!(critical_orbit(&l2, 2).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn critical_orbit_prefix_is_stable() {
        let f: MapSpec = LogisticMap::new(3.83).unwrap().into();
        let short = critical_orbit(&f, 50).unwrap();
        let long = critical_orbit(&f, 250).unwrap();
        assert_eq!(short[..], long[..50]);
    }

    #[test]
    fn sqrt2_tent_orbit_lands_on_fixed_point() {
        let orbit = critical_orbit(&sqrt2_tent(), 4).unwrap();
        let c3 = 3.0 - 2.0 * std::f64::consts::SQRT_2;
        assert!((orbit[2] - c3).abs() < 1e-15);
        assert!((orbit[3] - c3).abs() < 1e-15);
    }

    #[test]
    fn logistic_four_stats() {
        let l4: MapSpec = LogisticMap::new(4.0).unwrap().into();
        let s = orbit_stats(&l4, 40, 7).unwrap();
        assert!((s.lyapunov - std::f64::consts::LN_2).abs() < 5e-3, "{}", s.lyapunov);
        let m = s.markov.unwrap();
        assert_eq!((m.preperiod, m.period), (2, 1));
        assert!((m.multiplier - 4.0).abs() < 1e-12);
        assert!((s.ce_growth.last().unwrap().1 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt2_tent_is_markov() {
        let s = orbit_stats(&sqrt2_tent(), 40, 1).unwrap();
        let m = s.markov.unwrap();
        assert_eq!((m.preperiod, m.period), (3, 1));
        assert!((m.multiplier - std::f64::consts::SQRT_2).abs() < 1e-14);
        // tolerance halving keeps the detection
        let half = markov_with_tolerance(&sqrt2_tent(), 40, MARKOV_TOL / 2.0).unwrap();
        assert_eq!(half, Some(m));
    }

    #[test]
    fn full_tent_lyapunov_is_log_two() {
        let t1: MapSpec = TentMap::full().into();
        let s = orbit_stats(&t1, 20, 3).unwrap();
        assert!((s.lyapunov - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn superattracting_parameter_is_not_markov() {
        let l2: MapSpec = LogisticMap::new(2.0).unwrap().into();
        assert_eq!(markov_with_tolerance(&l2, 40, MARKOV_TOL).unwrap(), None);
    }

    #[test]
    fn circle_maps_report_lyapunov_only() {
        let d: MapSpec = CircleMap::doubling().into();
        let s = orbit_stats(&d, 10, 0).unwrap();
        assert!((s.lyapunov - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(s.markov.is_none());
        assert!(critical_orbit(&d, 3).is_err());
    }

    #[test]
    fn depth_below_ten_is_rejected() {
        assert!(orbit_stats(&sqrt2_tent(), 9, 0).is_err());
    }
}
