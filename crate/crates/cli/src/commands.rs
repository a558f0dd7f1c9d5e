use serde::Serialize;

use respondyn_core::experiments::{holder_scan, modulus_scan, three_way_report, HolderConfig, ModulusConfig};
use respondyn_core::io::to_json;
use respondyn_core::maps::spec::{parse_field, parse_map};
use respondyn_core::maps::{orbit_stats, MapSpec, Observable, VectorField};
use respondyn_core::response::{
    density_decompose, fd_derivative, fd_extrapolate, horizontality_index, response_pw_horizontal, ruelle_sum,
    sigma_series, susceptibility_series, tce_solve, Deltas, PwResponse, ResponseReport,
};
use respondyn_core::transfer::{density_of, Method};
use respondyn_core::{Family, Result};

use crate::config::RunConfig;

/// Primary artifact plus an optional JSON sidecar.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub primary: String,
    pub sidecar: Option<String>,
}

impl Output {
    fn plain(primary: String) -> Self {
        Output { primary, sidecar: None }
    }
}

struct Specs {
    map: MapSpec,
    field: VectorField,
    obs: Observable,
}

fn specs(cfg: &RunConfig) -> Result<Specs> {
    Ok(Specs {
        map: parse_map(&cfg.map)?,
        field: parse_field(&cfg.field)?,
        obs: parse_field(&cfg.obs)?,
    })
}

#[derive(Serialize)]
struct IntervalResponse {
    #[serde(flatten)]
    report: ResponseReport,
    piecewise: PwResponse,
}

fn respond(cfg: &RunConfig, s: &Specs) -> Result<String> {
    let family = Family::new(s.map.clone(), s.field.clone())?;
    if cfg.method == Method::Fourier {
        return Ok(three_way_report(&family, &s.obs, cfg.terms, &cfg.steps, cfg.n)?.to_json());
    }
    let pw = response_pw_horizontal(&s.map, &s.field, &s.obs, cfg.n, cfg.terms)?;
    let fd = fd_derivative(&family, &s.obs, &cfg.steps, Method::Ulam, cfg.n);
    let (fd_extrapolated, fd_converged) = fd_extrapolate(&fd);
    let h = horizontality_index(&s.map, &s.field, cfg.terms)?;
    let report = ResponseReport {
        observable: s.obs.describe(),
        fd,
        fd_extrapolated,
        resolvent: Some(pw.value),
        ruelle_partials: Vec::new(),
        tail_bound: h.tail_bound,
        converged: fd_converged,
        deltas: fd_extrapolated.map(|fd| Deltas {
            fd_resolvent: (fd - pw.value).abs(),
            ruelle_resolvent: f64::NAN,
            fd_ruelle: f64::NAN,
        }),
    };
    Ok(to_json(&IntervalResponse { report, piecewise: pw }))
}

#[derive(Serialize)]
struct TceSidecar {
    skipped: usize,
    residual_norm: f64,
    left_limit: f64,
    right_limit: f64,
    jump: f64,
    horizontality: f64,
    warning: Option<String>,
}

#[derive(Serialize)]
struct DecomposeSidecar {
    decay_rate: Option<f64>,
    jumps: usize,
    density_residual: f64,
}

/// Runs the subcommand named in `cfg`.
pub fn execute(cfg: &RunConfig) -> Result<Output> {
    let sub = cfg.subcommand.as_str();
    if sub == "holder" {
        let hc = HolderConfig {
            t0: cfg.t0,
            param_count: cfg.n,
            orbit_len: cfg.orbit_len,
            seeds: cfg.seeds,
            master_seed: cfg.seed,
            ..HolderConfig::default()
        };
        let report = holder_scan(&parse_field(&cfg.obs)?, &hc)?;
        return Ok(Output {
            primary: report.to_csv(),
            sidecar: Some(report.sidecar_json()),
        });
    }
    let s = specs(cfg)?;
    let out = match sub {
        "density" => Output::plain(density_of(&s.map, cfg.method, cfg.n)?.to_csv()),
        "respond" => Output::plain(respond(cfg, &s)?),
        "ruelle" => Output::plain(ruelle_sum(&s.map, &s.field, &s.obs, cfg.terms, cfg.n)?.to_json()),
        "susceptibility" => {
            Output::plain(susceptibility_series(&s.map, &s.field, &s.obs, cfg.terms, cfg.n)?.to_csv())
        }
        "sigma" => Output::plain(sigma_series(&s.map, &s.obs, cfg.terms)?.to_csv()),
        "tce" => {
            let sol = tce_solve(&s.map, &s.field, cfg.terms, cfg.n)?;
            let side = TceSidecar {
                skipped: sol.skipped,
                residual_norm: sol.residual_norm,
                left_limit: sol.left_limit,
                right_limit: sol.right_limit,
                jump: sol.jump(),
                horizontality: sol.horizontality,
                warning: sol.warning.clone(),
            };
            Output {
                primary: sol.to_csv(),
                sidecar: Some(to_json(&side)),
            }
        }
        "horizontality" => Output::plain(to_json(&horizontality_index(&s.map, &s.field, cfg.terms)?)),
        "decompose" => {
            let rho = density_of(&s.map, cfg.method, cfg.n)?;
            let dec = density_decompose(rho.function(), &s.map, cfg.terms)?;
            let side = DecomposeSidecar {
                decay_rate: dec.decay_rate,
                jumps: dec.jumps.len(),
                density_residual: rho.residual(),
            };
            Output {
                primary: dec.jumps_csv(),
                sidecar: Some(to_json(&side)),
            }
        }
        "modulus" => {
            let family = Family::new(s.map.clone(), s.field.clone())?;
            let mc = ModulusConfig {
                t0: cfg.t0,
                k_min: cfg.k_min,
                k_max: cfg.k_max,
                resolution: cfg.n,
            };
            let report = modulus_scan(&family, &mc)?;
            Output {
                primary: report.to_csv(),
                sidecar: Some(report.sidecar_json()),
            }
        }
        "orbit" => Output::plain(to_json(&orbit_stats(&s.map, cfg.terms, cfg.seed)?)),
        other => unreachable!("unknown subcommand {other}"),
    };
    Ok(out)
}
