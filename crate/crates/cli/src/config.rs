use std::path::Path;

use serde::{Deserialize, Serialize};

use respondyn_core::io::fmt_f64;
use respondyn_core::maps::spec::parse_map;
use respondyn_core::transfer::Method;

use crate::cli::Flags;
use crate::exit::Failure;

pub const SUBCOMMANDS: [&str; 11] = [
    "density",
    "respond",
    "ruelle",
    "susceptibility",
    "sigma",
    "tce",
    "horizontality",
    "decompose",
    "modulus",
    "holder",
    "orbit",
];

const SILVER: &str = "tent:a=0.41421356237309515";
const SILVER_NATIVE: &str = "poly:0.7071067811865475,0.7071067811865475";
const DEFAULT_STEPS: [f64; 4] = [1e-3, 5e-4, 2.5e-4, 1.25e-4];

/// Fully resolved settings of one run. Serializes to the canonical JSON form
/// with keys spelled like the flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: String,
    pub map: String,
    pub field: String,
    pub obs: String,
    pub method: Method,
    pub n: usize,
    pub terms: usize,
    pub steps: Vec<f64>,
    pub seed: u64,
    pub seeds: usize,
    pub orbit_len: usize,
    pub k_min: u32,
    pub k_max: u32,
    pub t0: f64,
    pub threads: usize,
    pub out: String,
}

/// Contents of a `--config` file: any subset of the flags.
#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct ConfigFile {
    map: Option<String>,
    field: Option<String>,
    obs: Option<String>,
    method: Option<Method>,
    n: Option<usize>,
    terms: Option<usize>,
    steps: Option<StepsValue>,
    seed: Option<u64>,
    seeds: Option<usize>,
    orbit_len: Option<usize>,
    k_min: Option<u32>,
    k_max: Option<u32>,
    t0: Option<f64>,
    threads: Option<usize>,
    out: Option<String>,
}

const CONFIG_KEYS: [&str; 15] = [
    "map", "field", "obs", "method", "n", "terms", "steps", "seed", "seeds", "orbit-len", "k-min", "k-max", "t0",
    "threads", "out",
];

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StepsValue {
    List(Vec<f64>),
    Text(String),
}

/// Defaults that depend on the subcommand; `None` marks a knob the
/// subcommand ignores.
struct Defaults {
    map: &'static str,
    field: &'static str,
    obs: &'static str,
    n_fourier: usize,
    n_ulam: usize,
    terms: Option<usize>,
    uses_n: bool,
    uses_steps: bool,
    uses_sampling: bool,
    uses_scan: bool,
    t0: f64,
}

fn defaults_for(sub: &str) -> Defaults {
    let circle = Defaults {
        map: "circle:d=2",
        field: "trig:sin=1",
        obs: "trig:cos=1",
        n_fourier: 256,
        n_ulam: 4096,
        terms: None,
        uses_n: true,
        uses_steps: false,
        uses_sampling: false,
        uses_scan: false,
        t0: 0.0,
    };
    let tent = Defaults {
        map: "tent:a=1",
        field: "poly:0.5,0.5",
        obs: "poly:0,1",
        ..circle
    };
    match sub {
        "density" => circle,
        "respond" => Defaults {
            terms: Some(60),
            uses_steps: true,
            ..circle
        },
        "ruelle" | "susceptibility" => Defaults { terms: Some(40), ..circle },
        "sigma" => Defaults {
            terms: Some(200),
            uses_n: false,
            ..tent
        },
        "tce" => Defaults {
            terms: Some(60),
            n_fourier: 1000,
            n_ulam: 1000,
            ..tent
        },
        "horizontality" => Defaults {
            terms: Some(60),
            uses_n: false,
            ..tent
        },
        "decompose" => Defaults {
            map: SILVER,
            terms: Some(20),
            ..tent
        },
        "modulus" => Defaults {
            map: SILVER,
            field: SILVER_NATIVE,
            n_ulam: 16384,
            uses_scan: true,
            ..tent
        },
        "holder" => Defaults {
            map: "logistic:t=4",
            n_fourier: 40,
            n_ulam: 40,
            uses_sampling: true,
            t0: 4.0,
            ..tent
        },
        "orbit" => Defaults {
            map: "logistic:t=4",
            terms: Some(60),
            uses_n: false,
            ..tent
        },
        other => unreachable!("unknown subcommand {other}"),
    }
}

/// Whether `sub` reads the `--map`, `--field` or `--obs` spec.
fn uses_spec(sub: &str, id: &str) -> bool {
    match id {
        "map" => sub != "holder",
        "field" => !matches!(sub, "density" | "sigma" | "decompose" | "holder" | "orbit"),
        "obs" => !matches!(sub, "density" | "tce" | "horizontality" | "decompose" | "modulus" | "orbit"),
        _ => true,
    }
}

fn steps_text(steps: &[f64]) -> String {
    steps.iter().map(|&h| fmt_f64(h)).collect::<Vec<_>>().join(",")
}

pub fn parse_steps(text: &str) -> Result<Vec<f64>, Failure> {
    text.split(',')
        .map(|tok| {
            let tok = tok.trim();
            match tok.parse::<f64>() {
                Ok(h) if h.is_finite() && h > 0.0 => Ok(h),
                _ => Err(Failure::parse(tok, "finite-difference steps must be positive numbers")),
            }
        })
        .collect()
}

/// Defaults shown in `--help`, keyed by clap argument id.
pub struct DisplayDefaults(Vec<(&'static str, String)>);

impl DisplayDefaults {
    pub fn display_defaults(self) -> Vec<(&'static str, String)> {
        self.0
    }
}

impl RunConfig {
    pub fn defaults(sub: &str) -> DisplayDefaults {
        let d = defaults_for(sub);
        let unused = || "unused".to_string();
        let spec = |id: &'static str, value: &str| {
            if uses_spec(sub, id) {
                (id, value.to_string())
            } else {
                (id, unused())
            }
        };
        let mut out = vec![spec("map", d.map), spec("field", d.field), spec("obs", d.obs)];
        out.push((
            "n",
            if !d.uses_n {
                unused()
            } else if d.n_fourier == d.n_ulam {
                d.n_fourier.to_string()
            } else {
                format!("{} (fourier) or {} (ulam)", d.n_fourier, d.n_ulam)
            },
        ));
        out.push(("terms", d.terms.map(|t| t.to_string()).unwrap_or_else(unused)));
        out.push(("steps", if d.uses_steps { steps_text(&DEFAULT_STEPS) } else { unused() }));
        out.push(("seed", if d.uses_sampling || sub == "orbit" { "0".into() } else { unused() }));
        out.push(("seeds", if d.uses_sampling { "64".into() } else { unused() }));
        out.push(("orbit_len", if d.uses_sampling { "10000000".into() } else { unused() }));
        out.push(("k_min", if d.uses_scan { "6".into() } else { unused() }));
        out.push(("k_max", if d.uses_scan { "14".into() } else { unused() }));
        out.push(("t0", if d.uses_scan || d.uses_sampling { fmt_f64(d.t0) } else { unused() }));
        DisplayDefaults(out)
    }

    /// Flags over config file over subcommand defaults.
    pub fn resolve(sub: &str, flags: &Flags) -> Result<RunConfig, Failure> {
        let file = match &flags.config {
            Some(path) => load_config(path)?,
            None => ConfigFile::default(),
        };
        let d = defaults_for(sub);
        let map = flags.map.clone().or(file.map).unwrap_or_else(|| d.map.to_string());
        let method = match flags.method.as_deref() {
            Some("fourier") => Some(Method::Fourier),
            Some("ulam") => Some(Method::Ulam),
            Some(other) => return Err(Failure::usage(format!("unknown method `{other}`"))),
            None => file.method,
        };
        let method = match method {
            Some(m) => m,
            None => Method::natural_for(&parse_map(&map).map_err(Failure::from)?),
        };
        let n_default = match method {
            Method::Fourier => d.n_fourier,
            Method::Ulam => d.n_ulam,
        };
        let steps = match (&flags.steps, file.steps) {
            (Some(text), _) => parse_steps(text)?,
            (None, Some(StepsValue::Text(text))) => parse_steps(&text)?,
            (None, Some(StepsValue::List(list))) => {
                if let Some(bad) = list.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
                    return Err(Failure::parse(fmt_f64(*bad), "finite-difference steps must be positive numbers"));
                }
                list
            }
            (None, None) => DEFAULT_STEPS.to_vec(),
        };
        Ok(RunConfig {
            subcommand: sub.to_string(),
            map,
            field: flags.field.clone().or(file.field).unwrap_or_else(|| d.field.to_string()),
            obs: flags.obs.clone().or(file.obs).unwrap_or_else(|| d.obs.to_string()),
            method,
            n: flags.n.or(file.n).unwrap_or(n_default),
            terms: flags.terms.or(file.terms).unwrap_or(d.terms.unwrap_or(0)),
            steps,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            seeds: flags.seeds.or(file.seeds).unwrap_or(64),
            orbit_len: flags.orbit_len.or(file.orbit_len).unwrap_or(10_000_000),
            k_min: flags.k_min.or(file.k_min).unwrap_or(6),
            k_max: flags.k_max.or(file.k_max).unwrap_or(14),
            t0: flags.t0.or(file.t0).unwrap_or(d.t0),
            threads: if flags.threads != 0 { flags.threads } else { file.threads.unwrap_or(0) },
            out: if flags.out != "-" { flags.out.clone() } else { file.out.unwrap_or_else(|| "-".into()) },
        })
    }

    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<RunConfig, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::parse(text.trim(), e.to_string()))
    }
}

fn load_config(path: &Path) -> Result<ConfigFile, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Failure::parse(path.display().to_string(), format!("invalid JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Failure::parse(path.display().to_string(), "config must be a JSON object"))?;
    if let Some(key) = obj.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
        return Err(Failure::usage(format!(
            "unknown config key `{key}` (expected one of {})",
            CONFIG_KEYS.join(", ")
        )));
    }
    serde_json::from_value(value).map_err(|e| Failure::parse(path.display().to_string(), e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    fn flags(args: &[&str]) -> Flags {
        let mut argv = vec!["respondyn", "density"];
        argv.extend_from_slice(args);
        crate::cli::Cli::parse_from(argv).command.flags().clone()
    }

    #[test]
    fn canonical_json_round_trips() {
        for sub in SUBCOMMANDS {
            let cfg = RunConfig::resolve(sub, &flags(&[])).unwrap();
            let json = cfg.to_canonical_json();
            let back = RunConfig::from_json(&json).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.to_canonical_json(), json);
        }
    }

    #[test]
    fn method_follows_the_map() {
        let c = RunConfig::resolve("density", &flags(&["--map", "tent:a=1"])).unwrap();
        assert_eq!((c.method, c.n), (Method::Ulam, 4096));
        let c = RunConfig::resolve("density", &flags(&[])).unwrap();
        assert_eq!((c.method, c.n), (Method::Fourier, 256));
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"map": "tent:a=1", "n": 512, "steps": "1e-2,5e-3", "orbit-len": 7}"#).unwrap();
        let p = path.to_str().unwrap();
        let c = RunConfig::resolve("density", &flags(&["--config", p, "--n", "128"])).unwrap();
        assert_eq!(c.map, "tent:a=1");
        assert_eq!(c.n, 128);
        assert_eq!(c.steps, vec![1e-2, 5e-3]);
        assert_eq!(c.orbit_len, 7);
    }

    #[test]
    fn unknown_config_key_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        std::fs::write(&path, r#"{"modes": 3}"#).unwrap();
        let err = RunConfig::resolve("density", &flags(&["--config", path.to_str().unwrap()])).unwrap_err();
        assert_eq!(err.code, crate::exit::USAGE);
    }

    #[test]
    fn bad_steps_name_the_token() {
        let err = RunConfig::resolve("respond", &flags(&["--steps", "1e-3,abc"])).unwrap_err();
        assert_eq!(err.code, crate::exit::PARSE);
        assert!(err.message.contains("abc"));
    }
}
