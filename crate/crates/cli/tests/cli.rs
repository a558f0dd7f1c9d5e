use std::path::PathBuf;
use std::process::{Command, Output};

const SUBCOMMANDS: [&str; 11] = [
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

fn respondyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_respondyn"))
        .args(args)
        .env("RESPONDYN_LOG", "quiet")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn snapshot_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("snapshots")
}

/// Compares against `tests/snapshots/<name>.txt`; `UPDATE_SNAPSHOTS=1` rewrites it.
fn check_snapshot(name: &str, actual: &str) {
    let path = snapshot_dir().join(format!("{name}.txt"));
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing snapshot {}; rerun with UPDATE_SNAPSHOTS=1", path.display()));
    assert_eq!(actual, expected, "help text of `{name}` changed");
}

#[test]
fn help_snapshots() {
    let top = respondyn(&["--help"]);
    assert_eq!(top.status.code(), Some(0));
    check_snapshot("main", &stdout(&top));
    for sub in SUBCOMMANDS {
        let o = respondyn(&[sub, "--help"]);
        assert_eq!(o.status.code(), Some(0), "{sub}");
        let text = stdout(&o);
        for flag in [
            "--map", "--field", "--obs", "--method", "--n", "--terms", "--steps", "--seed", "--seeds", "--orbit-len",
            "--k-min", "--k-max", "--t0", "--threads", "--config", "--out",
        ] {
            assert!(text.contains(flag), "{sub} --help lacks {flag}");
        }
        check_snapshot(sub, &text);
    }
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(respondyn(&["bogus"]).status.code(), Some(64));
    assert_eq!(respondyn(&["density", "--bogus", "1"]).status.code(), Some(64));
    assert_eq!(respondyn(&[]).status.code(), Some(64));
    assert_eq!(respondyn(&["density", "--method", "chebyshev"]).status.code(), Some(64));
    assert_eq!(respondyn(&["modulus", "--k-min", "9", "--k-max", "3"]).status.code(), Some(64));
}

#[test]
fn bad_specs_exit_65_with_token() {
    let o = respondyn(&["density", "--map", "tent:q=1"]);
    assert_eq!(o.status.code(), Some(65));
    assert!(stderr(&o).contains("`q`"), "{}", stderr(&o));
    let o = respondyn(&["respond", "--field", "trig:sin=1,x"]);
    assert_eq!(o.status.code(), Some(65));
    assert!(stderr(&o).contains('x'));
    let o = respondyn(&["respond", "--steps", "1e-3,oops"]);
    assert_eq!(o.status.code(), Some(65));
    assert!(stderr(&o).contains("oops"));
    let o = respondyn(&["density", "--map", "cantor:s=3"]);
    assert_eq!(o.status.code(), Some(65));
    assert!(stderr(&o).contains("cantor"));
}

#[test]
fn preconditions_exit_1() {
    assert_eq!(respondyn(&["density", "--map", "tent:a=0"]).status.code(), Some(1));
    assert_eq!(respondyn(&["horizontality", "--map", "circle:d=2"]).status.code(), Some(64));
    // the full tent is not horizontal along its native field
    let o = respondyn(&["respond", "--map", "tent:a=1", "--field", "poly:0.5,0.5", "--obs", "poly:0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizontal"));
    let o = respondyn(&["holder", "--t0", "3.9", "--n", "2", "--seeds", "2", "--orbit-len", "100"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn full_tent_density_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = respondyn(&[
        "density", "--map", "tent:a=1", "--method", "ulam", "--n", "4096", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("index,value"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 4096);
    assert!(values.iter().all(|v| (v - 0.5).abs() < 1e-9));
    assert!(!text.contains('\r'));
}

#[test]
fn doubling_response_is_minus_pi() {
    let o = respondyn(&["respond", "--map", "circle:d=2", "--field", "trig:sin=1", "--obs", "trig:cos=1", "--n", "256"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for key in ["fd", "resolvent", "ruelle_partials", "tail_bound", "converged"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert!((v["resolvent"].as_f64().unwrap() + std::f64::consts::PI).abs() < 1e-10);
    assert_eq!(v["converged"], serde_json::Value::Bool(true));
}

#[test]
fn native_field_horizontality_is_one() {
    let o = respondyn(&["horizontality", "--map", "tent:a=1", "--field", "poly:0.5,0.5", "--terms", "60"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 1.0).abs() < 1e-15);
    assert!(v["tail_bound"].as_f64().unwrap() < 1e-17);
}

#[test]
fn silver_tent_response_along_constant_field() {
    let o = respondyn(&[
        "respond",
        "--map",
        "tent:a=0.41421356237309515",
        "--field",
        "poly:1",
        "--obs",
        "poly:0,1",
        "--n",
        "16384",
        "--steps",
        "1e-3,5e-4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let exact = std::f64::consts::SQRT_2 / 4.0;
    assert!((v["resolvent"].as_f64().unwrap() - exact).abs() < 1e-3);
    assert!((v["fd_extrapolated"].as_f64().unwrap() - exact).abs() < 1e-3);
}

#[test]
fn scans_write_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = respondyn(&["modulus", "--k-min", "6", "--k-max", "8", "--n", "4096", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("t,delta,stderr,resolution,accepted\n"));
    assert_eq!(csv.lines().count(), 7);
    let side: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    for key in ["beta", "beta_ci_lo", "beta_ci_hi", "log_coeff"] {
        assert!(side.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"map": "tent:a=1", "n": 64, "method": "ulam"}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let o = respondyn(&["density", "--config", c]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 65);
    let o = respondyn(&["density", "--config", c, "--n", "32"]);
    assert_eq!(stdout(&o).lines().count(), 33);
    std::fs::write(&cfg, r#"{"cells": 64}"#).unwrap();
    assert_eq!(respondyn(&["density", "--config", c]).status.code(), Some(64));
    std::fs::write(&cfg, r#"{"n": "many"}"#).unwrap();
    assert_eq!(respondyn(&["density", "--config", c]).status.code(), Some(65));
    std::fs::write(&cfg, "{not json").unwrap();
    assert_eq!(respondyn(&["density", "--config", c]).status.code(), Some(65));
}

#[test]
fn logging_stays_on_stderr() {
    let run = |level: &str| {
        Command::new(env!("CARGO_BIN_EXE_respondyn"))
            .args(["tce", "--n", "50"])
            .env("RESPONDYN_LOG", level)
            .output()
            .unwrap()
    };
    let quiet = run("quiet");
    let debug = run("debug");
    assert!(quiet.stderr.is_empty());
    assert!(!debug.stderr.is_empty());
    assert_eq!(quiet.stdout, debug.stdout);
}

fn max_threads() -> String {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).to_string()
}

#[test]
fn output_is_identical_across_thread_counts() {
    let max = max_threads();
    let runs: [&[&str]; 5] = [
        &["density", "--map", "circle:d=3,sin=0.1", "--n", "64"],
        &["respond", "--n", "64", "--terms", "20"],
        &["susceptibility", "--map", "tent:a=1", "--field", "poly:0.5,0.5", "--obs", "poly:0,0,1", "--n", "1024", "--terms", "8"],
        &["holder", "--n", "3", "--seeds", "9", "--orbit-len", "2000", "--seed", "11"],
        &["orbit", "--terms", "30", "--seed", "5"],
    ];
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "4", max.as_str()]
            .iter()
            .map(|t| {
                let mut a = args.to_vec();
                a.extend(["--threads", t]);
                let o = respondyn(&a);
                assert_eq!(o.status.code(), Some(0), "{args:?}: {}", stderr(&o));
                o.stdout
            })
            .collect();
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{args:?} differs across thread counts");
    }
}
