//! Command-line front end for `respondyn-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod exit;

use std::io::Write;
use std::path::Path;

use clap::FromArgMatches;

use crate::cli::Cli;
use crate::config::RunConfig;
use crate::exit::Failure;

fn init_logging() {
    let level = match std::env::var("RESPONDYN_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .target(env_logger::Target::Stderr)
        .format_timestamp(None)
        .try_init();
}

#[cfg(feature = "parallel")]
fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::usage(format!("cannot start {threads} worker threads: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(not(feature = "parallel"))]
fn with_threads<R: Send>(_threads: usize, f: impl FnOnce() -> R + Send) -> Result<R, Failure> {
    Ok(f())
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure {
        code: exit::PRECONDITION,
        message: format!("cannot write {}: {e}", path.display()),
    })
}

fn run_config(cfg: &RunConfig) -> Result<(), Failure> {
    log::debug!("resolved configuration:\n{}", cfg.to_canonical_json());
    let output = with_threads(cfg.threads, || commands::execute(cfg))?.map_err(Failure::from)?;
    if cfg.out == "-" {
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(output.primary.as_bytes())
            .and_then(|_| stdout.flush())
            .map_err(|e| Failure::usage(format!("cannot write to standard output: {e}")))?;
        if output.sidecar.is_some() {
            log::info!("sidecar JSON is only written when --out names a file");
        }
    } else {
        let path = Path::new(&cfg.out);
        write_file(path, &output.primary)?;
        if let Some(side) = &output.sidecar {
            write_file(&path.with_extension("json"), side)?;
        }
    }
    Ok(())
}

/// Parses `argv`, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    init_logging();
    let matches = match cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    let parsed = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return exit::USAGE;
        }
    };
    let sub = parsed.command.name();
    let result = RunConfig::resolve(sub, parsed.command.flags()).and_then(|cfg| run_config(&cfg));
    match result {
        Ok(()) => exit::OK,
        Err(f) => {
            eprintln!("respondyn {sub}: {}", f.message);
            f.code
        }
    }
}
