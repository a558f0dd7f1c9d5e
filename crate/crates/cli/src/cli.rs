use std::path::PathBuf;

use clap::{Args, Command, CommandFactory, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "respondyn",
    version,
    about = "Invariant densities and linear response for one-dimensional maps",
    after_help = "Environment:\n  RESPONDYN_LOG=quiet|info|debug   diagnostics on standard error (default: warnings only)"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Invariant density as CSV
    Density(Flags),
    /// Derivative of ∫φ dμ_t: finite differences, resolvent formula and Ruelle series
    Respond(Flags),
    /// Partial sums of the Ruelle series for a circle family
    Ruelle(Flags),
    /// Coefficients of the susceptibility function
    Susceptibility(Flags),
    /// Coefficients φ(c_{j+1}) of σ_φ along the postcritical orbit
    Sigma(Flags),
    /// Solution α of the twisted cohomological equation on a grid
    Tce(Flags),
    /// Horizontality index J(f, X∘f) with its tail bound
    Horizontality(Flags),
    /// Jumps of a tent-map density along the postcritical orbit
    Decompose(Flags),
    /// L¹ modulus of continuity of t ↦ ρ_t on a dyadic grid
    Modulus(Flags),
    /// Birkhoff scan of ∫φ dμ_t near a Misiurewicz–Thurston logistic parameter
    Holder(Flags),
    /// Critical orbit, Collet–Eckmann growth and Markov detection
    Orbit(Flags),
}

impl Sub {
    pub fn name(&self) -> &'static str {
        match self {
            Sub::Density(_) => "density",
            Sub::Respond(_) => "respond",
            Sub::Ruelle(_) => "ruelle",
            Sub::Susceptibility(_) => "susceptibility",
            Sub::Sigma(_) => "sigma",
            Sub::Tce(_) => "tce",
            Sub::Horizontality(_) => "horizontality",
            Sub::Decompose(_) => "decompose",
            Sub::Modulus(_) => "modulus",
            Sub::Holder(_) => "holder",
            Sub::Orbit(_) => "orbit",
        }
    }

    pub fn flags(&self) -> &Flags {
        match self {
            Sub::Density(f)
            | Sub::Respond(f)
            | Sub::Ruelle(f)
            | Sub::Susceptibility(f)
            | Sub::Sigma(f)
            | Sub::Tce(f)
            | Sub::Horizontality(f)
            | Sub::Decompose(f)
            | Sub::Modulus(f)
            | Sub::Holder(f)
            | Sub::Orbit(f) => f,
        }
    }
}

/// Flags shared by every subcommand. Unset flags fall back to the `--config`
/// file, then to the subcommand defaults shown in `--help`.
#[derive(Debug, Clone, Args)]
pub struct Flags {
    /// Map spec: tent:a=<r>[,t=<r>] | logistic:t=<r> | circle:d=<k>[,sin=..][,cos=..]
    #[arg(long, value_name = "SPEC")]
    pub map: Option<String>,
    /// Vector field X: poly:<c0>,<c1>,.. | trig:[const=<r>,]sin=..,cos=..
    #[arg(long, value_name = "SPEC")]
    pub field: Option<String>,
    /// Observable φ, same syntax as --field
    #[arg(long, value_name = "SPEC")]
    pub obs: Option<String>,
    /// Discretization [default: fourier for circle maps, ulam otherwise]
    #[arg(long, value_parser = ["fourier", "ulam"])]
    pub method: Option<String>,
    /// Fourier modes, Ulam cells, grid points (tce) or parameter count (holder)
    #[arg(long)]
    pub n: Option<usize>,
    /// Series terms or orbit depth
    #[arg(long)]
    pub terms: Option<usize>,
    /// Finite-difference steps, comma separated
    #[arg(long, value_name = "H,..")]
    pub steps: Option<String>,
    /// Master random seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Independent orbits per parameter
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Iterates per orbit after burn-in
    #[arg(long = "orbit-len")]
    pub orbit_len: Option<usize>,
    /// Smallest dyadic exponent k in t0 ± 2^-k
    #[arg(long = "k-min")]
    pub k_min: Option<u32>,
    /// Largest dyadic exponent k
    #[arg(long = "k-max")]
    pub k_max: Option<u32>,
    /// Base parameter of the scan
    #[arg(long, allow_negative_numbers = true)]
    pub t0: Option<f64>,
    /// Worker threads, 0 for all cores
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// JSON file whose keys mirror these flags; flags take precedence
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output file, - for standard output. Scans also write <out>.json
    #[arg(long, value_name = "PATH", default_value = "-")]
    pub out: String,
}

/// The clap command with each subcommand's defaults appended to the flag help.
pub fn command() -> Command {
    let mut cmd = Cli::command();
    for sub in crate::config::SUBCOMMANDS {
        let defaults = crate::config::RunConfig::defaults(sub);
        cmd = cmd.mut_subcommand(sub, |c| {
            let mut c = c;
            for (flag, value) in defaults.display_defaults() {
                c = c.mut_arg(flag, |a| {
                    let help = a.get_help().map(|h| h.to_string()).unwrap_or_default();
                    if value == "unused" {
                        a.help(format!("{help} [unused]"))
                    } else {
                        a.help(format!("{help} [default: {value}]"))
                    }
                });
            }
            c
        });
    }
    cmd
}
