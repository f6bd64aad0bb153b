//! `isosceles`: command-line front end of the isosceles three-body toolkit.
//!
//! Exit codes: `0` success, `1` computation error or failed check, `2` usage error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Numerical dynamics of the spatial isosceles three-body problem.
#[derive(Debug, Parser)]
#[command(name = "isosceles", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.  Each may also be set in the `--config` file.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Mass parameter beta in (0, 1).
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    /// Eccentricity of the Euler orbit in [0, 1).
    #[arg(long, global = true)]
    pub ecc: Option<f64>,
    /// Grid size (meaning depends on the subcommand).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Integration / quadrature tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// TOML file with default values for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed of every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rotation number of the Euler orbit (CSV); `--grid N` sweeps ecc over N points of [0, ecc].
    Rotation,
    /// Volume, action and the inequality chain of a subcritical point (JSON).
    Volume(VolumeArgs),
    /// Degenerate curve of the Hill operator (CSV); `--grid N` eccentricity samples.
    Curve(CurveArgs),
    /// Periodic orbits of the disk return map (JSON lines).
    Orbits(OrbitsArgs),
    /// Linking numbers of periodic orbits from relative windings (CSV).
    Winding(OrbitsArgs),
    /// Twist interval and the search for a rational realised by an orbit pair (JSON).
    TwistInterval(TwistArgs),
    /// Escape dynamics near infinity: manifold graph, twist profile or catalogue.
    Mcgehee(McGeheeArgs),
    /// Exact certificates (JSON).
    Certify(CertifyArgs),
}

/// Options of `volume`.
#[derive(Debug, Clone, Args)]
pub struct VolumeArgs {
    /// Largest index of the Weyl-law curve.
    #[arg(long)]
    pub weyl_k: Option<u32>,
}

/// Branch of a degenerate curve at `nu = 1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchArg {
    /// Lower curve.
    Minus,
    /// Upper curve.
    Plus,
}

/// Options of `curve`.
#[derive(Debug, Clone, Args)]
pub struct CurveArgs {
    /// Level j >= 1.
    #[arg(long)]
    pub j: Option<u32>,
    /// omega = exp(2 pi i nu).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Branch (required for nu = 1/2).
    #[arg(long, value_enum)]
    pub branch: Option<BranchArg>,
    /// Largest eccentricity of the grid.
    #[arg(long)]
    pub ecc_max: Option<f64>,
}

/// Options of `orbits` and `winding`.
#[derive(Debug, Clone, Args)]
pub struct OrbitsArgs {
    /// Largest period searched.
    #[arg(long)]
    pub period: Option<usize>,
    /// Samples per symmetry line.
    #[arg(long)]
    pub line_samples: Option<usize>,
    /// Extra Newton seeds drawn uniformly in the disk from `--seed`.
    #[arg(long)]
    pub random_seeds: Option<usize>,
}

/// Options of `twist-interval`.
#[derive(Debug, Clone, Args)]
pub struct TwistArgs {
    /// Numerator of the target rational.
    #[arg(long)]
    pub num: Option<i64>,
    /// Denominator of the target rational (default: smallest inside the interval).
    #[arg(long)]
    pub den: Option<i64>,
    /// Largest denominator considered when choosing the target.
    #[arg(long)]
    pub max_den: Option<i64>,
    /// Samples per symmetry line.
    #[arg(long)]
    pub line_samples: Option<usize>,
}

/// Options of `mcgehee`.
#[derive(Debug, Clone, Args)]
pub struct McGeheeArgs {
    /// Twist profile along the gap to the stable manifold (CSV).
    #[arg(long, conflicts_with = "catalog")]
    pub twist: bool,
    /// Catalogue of brake and parabolic witnesses (JSON lines).
    #[arg(long)]
    pub catalog: bool,
    /// Section x = x0.
    #[arg(long)]
    pub x0: Option<f64>,
    /// Angle of (u, v).
    #[arg(long)]
    pub theta0: Option<f64>,
    /// Number of gap halvings of the twist profile.
    #[arg(long)]
    pub halvings: Option<u32>,
    /// Samples per scanned curve of the catalogue.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest starting height of brake points.
    #[arg(long)]
    pub z_cap: Option<f64>,
}

/// Which certificate set `certify` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
pub enum LedgerArg {
    /// Positivity of the checked-in polynomial ledger.
    #[value(name = "appendixC")]
    #[serde(rename = "appendixC")]
    AppendixC,
    /// Negativity of the quadratic form on the coarse box.
    #[value(name = "q4")]
    #[serde(rename = "q4")]
    Q4,
}

/// Options of `certify`.
#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// Certificate set.
    #[arg(long, value_enum)]
    pub ledger: Option<LedgerArg>,
    /// Bisection depth limit.
    #[arg(long)]
    pub max_depth: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<config::UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
