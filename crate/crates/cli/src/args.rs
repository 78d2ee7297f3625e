// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "modgeo",
    version,
    about = "Closed geodesics on the modular surface and equidistribution experiments"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Base seed; every random stream is derived from it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Quadrature step along geodesics.
    #[arg(long, global = true, default_value_t = 1e-2)]
    pub step: f64,
    /// Monte-Carlo sample count.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    /// Directory holding one JSON file per discriminant.
    #[arg(long, global = true, env = "MODGEO_CACHE_DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class number, regulator, period and reduction cycles of one discriminant.
    Classgroup {
        #[arg(allow_negative_numbers = true)]
        d: String,
    },
    /// The closed geodesics of one discriminant, or of a subcollection.
    Geodesics {
        #[arg(allow_negative_numbers = true)]
        d: String,
        #[command(flatten)]
        select: Select,
    },
    /// Subcollection measures against the Haar measure.
    Equidist(Box<EquidistArgs>),
    /// Correlation decay and ergodic-average variance.
    Mixing(MixingArgs),
    /// The observable catalog.
    Observables {
        #[command(subcommand)]
        action: ObservablesAction,
    },
    /// Dwell time of trajectories started near a closed orbit.
    Shadowing(ShadowingArgs),
}

/// Which members of G_d to keep. At most one of these may be given.
#[derive(Debug, Default, Args)]
#[group(multiple = false)]
pub struct Select {
    /// Keep every class (the default).
    #[arg(long)]
    pub full: bool,
    /// Random classes until this fraction of the total length is reached.
    #[arg(long)]
    pub q: Option<f64>,
    /// Members entering the tube `P<d>:r` around a principal orbit.
    #[arg(long)]
    pub tube: Option<String>,
    /// Explicit comma-separated class indices.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct EquidistArgs {
    /// Comma-separated discriminants.
    #[arg(long, value_delimiter = ',', group = "source")]
    pub d: Option<Vec<String>>,
    /// `lo:hi:logN`: N fundamental discriminants, log-spaced in [lo, hi].
    #[arg(long, group = "source")]
    pub d_range: Option<String>,
    /// Discriminant family; only `n2plus4` (d = n^2 + 4) is known.
    #[arg(long, group = "source", requires = "n")]
    pub family: Option<String>,
    /// `lo:hi:odd` for the family parameter.
    #[arg(long)]
    pub n: Option<String>,
    /// Test function spec, e.g. `cusp:2`, `tube:P5:0.05`.
    #[arg(long, default_value = "cusp:2")]
    pub f: String,
    #[command(flatten)]
    pub select: Select,
    /// Fit the decay of the full-collection discrepancy in d.
    #[arg(long, requires = "full")]
    pub fit: bool,
    /// Probe radius for the family experiment.
    #[arg(long)]
    pub probe: Option<f64>,
    /// Random subcollections along a shrinking-fraction schedule.
    #[arg(long, conflicts_with_all = ["fit", "chain"])]
    pub bound: bool,
    /// `log:scale:exponent` (q = scale (ln d)^-exponent) or `const:q`.
    #[arg(long, default_value = "log:1:0.5")]
    pub schedule: String,
    /// Evaluate the windowed-average inequality chain.
    #[arg(long, conflicts_with = "fit")]
    pub chain: bool,
    /// Averaging window T for the chain (default eta ln d).
    #[arg(long)]
    pub window: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub eta: f64,
}

#[derive(Debug, Args)]
pub struct MixingArgs {
    #[arg(long, default_value = "cusp:2")]
    pub f: String,
    /// Estimate correlations at the times given by `--t`.
    #[arg(long, conflicts_with = "variance")]
    pub corr: bool,
    /// Estimate ergodic-average variances at the windows given by `--T`.
    #[arg(long)]
    pub variance: bool,
    #[arg(long = "t", value_delimiter = ',', default_value = "0,2,4,8")]
    pub t: Vec<f64>,
    #[arg(
        long = "T",
        value_delimiter = ',',
        default_value = "1,2,4,8,16,32,64,128"
    )]
    pub windows: Vec<f64>,
}

#[derive(Debug, Subcommand)]
pub enum ObservablesAction {
    /// Built-in observables with parameters and exact integrals.
    List,
    /// Haar integral of one observable: exact when known, else Monte-Carlo.
    Integrate {
        #[arg(long)]
        f: String,
        /// Force Monte-Carlo even when the exact value is known.
        #[arg(long)]
        monte_carlo: bool,
    },
    /// Largest finite-difference derivative ratio of an observable.
    Smoothness {
        #[arg(long)]
        f: String,
        #[arg(long, default_value_t = 400)]
        points: usize,
    },
}

#[derive(Debug, Args)]
pub struct ShadowingArgs {
    /// Orbit `P<d>`.
    #[arg(long, default_value = "P5")]
    pub orbit: String,
    #[arg(long, value_delimiter = ',', default_value = "1e-2,1e-3,1e-4")]
    pub r: Vec<f64>,
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
    /// Scan step for leaving the outer tube.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
}
