//! `catmap` command-line driver.
//!
//! Exit codes: 0 success, 1 domain rejection, 2 usage error, 3 I/O error.

pub mod config;
pub mod svg;

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use commands::run;
pub use config::{ConfigLayer, Format, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Domain(String),
    #[error("usage: {0}")]
    Usage(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "catmap", version, about = "Quantum cat map laboratory")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Flat JSON configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub svg: Option<PathBuf>,
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    /// Unitarity residual allowed per sqrt(N).
    #[arg(long, global = true)]
    pub tol_unitarity: Option<f64>,
    /// Eigenvalue clustering tolerance in radians.
    #[arg(long, global = true)]
    pub tol_cluster: Option<f64>,
    #[arg(long, global = true)]
    pub allow_even_n: bool,
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[arg(short = 'a', global = true, allow_negative_numbers = true)]
    pub a: Option<i64>,
    #[arg(short = 'b', global = true, allow_negative_numbers = true)]
    pub b: Option<i64>,
    #[arg(short = 'c', global = true, allow_negative_numbers = true)]
    pub c: Option<i64>,
    #[arg(short = 'd', global = true, allow_negative_numbers = true)]
    pub d: Option<i64>,
}

#[derive(Debug, Args, Default)]
pub struct RangeArgs {
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Include even N (each still needs --allow-even-n to succeed).
    #[arg(long)]
    pub all_n: bool,
    /// Score each eigenvector separately instead of whole eigenspaces.
    #[arg(long)]
    pub unmerged: bool,
    /// Refuse dimensions above this.
    #[arg(long)]
    pub max_dim: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility of the matrix (exit 1 if not quantizable).
    Classify,
    /// Short-period moduli N_k with their periods t_k.
    Sequence {
        #[arg(long)]
        count: Option<usize>,
    },
    /// Order mod N and quantum period for each N.
    Period {
        #[arg(long = "n", value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Dump the propagator matrix.
    Propagator {
        #[arg(long = "n")]
        n: Option<usize>,
        /// Binary dump instead of CSV.
        #[arg(long)]
        binary: bool,
    },
    /// Eigenvalues, clusters and sup-norms of one propagator.
    Spectrum {
        #[arg(long = "n")]
        n: Option<usize>,
        #[arg(long)]
        unmerged: bool,
    },
    /// Maximal eigenfunction sup-norm over a range of N.
    Scan {
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Coordinate moduli of an extremal eigenfunction.
    Profile {
        #[arg(long = "n")]
        n: Option<usize>,
        #[arg(long)]
        unmerged: bool,
    },
    /// Norms of propagator powers against the dispersive bound.
    Dispersive {
        #[arg(long = "n", value_delimiter = ',')]
        n: Vec<usize>,
        #[arg(long = "jmax", alias = "j-max")]
        j_max: Option<usize>,
    },
    /// Evaluate both sup-norm bounds on scan data.
    Verify {
        /// Scan CSV to read; without it a scan is run first.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[command(flatten)]
        range: RangeArgs,
    },
}

fn flag(v: bool) -> Option<bool> {
    v.then_some(true)
}

fn nonempty(v: &[usize]) -> Option<Vec<usize>> {
    (!v.is_empty()).then(|| v.to_vec())
}

impl Cli {
    /// Values given on the command line, as a configuration layer.
    pub fn flag_layer(&self) -> ConfigLayer {
        let g = &self.global;
        let mut layer = ConfigLayer {
            a: g.a,
            b: g.b,
            c: g.c,
            d: g.d,
            format: g.format,
            svg: g.svg.clone(),
            output: g.output.clone(),
            tol_unitarity: g.tol_unitarity,
            tol_cluster: g.tol_cluster,
            allow_even_n: flag(g.allow_even_n),
            jobs: g.jobs,
            ..Default::default()
        };
        let range = |layer: &mut ConfigLayer, r: &RangeArgs| {
            layer.n_min = r.n_min;
            layer.n_max = r.n_max;
            layer.all_n = flag(r.all_n);
            layer.unmerged = flag(r.unmerged);
            layer.max_dim = r.max_dim;
        };
        match &self.command {
            Command::Classify => {}
            Command::Sequence { count } => layer.count = *count,
            Command::Period { n } => layer.n = nonempty(n),
            Command::Propagator { n, binary } => {
                layer.n = n.map(|n| vec![n]);
                layer.binary = flag(*binary);
            }
            Command::Spectrum { n, unmerged } | Command::Profile { n, unmerged } => {
                layer.n = n.map(|n| vec![n]);
                layer.unmerged = flag(*unmerged);
            }
            Command::Scan { range: r } => range(&mut layer, r),
            Command::Dispersive { n, j_max } => {
                layer.n = nonempty(n);
                layer.j_max = *j_max;
            }
            Command::Verify { input, epsilon, range: r } => {
                layer.input = input.clone();
                layer.epsilon = *epsilon;
                range(&mut layer, r);
            }
        }
        layer
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let file = self.global.config.as_deref().map(RunConfig::load_layer).transpose()?;
        RunConfig::resolve(file, self.flag_layer())
    }
}

/// What a successful command reports besides its output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Outcome {
    pub exit_code: i32,
    /// Rows that failed and were written as error rows.
    pub failed_rows: usize,
}
