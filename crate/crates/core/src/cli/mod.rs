//! The `hetbot` command line.
//!
//! Every command reads its inputs, writes artifacts plus `summary.json` under
//! `--out`, and returns a process exit code: 0 on success, 1 on a runtime
//! failure, 2 on a usage error.

mod commands;
mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

use crate::experiments::parse_range;
use crate::train::AblationVariant;

/// Version of every JSON artifact written by the command line.
pub const SCHEMA_VERSION: u32 = 1;

/// Largest relative error accepted by `gradcheck`.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Parser)]
#[command(
    name = "hetbot",
    version,
    about = "Heterophily-aware graph bot detection"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON run configuration; flags override its values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct DataArg {
    /// Dataset directory with nodes.csv, edges.csv and features_<family>.csv
    #[arg(long)]
    pub data: Option<PathBuf>,
}

/// Comma-separated neighbor counts, e.g. `1,2,5,10`.
#[derive(Debug, Clone, PartialEq)]
pub struct KList(pub Vec<usize>);

/// Homophily levels as `start:end:step` or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Levels(pub Vec<f64>);

/// Comma-separated ablation variants.
#[derive(Debug, Clone, PartialEq)]
pub struct VariantList(pub Vec<AblationVariant>);

fn parse_k_list(s: &str) -> Result<KList, String> {
    let ks = s
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| format!("`{s}` is not a comma-separated list of integers"))?;
    if ks.is_empty() || ks.contains(&0) {
        return Err("k values must be at least 1".into());
    }
    Ok(KList(ks))
}

fn parse_levels(s: &str) -> Result<Levels, String> {
    let levels = if s.contains(':') {
        parse_range(s).map_err(|e| e.to_string())?
    } else {
        s.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| format!("`{s}` is not a list of numbers"))?
    };
    if levels.iter().any(|h| !(0.0..=1.0).contains(h)) {
        return Err("homophily levels must lie in [0, 1]".into());
    }
    Ok(Levels(levels))
}

fn parse_variants(s: &str) -> Result<VariantList, String> {
    if s == "all" {
        return Ok(VariantList(AblationVariant::ALL.to_vec()));
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<AblationVariant>()
                .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, _>>()
        .map(VariantList)
}

fn parse_variant(s: &str) -> Result<AblationVariant, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Sweep the k-NN neighbor count, e.g. `1,2,5,10`
    #[arg(long, value_parser = parse_k_list)]
    pub sweep_k: Option<KList>,
    /// Sweep edge homophily, e.g. `0.1:0.9:0.1` or `0.1,0.5,0.9`
    #[arg(long, value_parser = parse_levels)]
    pub sweep_homophily: Option<Levels>,
    /// Number of consecutive seeds starting at `--seed`
    #[arg(long)]
    pub seeds: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Homophily metrics and per-node homophily histogram of a dataset
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
    },
    /// Generate a synthetic two-class benchmark dataset
    Synth {
        #[command(flatten)]
        common: Common,
        /// Target edge homophily
        #[arg(long)]
        homophily: Option<f64>,
        #[arg(long)]
        nodes_per_class: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Add cross-class edges until edge homophily reaches a target
    Perturb {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        /// Target edge homophily
        #[arg(long)]
        target: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Inject the MLP-embedding k-NN relation
    Augment {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep the neighbor count, e.g. `1,2,5,10`
        #[arg(long, value_parser = parse_k_list)]
        sweep_k: Option<KList>,
        /// Number of consecutive seeds starting at `--seed`
        #[arg(long)]
        seeds: Option<usize>,
    },
    /// Train the detector, or run a sweep of trainings
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        /// Ablation variant of a single run
        #[arg(long, value_parser = parse_variant)]
        variant: Option<AblationVariant>,
        /// Variants compared in a sweep, comma-separated or `all`
        #[arg(long, value_parser = parse_variants)]
        variants: Option<VariantList>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Test metrics of a checkpoint on a dataset
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        checkpoint: PathBuf,
        /// splits.json written by `train`; the dataset split column otherwise
        #[arg(long)]
        splits: Option<PathBuf>,
    },
    /// Per-edge attention coefficients of a checkpoint as CSV
    ExportAttention {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        data: DataArg,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Finite-difference check of the bundled toy model
    Gradcheck {
        /// Output directory for gradcheck.json and summary.json
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match commands::dispatch(cli.command) {
        Ok(code) => code,
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("run `hetbot --help` for usage");
            2
        }
        Err(commands::Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}
