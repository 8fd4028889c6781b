//! Thin batch runner over the library experiment harness. Each subcommand
//! selects an experiment kind; everything else comes from the config file
//! with flags winning over it.
//!
//! Exit codes: 0 success, 1 baseline regression, 2 usage/config error,
//! 3 compute error.

use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use local_hardy::config::{ExperimentConfig, ExperimentKind, GridSpec};
use local_hardy::error::Error;
use local_hardy::experiment::{run, write_artifacts};

#[derive(Parser)]
#[command(name = "local-hardy", version, about = "Weighted local Hardy space experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file; flags override its fields.
    #[arg(long)]
    config: Option<String>,
    /// Grid as m,L,n (samples per axis, half-width, dimension).
    #[arg(long)]
    grid: Option<String>,
    /// Weight descriptor: const:1 | exp:c | powlog:a,b | abspow:g | file:path.
    #[arg(long)]
    weight: Option<String>,
    /// Output directory for summary.json and CSV detail.
    #[arg(long)]
    out: Option<String>,
    /// Baseline store; first run freezes, later runs compare.
    #[arg(long)]
    baseline: Option<String>,
    /// Refreeze the baseline from this run.
    #[arg(long)]
    update_baseline: bool,
    /// Corpus seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Local Muckenhoupt constants, duality, doubling.
    Weights(Common),
    /// Local and grand maximal functions over the corpus.
    Maximal(Common),
    /// Calderon-Zygmund decompositions and their diagnostics.
    Czd(Common),
    /// Multi-height atomic decomposition with validation.
    Atoms(Common),
    /// Atomic-vs-maximal quasi-norm comparison.
    NormEquiv(Common),
    /// Weighted operator boundedness probes.
    OpBound(Common),
    /// Finite atomic decomposition with remainder split.
    Finite(Common),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Weights(_) => ExperimentKind::WeightsCheck,
            Command::Maximal(_) => ExperimentKind::Maximal,
            Command::Czd(_) => ExperimentKind::Czd,
            Command::Atoms(_) => ExperimentKind::Atomic,
            Command::NormEquiv(_) => ExperimentKind::NormEquiv,
            Command::OpBound(_) => ExperimentKind::OperatorBound,
            Command::Finite(_) => ExperimentKind::FiniteAtomic,
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Weights(c)
            | Command::Maximal(c)
            | Command::Czd(c)
            | Command::Atoms(c)
            | Command::NormEquiv(c)
            | Command::OpBound(c)
            | Command::Finite(c) => c,
        }
    }
}

fn parse_grid(s: &str) -> Result<GridSpec, Error> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(format!("--grid expects m,L,n, got `{s}`")));
    }
    let m = parts[0]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("bad m in `{s}`")))?;
    let half_width = parts[1]
        .trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("bad L in `{s}`")))?;
    let n = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("bad n in `{s}`")))?;
    Ok(GridSpec { n, half_width, m })
}

fn build_config(cmd: &Command) -> Result<ExperimentConfig, Error> {
    let common = cmd.common();
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    config.kind = Some(cmd.kind());
    if let Some(g) = &common.grid {
        config.grid = parse_grid(g)?;
    }
    if let Some(w) = &common.weight {
        config.weight = w.clone();
    }
    if let Some(out) = &common.out {
        config.out_dir = out.clone();
    }
    if let Some(b) = &common.baseline {
        config.baseline = Some(b.clone());
    }
    if common.update_baseline {
        config.update_baseline = true;
    }
    if let Some(seed) = common.seed {
        config.seed = seed;
        config.corpus.seed = seed;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match build_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(out) => {
            match write_artifacts(&out, Path::new(&config.out_dir)) {
                Ok(files) => {
                    for f in files {
                        println!("wrote {f}");
                    }
                }
                Err(e) => {
                    eprintln!("artifact error: {e}");
                    return ExitCode::from(3);
                }
            }
            for line in &out.baseline_lines {
                println!("baseline: {line}");
            }
            for (k, v) in &out.measured {
                println!("{k} = {v:.6e}");
            }
            ExitCode::SUCCESS
        }
        Err(Error::Regression(msg)) => {
            eprintln!("regression: {msg}");
            ExitCode::from(1)
        }
        Err(Error::Config(msg)) | Err(Error::UnknownName(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("compute error: {e}");
            ExitCode::from(3)
        }
    }
}
