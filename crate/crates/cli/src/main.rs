//! `hlat`: lattice construction, error evaluation, convergence studies and
//! dimension advice from the command line.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical-domain error, 1 I/O.

mod cache;
mod commands;
mod config;
mod error;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hybrid_lattice::cbc::CbcMode;

use crate::config::{ExperimentConfig, Format, Overrides, RuleKind};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "hlat", version, about = "Concatenated lattice/Monte Carlo rules in weighted Korobov spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a generating vector by component-by-component search.
    Construct,
    /// Exact (and optionally replicated) errors of the hybrid rules.
    Error,
    /// Error and bound over a list of point counts, with a fitted slope.
    Convergence,
    /// Advised lattice dimensions and construction-cost figures.
    Advise,
}

#[derive(Debug, Args)]
struct Common {
    /// JSON config file, or `-` for stdin. Flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (default stdout).
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Worker threads for replication and candidate sweeps.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Point counts, comma separated.
    #[arg(short = 'N', long = "n", global = true, value_delimiter = ',')]
    n: Option<Vec<u64>>,
    /// Lattice dimension or `advise`.
    #[arg(short = 'd', long, global = true)]
    d: Option<String>,
    /// Total dimension, or `<k>d` for a multiple of d.
    #[arg(short = 's', long, global = true)]
    s: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// `fast-decay`, `slow-decay` or a comma-separated weight list.
    #[arg(long, global = true)]
    weights: Option<String>,
    #[arg(long, global = true)]
    lambda_star: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    replications: Option<u64>,
    /// CBC sweep: naive, fast or auto.
    #[arg(long, global = true, value_parser = parse_mode)]
    mode: Option<CbcMode>,
    #[arg(long, global = true, value_enum)]
    rule: Option<RuleKind>,
    /// Directory for cached generating vectors.
    #[arg(long, global = true, value_name = "PATH")]
    cache_dir: Option<PathBuf>,
}

fn parse_mode(raw: &str) -> std::result::Result<CbcMode, String> {
    match raw {
        "naive" => Ok(CbcMode::Naive),
        "fast" => Ok(CbcMode::Fast),
        "auto" => Ok(CbcMode::Auto),
        _ => Err(format!("expected naive, fast or auto, got {raw:?}")),
    }
}

impl Common {
    fn into_config(self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.apply(Overrides {
            weights: self.weights,
            lambda_star: self.lambda_star,
            alpha: self.alpha,
            n: self.n,
            s: self.s,
            d: self.d,
            kappa: self.kappa,
            seed: self.seed,
            replications: self.replications,
            mode: self.mode,
            rule: self.rule,
            cache_dir: self.cache_dir,
            out: self.out,
            format: self.format,
            threads: self.threads,
        })?;
        Ok(cfg)
    }
}

fn sink(cfg: &ExperimentConfig) -> Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<()> {
    let cfg = cli.common.into_config()?;
    if let Some(t) = cfg.threads {
        if t == 0 {
            return Err(CliError::config("threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot start thread pool: {e}")))?;
    }
    let default_format = match cli.command {
        Command::Convergence => Format::Csv,
        _ => Format::Json,
    };
    let format = cfg.format.unwrap_or(default_format);
    // compute before opening the sink so a failed run leaves no partial file
    let mut out: Box<dyn Write>;
    match cli.command {
        Command::Construct => {
            let rec = commands::construct(&cfg)?;
            out = sink(&cfg)?;
            match format {
                Format::Json => output::json(&rec, &mut out)?,
                Format::Csv => output::construct_csv(&rec, &mut out)?,
            }
            if let Some(w) = &rec.warning {
                eprintln!("warning: {w}");
            }
        }
        Command::Error => {
            let report = commands::error(&cfg)?;
            out = sink(&cfg)?;
            match format {
                Format::Json => output::json(&report, &mut out)?,
                Format::Csv => output::error_csv(&report, &mut out)?,
            }
        }
        Command::Convergence => {
            let report = commands::convergence(&cfg)?;
            out = sink(&cfg)?;
            match format {
                Format::Json => output::json(&report, &mut out)?,
                Format::Csv => output::convergence_csv(&report, &mut out)?,
            }
        }
        Command::Advise => {
            let report = commands::advise(&cfg)?;
            out = sink(&cfg)?;
            match format {
                Format::Json => output::json(&report, &mut out)?,
                Format::Csv => output::advise_csv(&report, &mut out)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { error::EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hlat: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
