//! `branchq`: runs one experiment described by a TOML configuration.
//!
//! Exit status 0 on success, 2 for a rejected configuration, 3 for a
//! numerical failure (including failed verification criteria).

// negated comparisons deliberately reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod modes;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::{ConfigError, ExperimentConfig, Mode};
use modes::Failure;
use output::{OutputDir, RESOLVED_CONFIG};

#[derive(Debug, Parser)]
#[command(name = "branchq", version, about = "Branched quantization experiments")]
struct Cli {
    /// Mode to run; same as --mode.
    #[arg(value_enum, conflicts_with = "mode")]
    command: Option<Mode>,
    /// Experiment configuration (TOML, schema 1). Defaults apply without it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured mode.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Worker threads for sweeps and verification.
    #[arg(long, default_value_t = default_jobs(), value_parser = clap::value_parser!(u16).range(1..))]
    jobs: u16,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn default_jobs() -> u16 {
    std::thread::available_parallelism()
        .map(|n| n.get().min(u16::MAX as usize) as u16)
        .unwrap_or(1)
}

fn load(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            ExperimentConfig::parse(&text, path)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(m) = cli.mode.or(cli.command) {
        cfg.mode = Some(m);
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.clone();
    }
    cfg.resolve();
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig, jobs: usize) -> Result<usize, Failure> {
    let mode = cfg.mode()?;
    let io = |e: std::io::Error| Failure::Numerical {
        module: "output",
        message: format!("{}: {e}", cfg.output.dir.display()),
    };
    let mut out = OutputDir::create(&cfg.output.dir).map_err(io)?;
    out.write_bytes(RESOLVED_CONFIG, cfg.resolved_toml().as_bytes())
        .map_err(io)?;
    let outcome = modes::run(cfg, &mut out, jobs);
    // partial results stay listed even when the run failed
    let records = out.finish(mode.name(), cfg.seed).map_err(io)?;
    outcome.map(|()| records.len())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("branchq: config error: {e}");
            return ExitCode::from(2);
        }
    };
    match execute(&cfg, cli.jobs as usize) {
        Ok(files) => {
            println!(
                "branchq: {} wrote {files} files to {}",
                cfg.mode.map_or("run", Mode::name),
                cfg.output.dir.display()
            );
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("branchq: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
