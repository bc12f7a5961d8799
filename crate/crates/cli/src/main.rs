//! `hybrid-heston`: price options, reproduce reference tables, study
//! convergence and run diagnostics. All output is CSV.
//!
//! Exit status: 0 success, 1 configuration error, 2 numerical error,
//! 3 failed validation.

mod benchmarks;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hybrid_heston::Boundary;

use commands::{Result, TABLES};
use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "hybrid-heston", version, about = "Hybrid tree / finite-difference Heston pricer")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (flat `section.key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write CSV here instead of standard output. Overrides `output.path`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    /// Boundary rows of the finite-difference operator. Overrides
    /// `numerics.boundary`.
    #[arg(long, global = true, value_enum)]
    boundary: Option<BoundaryArg>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Price the configured option.
    Price,
    /// Reproduce a reference table. A config may override numerics and output.
    Table {
        #[arg(long, value_parser = parse_table)]
        table: u8,
    },
    /// Price at each N (time and space steps equal) and report the ratio of
    /// successive differences.
    Converge {
        #[arg(long, value_delimiter = ',', default_values_t = [200, 400, 800])]
        n_list: Vec<usize>,
    },
    /// Run the operator, moment and lattice checks for the configured grid.
    Validate,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundaryArg {
    Neumann,
    Dirichlet,
}

impl From<BoundaryArg> for Boundary {
    fn from(b: BoundaryArg) -> Self {
        match b {
            BoundaryArg::Neumann => Boundary::Neumann,
            BoundaryArg::Dirichlet => Boundary::Dirichlet,
        }
    }
}

fn parse_table(s: &str) -> std::result::Result<u8, String> {
    s.parse()
        .ok()
        .filter(|t| TABLES.contains(t))
        .ok_or_else(|| format!("expected one of 1, 2, 4, 5, 6, got `{s}`"))
}

fn load_config(cli: &Cli, required: bool) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| ConfigError { message: format!("{}: {}", path.display(), e.message), ..e })?
        }
        None if required => return Err(ConfigError::new("--config is required for this command").into()),
        None => RunConfig::default(),
    };
    if let Some(b) = cli.boundary {
        cfg.numerics.boundary = Some(b.into());
    }
    if let Some(p) = &cli.out {
        cfg.output.path = Some(p.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| ConfigError::new(format!("cannot start {} threads: {e}", cli.threads)))?;
    let required = !matches!(cli.command, Command::Table { .. });
    let cfg = load_config(cli, required)?;
    if let Command::Table { .. } = cli.command {
        if cfg.model.is_some() || cfg.option.is_some() {
            return Err(ConfigError::new("tables use fixed contracts; only numerics and output keys apply").into());
        }
    }
    let mut out = output::writer(cfg.output.path.as_deref())?;
    match &cli.command {
        Command::Price => commands::cmd_price(&cfg, &mut out),
        Command::Table { table } => commands::cmd_table(*table, &cfg.numerics, &mut out),
        Command::Converge { n_list } => commands::cmd_converge(&cfg, n_list, &mut out),
        Command::Validate => commands::cmd_validate(&cfg, &mut out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn table_ids() {
        assert_eq!(parse_table("5"), Ok(5));
        assert!(parse_table("3").is_err());
        assert!(parse_table("x").is_err());
    }
}
