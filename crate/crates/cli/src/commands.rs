use std::io;
use std::time::Instant;

use hybrid_heston::diagnostics::validate_run;
use hybrid_heston::{
    convergence_ratio, price, ExerciseStyle, HestonParams, OptionKind, OptionSpec, Result as CoreResult,
};

use crate::benchmarks::Benchmarks;
use crate::config::{ConfigError, NumericsConfig, RunConfig};
use crate::output::{sig9, CsvOut};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Numerical(#[from] hybrid_heston::Error),
    #[error("validation failed: {0}")]
    ValidationFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Numerical(hybrid_heston::Error::InvalidParameter { .. }) => 1,
            CliError::Numerical(_) => 2,
            CliError::ValidationFailed(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn cmd_price(cfg: &RunConfig, out: &mut CsvOut) -> Result<()> {
    let (params, spec) = (cfg.model()?, cfg.option()?);
    let numerics = cfg.numerics.resolved()?;
    let start = Instant::now();
    let result = price(params, spec, &numerics)?;
    let ms = if cfg.output.timing {
        sig9(start.elapsed().as_secs_f64() * 1e3)
    } else {
        "0".into()
    };
    let d = &result.diagnostics;
    out.write_record(["price", "runtime_ms", "implicit_nodes", "explicit_nodes"])?;
    out.write_record([sig9(result.price), ms, d.implicit_nodes.to_string(), d.explicit_nodes.to_string()])?;
    out.flush()?;
    Ok(())
}

pub fn cmd_converge(cfg: &RunConfig, n_list: &[usize], out: &mut CsvOut) -> Result<()> {
    check_n_list(n_list)?;
    let (params, spec) = (cfg.model()?, cfg.option()?);
    let prices = n_list
        .iter()
        .map(|&n| Ok(price(params, spec, &cfg.numerics.numerics(n, n))?.price))
        .collect::<Result<Vec<f64>>>()?;
    out.write_record(["N", "price", "ratio"])?;
    for (i, (&n, &p)) in n_list.iter().zip(&prices).enumerate() {
        let ratio = if i >= 2 {
            sig9(convergence_ratio(prices[i - 2], prices[i - 1], p)?)
        } else {
            String::new()
        };
        out.write_record([n.to_string(), sig9(p), ratio])?;
    }
    out.flush()?;
    Ok(())
}

pub fn check_n_list(n_list: &[usize]) -> std::result::Result<(), ConfigError> {
    if n_list.len() < 3 {
        return Err(ConfigError::new(format!("n_list needs at least 3 entries, got {}", n_list.len())));
    }
    if n_list[0] == 0 {
        return Err(ConfigError::new("n_list entries must be positive"));
    }
    if let Some(w) = n_list.windows(2).find(|w| w[1] != 2 * w[0]) {
        return Err(ConfigError::new(format!(
            "each n_list entry must double the previous one, got {} after {}",
            w[1], w[0]
        )));
    }
    Ok(())
}

pub fn cmd_validate(cfg: &RunConfig, out: &mut CsvOut) -> Result<()> {
    let params = cfg.model()?;
    let maturity = cfg.option()?.maturity;
    let numerics = cfg.numerics.resolved()?;
    let report = validate_run(params, maturity, &numerics)?;
    out.write_record(["check", "informational", "passed", "margin", "detail"])?;
    for r in &report.rows {
        out.write_record([
            r.name.clone(),
            r.informational.to_string(),
            r.passed.to_string(),
            sig9(r.margin),
            r.detail.clone(),
        ])?;
    }
    out.flush()?;
    if report.all_passed() {
        Ok(())
    } else {
        let failed: Vec<_> = report
            .rows
            .iter()
            .filter(|r| !r.informational && !r.passed)
            .map(|r| r.name.as_str())
            .collect();
        Err(CliError::ValidationFailed(failed.join(", ")))
    }
}

/// Vol-of-vol used for the barrier tables.
pub const BARRIER_SIGMA: f64 = 0.1;

pub const TABLES: [u8; 5] = [1, 2, 4, 5, 6];

struct TableLayout {
    block_name: &'static str,
    benchmark_name: &'static str,
    /// Block label, model and contract for each block.
    blocks: Vec<(String, HestonParams, OptionSpec)>,
    sizes: &'static [usize],
}

/// Time steps used for the fixed-time-step column.
const FIXED_TIME_STEPS: usize = 100;

fn layout(table: u8) -> CoreResult<TableLayout> {
    let table1 = |sigma: f64| HestonParams::new(2.0, 0.1, sigma, -0.5, 1.1f64.ln(), 0.0, 100.0, 0.1);
    let short = |s0: f64| HestonParams::new(5.0, 0.16, 0.9, 0.1, 0.1, 0.0, s0, 0.25);
    let barrier = |s0: f64| HestonParams::new(2.0, 0.1, BARRIER_SIGMA, -0.5, 0.03, 0.05, s0, 0.1);
    let up_out = |style| OptionSpec::new(OptionKind::Call, style, 100.0, 0.5)?.with_up_and_out(130.0);
    let sigma_blocks = |style| -> CoreResult<Vec<_>> {
        [0.04, 0.5, 1.0]
            .iter()
            .map(|&s| Ok((format!("{s}"), table1(s)?, OptionSpec::new(OptionKind::Put, style, 100.0, 1.0)?)))
            .collect()
    };
    let barrier_blocks = |style| -> CoreResult<Vec<_>> {
        [80.0, 100.0, 120.0]
            .iter()
            .map(|&s0| Ok((format!("{s0}"), barrier(s0)?, up_out(style)?)))
            .collect()
    };
    Ok(match table {
        1 => TableLayout {
            block_name: "sigma",
            benchmark_name: "CF",
            blocks: sigma_blocks(ExerciseStyle::European)?,
            sizes: &[50, 100, 200, 400],
        },
        2 => TableLayout {
            block_name: "sigma",
            benchmark_name: "MC-LS",
            blocks: sigma_blocks(ExerciseStyle::American)?,
            sizes: &[50, 100, 200, 400],
        },
        4 => TableLayout {
            block_name: "S0",
            benchmark_name: "ZFV",
            blocks: [8.0, 9.0, 10.0, 11.0, 12.0]
                .iter()
                .map(|&s0| {
                    Ok((
                        format!("{s0}"),
                        short(s0)?,
                        OptionSpec::new(OptionKind::Put, ExerciseStyle::American, 10.0, 0.25)?,
                    ))
                })
                .collect::<CoreResult<_>>()?,
            sizes: &[50, 100, 200, 400, 800],
        },
        5 => TableLayout {
            block_name: "S0",
            benchmark_name: "MOL",
            blocks: barrier_blocks(ExerciseStyle::European)?,
            sizes: &[50, 100, 200, 400],
        },
        6 => TableLayout {
            block_name: "S0",
            benchmark_name: "MOL",
            blocks: barrier_blocks(ExerciseStyle::American)?,
            sizes: &[50, 100, 200, 400],
        },
        other => return Err(hybrid_heston::Error::InvalidParameter {
            name: "table",
            reason: format!("unknown table {other}"),
        }),
    })
}

/// One row per block and space size: prices with 100 time steps and with
/// as many time steps as space steps, beside the reference value.
pub fn cmd_table(table: u8, numerics: &NumericsConfig, out: &mut CsvOut) -> Result<()> {
    let layout = layout(table)?;
    let refs = Benchmarks::embedded().table(table);
    out.write_record([layout.block_name, "N_S", "HTFD1", "HTFD2", layout.benchmark_name])?;
    for ((label, params, spec), reference) in layout.blocks.iter().zip(refs) {
        for &n in layout.sizes {
            let fixed = price(params, spec, &numerics.numerics(FIXED_TIME_STEPS, n))?.price;
            let equal = price(params, spec, &numerics.numerics(n, n))?.price;
            out.write_record([label.clone(), n.to_string(), sig9(fixed), sig9(equal), sig9(reference)])?;
        }
    }
    out.flush()?;
    Ok(())
}
