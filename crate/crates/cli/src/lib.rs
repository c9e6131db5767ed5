//! Command-line front end: analytics sweeps, tradeoff datasets, lift
//! construction and verification suites.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage errors.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use regen::analytics::{self, parse_rational, to_decimal, Rational};
use regen::harness::{self, BaseCode, Corruption, DEFAULT_SEED};
use regen::lift::{self, LiftVariant};
use regen::model::RegeneratingCode;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "regen", version, about = "Exact-repair regenerating code workbench")]
pub struct Cli {
    /// Seed for every random choice (files, sampled subsets).
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Functional-repair capacity C_{k,d}(alpha, gamma).
    Capacity {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        gamma: String,
    },
    /// MSR and MBR operating points for a file of size B.
    Points {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long = "B")]
        b: String,
    },
    /// Exact-repair lower bound reached by lifting an MSR code.
    Bound {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        alpha: String,
        #[arg(long)]
        i: u64,
    },
    /// Capacity / bound / interpolation curves at (n, n-1, n-1), alpha = 1, as CSV.
    Fig2 {
        #[arg(long, default_value_t = 51)]
        n: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bound-to-capacity ratio along (n+M, k+M, d+M) as JSON reports.
    Asymptotic {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        d: u64,
        #[arg(long)]
        s: String,
        #[arg(long = "M-list", value_delimiter = ',', required = true)]
        m_list: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Builds a lifted code, stores a random file and writes the instance summary.
    Lift {
        #[arg(long)]
        base: String,
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 1)]
        times: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs a registered scenario end to end.
    Verify {
        #[arg(long)]
        scenario: String,
        /// Flip the stored symbol at NODE:OFFSET before verifying.
        #[arg(long)]
        corrupt: Option<String>,
        /// Also write the full result as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Per-helper repair bandwidth of one node in a registered scenario.
    Audit {
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        failed: usize,
        #[arg(long)]
        json: bool,
    },
    /// Lists registered scenarios.
    Scenarios,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Regen(#[from] regen::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Regen(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_FAILED,
        }
    }
}

fn rational_arg(name: &str, v: &str) -> Result<Rational, CliError> {
    parse_rational(v).map_err(|e| CliError::Usage(format!("--{name}: {e}")))
}

fn show(r: &Rational) -> String {
    let dec = to_decimal(r, 20);
    if dec == r.to_string() {
        dec
    } else {
        format!("{r} ({dec})")
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)?;
    Ok(())
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Capacity { k, d, alpha, gamma } => {
            let alpha = rational_arg("alpha", alpha)?;
            let gamma = rational_arg("gamma", gamma)?;
            let c = analytics::functional_capacity(*k, *d, &alpha, &gamma)?;
            writeln!(out, "{}", show(&c))?;
        }
        Command::Points { k, d, b } => {
            let b = rational_arg("B", b)?;
            let (a, g) = analytics::msr_point(*k, *d, &b)?;
            writeln!(out, "MSR alpha={} gamma={}", show(&a), show(&g))?;
            let (a, g) = analytics::mbr_point(*k, *d, &b)?;
            writeln!(out, "MBR alpha={} gamma={}", show(&a), show(&g))?;
        }
        Command::Bound { n, k, d, alpha, i } => {
            let alpha = rational_arg("alpha", alpha)?;
            let (g, v) = analytics::exact_lower_bound(*n, *k, *d, &alpha, *i)?;
            writeln!(out, "gamma={} bound={}", show(&g), show(&v))?;
        }
        Command::Fig2 { n, out: path } => {
            let rows = analytics::tradeoff_dataset(*n)?;
            write_file(path, &analytics::tradeoff_csv(&rows))?;
            writeln!(out, "wrote {} rows to {}", rows.len(), path.display())?;
        }
        Command::Asymptotic { n, k, d, s, m_list, out: path } => {
            let s = rational_arg("s", s)?;
            let reports = m_list
                .iter()
                .map(|&m| analytics::asymptotic_ratio(*n, *k, *d, m, &s))
                .collect::<regen::Result<Vec<_>>>()?;
            let json = serde_json::to_string_pretty(&reports).expect("reports serialize");
            match path {
                Some(p) => {
                    write_file(p, &json)?;
                    for r in &reports {
                        writeln!(out, "M={} ratio={}", r.m, r.ratio_decimal)?;
                    }
                }
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Lift { base, variant, times, out: path } => {
            let base: BaseCode = base.parse()?;
            let variant: LiftVariant = variant.parse()?;
            let code: Arc<dyn RegeneratingCode> = lift::iterated_lift(base.build()?, *times, variant)?;
            let instance = code.store(&harness::random_file(code.params().file_size, cli.seed))?;
            let summary = lift::summarize(code.as_ref(), &instance, Some(cli.seed));
            write_file(path, &serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
            writeln!(out, "{} {}", summary.code_id, summary.params)?;
        }
        Command::Verify { scenario, corrupt, json } => {
            let corruption = corrupt.as_deref().map(parse_corruption).transpose()?;
            let result = harness::run_construction_suite_with(scenario, cli.seed, corruption)?;
            write!(out, "{}", result.table())?;
            if let Some(p) = json {
                write_file(p, &result.to_json())?;
            }
            return Ok(result.exit_code());
        }
        Command::Audit { scenario, failed, json } => {
            let audit = harness::audit_scenario(scenario, *failed, cli.seed)?;
            if *json {
                writeln!(out, "{}", audit.to_json())?;
            } else {
                write!(out, "{}", audit.table())?;
            }
        }
        Command::Scenarios => {
            for sc in harness::SCENARIOS {
                writeln!(out, "{:<16} {}", sc.name, sc.description)?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn parse_corruption(s: &str) -> Result<Corruption, CliError> {
    let bad = || CliError::Usage(format!("--corrupt expects NODE:OFFSET, got `{s}`"));
    let (node, offset) = s.split_once(':').ok_or_else(bad)?;
    Ok(Corruption { node: node.parse().map_err(|_| bad())?, offset: offset.parse().map_err(|_| bad())? })
}
