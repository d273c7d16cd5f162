//! `hbgic`: finite-blocklength rates, early-decoding lengths, rate regions
//! and Monte Carlo runs for the two-user Gaussian interference channel.
//!
//! Exit codes: 0 on success (infeasible results included), 2 for invalid
//! input, 3 for numeric or I/O failures.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use hbgic_core::region::{LatencyCsvRow, RegionCsvRow};

use config::{parse_grid, parse_u64_list, set, set_json, set_number};
use output::Format;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(hbgic_core::Error),
    Internal(String),
}

impl From<hbgic_core::Error> for CliError {
    fn from(e: hbgic_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(hbgic_core::Error::Numeric(_)) => 3,
            CliError::Core(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Internal(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "hbgic", version, about = "Finite-blocklength analysis of the heterogeneous-blocklength Gaussian interference channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run config; inline flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and simulations.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Normal-approximation rate of a point-to-point AWGN link.
    P2pRate(P2pArgs),
    /// Minimum early-decoding length at the stronger user.
    EdMin(EdMinArgs),
    /// Early-decoding length over a grid of cross gains and blocklengths.
    Latency(LatencyArgs),
    /// Second-order rate region by the rate-profile method.
    Region(RegionArgs),
    /// Monte Carlo run of the SIC threshold decoders.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct P2pArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    n: Option<u64>,
    /// Linear SNR, or decibels with a `db` suffix.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    eps: Option<String>,
}

#[derive(Args)]
struct EdMinArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    a21: Option<String>,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    log_m1: Option<String>,
    #[arg(long)]
    eps_21: Option<String>,
    #[arg(long)]
    ed_bound: Option<String>,
}

#[derive(Args)]
struct LatencyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
    /// Comma list, or `from:to:points` for a log-spaced grid.
    #[arg(long)]
    a21: Option<String>,
    /// Comma list of n1 values.
    #[arg(long)]
    n1: Option<String>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    eps_21: Option<String>,
    #[arg(long)]
    log_m1: Option<String>,
    #[arg(long)]
    rate_r1: Option<String>,
    #[arg(long)]
    ed_bound: Option<String>,
}

#[derive(Args)]
struct ChannelArgs {
    #[arg(long)]
    a12: Option<String>,
    #[arg(long)]
    a21: Option<String>,
    #[arg(long)]
    p1: Option<String>,
    #[arg(long)]
    p2: Option<String>,
}

impl ChannelArgs {
    fn apply(&self, v: &mut Value) -> Result<(), CliError> {
        set_number(v, "params.a12", self.a12.as_deref())?;
        set_number(v, "params.a21", self.a21.as_deref())?;
        set_number(v, "params.p1", self.p1.as_deref())?;
        set_number(v, "params.p2", self.p2.as_deref())
    }
}

#[derive(Args)]
struct RegionArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    eps: Option<String>,
    /// Comma list of profile weights.
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    omega_points: Option<usize>,
    #[arg(long)]
    split_strategy: Option<String>,
    #[arg(long)]
    split_resolution: Option<usize>,
    #[arg(long)]
    rate_tolerance: Option<String>,
    #[arg(long)]
    ed_bound: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    channel: ChannelArgs,
    #[arg(long)]
    n1: Option<u64>,
    #[arg(long)]
    n2: Option<u64>,
    #[arg(long)]
    n1_tilde: Option<u64>,
    #[arg(long)]
    eps_21: Option<String>,
    #[arg(long)]
    log_m1: Option<String>,
    #[arg(long)]
    log_m2: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    ed_enabled: Option<bool>,
    #[arg(long)]
    codebook_mode: Option<String>,
}

fn load_config<T: DeserializeOwned + Serialize>(
    common: &Common,
    apply: impl FnOnce(&mut Value) -> Result<(), CliError>,
) -> Result<T, CliError> {
    let mut v = config::load(common.config.as_deref())?;
    apply(&mut v)?;
    config::finish(v)
}

fn echo(cfg: &impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(cfg).map_err(|e| CliError::Internal(e.to_string()))
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Usage("--threads must be >= 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn write<R: Serialize>(
    common: &Common,
    command: &str,
    config: &Value,
    result: &impl Serialize,
    rows: impl IntoIterator<Item = R>,
) -> Result<(), CliError> {
    let text = match common.format {
        Format::Json => output::json_document(command, config, result)?,
        Format::Csv => output::csv_document(config, rows)?,
    };
    output::emit(common.out.as_deref(), &text)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::P2pRate(a) => {
            let cfg: commands::P2pRateConfig = load_config(&a.common, |v| {
                set_json(v, "n", a.n);
                set_number(v, "snr", a.snr.as_deref())?;
                set_number(v, "eps", a.eps.as_deref())
            })?;
            let r = commands::p2p_rate(&cfg)?;
            let row = output::P2pCsvRow {
                n: cfg.n,
                snr: cfg.snr,
                eps: cfg.eps,
                rate: r.rate,
                capacity: r.capacity,
                dispersion: r.dispersion,
            };
            write(&a.common, "p2p-rate", &echo(&cfg)?, &r, [row])
        }
        Command::EdMin(a) => {
            let cfg: commands::EdMinConfig = load_config(&a.common, |v| {
                set_number(v, "a21", a.a21.as_deref())?;
                set_number(v, "p1", a.p1.as_deref())?;
                set_number(v, "p2", a.p2.as_deref())?;
                set_json(v, "n1", a.n1);
                set_json(v, "n2", a.n2);
                set_number(v, "log_m1", a.log_m1.as_deref())?;
                set_number(v, "eps_21", a.eps_21.as_deref())?;
                set_json(v, "ed_bound", a.ed_bound.clone());
                Ok(())
            })?;
            let r = commands::ed_min(&cfg)?;
            let row = output::EdMinCsvRow {
                a21: cfg.a21,
                n1: cfg.n1,
                n2: cfg.n2.unwrap_or(cfg.n1),
                n1_tilde: r.length.n1_tilde,
                real_bound: r.length.real_bound,
                feasible: r.feasible,
                margin: r.margin,
            };
            write(&a.common, "ed-min", &echo(&cfg)?, &r, [row])
        }
        Command::Latency(a) => {
            let cfg: commands::LatencyCmdConfig = load_config(&a.common, |v| {
                set_number(v, "p1", a.p1.as_deref())?;
                set_number(v, "p2", a.p2.as_deref())?;
                if let Some(g) = &a.a21 {
                    set(v, "a21", parse_grid(g)?);
                }
                if let Some(n) = &a.n1 {
                    set(v, "n1", serde_json::json!(parse_u64_list(n)?));
                }
                set_json(v, "n2", a.n2);
                set_number(v, "eps_21", a.eps_21.as_deref())?;
                set_number(v, "log_m1", a.log_m1.as_deref())?;
                set_number(v, "rate_r1", a.rate_r1.as_deref())?;
                set_json(v, "ed_bound", a.ed_bound.clone());
                Ok(())
            })?;
            let rows = commands::latency(&cfg)?;
            write(&a.common, "latency", &echo(&cfg)?, &rows, rows.iter().map(LatencyCsvRow::from))
        }
        Command::Region(a) => {
            let cfg: commands::RegionCmdConfig = load_config(&a.common, |v| {
                a.channel.apply(v)?;
                set_json(v, "n1", a.n1);
                set_json(v, "n2", a.n2);
                set_number(v, "eps", a.eps.as_deref())?;
                if let Some(w) = &a.omega {
                    set(v, "omega_grid", parse_grid(w)?);
                }
                set_json(v, "omega_points", a.omega_points);
                set_json(v, "split_strategy", a.split_strategy.clone());
                set_json(v, "split_resolution", a.split_resolution);
                set_number(v, "rate_tolerance", a.rate_tolerance.as_deref())?;
                set_json(v, "ed_bound", a.ed_bound.clone());
                Ok(())
            })?;
            let sweep = with_threads(a.common.threads, || commands::region(&cfg))??;
            write(
                &a.common,
                "region",
                &echo(&cfg)?,
                &sweep,
                sweep.points.iter().map(RegionCsvRow::from),
            )
        }
        Command::Simulate(a) => {
            let mut cfg: commands::SimulateCmdConfig = load_config(&a.common, |v| {
                a.channel.apply(v)?;
                set_json(v, "n1", a.n1);
                set_json(v, "n2", a.n2);
                set_json(v, "n1_tilde", a.n1_tilde);
                set_number(v, "eps_21", a.eps_21.as_deref())?;
                set_number(v, "log_m1", a.log_m1.as_deref())?;
                set_number(v, "log_m2", a.log_m2.as_deref())?;
                set_json(v, "trials", a.trials);
                set_json(v, "seed", a.common.seed);
                set_json(v, "ed_enabled", a.ed_enabled);
                set_json(v, "codebook_mode", a.codebook_mode.clone());
                Ok(())
            })?;
            commands::resolve_simulate(&mut cfg)?;
            let r = with_threads(a.common.threads, || commands::simulate(&cfg))??;
            write(&a.common, "simulate", &echo(&cfg)?, &r, output::sim_rows(&r))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
