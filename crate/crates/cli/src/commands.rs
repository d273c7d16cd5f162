//! Typed run configs and the analyses behind each subcommand.

use serde::{Deserialize, Serialize};

use hbgic_core::early_decoding::{ed_bounds, ed_feasible_with, min_ed_length_with, EdLength, EdQuery};
use hbgic_core::fbl::{gaussian_capacity, gaussian_dispersion, normal_approx_rate, Probability, Snr};
use hbgic_core::model::{BlocklengthConfig, ChannelParams};
use hbgic_core::region::{
    latency_sweep, log_grid, region_sweep, uniform_omega_grid, LatencyConfig, LatencyRow, MessageSize, RegionSweep,
    SweepConfig, DEFAULT_OMEGA_POINTS, DEFAULT_RATE_TOLERANCE,
};
use hbgic_core::sim::{run_experiment, CodebookMode, SimExperiment, SimResult};

use crate::config::schema_version;
use crate::CliError;

fn theorem() -> String {
    "theorem".into()
}

fn symmetric() -> String {
    "symmetric".into()
}

fn one() -> usize {
    1
}

fn yes() -> bool {
    true
}

fn omega_points() -> usize {
    DEFAULT_OMEGA_POINTS
}

fn rate_tolerance() -> f64 {
    DEFAULT_RATE_TOLERANCE
}

fn probability(name: &str, x: f64) -> Result<Probability, CliError> {
    Probability::new(x).map_err(|_| CliError::Usage(format!("{name} = {x} must lie in (0, 1)")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct P2pRateConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub n: u64,
    pub snr: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct P2pRate {
    pub rate: f64,
    pub capacity: f64,
    pub dispersion: f64,
}

pub fn p2p_rate(cfg: &P2pRateConfig) -> Result<P2pRate, CliError> {
    let snr = Snr::new(cfg.snr)?;
    let eps = probability("eps", cfg.eps)?;
    Ok(P2pRate {
        rate: normal_approx_rate(cfg.n, snr, eps)?,
        capacity: gaussian_capacity(snr),
        dispersion: gaussian_dispersion(snr),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdMinConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub a21: f64,
    pub p1: f64,
    pub p2: f64,
    pub n1: u64,
    /// Early decoding must finish within n2 symbols; defaults to n1.
    #[serde(default)]
    pub n2: Option<u64>,
    #[serde(default)]
    pub log_m1: f64,
    pub eps_21: f64,
    #[serde(default = "theorem")]
    pub ed_bound: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdMin {
    #[serde(flatten)]
    pub length: EdLength,
    pub feasible: bool,
    pub margin: i64,
}

pub fn ed_min(cfg: &EdMinConfig) -> Result<EdMin, CliError> {
    let bound = ed_bounds().get(&cfg.ed_bound)?;
    let params = ChannelParams::new(1.0 + cfg.p1, cfg.a21, cfg.p1, cfg.p2);
    let q = EdQuery::new(params, cfg.n1, cfg.log_m1, probability("eps_21", cfg.eps_21)?);
    let n2 = cfg.n2.unwrap_or(cfg.n1);
    let length = min_ed_length_with(bound.as_ref(), &q, n2)?;
    let f = ed_feasible_with(bound.as_ref(), &q, n2)?;
    Ok(EdMin {
        length,
        feasible: f.feasible,
        margin: f.margin,
    })
}

/// An explicit list, or `points` log-spaced values from `log_from` to `log_to`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Values(Vec<f64>),
    LogSpaced { log_from: f64, log_to: f64, points: usize },
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match *self {
            GridSpec::Values(ref v) => Ok(v.clone()),
            GridSpec::LogSpaced { log_from, log_to, points } => {
                if !(log_from > 0.0 && log_to >= log_from) {
                    return Err(CliError::Usage("log grid needs 0 < log_from <= log_to".into()));
                }
                Ok(log_grid(log_from, log_to, points))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyCmdConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub p1: f64,
    pub p2: f64,
    pub a21: GridSpec,
    pub n1: Vec<u64>,
    pub eps_21: f64,
    /// Fixed log₂ M₁ in bits; ignored when `rate_r1` is set.
    #[serde(default)]
    pub log_m1: f64,
    /// Scale log₂ M₁ with n1 at this rate instead.
    #[serde(default)]
    pub rate_r1: Option<f64>,
    #[serde(default)]
    pub n2: Option<u64>,
    #[serde(default = "theorem")]
    pub ed_bound: String,
}

pub fn latency(cfg: &LatencyCmdConfig) -> Result<Vec<LatencyRow>, CliError> {
    let message = match cfg.rate_r1 {
        Some(r) => MessageSize::Rate(r),
        None => MessageSize::Bits(cfg.log_m1),
    };
    let core = LatencyConfig {
        p1: cfg.p1,
        p2: cfg.p2,
        a21_grid: cfg.a21.values()?,
        n1_list: cfg.n1.clone(),
        eps_21: probability("eps_21", cfg.eps_21)?,
        message,
        n2: cfg.n2,
        ed_bound: cfg.ed_bound.clone(),
    };
    Ok(latency_sweep(&core)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionCmdConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub params: ChannelParams,
    pub n1: u64,
    pub n2: u64,
    pub eps: f64,
    /// Explicit profile weights; when absent, `omega_points` evenly spaced.
    #[serde(default)]
    pub omega_grid: Option<Vec<f64>>,
    #[serde(default = "omega_points")]
    pub omega_points: usize,
    #[serde(default = "symmetric")]
    pub split_strategy: String,
    #[serde(default = "one")]
    pub split_resolution: usize,
    #[serde(default = "rate_tolerance")]
    pub rate_tolerance: f64,
    #[serde(default = "theorem")]
    pub ed_bound: String,
}

pub fn region(cfg: &RegionCmdConfig) -> Result<RegionSweep, CliError> {
    let mut sweep = SweepConfig::new(
        cfg.params,
        BlocklengthConfig::new(cfg.n1, cfg.n2),
        probability("eps", cfg.eps)?,
    );
    sweep.omega_grid = match &cfg.omega_grid {
        Some(g) => g.clone(),
        None => uniform_omega_grid(cfg.omega_points),
    };
    sweep.split_strategy = cfg.split_strategy.clone();
    sweep.split_resolution = cfg.split_resolution;
    sweep.rate_tolerance = cfg.rate_tolerance;
    sweep.ed_bound = cfg.ed_bound.clone();
    Ok(region_sweep(&sweep)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateCmdConfig {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub params: ChannelParams,
    pub n1: u64,
    pub n2: u64,
    /// Early-decoding length; computed from `eps_21` when absent.
    #[serde(default)]
    pub n1_tilde: Option<u64>,
    #[serde(default)]
    pub eps_21: Option<f64>,
    pub log_m1: f64,
    pub log_m2: f64,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub ed_enabled: bool,
    #[serde(default)]
    pub codebook_mode: CodebookMode,
}

/// Fills in a computed early-decoding length so the echo is fully resolved.
pub fn resolve_simulate(cfg: &mut SimulateCmdConfig) -> Result<(), CliError> {
    if cfg.ed_enabled && cfg.n1_tilde.is_none() {
        let eps = cfg
            .eps_21
            .ok_or_else(|| CliError::Usage("early decoding needs n1_tilde or eps_21".into()))?;
        let q = EdQuery::new(cfg.params, cfg.n1, cfg.log_m1, probability("eps_21", eps)?);
        let len = hbgic_core::early_decoding::min_ed_length(&q)?;
        cfg.n1_tilde = Some(len.n1_tilde);
    }
    Ok(())
}

pub fn simulate(cfg: &SimulateCmdConfig) -> Result<SimResult, CliError> {
    let mut bl = BlocklengthConfig::new(cfg.n1, cfg.n2);
    if cfg.ed_enabled {
        bl.n1_tilde = cfg.n1_tilde;
    }
    let exp = SimExperiment {
        params: cfg.params,
        blocklengths: bl,
        log_m1: cfg.log_m1,
        log_m2: cfg.log_m2,
        trials: cfg.trials,
        seed: cfg.seed,
        ed_enabled: cfg.ed_enabled,
        codebook_mode: cfg.codebook_mode,
    };
    Ok(run_experiment(&exp)?)
}
