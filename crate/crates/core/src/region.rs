//! Second-order rate region under early decoding, traced with the rate-profile
//! method, plus the latency-reduction table.
//!
//! For a profile weight ω the search maximizes R subject to R₁ ≥ ωR and
//! R₂ ≥ (1−ω)R, where each candidate error budget caps the rates at
//!
//! ```text
//! R₁ ≤ min( C(P₁) − sqrt(V_G(P₁)/n₁)·Q⁻¹(ε₁₂),  maxlogM₁(ε₂₁)/n₁ )
//! R₂ ≤ C(P₂) − sqrt(V_G(P₂)/n₂)·Q⁻¹(ε₂₂)
//! ```
//!
//! The second cap on R₁ is the early-decoding constraint with log M₁ = n₁·R₁:
//! when the second-order rate would make early decoding infeasible, log M₁ is
//! lowered until it is not.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::budget::{enumerate_budgets, split_strategies, ErrorBudget};
use crate::early_decoding::{ed_bounds, max_log_m1_with, min_ed_length_with, EdBound, EdQuery};
use crate::error::{Error, Result};
use crate::fbl::{gaussian_capacity, gaussian_dispersion, normal_approx_rate, q_inv, Probability, Snr};
use crate::model::{BlocklengthConfig, ChannelParams};

pub const DEFAULT_RATE_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_OMEGA_POINTS: usize = 101;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub r1: f64,
    pub r2: f64,
}

impl RatePoint {
    pub fn dominates(&self, other: &RatePoint) -> bool {
        self.r1 >= other.r1 && self.r2 >= other.r2
    }
}

/// `n` evenly spaced weights on [0, 1].
pub fn uniform_omega_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub params: ChannelParams,
    pub blocklengths: BlocklengthConfig,
    pub eps_total: Probability,
    pub omega_grid: Vec<f64>,
    /// Name in [`split_strategies`].
    pub split_strategy: String,
    pub split_resolution: usize,
    /// Bisection stops once the bracket on R is this narrow (bits).
    pub rate_tolerance: f64,
    /// Name in [`ed_bounds`].
    pub ed_bound: String,
}

impl SweepConfig {
    /// Symmetric splits, 101 weights, 1e-4 bit tolerance, theorem bound.
    pub fn new(params: ChannelParams, blocklengths: BlocklengthConfig, eps_total: Probability) -> Self {
        SweepConfig {
            params,
            blocklengths,
            eps_total,
            omega_grid: uniform_omega_grid(DEFAULT_OMEGA_POINTS),
            split_strategy: "symmetric".into(),
            split_resolution: 1,
            rate_tolerance: DEFAULT_RATE_TOLERANCE,
            ed_bound: "theorem".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().into_result("channel parameters")?;
        self.blocklengths.validate().into_result("blocklengths")?;
        if self.omega_grid.is_empty() {
            return Err(Error::Argument("omega grid is empty".into()));
        }
        if self.omega_grid.iter().any(|w| !(0.0..=1.0).contains(w)) {
            return Err(Error::Argument("omega values must lie in [0, 1]".into()));
        }
        if self.omega_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Argument("omega grid must be sorted".into()));
        }
        if !(self.rate_tolerance.is_finite() && self.rate_tolerance > 0.0) {
            return Err(Error::domain("rate_tolerance", self.rate_tolerance, "must be > 0"));
        }
        if self.split_resolution == 0 {
            return Err(Error::Argument("split_resolution must be >= 1".into()));
        }
        split_strategies().get(&self.split_strategy)?;
        ed_bounds().get(&self.ed_bound)?;
        Ok(())
    }
}

/// The rate-profile optimum for one ω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub omega: f64,
    /// Maximized common scale R.
    pub rate: f64,
    pub point: RatePoint,
    pub budget: Option<ErrorBudget>,
    pub n1_tilde: Option<u64>,
    /// log₂ M₁ = n₁·R₁ at the reported point.
    pub log_m1: f64,
    pub feasible: bool,
    /// R₁ was capped by early decoding rather than by its second-order bound.
    pub ed_limited: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSweep {
    pub points: Vec<ProfilePoint>,
    pub first_order_corner: RatePoint,
}

impl RegionSweep {
    /// Feasible corner points, in ω order.
    pub fn frontier(&self) -> impl Iterator<Item = &ProfilePoint> {
        self.points.iter().filter(|p| p.feasible)
    }
}

/// (C(P₁), C(P₂)): with very strong interference SIC removes the interference
/// entirely at first order, so the region is a rectangle.
pub fn first_order_corner(params: &ChannelParams) -> Result<RatePoint> {
    Ok(RatePoint {
        r1: gaussian_capacity(Snr::new(params.p1)?),
        r2: gaussian_capacity(Snr::new(params.p2)?),
    })
}

/// Unclamped second-order bounds on (R₁, R₂) for one budget.
fn second_order_caps(params: &ChannelParams, bl: &BlocklengthConfig, budget: &ErrorBudget) -> Result<(f64, f64)> {
    let r1 = normal_approx_rate(bl.n1, Snr::new(params.p1)?, budget.eps_12()?)?;
    let r2 = normal_approx_rate(bl.n2, Snr::new(params.p2)?, budget.eps_22()?)?;
    Ok((r1, r2))
}

/// Corner of the second-order region for `budget`, clamped at zero.
pub fn second_order_point(params: &ChannelParams, bl: &BlocklengthConfig, budget: &ErrorBudget) -> Result<RatePoint> {
    params.validate().into_result("channel parameters")?;
    bl.validate().into_result("blocklengths")?;
    let violations = budget.validate();
    if !violations.is_empty() {
        let names: Vec<_> = violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::Argument(format!("error budget violates: {}", names.join(", "))));
    }
    let (r1, r2) = second_order_caps(params, bl, budget)?;
    Ok(RatePoint {
        r1: r1.max(0.0),
        r2: r2.max(0.0),
    })
}

/// Per-budget rate caps with early decoding folded into R₁.
#[derive(Debug, Clone, Copy)]
struct BudgetCaps {
    budget: ErrorBudget,
    r1: f64,
    r2: f64,
    ed_limited: bool,
}

impl BudgetCaps {
    fn admits(&self, omega: f64, rate: f64) -> bool {
        self.r1 >= 0.0 && self.r2 >= 0.0 && self.r1 >= omega * rate && self.r2 >= (1.0 - omega) * rate
    }
}

fn budget_caps(cfg: &SweepConfig, bound: &dyn EdBound, budget: ErrorBudget) -> Result<Option<BudgetCaps>> {
    let bl = &cfg.blocklengths;
    let (r1_so, r2_so) = second_order_caps(&cfg.params, bl, &budget)?;
    let ed = match max_log_m1_with(bound, &cfg.params, bl.n1, bl.n2, budget.eps_21()?) {
        Ok(m) => m,
        // A bound variant that is undefined for this budget cannot certify ED.
        Err(Error::Domain { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if !ed.feasible {
        return Ok(None);
    }
    let r1_ed = ed.log_m1 / bl.n1 as f64;
    Ok(Some(BudgetCaps {
        budget,
        r1: r1_so.min(r1_ed),
        r2: r2_so,
        ed_limited: r1_ed < r1_so,
    }))
}

fn candidate_caps(cfg: &SweepConfig, bound: &dyn EdBound) -> Result<Vec<BudgetCaps>> {
    let strategy = split_strategies().get(&cfg.split_strategy)?;
    let budgets = enumerate_budgets(cfg.eps_total, strategy.as_ref(), cfg.split_resolution)?;
    let mut caps = Vec::with_capacity(budgets.len());
    for b in budgets {
        if let Some(c) = budget_caps(cfg, bound, b)? {
            caps.push(c);
        }
    }
    Ok(caps)
}

/// Maximizes R for one profile weight by bisection on R.
pub fn rate_profile_max(omega: f64, cfg: &SweepConfig) -> Result<ProfilePoint> {
    cfg.validate()?;
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::domain("omega", omega, "must lie in [0, 1]"));
    }
    let bound = ed_bounds().get(&cfg.ed_bound)?;
    let caps = candidate_caps(cfg, bound.as_ref())?;
    let corner = first_order_corner(&cfg.params)?;
    profile_max_with_caps(omega, cfg, bound.as_ref(), &caps, &corner)
}

fn profile_max_with_caps(
    omega: f64,
    cfg: &SweepConfig,
    bound: &dyn EdBound,
    caps: &[BudgetCaps],
    corner: &RatePoint,
) -> Result<ProfilePoint> {
    let first_admitting = |rate: f64| caps.iter().find(|c| c.admits(omega, rate));
    let infeasible = |msg: &str| ProfilePoint {
        omega,
        rate: 0.0,
        point: RatePoint { r1: 0.0, r2: 0.0 },
        budget: None,
        n1_tilde: None,
        log_m1: 0.0,
        feasible: false,
        ed_limited: false,
        diagnostic: Some(msg.to_string()),
    };
    if caps.is_empty() {
        return Ok(infeasible("early decoding infeasible for every candidate budget, even at log M1 = 0"));
    }
    if first_admitting(0.0).is_none() {
        return Ok(infeasible("second-order rate negative for every candidate budget"));
    }

    // Any profile point is dominated by the first-order corner, so R ≤ C₁ + C₂.
    let (mut lo, mut hi) = (0.0_f64, corner.r1 + corner.r2);
    if first_admitting(hi).is_some() {
        lo = hi;
    }
    while hi - lo > cfg.rate_tolerance {
        let mid = 0.5 * (lo + hi);
        if first_admitting(mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let best = *first_admitting(lo).expect("lower bracket stays feasible");
    let point = RatePoint {
        r1: omega * lo,
        r2: (1.0 - omega) * lo,
    };
    let bl = &cfg.blocklengths;
    let log_m1 = bl.n1 as f64 * point.r1;
    let query = EdQuery::new(cfg.params, bl.n1, log_m1, best.budget.eps_21()?);
    let n1_tilde = min_ed_length_with(bound, &query, bl.n2)?.n1_tilde;
    Ok(ProfilePoint {
        omega,
        rate: lo,
        point,
        budget: Some(best.budget),
        n1_tilde: Some(n1_tilde),
        log_m1,
        feasible: true,
        ed_limited: best.ed_limited && best.r1 <= omega * lo + cfg.rate_tolerance,
        diagnostic: None,
    })
}

/// One [`rate_profile_max`] per weight in `cfg.omega_grid`, evaluated in
/// parallel on the current rayon pool and returned in grid order.
pub fn region_sweep(cfg: &SweepConfig) -> Result<RegionSweep> {
    cfg.validate()?;
    let bound = ed_bounds().get(&cfg.ed_bound)?;
    let caps = candidate_caps(cfg, bound.as_ref())?;
    let corner = first_order_corner(&cfg.params)?;
    let points = cfg
        .omega_grid
        .par_iter()
        .map(|&w| profile_max_with_caps(w, cfg, bound.as_ref(), &caps, &corner))
        .collect::<Result<Vec<_>>>()?;
    Ok(RegionSweep {
        points,
        first_order_corner: corner,
    })
}

/// Message size used by the latency table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageSize {
    /// Fixed log₂ M₁ in bits.
    Bits(f64),
    /// log₂ M₁ = n₁·rate.
    Rate(f64),
}

impl MessageSize {
    pub fn log_m1(&self, n1: u64) -> f64 {
        match *self {
            MessageSize::Bits(b) => b,
            MessageSize::Rate(r) => r * n1 as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyConfig {
    pub p1: f64,
    pub p2: f64,
    pub a21_grid: Vec<f64>,
    pub n1_list: Vec<u64>,
    pub eps_21: Probability,
    pub message: MessageSize,
    /// When set, a row is feasible iff ñ₁ ≤ n2; otherwise iff ñ₁ ≤ n1.
    #[serde(default)]
    pub n2: Option<u64>,
    pub ed_bound: String,
}

impl LatencyConfig {
    pub fn new(p1: f64, p2: f64, a21_grid: Vec<f64>, n1_list: Vec<u64>, eps_21: Probability) -> Self {
        LatencyConfig {
            p1,
            p2,
            a21_grid,
            n1_list,
            eps_21,
            message: MessageSize::Bits(0.0),
            n2: None,
            ed_bound: "theorem".into(),
        }
    }
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo * (hi / lo).powf(i as f64 / (n - 1) as f64)
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub a21: f64,
    pub n1: u64,
    pub n1_tilde: u64,
    /// Symbols saved versus waiting for the whole codeword: n1 − ñ₁.
    pub reduction: i64,
    /// Decoding start without early decoding (always n1).
    pub baseline: u64,
    pub feasible: bool,
}

/// Minimum early-decoding length over a grid of a21 and n1, sorted by (n1, a21).
pub fn latency_sweep(cfg: &LatencyConfig) -> Result<Vec<LatencyRow>> {
    let bound = ed_bounds().get(&cfg.ed_bound)?;
    let mut a21s = cfg.a21_grid.clone();
    a21s.sort_by(f64::total_cmp);
    let mut n1s = cfg.n1_list.clone();
    n1s.sort_unstable();
    let mut rows = Vec::with_capacity(a21s.len() * n1s.len());
    for &n1 in &n1s {
        for &a21 in &a21s {
            // a12 does not enter the early-decoding bound; pin it at its boundary.
            let params = ChannelParams::new(1.0 + cfg.p1, a21, cfg.p1, cfg.p2);
            params.validate_ed_side().into_result(&format!("grid point a21={a21}"))?;
            let query = EdQuery::new(params, n1, cfg.message.log_m1(n1), cfg.eps_21);
            let len = min_ed_length_with(bound.as_ref(), &query, cfg.n2.unwrap_or(n1))?;
            let limit = cfg.n2.unwrap_or(n1);
            rows.push(LatencyRow {
                a21,
                n1,
                n1_tilde: len.n1_tilde,
                reduction: n1 as i64 - len.n1_tilde as i64,
                baseline: n1,
                feasible: len.n1_tilde <= limit,
            });
        }
    }
    Ok(rows)
}

/// Plain-text encoding of f64 with 17 significant digits, for CSV columns.
pub mod csv_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn format(x: f64) -> String {
        format!("{x:.16e}")
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format(*x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse().map_err(serde::de::Error::custom)
    }

    pub mod option {
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
            match x {
                Some(v) => s.serialize_str(&super::format(*v)),
                None => s.serialize_str(""),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
            let s = String::deserialize(d)?;
            let t = s.trim();
            if t.is_empty() {
                Ok(None)
            } else {
                t.parse().map(Some).map_err(serde::de::Error::custom)
            }
        }
    }
}

/// One CSV record of a region sweep, columns in file order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionCsvRow {
    #[serde(with = "csv_float")]
    pub omega: f64,
    #[serde(with = "csv_float")]
    pub r1: f64,
    #[serde(with = "csv_float")]
    pub r2: f64,
    #[serde(with = "csv_float::option")]
    pub eps_11: Option<f64>,
    #[serde(with = "csv_float::option")]
    pub eps_12: Option<f64>,
    #[serde(with = "csv_float::option")]
    pub eps_21: Option<f64>,
    #[serde(with = "csv_float::option")]
    pub eps_22: Option<f64>,
    pub n1_tilde: Option<u64>,
    pub feasible: bool,
}

pub const REGION_CSV_COLUMNS: [&str; 9] = [
    "omega", "r1", "r2", "eps_11", "eps_12", "eps_21", "eps_22", "n1_tilde", "feasible",
];

impl From<&ProfilePoint> for RegionCsvRow {
    fn from(p: &ProfilePoint) -> Self {
        RegionCsvRow {
            omega: p.omega,
            r1: p.point.r1,
            r2: p.point.r2,
            eps_11: p.budget.map(|b| b.eps_11),
            eps_12: p.budget.map(|b| b.eps_12),
            eps_21: p.budget.map(|b| b.eps_21),
            eps_22: p.budget.map(|b| b.eps_22),
            n1_tilde: p.n1_tilde,
            feasible: p.feasible,
        }
    }
}

/// One CSV record of the latency table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyCsvRow {
    #[serde(with = "csv_float")]
    pub a21: f64,
    pub n1: u64,
    pub n1_tilde: u64,
    pub reduction: i64,
    pub baseline: u64,
    pub feasible: bool,
}

impl From<&LatencyRow> for LatencyCsvRow {
    fn from(r: &LatencyRow) -> Self {
        LatencyCsvRow {
            a21: r.a21,
            n1: r.n1,
            n1_tilde: r.n1_tilde,
            reduction: r.reduction,
            baseline: r.baseline,
            feasible: r.feasible,
        }
    }
}

/// sqrt(V_G(P)/n)·Q⁻¹(ε): how far the second-order bound sits below C(P).
pub fn dispersion_backoff(p: f64, n: u64, eps: Probability) -> Result<f64> {
    Ok((gaussian_dispersion(Snr::new(p)?) / n as f64).sqrt() * q_inv(eps))
}
