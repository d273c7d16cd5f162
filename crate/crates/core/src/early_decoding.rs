//! Early decoding of user 1's message at user 2.
//!
//! User 2 decodes m₁ from the first ñ₁ received symbols while treating X₂ as
//! Gaussian noise, which gives the equivalent channel
//! `ỹ = sqrt(ω₂)·x₁ + z̃` with SNR w = ω₂P₁. The minimum prefix length is
//!
//! ```text
//! ñ₁ ≥ D(w)·Q⁻¹(ε₂₁)·sqrt(n₁) + log M₁ / S(w)
//!
//! S(w) = C(w) − w·log₂e / (2(1+w))
//! D(w) = log₂e·sqrt(4w + 2w²) / (2(1+w)·S(w))
//! ```
//!
//! The `sqrt(n₁)` factor scales with the longer blocklength and is kept as is.

use std::f64::consts::{LN_2, LOG2_E, PI};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fbl::{gaussian_capacity, q_func, q_inv, Probability, Snr};
use crate::model::ChannelParams;
use crate::registry::{Named, Registry};

/// Inputs to the minimum early-decoding length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdQuery {
    pub params: ChannelParams,
    pub n1: u64,
    /// log₂ M₁ in bits.
    pub log_m1: f64,
    pub eps_21: Probability,
}

impl EdQuery {
    pub fn new(params: ChannelParams, n1: u64, log_m1: f64, eps_21: Probability) -> Self {
        EdQuery {
            params,
            n1,
            log_m1,
            eps_21,
        }
    }

    fn check(&self) -> Result<()> {
        self.params.validate_ed_side().into_result("channel parameters")?;
        if self.n1 == 0 {
            return Err(Error::domain("n1", 0.0, "must be >= 1"));
        }
        if !(self.log_m1.is_finite() && self.log_m1 >= 0.0) {
            return Err(Error::domain("log_m1", self.log_m1, "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Slope and dispersion coefficients of the early-decoding bound at SNR w.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdCoefficients {
    pub snr: f64,
    /// S(w), bits of log M₁ resolved per received symbol.
    pub slope: f64,
    /// D(w), multiplies Q⁻¹(ε)·sqrt(n₁).
    pub dispersion: f64,
}

impl EdCoefficients {
    pub fn at(snr: Snr) -> Result<Self> {
        let w = snr.value();
        if w <= 0.0 {
            return Err(Error::domain("omega2*P1", w, "must be > 0"));
        }
        let slope = gaussian_capacity(snr) - w * LOG2_E / (2.0 * (1.0 + w));
        let dispersion = LOG2_E * (4.0 * w + 2.0 * w * w).sqrt() / (2.0 * (1.0 + w) * slope);
        if !(slope > 0.0 && dispersion.is_finite()) {
            return Err(Error::Numeric(format!("degenerate early-decoding coefficients at w={w}")));
        }
        Ok(EdCoefficients {
            snr: w,
            slope,
            dispersion,
        })
    }

    pub fn for_params(params: &ChannelParams) -> Result<Self> {
        params.validate_ed_side().into_result("channel parameters")?;
        EdCoefficients::at(Snr::new(params.ed_snr_value())?)
    }
}

/// Result of [`min_ed_length`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdLength {
    /// Integer prefix length, at least 1.
    pub n1_tilde: u64,
    /// Unrounded right-hand side of the bound.
    pub real_bound: f64,
    pub dispersion_term: f64,
    pub message_term: f64,
    /// Set when ε ≥ 0.5 makes the dispersion term non-positive.
    pub nonpositive_dispersion_term: bool,
}

/// Which ε enters Q⁻¹ in the early-decoding bound.
pub trait EdBound: Named + Send + Sync {
    /// The probability handed to Q⁻¹ for a query whose first step spans `n2`
    /// symbols.
    fn q_argument(&self, q: &EdQuery, n2: u64) -> Result<Probability>;
}

/// Q⁻¹(ε₂₁) as in the closed-form theorem statement.
pub struct TheoremBound;

impl Named for TheoremBound {
    fn name(&self) -> &'static str {
        "theorem"
    }
    fn description(&self) -> &'static str {
        "Q^-1(eps_21)"
    }
}

impl EdBound for TheoremBound {
    fn q_argument(&self, q: &EdQuery, _n2: u64) -> Result<Probability> {
        Ok(q.eps_21)
    }
}

/// Q⁻¹(ε₂₁ − λ) with λ = 6B₀ + B₁ from [`dt_bound_terms`].
///
/// B₀ grows linearly in n₂, so λ usually exceeds ε₂₁ and the variant reports
/// a domain error; callers treat that as infeasible.
pub struct StrictLambdaBound;

impl Named for StrictLambdaBound {
    fn name(&self) -> &'static str {
        "strict-lambda"
    }
    fn description(&self) -> &'static str {
        "Q^-1(eps_21 - lambda), lambda = 6*B0 + B1"
    }
}

impl EdBound for StrictLambdaBound {
    fn q_argument(&self, q: &EdQuery, n2: u64) -> Result<Probability> {
        let terms = dt_bound_terms(&q.params, n2, q.log_m1)?;
        let reduced = q.eps_21.value() - terms.lambda;
        Probability::new(reduced).map_err(|_| Error::domain("eps_21 - lambda", reduced, "must lie in (0, 1)"))
    }
}

pub fn ed_bounds() -> Registry<dyn EdBound> {
    let mut r: Registry<dyn EdBound> = Registry::new("early-decoding bound");
    r.register(Arc::new(TheoremBound)).register(Arc::new(StrictLambdaBound));
    r
}

/// Minimum number of received symbols for early decoding, as stated by the
/// theorem (Q⁻¹ of ε₂₁ itself).
pub fn min_ed_length(q: &EdQuery) -> Result<EdLength> {
    min_ed_length_with(&TheoremBound, q, 1)
}

/// [`min_ed_length`] with a selectable bound variant; `n2` feeds variants
/// that depend on the first-step block length.
pub fn min_ed_length_with(bound: &dyn EdBound, q: &EdQuery, n2: u64) -> Result<EdLength> {
    q.check()?;
    let coeffs = EdCoefficients::for_params(&q.params)?;
    let q_arg = q_inv(bound.q_argument(q, n2)?);
    let dispersion_term = coeffs.dispersion * q_arg * (q.n1 as f64).sqrt();
    let message_term = q.log_m1 / coeffs.slope;
    let real_bound = dispersion_term + message_term;
    if !real_bound.is_finite() || real_bound >= u64::MAX as f64 {
        return Err(Error::Numeric(format!("early-decoding bound is not representable: {real_bound}")));
    }
    let n1_tilde = (real_bound.ceil().max(1.0)) as u64;
    Ok(EdLength {
        n1_tilde,
        real_bound,
        dispersion_term,
        message_term,
        nonpositive_dispersion_term: dispersion_term <= 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdFeasibility {
    pub feasible: bool,
    pub n1_tilde: u64,
    /// n2 − ñ₁ in symbols; negative when infeasible.
    pub margin: i64,
}

/// Whether user 2 can early-decode m₁ within its own blocklength `n2`.
pub fn ed_feasible(q: &EdQuery, n2: u64) -> Result<EdFeasibility> {
    ed_feasible_with(&TheoremBound, q, n2)
}

pub fn ed_feasible_with(bound: &dyn EdBound, q: &EdQuery, n2: u64) -> Result<EdFeasibility> {
    let len = min_ed_length_with(bound, q, n2)?;
    Ok(EdFeasibility {
        feasible: len.n1_tilde <= n2,
        n1_tilde: len.n1_tilde,
        margin: n2 as i64 - len.n1_tilde as i64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxLogM1 {
    /// Largest log₂ M₁ (bits) keeping ñ₁ ≤ n2; 0 when infeasible.
    pub log_m1: f64,
    /// False when even log M₁ = 0 violates ñ₁ ≤ n2.
    pub feasible: bool,
}

/// Largest message size user 2 can still early-decode within `n2` symbols.
pub fn max_log_m1(params: &ChannelParams, n1: u64, n2: u64, eps_21: Probability) -> Result<MaxLogM1> {
    max_log_m1_with(&TheoremBound, params, n1, n2, eps_21)
}

pub fn max_log_m1_with(
    bound: &dyn EdBound,
    params: &ChannelParams,
    n1: u64,
    n2: u64,
    eps_21: Probability,
) -> Result<MaxLogM1> {
    let zero = EdQuery::new(*params, n1, 0.0, eps_21);
    let at_zero = min_ed_length_with(bound, &zero, n2)?;
    if at_zero.n1_tilde > n2 {
        return Ok(MaxLogM1 {
            log_m1: 0.0,
            feasible: false,
        });
    }
    let coeffs = EdCoefficients::for_params(params)?;
    // ceil(x) ≤ n2 ⇔ x ≤ n2 for integer n2, so the boundary is exact.
    let mut log_m1 = (coeffs.slope * (n2 as f64 - at_zero.dispersion_term)).max(0.0);
    // Undo rounding that pushes the boundary value one symbol over.
    for _ in 0..64 {
        let q = EdQuery { log_m1, ..zero };
        if min_ed_length_with(bound, &q, n2)?.n1_tilde <= n2 || log_m1 == 0.0 {
            break;
        }
        log_m1 = (log_m1 - log_m1.abs() * 4.0 * f64::EPSILON).max(0.0);
    }
    Ok(MaxLogM1 {
        log_m1,
        feasible: true,
    })
}

/// Constants of the dependence-testing analysis of user 2's first SIC step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DtBoundTerms {
    /// Third-moment constant B₀.
    pub b0: f64,
    /// Confusion constant B₁.
    pub b1: f64,
    /// d₁ = sqrt(ω₂)/(1 + ω₂P₁).
    pub d1: f64,
    /// Outage threshold argument γ.
    pub gamma: f64,
    /// Q(γ).
    pub q_term: f64,
    /// λ = 6B₀ + B₁.
    pub lambda: f64,
}

impl DtBoundTerms {
    /// λ plus caller-supplied residual terms.
    pub fn lambda_with(&self, extra: &[f64]) -> f64 {
        self.lambda + extra.iter().sum::<f64>()
    }

    /// Q(γ) + λ, capped at 1.
    pub fn bound_value(&self) -> f64 {
        (self.q_term + self.lambda).min(1.0)
    }

    /// The first summand of B₁, ln2/sqrt(π·d₁²·P₁²·ω₂·n₂).
    pub fn b1_leading_term(&self) -> f64 {
        self.b1 / 2.0 - 12.0 * self.b0
    }
}

/// Gaussian expectation E|X|³ = 2·sqrt(2/π)·P^{3/2} for X ~ N(0, P).
fn gaussian_abs_third_moment(p: f64) -> f64 {
    2.0 * (2.0 / PI).sqrt() * p.powf(1.5)
}

/// B₀, B₁, γ and λ for a first step spanning `n2` symbols at message size
/// `log_m1` bits. The per-symbol |x|³ is replaced by its Gaussian mean and
/// ‖x‖² by n2·P₁.
pub fn dt_bound_terms(params: &ChannelParams, n2: u64, log_m1: f64) -> Result<DtBoundTerms> {
    params.validate_ed_side().into_result("channel parameters")?;
    if n2 == 0 {
        return Err(Error::domain("n2", 0.0, "must be >= 1"));
    }
    let omega = params.omega2();
    let p1 = params.p1;
    let w = omega * p1;
    let n = n2 as f64;
    let scale = LOG2_E * omega.sqrt() / (1.0 + w);
    let per_symbol = 4.0 * scale.powi(3) * (2.0 * gaussian_abs_third_moment(p1) + 8.0 * (omega.sqrt() * p1).powi(3));
    let b0 = n * per_symbol;
    let d1 = omega.sqrt() / (1.0 + w);
    let b1 = 2.0 * (LN_2 / (PI * d1 * d1 * p1 * p1 * omega * n).sqrt() + 12.0 * b0);
    let c = gaussian_capacity(Snr::new(w)?);
    let numerator = 2.0 * (1.0 + w) * (n * c - log_m1) - LOG2_E * omega * n * p1;
    let denominator = LOG2_E * (4.0 * omega * n * p1 + 2.0 * n * omega * omega * p1 * p1).sqrt();
    let gamma = numerator / denominator;
    if !gamma.is_finite() {
        return Err(Error::Numeric("non-finite outage threshold".into()));
    }
    Ok(DtBoundTerms {
        b0,
        b1,
        d1,
        gamma,
        q_term: q_func(gamma),
        lambda: 6.0 * b0 + b1,
    })
}
