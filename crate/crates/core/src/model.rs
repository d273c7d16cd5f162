//! Standard-form two-user Gaussian interference channel with heterogeneous
//! blocklengths.
//!
//! User 1 (the weaker user) sends `n1` symbols, user 2 sends `n2 < n1`. For
//! the first `n2` channel uses both transmitters are active; afterwards only
//! user 1 is on the air:
//!
//! ```text
//! j <= n2:       y1 = x1 + sqrt(a12)·x2 + z1      y2 = x2 + sqrt(a21)·x1 + z2
//! n2 < j <= n1:  y1 = x1 + z1                    y2 = sqrt(a21)·x1 + z2
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbl::Snr;

/// Cross gains and power limits, all in linear scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelParams {
    /// Gain of the cross link X₂ → Y₁.
    pub a12: f64,
    /// Gain of the cross link X₁ → Y₂.
    pub a21: f64,
    pub p1: f64,
    pub p2: f64,
}

/// A violated modelling constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Violation {
    NonFinite,
    NegativeGain,
    NonPositivePower,
    /// a21 > a12 (user 1 is the weaker user).
    UserOrdering,
    /// a21 ≥ 1 + P2.
    VeryStrongAtUser2,
    /// a12 ≥ 1 + P1.
    VeryStrongAtUser1,
    /// n1 > n2.
    BlocklengthOrdering,
    ZeroBlocklength,
    /// ñ1 ≤ n2.
    EarlyLengthExceedsN2,
}

impl Violation {
    pub fn constraint(self) -> &'static str {
        match self {
            Violation::NonFinite => "all parameters finite",
            Violation::NegativeGain => "a12 >= 0 and a21 >= 0",
            Violation::NonPositivePower => "P1 > 0 and P2 > 0",
            Violation::UserOrdering => "a21 > a12",
            Violation::VeryStrongAtUser2 => "a21 >= 1+P2",
            Violation::VeryStrongAtUser1 => "a12 >= 1+P1",
            Violation::BlocklengthOrdering => "n1 > n2",
            Violation::ZeroBlocklength => "n1 >= 1 and n2 >= 1",
            Violation::EarlyLengthExceedsN2 => "1 <= n1_tilde <= n2",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.constraint())
    }
}

/// Outcome of a validation pass. Validation never fails; it lists what is wrong.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn contains(&self, v: Violation) -> bool {
        self.violations.contains(&v)
    }

    pub fn into_result(self, what: &str) -> Result<()> {
        if self.is_ok() {
            Ok(())
        } else {
            let names: Vec<_> = self.violations.iter().map(|v| v.constraint()).collect();
            Err(Error::Argument(format!("{what} violates: {}", names.join(", "))))
        }
    }
}

impl fmt::Display for ValidityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl ChannelParams {
    pub fn new(a12: f64, a21: f64, p1: f64, p2: f64) -> Self {
        ChannelParams { a12, a21, p1, p2 }
    }

    /// Checks every constraint of the very-strong-interference model.
    pub fn validate(&self) -> ValidityReport {
        let mut violations = self.basic_violations();
        if violations.contains(&Violation::NonFinite) {
            return ValidityReport { violations };
        }
        if self.a21 <= self.a12 {
            violations.push(Violation::UserOrdering);
        }
        if self.a21 < 1.0 + self.p2 {
            violations.push(Violation::VeryStrongAtUser2);
        }
        if self.a12 < 1.0 + self.p1 {
            violations.push(Violation::VeryStrongAtUser1);
        }
        ValidityReport { violations }
    }

    /// The subset of constraints that early decoding at user 2 depends on:
    /// finite non-negative gains, positive powers and a21 ≥ 1 + P2.
    pub fn validate_ed_side(&self) -> ValidityReport {
        let mut violations = self.basic_violations();
        if !violations.contains(&Violation::NonFinite) && self.a21 < 1.0 + self.p2 {
            violations.push(Violation::VeryStrongAtUser2);
        }
        ValidityReport { violations }
    }

    fn basic_violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        if ![self.a12, self.a21, self.p1, self.p2].iter().all(|x| x.is_finite()) {
            v.push(Violation::NonFinite);
            return v;
        }
        if self.a12 < 0.0 || self.a21 < 0.0 {
            v.push(Violation::NegativeGain);
        }
        if self.p1 <= 0.0 || self.p2 <= 0.0 {
            v.push(Violation::NonPositivePower);
        }
        v
    }

    /// ω₂ = a21/(1 + P2): gain of the equivalent channel seen by user 2's
    /// first SIC step when X₂ is treated as Gaussian noise.
    pub fn omega2(&self) -> f64 {
        self.a21 / (1.0 + self.p2)
    }

    /// ω₁ = a12/(1 + P1), the analogue for user 1's first SIC step.
    pub fn omega1(&self) -> f64 {
        self.a12 / (1.0 + self.p1)
    }

    /// ω₂·P₁ without validation; callers must have checked the ED side.
    pub(crate) fn ed_snr_value(&self) -> f64 {
        self.omega2() * self.p1
    }
}

/// Equivalent SNR ω₂·P₁ of user 2's first SIC step.
pub fn effective_sic_snr(params: &ChannelParams) -> Result<Snr> {
    params.validate().into_result("channel parameters")?;
    Snr::new(params.ed_snr_value())
}

/// Blocklengths of the two users plus an optional early-decoding length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlocklengthConfig {
    pub n1: u64,
    pub n2: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1_tilde: Option<u64>,
}

impl BlocklengthConfig {
    pub fn new(n1: u64, n2: u64) -> Self {
        BlocklengthConfig { n1, n2, n1_tilde: None }
    }

    pub fn with_early_length(mut self, n1_tilde: u64) -> Self {
        self.n1_tilde = Some(n1_tilde);
        self
    }

    pub fn validate(&self) -> ValidityReport {
        let mut violations = Vec::new();
        if self.n1 == 0 || self.n2 == 0 {
            violations.push(Violation::ZeroBlocklength);
        }
        if self.n1 <= self.n2 {
            violations.push(Violation::BlocklengthOrdering);
        }
        if let Some(t) = self.n1_tilde {
            if t == 0 || t > self.n2 {
                violations.push(Violation::EarlyLengthExceedsN2);
            }
        }
        ValidityReport { violations }
    }
}

/// Pushes one block through the standard-form channel.
///
/// `x1` has length n1 and `x2` length n2 ≤ n1; both noise vectors have length
/// n1. Returns `(y1, y2)`, each of length n1.
pub fn transmit(
    params: &ChannelParams,
    x1: &[f64],
    x2: &[f64],
    z1: &[f64],
    z2: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n1 = x1.len();
    if x2.len() > n1 {
        return Err(Error::Argument(format!(
            "x2 has length {} > n1 = {n1}",
            x2.len()
        )));
    }
    if z1.len() != n1 || z2.len() != n1 {
        return Err(Error::Argument(format!(
            "noise lengths ({}, {}) must both equal n1 = {n1}",
            z1.len(),
            z2.len()
        )));
    }
    let g12 = params.a12.sqrt();
    let g21 = params.a21.sqrt();
    let mut y1 = Vec::with_capacity(n1);
    let mut y2 = Vec::with_capacity(n1);
    for j in 0..n1 {
        let s2 = x2.get(j).copied().unwrap_or(0.0);
        y1.push(x1[j] + g12 * s2 + z1[j]);
        y2.push(s2 + g21 * x1[j] + z2[j]);
    }
    Ok((y1, y2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn reference_settings_are_valid() {
        assert!(ChannelParams::new(11.0, 35.0, 10.0, 10.0).validate().is_ok());
        assert!(ChannelParams::new(11.0, 250.0, 10.0, 15.0).validate().is_ok());
    }

    #[test]
    fn very_strong_boundary_at_user1() {
        let r = ChannelParams::new(10.9, 35.0, 10.0, 10.0).validate();
        assert_eq!(r.violations, vec![Violation::VeryStrongAtUser1]);
        assert_eq!(r.to_string(), "a12 >= 1+P1");
    }

    #[test]
    fn reports_every_violation() {
        let r = ChannelParams::new(5.0, 4.0, 10.0, 10.0).validate();
        assert!(r.contains(Violation::UserOrdering));
        assert!(r.contains(Violation::VeryStrongAtUser1));
        assert!(r.contains(Violation::VeryStrongAtUser2));
        let r = ChannelParams::new(f64::NAN, 4.0, 10.0, 10.0).validate();
        assert_eq!(r.violations, vec![Violation::NonFinite]);
        let r = ChannelParams::new(11.0, 35.0, 0.0, 10.0).validate();
        assert!(r.contains(Violation::NonPositivePower));
    }

    #[test]
    fn ed_side_ignores_user1_constraints() {
        let p = ChannelParams::new(0.0, 1.2, 10.0, 0.2);
        assert!(p.validate_ed_side().is_ok());
        assert!(!p.validate().is_ok());
    }

    #[test]
    fn effective_snr_values() {
        let s = effective_sic_snr(&ChannelParams::new(11.0, 35.0, 10.0, 10.0)).unwrap();
        assert_abs_diff_eq!(s.value(), 350.0 / 11.0, epsilon = 1e-12);
        let s = effective_sic_snr(&ChannelParams::new(11.0, 250.0, 10.0, 10.0)).unwrap();
        assert_abs_diff_eq!(s.value(), 2500.0 / 11.0, epsilon = 1e-12);
        // a21 = 1 + P2 gives ω₂ = 1.
        let s = effective_sic_snr(&ChannelParams::new(11.0, 11.0 + 1e-9, 10.0, 10.0 + 1e-9)).unwrap();
        assert_abs_diff_eq!(s.value(), 10.0, epsilon = 1e-8);
        assert!(effective_sic_snr(&ChannelParams::new(10.9, 35.0, 10.0, 10.0)).is_err());
    }

    #[test]
    fn effective_snr_monotonicity() {
        let base = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
        let s = |p: ChannelParams| effective_sic_snr(&p).unwrap().value();
        assert!(s(ChannelParams { a21: 40.0, ..base }) > s(base));
        assert!(s(ChannelParams { p1: 10.0, a12: 12.0, ..base }) == s(ChannelParams { a12: 12.0, ..base }));
        assert!(s(ChannelParams { p1: 10.5, a12: 12.0, ..base }) > s(base));
        assert!(s(ChannelParams { p2: 11.0, ..base }) < s(base));
    }

    #[test]
    fn blocklength_validation() {
        assert!(BlocklengthConfig::new(1024, 840).validate().is_ok());
        assert!(BlocklengthConfig::new(840, 840).validate().contains(Violation::BlocklengthOrdering));
        assert!(BlocklengthConfig::new(1024, 840)
            .with_early_length(841)
            .validate()
            .contains(Violation::EarlyLengthExceedsN2));
        assert!(BlocklengthConfig::new(1024, 840).with_early_length(840).validate().is_ok());
    }

    #[test]
    fn noiseless_substitution() {
        let p = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
        let (n1, n2) = (8, 5);
        let zero = vec![0.0; n1];
        let (y1, y2) = transmit(&p, &vec![1.0; n1], &vec![1.0; n2], &zero, &zero).unwrap();
        for j in 0..n2 {
            assert_abs_diff_eq!(y2[j], 1.0 + 35f64.sqrt(), epsilon = 1e-15);
            assert_abs_diff_eq!(y1[j], 1.0 + 11f64.sqrt(), epsilon = 1e-15);
        }
        for j in n2..n1 {
            assert_abs_diff_eq!(y2[j], 35f64.sqrt(), epsilon = 1e-15);
            assert_eq!(y1[j], 1.0);
        }
        let x1: Vec<f64> = (0..n1).map(|j| j as f64 - 3.0).collect();
        let (y1, _) = transmit(&p, &x1, &vec![0.0; n2], &zero, &zero).unwrap();
        assert_eq!(y1, x1);
    }

    #[test]
    fn length_mismatch_is_an_argument_error() {
        let p = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
        assert!(matches!(
            transmit(&p, &[0.0; 3], &[0.0; 4], &[0.0; 3], &[0.0; 3]),
            Err(Error::Argument(_))
        ));
        assert!(transmit(&p, &[0.0; 3], &[0.0; 2], &[0.0; 2], &[0.0; 3]).is_err());
    }

    #[test]
    fn output_variance_at_user2() {
        let p = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let mut draw = |s: f64| -> Vec<f64> {
            (0..n).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); s * z }).collect::<Vec<f64>>()
        };
        let x1 = draw(p.p1.sqrt());
        let x2 = draw(p.p2.sqrt());
        let z1 = draw(1.0);
        let z2 = draw(1.0);
        let (_, y2) = transmit(&p, &x1, &x2, &z1, &z2).unwrap();
        let mean = y2.iter().sum::<f64>() / n as f64;
        let var = y2.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let expected = 1.0 + p.p2 + p.a21 * p.p1;
        assert!((var / expected - 1.0).abs() < 0.01, "var={var} expected={expected}");
    }

    proptest! {
        #[test]
        fn transmit_is_linear(
            alpha in -5.0f64..5.0,
            x1 in proptest::collection::vec(-3.0f64..3.0, 6),
            x2 in proptest::collection::vec(-3.0f64..3.0, 4),
            z1 in proptest::collection::vec(-3.0f64..3.0, 6),
            z2 in proptest::collection::vec(-3.0f64..3.0, 6),
        ) {
            let p = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
            let scale = |v: &[f64]| v.iter().map(|x| alpha * x).collect::<Vec<_>>();
            let (y1, y2) = transmit(&p, &x1, &x2, &z1, &z2).unwrap();
            let (s1, s2) = transmit(&p, &scale(&x1), &scale(&x2), &scale(&z1), &scale(&z2)).unwrap();
            for j in 0..6 {
                prop_assert!((s1[j] - alpha * y1[j]).abs() < 1e-9);
                prop_assert!((s2[j] - alpha * y2[j]).abs() < 1e-9);
            }
        }

        #[test]
        fn no_x2_after_n2(x2 in proptest::collection::vec(-3.0f64..3.0, 4)) {
            let p = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
            let x1 = [0.5; 6];
            let z = [0.0; 6];
            let (y1, y2) = transmit(&p, &x1, &x2, &z, &z).unwrap();
            let zero2 = [0.0; 4];
            let (r1, r2) = transmit(&p, &x1, &zero2, &z, &z).unwrap();
            prop_assert_eq!(&y1[4..], &r1[4..]);
            prop_assert_eq!(&y2[4..], &r2[4..]);
        }
    }
}
