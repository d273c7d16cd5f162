//! Composition of error probabilities across SIC steps and users.
//!
//! Two events with probabilities `a` and `b` that must both be avoided are
//! budgeted as `a + b − a·b`. A full [`ErrorBudget`] nests this three ways:
//! the two steps at user 1, the two steps at user 2, and the two users.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbl::Probability;
use crate::registry::{Named, Registry};

/// Relative slack granted to the `≤` budget checks for floating-point rounding.
pub const BUDGET_REL_TOL: f64 = 1e-12;

/// a + b − a·b.
pub fn combine(a: Probability, b: Probability) -> Probability {
    let (a, b) = (a.value(), b.value());
    // 1 − (1−a)(1−b) written so that tiny probabilities keep full precision.
    Probability::new(a + b * (1.0 - a)).expect("combination of two probabilities in (0,1)")
}

fn combine_raw(a: f64, b: f64) -> f64 {
    a + b * (1.0 - a)
}

/// The x with combine(x, x) = eps, i.e. 1 − sqrt(1 − eps).
pub fn symmetric_split(eps: Probability) -> (Probability, Probability) {
    let e = eps.value();
    let x = Probability::new(e / (1.0 + (1.0 - e).sqrt())).expect("split of a probability");
    (x, x)
}

/// `k` splits (a, b) of `eps` with a/b on a log grid from 10⁻³ to 10³ and
/// combine(a, b) = eps. Ordered by strictly increasing `a`. `k = 1` is the
/// symmetric split.
pub fn split_grid(eps: Probability, k: usize) -> Result<Vec<(Probability, Probability)>> {
    if k == 0 {
        return Err(Error::Argument("split grid needs at least one point".into()));
    }
    if k == 1 {
        return Ok(vec![symmetric_split(eps)]);
    }
    (0..k)
        .map(|i| {
            let log_ratio = -3.0 + 6.0 * i as f64 / (k - 1) as f64;
            split_at_ratio(eps, 10f64.powf(log_ratio))
        })
        .collect()
}

/// Solves r·b² − (1+r)·b + eps = 0 for the root in (0, 1) and returns (r·b, b).
fn split_at_ratio(eps: Probability, r: f64) -> Result<(Probability, Probability)> {
    let e = eps.value();
    let s = 1.0 + r;
    let b = 2.0 * e / (s + (s * s - 4.0 * r * e).sqrt());
    Ok((Probability::new(r * b)?, Probability::new(b)?))
}

/// Total target ε and its decomposition over users and SIC steps.
///
/// `eps_k1` is the first SIC step at user k (decoding the interfering
/// message) and `eps_k2` the second (decoding the user's own message).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorBudget {
    pub eps_total: f64,
    pub eps_1: f64,
    pub eps_2: f64,
    pub eps_11: f64,
    pub eps_12: f64,
    pub eps_21: f64,
    pub eps_22: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BudgetViolation {
    /// combine(eps_11, eps_12) ≤ eps_1.
    User1Steps,
    /// combine(eps_21, eps_22) ≤ eps_2.
    User2Steps,
    /// combine(eps_1, eps_2) ≤ eps_total.
    Users,
    /// Every component strictly inside (0, 1).
    OutOfRange(&'static str),
}

impl fmt::Display for BudgetViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetViolation::User1Steps => f.write_str("eps_11 + eps_12 - eps_11*eps_12 <= eps_1"),
            BudgetViolation::User2Steps => f.write_str("eps_21 + eps_22 - eps_21*eps_22 <= eps_2"),
            BudgetViolation::Users => f.write_str("eps_1 + eps_2 - eps_1*eps_2 <= eps"),
            BudgetViolation::OutOfRange(name) => write!(f, "0 < {name} < 1"),
        }
    }
}

impl ErrorBudget {
    /// Builds a budget from a top-level split and one split per user.
    pub fn from_splits(
        eps_total: Probability,
        users: (Probability, Probability),
        user1: (Probability, Probability),
        user2: (Probability, Probability),
    ) -> Self {
        ErrorBudget {
            eps_total: eps_total.value(),
            eps_1: users.0.value(),
            eps_2: users.1.value(),
            eps_11: user1.0.value(),
            eps_12: user1.1.value(),
            eps_21: user2.0.value(),
            eps_22: user2.1.value(),
        }
    }

    /// Symmetric split at all three levels.
    pub fn symmetric(eps_total: Probability) -> Self {
        let users = symmetric_split(eps_total);
        ErrorBudget::from_splits(eps_total, users, symmetric_split(users.0), symmetric_split(users.1))
    }

    pub fn validate(&self) -> Vec<BudgetViolation> {
        let mut out = Vec::new();
        let fields = [
            ("eps", self.eps_total),
            ("eps_1", self.eps_1),
            ("eps_2", self.eps_2),
            ("eps_11", self.eps_11),
            ("eps_12", self.eps_12),
            ("eps_21", self.eps_21),
            ("eps_22", self.eps_22),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0 && v < 1.0) {
                out.push(BudgetViolation::OutOfRange(name));
            }
        }
        if !out.is_empty() {
            return out;
        }
        let le = |lhs: f64, rhs: f64| lhs <= rhs * (1.0 + BUDGET_REL_TOL);
        if !le(combine_raw(self.eps_11, self.eps_12), self.eps_1) {
            out.push(BudgetViolation::User1Steps);
        }
        if !le(combine_raw(self.eps_21, self.eps_22), self.eps_2) {
            out.push(BudgetViolation::User2Steps);
        }
        if !le(combine_raw(self.eps_1, self.eps_2), self.eps_total) {
            out.push(BudgetViolation::Users);
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn eps_12(&self) -> Result<Probability> {
        Probability::new(self.eps_12)
    }

    pub fn eps_21(&self) -> Result<Probability> {
        Probability::new(self.eps_21)
    }

    pub fn eps_22(&self) -> Result<Probability> {
        Probability::new(self.eps_22)
    }
}

/// A rule for dividing one error probability between two events.
pub trait SplitStrategy: Named + Send + Sync {
    /// Candidate splits of `eps`; `resolution` is a hint for grid-based rules.
    fn splits(&self, eps: Probability, resolution: usize) -> Result<Vec<(Probability, Probability)>>;
}

/// Always the single symmetric split.
pub struct Symmetric;

impl Named for Symmetric {
    fn name(&self) -> &'static str {
        "symmetric"
    }
    fn description(&self) -> &'static str {
        "equal share at every level"
    }
}

impl SplitStrategy for Symmetric {
    fn splits(&self, eps: Probability, _resolution: usize) -> Result<Vec<(Probability, Probability)>> {
        Ok(vec![symmetric_split(eps)])
    }
}

/// [`split_grid`] with `resolution` points.
pub struct RatioGrid;

impl Named for RatioGrid {
    fn name(&self) -> &'static str {
        "grid"
    }
    fn description(&self) -> &'static str {
        "log-spaced share ratios from 1e-3 to 1e3"
    }
}

impl SplitStrategy for RatioGrid {
    fn splits(&self, eps: Probability, resolution: usize) -> Result<Vec<(Probability, Probability)>> {
        split_grid(eps, resolution)
    }
}

pub fn split_strategies() -> Registry<dyn SplitStrategy> {
    let mut r: Registry<dyn SplitStrategy> = Registry::new("split strategy");
    r.register(Arc::new(Symmetric)).register(Arc::new(RatioGrid));
    r
}

/// Every budget obtained by applying `strategy` at the user level and then
/// inside each user. Order: user split outermost, then user 1, then user 2.
pub fn enumerate_budgets(
    eps_total: Probability,
    strategy: &dyn SplitStrategy,
    resolution: usize,
) -> Result<Vec<ErrorBudget>> {
    let mut out = Vec::new();
    for users in strategy.splits(eps_total, resolution)? {
        let inner1 = strategy.splits(users.0, resolution)?;
        let inner2 = strategy.splits(users.1, resolution)?;
        for &u1 in &inner1 {
            for &u2 in &inner2 {
                out.push(ErrorBudget::from_splits(eps_total, users, u1, u2));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    #[test]
    fn combine_values() {
        assert_relative_eq!(combine(p(1e-5), p(1e-5)).value(), 1.99999e-5, max_relative = 1e-15);
        assert_eq!(combine(p(0.5), p(0.5)).value(), 0.75);
    }

    #[test]
    fn symmetric_split_values() {
        // 1 − sqrt(1 − 1e-6) = 5.000001250000625e-7 (40-digit reference).
        assert_relative_eq!(symmetric_split(p(1e-6)).0.value(), 5.000_001_250_000_625e-7, max_relative = 1e-15);
        assert_eq!(symmetric_split(p(0.75)).0.value(), 0.5);
        for e in [1e-9, 1e-5, 0.1] {
            let (x, y) = symmetric_split(p(e));
            assert_relative_eq!(combine(x, y).value(), e, max_relative = 1e-15);
        }
    }

    #[test]
    fn nested_symmetric_budget_is_valid() {
        let b = ErrorBudget::symmetric(p(1e-6));
        assert!(b.is_valid(), "{:?}", b.validate());
    }

    #[test]
    fn no_slack_for_second_step() {
        let mut b = ErrorBudget::symmetric(p(1e-6));
        b.eps_11 = b.eps_1;
        assert_eq!(b.validate(), vec![BudgetViolation::User1Steps]);
    }

    #[test]
    fn user_level_violation() {
        let mut b = ErrorBudget::symmetric(p(1e-6));
        b.eps_1 = b.eps_total;
        b.eps_2 = b.eps_total;
        assert!(b.validate().contains(&BudgetViolation::Users));
    }

    #[test]
    fn caption_budget_is_inconsistent() {
        // ε = 1e-6 with ε₁ = ε₂ = 5e-5 cannot satisfy the user-level constraint.
        let users = (p(5e-5), p(5e-5));
        let b = ErrorBudget::from_splits(p(1e-6), users, symmetric_split(users.0), symmetric_split(users.1));
        assert_eq!(b.validate(), vec![BudgetViolation::Users]);
    }

    #[test]
    fn out_of_range_reported() {
        let mut b = ErrorBudget::symmetric(p(1e-3));
        b.eps_22 = 0.0;
        assert_eq!(b.validate(), vec![BudgetViolation::OutOfRange("eps_22")]);
    }

    #[test]
    fn grid_properties() {
        assert_eq!(split_grid(p(1e-4), 1).unwrap(), vec![symmetric_split(p(1e-4))]);
        assert!(split_grid(p(1e-4), 0).is_err());
        let g = split_grid(p(1e-4), 9).unwrap();
        assert_eq!(g.len(), 9);
        for w in g.windows(2) {
            assert!(w[1].0 > w[0].0);
        }
        for &(a, b) in &g {
            assert_relative_eq!(combine(a, b).value(), 1e-4, max_relative = 1e-12);
        }
        assert_relative_eq!(g[0].0.value() / g[0].1.value(), 1e-3, max_relative = 1e-9);
        assert_relative_eq!(g[8].0.value() / g[8].1.value(), 1e3, max_relative = 1e-9);
    }

    #[test]
    fn grid_budgets_validate() {
        let strategies = split_strategies();
        assert_eq!(strategies.names(), vec!["grid", "symmetric"]);
        let grid = strategies.get("grid").unwrap();
        let budgets = enumerate_budgets(p(1e-5), grid.as_ref(), 4).unwrap();
        assert_eq!(budgets.len(), 64);
        assert!(budgets.iter().all(ErrorBudget::is_valid));
        let sym = strategies.get("symmetric").unwrap();
        assert_eq!(enumerate_budgets(p(1e-5), sym.as_ref(), 7).unwrap(), vec![ErrorBudget::symmetric(p(1e-5))]);
    }

    proptest! {
        #[test]
        fn combine_associative(a in 1e-9f64..0.9, b in 1e-9f64..0.9, c in 1e-9f64..0.9) {
            let lhs = combine(combine(p(a), p(b)), p(c)).value();
            let rhs = 1.0 - (1.0 - a) * (1.0 - b) * (1.0 - c);
            prop_assert!((lhs - rhs).abs() <= 1e-14);
        }

        #[test]
        fn combine_dominates_and_commutes(a in 1e-12f64..0.999, b in 1e-12f64..0.999) {
            let ab = combine(p(a), p(b)).value();
            prop_assert!(ab >= a.max(b));
            prop_assert!((ab - combine(p(b), p(a)).value()).abs() <= 2.0 * f64::EPSILON * ab);
        }

        #[test]
        fn split_below_eps(e in 1e-12f64..0.999) {
            let (x, _) = symmetric_split(p(e));
            prop_assert!(x.value() < e);
        }

        #[test]
        fn composed_budget_within_total(e in 1e-9f64..0.5, k in 1usize..5) {
            for b in enumerate_budgets(p(e), &RatioGrid, k).unwrap() {
                let end_to_end = combine(
                    combine(p(b.eps_11), p(b.eps_12)),
                    combine(p(b.eps_21), p(b.eps_22)),
                ).value();
                prop_assert!(end_to_end <= e * (1.0 + 1e-11));
            }
        }
    }
}
