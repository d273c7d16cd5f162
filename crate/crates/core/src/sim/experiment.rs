//! Monte Carlo experiments: random messages, Gaussian codebooks, the physical
//! channel, and SIC decoding at both receivers.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::codebook::{violates_power, Codewords, LazyCodebook, MAX_CODEBOOK_SIZE};
use super::decode::{sic_decode_user1, sic_decode_user2_window, Step1Window};
use super::rng::{derive_key, stream_rng, TRIAL_ROLE};
use crate::error::{Error, Result};
use crate::model::{transmit, BlocklengthConfig, ChannelParams};

/// z-value of a two-sided 95% normal interval.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodebookMode {
    /// New codebooks every trial (random-coding ensemble).
    #[default]
    Fresh,
    /// One pair of codebooks, derived from the seed alone, for all trials.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimExperiment {
    pub params: ChannelParams,
    /// `n1_tilde` is required when `ed_enabled`.
    pub blocklengths: BlocklengthConfig,
    pub log_m1: f64,
    pub log_m2: f64,
    pub trials: u64,
    pub seed: u64,
    pub ed_enabled: bool,
    #[serde(default)]
    pub codebook_mode: CodebookMode,
}

fn codebook_size(name: &'static str, log_m: f64) -> Result<u64> {
    if !(log_m.is_finite() && log_m >= 1.0) {
        return Err(Error::domain(name, log_m, "2^x must be an integer >= 2"));
    }
    let m = log_m.exp2();
    let r = m.round();
    if (m - r).abs() > 1e-9 * r || r > MAX_CODEBOOK_SIZE as f64 {
        return Err(Error::domain(name, log_m, "2^x must be an integer in [2, 2^24]"));
    }
    Ok(r as u64)
}

impl SimExperiment {
    pub fn validate(&self) -> Result<()> {
        self.params.validate().into_result("channel parameters")?;
        self.blocklengths.validate().into_result("blocklengths")?;
        if self.trials == 0 {
            return Err(Error::Argument("trials must be >= 1".into()));
        }
        codebook_size("log_m1", self.log_m1)?;
        codebook_size("log_m2", self.log_m2)?;
        if self.ed_enabled && self.blocklengths.n1_tilde.is_none() {
            return Err(Error::Argument("early decoding enabled but n1_tilde not set".into()));
        }
        Ok(())
    }

    pub fn m1(&self) -> Result<u64> {
        codebook_size("log_m1", self.log_m1)
    }

    pub fn m2(&self) -> Result<u64> {
        codebook_size("log_m2", self.log_m2)
    }
}

/// Empirical frequency with a Wilson score 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub count: u64,
    pub trials: u64,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl Estimate {
    pub fn wilson(count: u64, trials: u64) -> Self {
        assert!(trials > 0 && count <= trials);
        let n = trials as f64;
        let p = count as f64 / n;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let centre = (p + z2 / (2.0 * n)) / denom;
        let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
        Estimate {
            count,
            trials,
            rate: p,
            ci_low: if count == 0 { 0.0 } else { (centre - half).max(0.0) },
            ci_high: if count == trials { 1.0 } else { (centre + half).min(1.0) },
        }
    }

    pub fn half_width(&self) -> f64 {
        (self.ci_high - self.ci_low) / 2.0
    }
}

/// Raw event counts; merging is plain addition, so any split of the trials
/// across workers gives the same totals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimCounts {
    pub trials: u64,
    /// Either user decodes its own message wrongly.
    pub total: u64,
    pub user1: u64,
    pub user2: u64,
    /// User 1, step 1 (m̂₂) wrong.
    pub sic11: u64,
    /// User 1, step 1 right and step 2 (m̂₁) wrong.
    pub sic12: u64,
    /// User 2, step 1 (m̂₁) wrong.
    pub sic21: u64,
    /// User 2, step 1 right and step 2 (m̂₂) wrong.
    pub sic22: u64,
    /// User 2 step-1 errors where the true codeword stayed below threshold.
    pub outage21: u64,
    /// User 2 step-1 errors where a smaller wrong index crossed first.
    pub confusion21: u64,
    /// A transmitted codeword broke its power constraint.
    pub power_violations: u64,
    /// `total` or a power violation.
    pub total_with_violations: u64,
}

impl std::ops::Add for SimCounts {
    type Output = SimCounts;
    fn add(self, o: SimCounts) -> SimCounts {
        SimCounts {
            trials: self.trials + o.trials,
            total: self.total + o.total,
            user1: self.user1 + o.user1,
            user2: self.user2 + o.user2,
            sic11: self.sic11 + o.sic11,
            sic12: self.sic12 + o.sic12,
            sic21: self.sic21 + o.sic21,
            sic22: self.sic22 + o.sic22,
            outage21: self.outage21 + o.outage21,
            confusion21: self.confusion21 + o.confusion21,
            power_violations: self.power_violations + o.power_violations,
            total_with_violations: self.total_with_violations + o.total_with_violations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub seed: u64,
    pub trials: u64,
    pub err_total: Estimate,
    pub err_user1: Estimate,
    pub err_user2: Estimate,
    pub err_sic11: Estimate,
    pub err_sic12: Estimate,
    pub err_sic21: Estimate,
    pub err_sic22: Estimate,
    pub power_violation_rate: Estimate,
    pub err_total_with_power_violations: Estimate,
    pub counts: SimCounts,
}

impl SimResult {
    pub fn from_counts(seed: u64, c: SimCounts) -> Self {
        let e = |k| Estimate::wilson(k, c.trials);
        SimResult {
            seed,
            trials: c.trials,
            err_total: e(c.total),
            err_user1: e(c.user1),
            err_user2: e(c.user2),
            err_sic11: e(c.sic11),
            err_sic12: e(c.sic12),
            err_sic21: e(c.sic21),
            err_sic22: e(c.sic22),
            power_violation_rate: e(c.power_violations),
            err_total_with_power_violations: e(c.total_with_violations),
            counts: c,
        }
    }
}

struct Prepared {
    params: ChannelParams,
    n1: u64,
    n2: u64,
    m1: u64,
    m2: u64,
    window: Step1Window,
}

/// Runs one trial. Trial `t` depends only on (experiment, t).
pub fn run_trial(exp: &SimExperiment, trial: u64) -> Result<SimCounts> {
    exp.validate()?;
    trial_counts(exp, &prepare(exp)?, trial)
}

fn prepare(exp: &SimExperiment) -> Result<Prepared> {
    let bl = exp.blocklengths;
    let window = match (exp.ed_enabled, bl.n1_tilde) {
        (true, Some(t)) => Step1Window::Early(t as usize),
        _ => Step1Window::Full,
    };
    Ok(Prepared {
        params: exp.params,
        n1: bl.n1,
        n2: bl.n2,
        m1: exp.m1()?,
        m2: exp.m2()?,
        window,
    })
}

fn trial_counts(exp: &SimExperiment, s: &Prepared, trial: u64) -> Result<SimCounts> {
    let trial_key = derive_key(exp.seed, Some(trial));
    let cb_key = match exp.codebook_mode {
        CodebookMode::Fresh => trial_key,
        CodebookMode::Fixed => derive_key(exp.seed, None),
    };
    let p = &s.params;
    let mut cb1 = LazyCodebook::new(cb_key, 1, s.m1, s.n1, p.p1)?;
    let mut cb2 = LazyCodebook::new(cb_key, 2, s.m2, s.n2, p.p2)?;

    let mut rng = stream_rng(trial_key, TRIAL_ROLE, 0);
    let m1 = rng.random_range(0..s.m1) as usize;
    let m2 = rng.random_range(0..s.m2) as usize;
    let mut noise = || -> Vec<f64> { (0..s.n1).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let z1 = noise();
    let z2 = noise();

    let x1 = cb1.codeword(m1).to_vec();
    let x2 = cb2.codeword(m2).to_vec();
    let violation = violates_power(&x1, p.p1) || violates_power(&x2, p.p2);
    let (y1, y2) = transmit(p, &x1, &x2, &z1, &z2)?;

    let (a1, b1) = sic_decode_user1(&y1, &mut cb1, &mut cb2, p, exp.log_m1, exp.log_m2)?;
    let (a2, b2) = sic_decode_user2_window(&y2, &mut cb1, &mut cb2, p, s.window, exp.log_m1, exp.log_m2)?;

    let step11_ok = b1 == Some(m2);
    let step21_ok = a2 == Some(m1);
    let user1_err = a1 != Some(m1);
    let user2_err = b2 != Some(m2);
    let any = user1_err || user2_err;
    let flag = |b: bool| b as u64;
    Ok(SimCounts {
        trials: 1,
        total: flag(any),
        user1: flag(user1_err),
        user2: flag(user2_err),
        sic11: flag(!step11_ok),
        sic12: flag(step11_ok && user1_err),
        sic21: flag(!step21_ok),
        sic22: flag(step21_ok && user2_err),
        // Scanning stops at the first crossing, so a wrong answer below the
        // true index is confusion and anything else means the true codeword
        // never crossed.
        confusion21: flag(matches!(a2, Some(i) if i < m1)),
        outage21: flag(!step21_ok && !matches!(a2, Some(i) if i < m1)),
        power_violations: flag(violation),
        total_with_violations: flag(any || violation),
    })
}

/// Runs all trials on the current rayon pool.
pub fn run_experiment(exp: &SimExperiment) -> Result<SimResult> {
    exp.validate()?;
    let prepared = prepare(exp)?;
    let counts = (0..exp.trials)
        .into_par_iter()
        .map(|t| trial_counts(exp, &prepared, t))
        .try_reduce(SimCounts::default, |a, b| Ok(a + b))?;
    Ok(SimResult::from_counts(exp.seed, counts))
}

/// Same totals as [`run_experiment`], trials taken in index order on the
/// calling thread.
pub fn run_experiment_sequential(exp: &SimExperiment) -> Result<SimResult> {
    exp.validate()?;
    let prepared = prepare(exp)?;
    let mut counts = SimCounts::default();
    for t in 0..exp.trials {
        counts = counts + trial_counts(exp, &prepared, t)?;
    }
    Ok(SimResult::from_counts(exp.seed, counts))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimExperiment {
        SimExperiment {
            params: ChannelParams::new(11.0, 35.0, 10.0, 10.0),
            blocklengths: BlocklengthConfig::new(24, 16).with_early_length(12),
            log_m1: 4.0,
            log_m2: 4.0,
            trials: 300,
            seed: 42,
            ed_enabled: true,
            codebook_mode: CodebookMode::Fresh,
        }
    }

    #[test]
    fn wilson_reference() {
        // 10 successes in 100: standard Wilson 95% interval.
        let e = Estimate::wilson(10, 100);
        assert!((e.ci_low - 0.055_229_3).abs() < 1e-6, "{e:?}");
        assert!((e.ci_high - 0.174_366_2).abs() < 1e-6, "{e:?}");
        let z = Estimate::wilson(0, 1000);
        assert_eq!(z.ci_low, 0.0);
        assert!(z.ci_high > 0.0 && z.ci_high < 0.004);
    }

    #[test]
    fn single_trial_is_reproducible() {
        let mut e = small();
        e.trials = 1;
        assert_eq!(run_trial(&e, 0).unwrap(), run_trial(&e, 0).unwrap());
        assert_eq!(run_experiment(&e).unwrap(), run_experiment(&e).unwrap());
    }

    #[test]
    fn parallel_matches_sequential() {
        let e = small();
        let seq = run_experiment_sequential(&e).unwrap();
        for threads in [1, 3] {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let par = pool.install(|| run_experiment(&e)).unwrap();
            assert_eq!(par, seq);
        }
    }

    #[test]
    fn counting_identities() {
        for ed in [true, false] {
            let mut e = small();
            e.ed_enabled = ed;
            let c = run_experiment(&e).unwrap().counts;
            assert_eq!(c.trials, e.trials);
            assert_eq!(c.outage21 + c.confusion21, c.sic21);
            assert!(c.user2 <= c.sic21 + c.sic22);
            assert!(c.user1 <= c.sic11 + c.sic12);
            assert!(c.total <= c.user1 + c.user2);
            assert!(c.total >= c.user1.max(c.user2));
            assert!(c.total_with_violations >= c.total.max(c.power_violations));
        }
    }

    #[test]
    fn far_above_capacity_always_fails() {
        let mut e = small();
        e.blocklengths = BlocklengthConfig::new(2, 1).with_early_length(1);
        e.log_m1 = 10.0;
        e.log_m2 = 10.0;
        e.trials = 200;
        let r = run_experiment(&e).unwrap();
        assert!(r.err_total.rate > 0.95, "{:?}", r.err_total);
    }

    #[test]
    fn low_rate_high_snr_succeeds() {
        let mut e = small();
        e.blocklengths = BlocklengthConfig::new(64, 48).with_early_length(32);
        e.log_m1 = 2.0;
        e.log_m2 = 2.0;
        let r = run_experiment(&e).unwrap();
        assert_eq!(r.counts.total, 0, "{:?}", r.counts);
    }

    #[test]
    fn fixed_mode_reuses_codebooks() {
        let mut e = small();
        e.codebook_mode = CodebookMode::Fixed;
        let r = run_experiment(&e).unwrap();
        assert_eq!(r.trials, 300);
        assert_ne!(r, run_experiment(&small()).unwrap());
    }

    #[test]
    fn validation() {
        let mut e = small();
        e.log_m1 = 1.5;
        assert!(e.validate().is_err());
        let mut e = small();
        e.trials = 0;
        assert!(e.validate().is_err());
        let mut e = small();
        e.blocklengths.n1_tilde = None;
        assert!(e.validate().is_err());
        e.ed_enabled = false;
        assert!(e.validate().is_ok());
        let mut e = small();
        e.params.a21 = 5.0;
        assert!(e.validate().is_err());
        assert_eq!(codebook_size("m", 6.0).unwrap(), 64);
        assert_eq!(codebook_size("m", 3f64.log2()).unwrap(), 3);
    }
}
