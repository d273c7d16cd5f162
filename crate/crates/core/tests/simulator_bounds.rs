use hbgic_core::budget::{combine, ErrorBudget};
use hbgic_core::early_decoding::{dt_bound_terms, min_ed_length, EdQuery};
use hbgic_core::fbl::Probability;
use hbgic_core::model::{BlocklengthConfig, ChannelParams};
use hbgic_core::region::second_order_point;
use hbgic_core::sim::{run_experiment, CodebookMode, SimExperiment};

fn p(x: f64) -> Probability {
    Probability::new(x).unwrap()
}

#[test]
fn step_one_error_within_dt_bound() {
    let params = ChannelParams::new(11.0, 35.0, 10.0, 10.0);
    assert!((params.omega2() * params.p1 - 31.818_181_818_181_82).abs() < 1e-12);
    let exp = SimExperiment {
        params,
        blocklengths: BlocklengthConfig::new(240, 200).with_early_length(150),
        log_m1: 4.0,
        log_m2: 4.0,
        trials: 4_000,
        seed: 3,
        ed_enabled: true,
        codebook_mode: CodebookMode::Fresh,
    };
    let r = run_experiment(&exp).unwrap();
    let dt = dt_bound_terms(&params, 200, 4.0).unwrap();
    assert!(
        r.err_sic21.rate <= dt.bound_value() + 3.0 * r.err_sic21.half_width(),
        "{:?} vs {dt:?}",
        r.err_sic21
    );
    // Far above the threshold, the outage part alone is already negligible.
    assert!(dt.q_term < 1e-6);
    assert_eq!(r.counts.sic21, 0);
}

#[test]
fn user1_error_within_budget_when_backed_off() {
    let params = ChannelParams::new(2.0, 200.0, 0.12, 0.15);
    let bl = BlocklengthConfig::new(400, 320);
    let budget = ErrorBudget::symmetric(p(1e-2));
    let rates = second_order_point(&params, &bl, &budget).unwrap();
    let log_m1 = (rates.r1 * 400.0).floor();
    let log_m2 = (rates.r2 * 320.0).floor();
    let n1_tilde = min_ed_length(&EdQuery::new(params, 400, log_m1, budget.eps_21().unwrap()))
        .unwrap()
        .n1_tilde;
    let exp = SimExperiment {
        params,
        blocklengths: bl.with_early_length(n1_tilde),
        log_m1,
        log_m2,
        trials: 20_000,
        seed: 11,
        ed_enabled: true,
        codebook_mode: CodebookMode::Fresh,
    };
    let r = run_experiment(&exp).unwrap();
    let eps1 = combine(p(budget.eps_11), p(budget.eps_12)).value();
    assert!(r.err_user1.rate <= eps1 + 3.0 * r.err_user1.half_width(), "{:?} vs {eps1}", r.err_user1);
    let eps2 = combine(p(budget.eps_21), p(budget.eps_22)).value();
    assert!(r.err_user2.rate <= eps2 + 3.0 * r.err_user2.half_width(), "{:?} vs {eps2}", r.err_user2);
}

#[test]
fn waiting_for_full_block_never_hurts_step_one() {
    // Same trials with and without early decoding: waiting for all n1 symbols
    // cannot make the first step at user 2 worse.
    let mut exp = SimExperiment {
        params: ChannelParams::new(11.0, 35.0, 10.0, 10.0),
        blocklengths: BlocklengthConfig::new(60, 40).with_early_length(3),
        log_m1: 5.0,
        log_m2: 3.0,
        trials: 3_000,
        seed: 8,
        ed_enabled: true,
        codebook_mode: CodebookMode::Fresh,
    };
    let early = run_experiment(&exp).unwrap();
    exp.ed_enabled = false;
    let full = run_experiment(&exp).unwrap();
    assert!(early.counts.sic21 > 0);
    assert!(full.counts.sic21 <= early.counts.sic21);
}
