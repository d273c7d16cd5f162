use hbgic_core::budget::ErrorBudget;
use hbgic_core::early_decoding::max_log_m1;
use hbgic_core::fbl::Probability;
use hbgic_core::model::{BlocklengthConfig, ChannelParams};
use hbgic_core::region::{first_order_corner, rate_profile_max, region_sweep, second_order_point, uniform_omega_grid, SweepConfig};
use proptest::prelude::*;

fn p(x: f64) -> Probability {
    Probability::new(x).unwrap()
}

fn config(a21: f64, n1: u64, n2: u64, eps: f64) -> SweepConfig {
    let mut cfg = SweepConfig::new(ChannelParams::new(11.0, a21, 10.0, 10.0), BlocklengthConfig::new(n1, n2), p(eps));
    cfg.omega_grid = uniform_omega_grid(11);
    cfg
}

#[test]
fn full_weight_on_user1_is_min_of_caps() {
    let cfg = config(35.0, 1024, 840, 1e-5);
    let b = ErrorBudget::symmetric(cfg.eps_total);
    let so = second_order_point(&cfg.params, &cfg.blocklengths, &b).unwrap();
    let ed = max_log_m1(&cfg.params, 1024, 840, b.eps_21().unwrap()).unwrap();
    let expect = so.r1.min(ed.log_m1 / 1024.0);
    let got = rate_profile_max(1.0, &cfg).unwrap().point.r1;
    assert!(got <= expect && expect - got <= cfg.rate_tolerance, "{got} vs {expect}");
}

#[test]
fn longer_user1_block_lowers_its_rate_under_strong_ed_constraint() {
    let short = region_sweep(&config(250.0, 2048, 840, 1e-5)).unwrap();
    let long = region_sweep(&config(250.0, 2560, 840, 1e-5)).unwrap();
    let top_short = short.points.last().unwrap().point.r1;
    let top_long = long.points.last().unwrap().point.r1;
    assert!(top_long < top_short);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn frontier_stays_inside_corner(
        a21 in 11.5f64..400.0,
        n2 in 200u64..1500,
        extra in 1u64..2000,
        log_eps in -7.0f64..-2.0,
    ) {
        let cfg = config(a21, n2 + extra, n2, 10f64.powf(log_eps));
        let corner = first_order_corner(&cfg.params).unwrap();
        let sweep = region_sweep(&cfg).unwrap();
        for pt in sweep.frontier() {
            prop_assert!(pt.point.r1 < corner.r1 && pt.point.r2 < corner.r2);
            prop_assert!(pt.n1_tilde.unwrap() <= n2);
            prop_assert!(pt.budget.unwrap().is_valid());
        }
    }

    #[test]
    fn stronger_cross_link_never_hurts(a21 in 11.5f64..200.0, factor in 1.0f64..4.0) {
        let weak = region_sweep(&config(a21, 1024, 840, 1e-5)).unwrap();
        let strong = region_sweep(&config(a21 * factor, 1024, 840, 1e-5)).unwrap();
        for (w, s) in weak.points.iter().zip(&strong.points) {
            prop_assert!(s.rate >= w.rate - 1e-4);
        }
    }
}
