mod common;

use ceq::equilibrium::solve_mixed;
use ceq::metrics::{
    extra_congested_period, extra_congestion_delay, pattern_cost_breakdown, summarize, summarize_pattern,
    total_cost_breakdown,
};
use ceq::pattern::{sample_profiles, TimeProfile};
use ceq::{Scenario, VehicleClass};
use common::rel;
use proptest::prelude::*;

#[test]
fn cost_identity_at_equilibrium() {
    for mpr in [0.0, 0.3, 0.5, 1.0] {
        let sc = Scenario::basic().with_mpr(mpr);
        let sol = solve_mixed(&sc).unwrap();
        let (n_gv, n_ev) = sc.populations();
        let expected = sol.cost(VehicleClass::Gv).unwrap_or(0.0) * n_gv
            + sol.cost(VehicleClass::Ev).unwrap_or(0.0) * n_ev;
        let exact = pattern_cost_breakdown(&sol);
        assert!(rel(exact.social, expected) < 1e-6, "mpr {mpr}: {} vs {expected}", exact.social);
        assert_eq!(exact.toll_revenue, 0.0);
        let sum = exact.travel_time + exact.energy + exact.schedule_delay;
        assert!(rel(sum, exact.social) < 1e-15);
        // The grid rule only resolves the window edges to first order.
        let grid = total_cost_breakdown(&sol.profile, None);
        assert!(rel(grid.social, expected) < 5e-3, "mpr {mpr}");
    }
}

#[test]
fn golden_social_costs() {
    let ue = solve_mixed(&Scenario::basic().with_mpr(1.0)).unwrap();
    assert!(rel(pattern_cost_breakdown(&ue).social, 12065.26) < 1e-6);
}

#[test]
fn baseline_report_against_itself() {
    let sol = solve_mixed(&Scenario::basic()).unwrap();
    let r = summarize_pattern(&sol, &sol.profile, &sol.profile);
    assert_eq!(r.ecp, 0.0);
    assert!(r.ecd.delta.iter().all(|&d| d == 0.0));
    assert!(rel(r.max_delay, 0.2614128650554704) < 1e-9);
    assert!(rel(r.duration, sol.duration()) < 1e-15);
    let g = summarize(&sol.profile, &sol.profile, None);
    assert_eq!(g.ecp, 0.0);
    assert_eq!(g.max_delay, r.max_delay);
}

#[test]
fn untolled_ecd_is_positive_over_most_of_the_window() {
    let sc = Scenario::basic();
    let base = solve_mixed(&sc).unwrap();
    let ev = solve_mixed(&sc.with_mpr(1.0)).unwrap();
    let ecd = extra_congestion_delay(&ev.profile, &base.profile);
    let (t0, t1) = ev.window;
    let inside: Vec<f64> = ecd
        .t
        .iter()
        .zip(&ecd.delta)
        .filter(|(&t, _)| t > t0 && t < t1)
        .map(|(_, &d)| d)
        .collect();
    let positive = inside.iter().filter(|&&d| d > 0.0).count() as f64 / inside.len() as f64;
    assert!(positive > 0.5, "{positive}");
    assert!(ecd.max() > 0.0);
    let peak = ecd.argmax().unwrap();
    assert!((peak - sc.t_star).abs() < 0.05);
}

#[test]
fn ecp_grows_with_the_ev_share_and_is_grid_converged() {
    let sc = Scenario::basic();
    let base_max = solve_mixed(&sc).unwrap().profile.max_delay();
    let mut prev = 0.0;
    for mpr in [0.25, 0.5, 0.75, 1.0] {
        let sol = solve_mixed(&sc.with_mpr(mpr)).unwrap();
        let ecp = extra_congested_period(&sol.profile, base_max);
        assert!(ecp > prev);
        let half = extra_congested_period(&sample_profiles(&sol, 0.5 / 60.0), base_max);
        assert!(rel(half, ecp) < 5e-3, "mpr {mpr}: {half} vs {ecp}");
        prev = ecp;
    }
}

fn profile(t0: f64, delays: Vec<f64>) -> TimeProfile {
    let n = delays.len();
    TimeProfile {
        dt: 0.1,
        window: Some((t0, t0 + 0.1 * (n as f64 - 1.0))),
        t: (0..n).map(|i| t0 + 0.1 * i as f64).collect(),
        flow_total: vec![0.0; n],
        flow_gv: vec![0.0; n],
        flow_ev: vec![0.0; n],
        costs: vec![Default::default(); n],
        delay: delays,
    }
}

proptest! {
    #[test]
    fn ecd_antisymmetric(
        a in proptest::collection::vec(0.0f64..1.0, 2..40),
        b in proptest::collection::vec(0.0f64..1.0, 2..40),
        shift in 0i32..10,
    ) {
        let pa = profile(7.0, a);
        let pb = profile(7.0 + 0.1 * shift as f64, b);
        let ab = extra_congestion_delay(&pa, &pb);
        let ba = extra_congestion_delay(&pb, &pa);
        prop_assert_eq!(&ab.t, &ba.t);
        for (x, y) in ab.delta.iter().zip(&ba.delta) {
            prop_assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn ecp_bounds(d in proptest::collection::vec(0.0f64..1.0, 2..60), level in 0.0f64..1.2) {
        let p = profile(6.0, d);
        let ecp = extra_congested_period(&p, level);
        prop_assert!(ecp >= 0.0);
        prop_assert!(ecp <= p.t[p.len() - 1] - p.t[0] + 1e-12);
        prop_assert_eq!(extra_congested_period(&p, p.max_delay()), 0.0);
    }
}
