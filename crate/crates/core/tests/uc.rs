use fcas_core::uc::cone::nadir_violation;
use fcas_core::uc::*;
use fcas_core::{toy3_scenario, toy_scenario, ConstraintClass, UcError};
use proptest::prelude::*;

mod common;
use common::*;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn single_unit(demand: f64) -> fcas_core::Scenario {
    scenario("single", vec![demand; 2], vec![thermal("G", 100.0, 10.0, 5.0, 50.0, [42.0, 0.0, 0.0], 1, true)], Vec::new())
}

#[test]
fn unconstrained_dispatch_meets_demand() {
    let s = single_unit(60.0);
    let m = build_uc(&s, LossRule::FixedProfile(vec![0.0; 2]), false).unwrap();
    let (sched, d, stats) = solve_mip(&m, 1e-6).unwrap();
    assert_eq!(sched.generators[0].y, vec![1.0, 1.0]);
    for t in 0..2 {
        assert!((d.generators[0].p[t] - 60.0).abs() < 1e-6);
    }
    assert!(rel(d.objective, 2.0 * 60.0 * 42.0) < 1e-9);
    assert!(stats.gap_reached && stats.mip_gap >= 0.0);
}

#[test]
fn relaxed_single_unit_prices_at_its_offer() {
    let s = single_unit(60.0);
    let m = build_uc(&s, LossRule::FixedProfile(vec![0.0; 2]), true).unwrap();
    let (_, d, stats) = solve_relaxed(&m).unwrap();
    assert!(d.hours.iter().all(|h| (h.lambda_e - 42.0).abs() < 1e-9));
    assert!(stats.duality_gap <= 1e-6 && stats.cs_residual <= 1e-6);
}

#[test]
fn excess_demand_names_the_balance() {
    let s = single_unit(150.0);
    for relaxed in [false, true] {
        let m = build_uc(&s, LossRule::FixedProfile(vec![0.0; 2]), relaxed).unwrap();
        let err = if relaxed { solve_relaxed(&m).err() } else { solve_mip(&m, 1e-6).err() };
        match err {
            Some(UcError::Infeasible { classes }) => assert!(classes.contains(&ConstraintClass::Balance), "{classes:?}"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn wrong_mode_is_rejected() {
    let s = single_unit(60.0);
    let relaxed = build_uc(&s, LossRule::EndogenousMax, true).unwrap();
    assert!(matches!(solve_mip(&relaxed, 1e-6), Err(UcError::WrongMode(_))));
    let exact = build_uc(&s, LossRule::EndogenousMax, false).unwrap();
    assert!(matches!(solve_relaxed(&exact), Err(UcError::WrongMode(_))));
}

#[test]
fn only_rocof_binds_when_the_nadir_is_loose() {
    let mut s = scenario("rocof", vec![100.0], vec![thermal("G", 1000.0, 0.0, 5.0, 500.0, [10.0, 1.0, 0.0], 1, true)], Vec::new());
    s.params.delta_f_max = 40.0;
    let m = build_uc(&s, LossRule::FixedProfile(vec![100.0]), true).unwrap();
    let (p, d, _) = solve_relaxed(&m).unwrap();
    let h = &d.hours[0];
    assert!(h.mu_rocof > 0.0, "{h:?}");
    assert!(h.mu_nadir_1.abs() < 1e-9 && h.mu_nadir_2.abs() < 1e-9 && h.mu_nadir_3.abs() < 1e-9, "{h:?}");
    assert!(h.mu_qss.abs() < 1e-9);
    assert!((p.h[0] - rocof_min_inertia(100.0, &s.params)).abs() < 1e-6);
}

#[test]
fn relaxed_toy_is_a_certified_primal_dual_pair() {
    let s = toy_scenario().truncated(8);
    let m = build_uc(&s, LossRule::EndogenousMax, true).unwrap();
    let (p, d, stats) = solve_relaxed(&m).unwrap();
    assert!(stats.duality_gap <= 1e-6, "{stats:?}");
    assert!(stats.cs_residual <= 1e-6, "{stats:?}");
    assert!(stats.cone_violation <= 1e-6 * p.h.iter().cloned().fold(1.0, f64::max));

    // Aggregates against their defining sums.
    for t in 0..s.horizon {
        let mut h = 0.0;
        let mut pfr = 0.0;
        let mut efr = 0.0;
        for (g, gd) in s.generators.iter().zip(&p.generators) {
            h += g.h * g.p_max * p.commitment.generators.iter().find(|c| c.id == g.id).unwrap().y[t];
            pfr += gd.pfr[t];
        }
        for (u, (ud, uc)) in s.storage_units.iter().zip(p.storage.iter().zip(&p.commitment.storage)) {
            h += u.h * u.p_max * (uc.cha[t] + uc.dis[t]);
            pfr += ud.pfr[t];
            efr += ud.efr[t];
        }
        assert!(rel(h, p.h[t]) < 1e-9 && rel(pfr, p.pfr[t]) < 1e-9 && rel(efr, p.efr[t]) < 1e-9, "hour {t}");
        assert!(p.efr[t] + p.pfr[t] >= p.p_loss[t] - 1e-6);
        assert!(p.h[t] >= rocof_min_inertia(p.p_loss[t], &s.params) - 1e-6);
        assert!(nadir_violation(p.h[t], p.efr[t], p.pfr[t], p.p_loss[t], &s.params) <= 1e-6 * p.h[t]);
        for u in s.units().filter(|&u| s.loss_eligible(u)) {
            assert!(p.p_loss[t] >= p.power(u, t) - 1e-6, "hour {t} {u}");
        }
    }
    // Inequality multipliers carry their documented signs.
    for g in &d.generators {
        assert!(g.psi_max_y.iter().chain(&g.psi_max_sg).chain(&g.psi_max_sd).all(|v| *v >= -1e-9));
    }
    for h in &d.hours {
        assert!(h.mu_rocof >= -1e-9 && h.mu_qss >= -1e-9 && h.mu_nadir_3 >= -1e-9);
    }
}

#[test]
fn mip_schedule_is_consistent_and_bounded_by_the_relaxation() {
    let s = toy3_scenario().truncated(6);
    let exact = build_uc(&s, LossRule::EndogenousMax, false).unwrap();
    let (sched, d, stats) = solve_mip(&exact, 1e-6).unwrap();
    assert_eq!(sched.max_fractionality(), 0.0);
    for (g, c) in s.generators.iter().zip(&sched.generators) {
        let mut prev = if g.initially_on { 1.0 } else { 0.0 };
        for t in 0..s.horizon {
            assert_eq!(c.y[t], prev + c.sg[t] - c.sd[t]);
            prev = c.y[t];
        }
    }
    for c in &sched.storage {
        assert!(c.cha.iter().zip(&c.dis).all(|(a, b)| a + b <= 1.0));
    }
    assert!(stats.gap_reached);
    let (r, _, _) = solve_relaxed(&build_uc(&s, LossRule::EndogenousMax, true).unwrap()).unwrap();
    assert!(r.objective <= d.objective * (1.0 + 1e-9));
}

#[test]
fn mip_matches_enumeration_on_small_instances() {
    for s in [two_unit_five_hour(), unit_and_battery(), three_unit_three_hour()] {
        for rule in [LossRule::EndogenousMax, LossRule::FixedProfile(vec![60.0; s.horizon])] {
            let m = build_uc(&s, rule.clone(), false).unwrap();
            assert!(state_bits(&m) <= 10);
            let brute = enumerate_commitments(&m).expect("instance should be feasible");
            let (_, d, stats) = solve_mip(&m, 1e-9).unwrap();
            assert!(stats.gap_reached);
            assert!(rel(d.objective, brute) <= 1e-6, "{} {rule:?}: {} vs {brute}", s.name, d.objective);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn raising_the_loss_never_lowers_the_cost(
        lo in prop::collection::vec(0.0f64..80.0, 3),
        extra in prop::collection::vec(0.0f64..60.0, 3),
    ) {
        let s = decoupled(vec![1000.0, 1200.0, 1300.0], true);
        let hi: Vec<f64> = lo.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let cost = |v: Vec<f64>| solve_relaxed(&build_uc(&s, LossRule::FixedProfile(v), true).unwrap()).unwrap().0.objective;
        let (a, b) = (cost(lo), cost(hi));
        prop_assert!(b >= a - 1e-9 * a.abs().max(1.0));
    }
}
