use fcas_core::pricing::*;
use fcas_core::uc::*;
use fcas_core::{toy3_scenario, Scenario, SystemParams};
use proptest::prelude::*;

mod common;
use common::decoupled;

fn relaxed(s: &Scenario, rule: LossRule) -> (DispatchSolution, DualSolution) {
    let m = build_uc(s, rule, true).unwrap();
    let (p, d, _) = solve_relaxed(&m).unwrap();
    (p, d)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn omega_identity(p: &DispatchSolution, d: &DualSolution) {
    for (t, h) in d.hours.iter().enumerate() {
        let omega = p.p_loss[t] * h.omega_loss;
        let services = h.lambda_h * p.h[t] + h.lambda_pfr * p.pfr[t] + h.lambda_efr * p.efr[t];
        assert!((omega - services).abs() <= 1e-6 * omega.abs().max(1.0), "hour {t}: {omega} vs {services}");
    }
}

#[test]
fn slack_duals_give_zero_prices() {
    let duals = DualSolution { hours: vec![HourDuals::default(); 3], ..Default::default() };
    let p = as_prices_from_duals(&duals, &SystemParams::gb()).unwrap();
    assert!(p.hours.iter().all(|h| h.lambda_h == 0.0 && h.lambda_pfr == 0.0 && h.lambda_efr == 0.0 && h.omega_loss == 0.0));
}

#[test]
fn rocof_alone_prices_inertia_and_loss() {
    let prm = SystemParams::gb();
    let mu = 0.002;
    let d = HourDuals { mu_rocof: mu, lambda_h: mu, omega_loss: mu * prm.f0 / (2.0 * prm.rocof_max), ..Default::default() };
    let duals = DualSolution { hours: vec![d], ..Default::default() };
    let h = as_prices_from_duals(&duals, &prm).unwrap().hours[0];
    assert_eq!(h.lambda_h, mu);
    assert!((h.omega_loss - 0.05).abs() < 1e-15);
    assert_eq!((h.lambda_pfr, h.lambda_efr), (0.0, 0.0));

    let bad = DualSolution { hours: vec![HourDuals { mu_rocof: mu, ..Default::default() }], ..Default::default() };
    assert!(matches!(as_prices_from_duals(&bad, &prm), Err(fcas_core::PricingError::PriceMismatch { .. })));
}

#[test]
fn toy3_prices_audit_and_omega_identity() {
    let s = toy3_scenario();
    let (p, d) = relaxed(&s, LossRule::EndogenousMax);
    let prices = as_prices_from_duals(&d, &s.params).unwrap();
    for (h, hd) in prices.hours.iter().zip(&d.hours) {
        assert!(rel(h.lambda_h, hd.lambda_h) < 1e-6 && rel(h.lambda_efr, hd.lambda_efr) < 1e-6);
    }
    assert!(d.hours.iter().any(|h| h.lambda_efr > 0.0), "the instance should price EFR");
    omega_identity(&p, &d);

    let b = duality_audit(&p, &d, &s).unwrap();
    assert!(b.relative_residual <= AUDIT_TOL);

    // Offer costs recomputed from the dispatch alone.
    let mut cost = 0.0;
    for (g, gd) in s.generators.iter().zip(&p.generators) {
        let y = &p.commitment.generators.iter().find(|c| c.id == g.id).unwrap().y;
        for t in 0..s.horizon {
            cost += g.lambda_e * gd.p[t] + g.lambda_h * g.h * g.p_max * y[t] + g.lambda_pfr * gd.pfr[t];
        }
    }
    for (u, ud) in s.storage_units.iter().zip(&p.storage) {
        for t in 0..s.horizon {
            cost += u.lambda_e * ud.dis[t] + u.lambda_pfr * ud.pfr[t] + u.lambda_efr * ud.efr[t];
        }
    }
    assert!(rel(cost, p.objective) < 1e-9, "{cost} vs {}", p.objective);
    assert!(rel(b.system_costs, p.objective) < 1e-9);
}

#[test]
fn audit_without_active_as_constraints() {
    let s = decoupled(vec![900.0, 1100.0, 1300.0], false);
    let (p, d) = relaxed(&s, LossRule::FixedProfile(vec![10.0; 3]));
    let b = duality_audit(&p, &d, &s).unwrap();
    assert!(b.as_payments.abs() < 1e-9, "{}", b.as_payments);
    let profits = b.thermal_profits + b.renewable_profits + b.storage_profits;
    assert!(rel(b.energy_payments, b.system_costs + profits + b.omitted_terms) <= AUDIT_TOL);
}

#[test]
fn doubling_offers_doubles_the_audit() {
    let s = toy3_scenario().truncated(6);
    let mut s2 = s.clone();
    for g in &mut s2.generators {
        g.lambda_e *= 2.0;
        g.lambda_h *= 2.0;
        g.lambda_pfr *= 2.0;
    }
    for u in &mut s2.storage_units {
        u.lambda_e *= 2.0;
        u.lambda_pfr *= 2.0;
        u.lambda_efr *= 2.0;
    }
    let (p1, d1) = relaxed(&s, LossRule::EndogenousMax);
    let (p2, d2) = relaxed(&s2, LossRule::EndogenousMax);
    let (a, b) = (duality_audit(&p1, &d1, &s).unwrap(), duality_audit(&p2, &d2, &s2).unwrap());
    assert!(rel(2.0 * a.energy_payments, b.energy_payments) < 1e-6);
    assert!(rel(2.0 * a.system_costs, b.system_costs) < 1e-6);
}

#[test]
fn zero_profile_costs_nothing() {
    let s = toy3_scenario().truncated(4);
    let om = standalone_profile(&s, &[0.0; 4], &SolveOptions::default()).unwrap();
    assert!(om.iter().all(|v| v.abs() < 1e-9), "{om:?}");
}

#[test]
fn small_loss_covered_by_energy_dispatch_is_free() {
    let s = decoupled(vec![1100.0, 1300.0], false);
    let small = standalone_profile(&s, &[20.0, 20.0], &SolveOptions::default()).unwrap();
    assert!(small.iter().all(|v| v.abs() < 1e-9), "{small:?}");
    let large = standalone_profile(&s, &[140.0, 140.0], &SolveOptions::default()).unwrap();
    assert!(large[0] > 1.0, "{large:?}");
}

#[test]
fn largest_unit_pays_its_own_market() {
    let s = toy3_scenario().truncated(6);
    let m = build_uc(&s, LossRule::EndogenousMax, false).unwrap();
    let (sched, disp, _) = solve_mip(&m, 1e-6).unwrap();
    let sa = standalone_markets(&s, &sched, &disp).unwrap();
    for (t, entries) in sa.hours.iter().enumerate() {
        let big = entries.iter().max_by(|a, b| a.dispatch.total_cmp(&b.dispatch)).unwrap();
        let profile: Vec<f64> = (0..s.horizon).map(|k| disp.power(big.unit, k).max(0.0)).collect();
        let (p, d) = relaxed(&s, LossRule::FixedProfile(profile));
        let h = &d.hours[t];
        let market = h.lambda_h * p.h[t] + h.lambda_pfr * p.pfr[t] + h.lambda_efr * p.efr[t];
        assert!((big.omega - market).abs() <= 1e-6 * market.abs().max(1.0), "hour {t}: {} vs {market}", big.omega);
    }
}

#[test]
fn ineligible_units_have_a_zero_standalone_market() {
    let mut s = toy3_scenario().truncated(4);
    s.generators[0].loss_eligible = false;
    let m = build_uc(&s, LossRule::EndogenousMax, false).unwrap();
    let (sched, disp, _) = solve_mip(&m, 1e-6).unwrap();
    let sa = standalone_markets(&s, &sched, &disp).unwrap();
    let nuclear = &s.generators[0].id;
    assert!(disp.power(s.units().next().unwrap(), 0) > 0.0);
    let rows: Vec<_> = sa.hours.iter().flatten().filter(|e| &e.id == nuclear).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|e| e.omega == 0.0 && e.dispatch > 0.0));
    for (t, entries) in sa.hours.iter().enumerate() {
        let want = s.units().filter(|&u| sched.dispatched(u, t, disp.power(u, t))).count();
        assert_eq!(entries.len(), want, "hour {t}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn standalone_cost_is_monotone_in_dispatch(
        demand in prop::collection::vec(900.0f64..1400.0, 3),
        lo in prop::collection::vec(0.0f64..80.0, 3),
        extra in prop::collection::vec(0.0f64..60.0, 3),
    ) {
        let s = decoupled(demand, true);
        let hi: Vec<f64> = lo.iter().zip(&extra).map(|(a, b)| a + b).collect();
        let opts = SolveOptions::default();
        let a = standalone_profile(&s, &lo, &opts).unwrap();
        let b = standalone_profile(&s, &hi, &opts).unwrap();
        for t in 0..3 {
            prop_assert!(b[t] >= a[t] - 1e-6 * b[t].abs().max(1.0), "hour {}: {} < {}", t, b[t], a[t]);
        }
    }

    #[test]
    fn omega_identity_on_fixed_profiles(profile in prop::collection::vec(0.0f64..140.0, 3)) {
        let s = decoupled(vec![1000.0, 1200.0, 1400.0], true);
        let (p, d) = relaxed(&s, LossRule::FixedProfile(profile));
        omega_identity(&p, &d);
        prop_assert!(as_prices_from_duals(&d, &s.params).is_ok());
    }
}
