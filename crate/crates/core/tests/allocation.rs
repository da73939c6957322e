use fcas_core::allocation::*;
use proptest::prelude::*;

fn game(costs: &[f64]) -> AirportGame {
    AirportGame::from_costs(costs).unwrap()
}

fn max_dev(a: &Allocation, b: &Allocation) -> f64 {
    a.shares
        .iter()
        .map(|(id, v)| (v - b.get(id).unwrap()).abs())
        .fold(0.0, f64::max)
}

/// Costs with frequent ties, as produced by identical units.
fn tied_costs(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![0u32..6, 0u32..1000].prop_map(|k| k as f64 * 0.37), 1..=max_n)
}

fn any_costs(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..100.0, 1..=max_n)
}

#[test]
fn fixed_points() {
    let g = game(&[1.0, 2.0, 3.0]);
    let sv = shapley_bruteforce(&g, 12).unwrap();
    assert!(max_dev(&sv, &shapley_airport(&g)) < 1e-15);
    let nu = nucleolus_lp_oracle(&g, 8).unwrap();
    for (v, want) in nu.values().iter().zip([0.5, 0.75, 1.75]) {
        assert!((v - want).abs() < 1e-9, "{:?}", nu.values());
    }
    assert!(max_dev(&nu, &nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap()) < 1e-9);
}

#[test]
fn two_players_share_the_smaller_cost() {
    for (a, b) in [(1.0, 4.0), (3.0, 3.0), (0.25, 100.0)] {
        let g = game(&[b, a]);
        let want = [a / 2.0, b - a / 2.0];
        for alloc in [
            shapley_airport(&g),
            nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap(),
            shapley_bruteforce(&g, 12).unwrap(),
            nucleolus_lp_oracle(&g, 8).unwrap(),
        ] {
            for (v, w) in alloc.values().iter().zip(want) {
                assert!((v - w).abs() < 1e-12, "{} {:?}", alloc.rule, alloc.values());
            }
        }
    }
}

#[test]
fn single_player_pays_its_cost() {
    let g = game(&[7.5]);
    assert_eq!(shapley_bruteforce(&g, 12).unwrap().values(), vec![7.5]);
    assert!((nucleolus_lp_oracle(&g, 8).unwrap().values()[0] - 7.5).abs() < 1e-12);
}

#[test]
fn proportional_breaks_the_core_on_a_dominant_player() {
    let g = game(&[1.0, 1.0, 1.0, 100.0]);
    let r = core_check(&proportional(&g), &g).unwrap();
    assert!(r.efficient && r.individually_rational);
    assert!(!r.coalitionally_rational);
    assert_eq!(r.worst_members, vec!["p1", "p2", "p3"]);
    for alloc in [shapley_airport(&g), nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap()] {
        assert!(core_check(&alloc, &g).unwrap().pass());
    }
}

#[test]
fn largest_unit_pays_least_under_proportional() {
    let mut costs = vec![1800.0];
    costs.extend([600.0, 550.0, 500.0, 500.0, 450.0, 400.0, 350.0]);
    let g = game(&costs);
    let big = |a: &Allocation| a.get("p1").unwrap();
    let pro = big(&proportional(&g));
    let sv = big(&shapley_airport(&g));
    let nu = big(&nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap());
    assert!(pro < sv && pro < nu && nu <= sv, "{pro} {sv} {nu}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn shapley_forms_agree(costs in any_costs(10)) {
        let g = game(&costs);
        prop_assert!(max_dev(&shapley_airport(&g), &shapley_bruteforce(&g, 12).unwrap()) <= 1e-12);
    }

    #[test]
    fn nucleolus_forms_agree(costs in tied_costs(7)) {
        let g = game(&costs);
        let fast = nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap();
        let lp = nucleolus_lp_oracle(&g, 8).unwrap();
        prop_assert!(max_dev(&fast, &lp) <= 1e-7, "{:?} vs {:?}", fast.values(), lp.values());
    }

    #[test]
    fn rules_are_efficient_and_rational(costs in tied_costs(10)) {
        let g = game(&costs);
        let tol = 1e-9 * g.total().max(1.0);
        for alloc in [proportional(&g), shapley_airport(&g), nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap()] {
            let r = core_check(&alloc, &g).unwrap();
            prop_assert!(r.efficient, "{} {}", alloc.rule, r.efficiency_gap);
            prop_assert!(r.individually_rational);
            if alloc.rule != "proportional" {
                prop_assert!(r.coalitionally_rational, "{} {}", alloc.rule, r.worst_coalition);
            }
            prop_assert!(alloc.values().iter().all(|v| *v >= -tol));
        }
    }

    #[test]
    fn equal_costs_equal_shares_and_order_is_monotone(costs in tied_costs(10)) {
        let g = game(&costs);
        let nu = nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap();
        for alloc in [proportional(&g), shapley_airport(&g), nu] {
            let v = alloc.values();
            for i in 1..g.len() {
                let (a, b) = (g.players[i - 1].1, g.players[i].1);
                if a == b {
                    prop_assert!((v[i] - v[i - 1]).abs() <= 1e-12 * g.total().max(1.0));
                }
                if alloc.rule != "proportional" {
                    prop_assert!(v[i - 1] <= v[i] + 1e-12 * g.total().max(1.0));
                }
            }
        }
    }

    #[test]
    fn two_player_rules_coincide(a in 0.0f64..50.0, b in 0.0f64..50.0) {
        let g = game(&[a, b]);
        let sv = shapley_airport(&g);
        let nu = nucleolus_airport(&group_by_type(&g, GROUP_TOL)).unwrap();
        prop_assert!(max_dev(&sv, &nu) <= 1e-12);
    }
}
