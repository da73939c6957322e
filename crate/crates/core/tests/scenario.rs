use fcas_core::scenario::*;
use fcas_core::{gb_template, toy3_scenario, toy_scenario, ScenarioError};
use proptest::prelude::*;

#[test]
fn templates_survive_a_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for s in [gb_template(), toy_scenario(), toy3_scenario()] {
        let path = dir.path().join(format!("{}.json", s.name));
        write_scenario(&s, &path).unwrap();
        assert_eq!(load_scenario(&path).unwrap(), s);
    }
}

#[test]
fn template_file_carries_the_big_nuclear_block() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("gb.json");
    write_scenario(&gb_template(), &path).unwrap();
    let s = load_scenario(&path).unwrap();
    let big = s.generators.iter().find(|g| g.technology == "Big Nuclear").unwrap();
    assert_eq!((big.p_max, big.h, big.lambda_h), (1800.0, 5.0, 1.0));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_scenario(dir.path().join("absent.json")), Err(ScenarioError::Io { .. })));
}

#[test]
fn bad_efficiency_names_the_field() {
    let mut s = toy_scenario();
    s.storage_units[0].eta_cha = 1.3;
    let text = scenario_to_string(&s);
    match parse_scenario(&text) {
        Err(ScenarioError::Validation(d)) => assert!(d.iter().any(|d| d.path.contains("eta_cha")), "{d:?}"),
        other => panic!("{other:?}"),
    }
}

prop_compose! {
    fn perturbed()(seed in 0usize..3, scale in 0.5f64..1.5, shift in 0.0f64..0.2, flip in any::<bool>()) -> Scenario {
        let mut s = [toy_scenario(), toy3_scenario(), gb_template().truncated(48)][seed].clone();
        for d in &mut s.demand {
            *d *= scale;
        }
        for g in &mut s.generators {
            g.lambda_e += shift;
            g.initially_on ^= flip;
        }
        for u in &mut s.storage_units {
            u.eta_cha = (u.eta_cha - shift).max(0.5);
        }
        s
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn round_trip_is_field_exact(s in perturbed()) {
        let back = parse_scenario(&scenario_to_string(&s)).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert!(back.diagnostics().is_empty());
    }

    #[test]
    fn every_diagnostic_names_a_path(s in perturbed(), hour in 0usize..24) {
        let mut s = s;
        s.demand[hour] = -1.0;
        let d = s.diagnostics();
        prop_assert!(!d.is_empty());
        prop_assert!(d.iter().all(|d| !d.path.is_empty()));
    }
}
