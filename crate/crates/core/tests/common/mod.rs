//! Instances and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

use fcas_core::scenario::*;
use fcas_core::uc::{with_fixed_binaries, UcModel};
use fcas_core::UcError;

pub fn thermal(id: &str, p_max: f64, p_msg: f64, h: f64, pfr_max: f64, offers: [f64; 3], min_ud: u32, on: bool) -> GeneratorSpec {
    GeneratorSpec {
        id: id.into(),
        technology: id.into(),
        p_max,
        p_msg,
        h,
        pfr_max,
        lambda_e: offers[0],
        lambda_h: offers[1],
        lambda_pfr: offers[2],
        t_mut: min_ud,
        t_mdt: min_ud,
        t_st: 0,
        loss_eligible: true,
        initially_on: on,
    }
}

pub fn battery(id: &str, p_max: f64, e_max: f64, efr_max: f64) -> StorageSpec {
    StorageSpec {
        id: id.into(),
        technology: "BESS".into(),
        kind: StorageKind::Bess,
        p_max,
        p_msg: 0.0,
        e_min: 0.0,
        e_max,
        e_ini: e_max / 2.0,
        e_end: e_max / 2.0,
        eta_cha: 0.95,
        eta_dis: 0.95,
        h: 0.0,
        pfr_max: 0.0,
        efr_max,
        lambda_e: 5.0,
        lambda_h: 0.0,
        lambda_pfr: 0.0,
        lambda_efr: 4.0,
        loss_eligible: true,
    }
}

pub fn scenario(name: &str, demand: Vec<f64>, generators: Vec<GeneratorSpec>, storage_units: Vec<StorageSpec>) -> Scenario {
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: name.into(),
        horizon: demand.len(),
        params: SystemParams::gb(),
        demand,
        p_loss_cap: None,
        generators,
        res_units: Vec::new(),
        storage_units,
    }
}

/// Thermal-only system with one-hour minimum times and no start lead, so
/// each hour of the relaxation clears on its own. Without EFR the nadir
/// limit keeps securable losses below about 140 MW.
pub fn decoupled(demand: Vec<f64>, as_offers: bool) -> Scenario {
    let k = if as_offers { 1.0 } else { 0.0 };
    let g = |id, p_max, p_msg, pfr, o: [f64; 3]| thermal(id, p_max, p_msg, 10.0, pfr, [o[0], o[1] * k, o[2] * k], 1, true);
    scenario(
        "decoupled",
        demand,
        vec![
            g("Base", 1000.0, 200.0, 300.0, [20.0, 1.0, 2.0]),
            g("Mid", 800.0, 200.0, 300.0, [50.0, 2.0, 3.0]),
            g("Peak", 500.0, 100.0, 200.0, [90.0, 4.0, 6.0]),
        ],
        Vec::new(),
    )
}

/// Limits loose enough that thermal units alone can secure a few hundred MW.
fn loose(mut s: Scenario) -> Scenario {
    s.params.delta_f_max = 2.0;
    s.params.t_pfr = 5.0;
    s
}

/// Two thermal units over five hours: ten commitment patterns bits.
pub fn two_unit_five_hour() -> Scenario {
    loose(scenario(
        "enum-2x5",
        vec![200.0, 350.0, 520.0, 430.0, 250.0],
        vec![
            thermal("Slow", 600.0, 250.0, 20.0, 300.0, [30.0, 0.5, 1.0], 3, false),
            thermal("Fast", 500.0, 100.0, 20.0, 300.0, [70.0, 1.0, 2.0], 1, true),
        ],
        Vec::new(),
    ))
}

/// One thermal unit and one battery over three hours: nine bits.
pub fn unit_and_battery() -> Scenario {
    loose(scenario(
        "enum-1x3+bess",
        vec![250.0, 400.0, 220.0],
        vec![thermal("Gen", 900.0, 300.0, 20.0, 300.0, [40.0, 0.5, 1.0], 1, true)],
        vec![battery("BESS", 200.0, 400.0, 200.0)],
    ))
}

/// Three thermal units over three hours with a must-run block: nine bits.
pub fn three_unit_three_hour() -> Scenario {
    loose(scenario(
        "enum-3x3",
        vec![500.0, 900.0, 600.0],
        vec![
            thermal("A", 500.0, 200.0, 20.0, 250.0, [25.0, 0.4, 1.5], 2, true),
            thermal("B", 400.0, 150.0, 20.0, 200.0, [45.0, 0.8, 1.0], 1, false),
            thermal("C", 300.0, 50.0, 20.0, 150.0, [80.0, 1.2, 0.5], 1, false),
        ],
        Vec::new(),
    ))
}

/// Number of free state bits (generator on/off and storage modes).
pub fn state_bits(model: &UcModel) -> usize {
    let nt = model.horizon();
    nt * (model.gens.len() + 2 * model.stor.len())
}

/// Minimum objective over every on/off and storage-mode pattern, with the
/// start and shut-down indicators derived from the on/off trajectory.
/// `None` when no pattern is feasible.
pub fn enumerate_commitments(model: &UcModel) -> Option<f64> {
    let s = &model.scenario;
    let nt = model.horizon();
    let bits = state_bits(model);
    assert!(bits <= 16, "enumeration over {bits} bits");
    let mut best: Option<f64> = None;
    for pattern in 0u32..(1 << bits) {
        let bit = |k: usize| if pattern >> k & 1 == 1 { 1.0 } else { 0.0 };
        let mut value: HashMap<usize, f64> = HashMap::new();
        let mut k = 0;
        for (g, v) in model.gens.iter().enumerate() {
            let lead = s.generators[g].t_st as usize;
            let mut prev = if s.generators[g].initially_on { 1.0 } else { 0.0 };
            let mut sg = vec![0.0; nt];
            for t in 0..nt {
                let y = bit(k);
                k += 1;
                sg[t] = f64::max(y - prev, 0.0);
                value.insert(v.y[t], y);
                value.insert(v.sg[t], sg[t]);
                value.insert(v.sd[t], f64::max(prev - y, 0.0));
                prev = y;
            }
            for t in 0..nt {
                value.insert(v.st[t], if t + lead < nt { sg[t + lead] } else { 0.0 });
            }
        }
        for v in &model.stor {
            for t in 0..nt {
                value.insert(v.ycha[t], bit(k));
                value.insert(v.ydis[t], bit(k + 1));
                k += 2;
            }
        }
        let values: Vec<f64> = model.binaries.iter().map(|b| value[&b.var]).collect();
        match with_fixed_binaries(model, &values) {
            Ok(d) => best = Some(best.map_or(d.objective, |b: f64| b.min(d.objective))),
            Err(UcError::Infeasible { .. }) => {}
            Err(e) => panic!("pattern {pattern:b}: {e}"),
        }
    }
    best
}
