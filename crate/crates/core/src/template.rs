//! GB-like reference fleet.
//!
//! Technology parameters and offers follow the published generation mix.
//! Unit counts split each technology's installed capacity into uniform unit
//! sizes (25 GW CCGT as 25 x 1000 MW, 20 GW BESS as 200 x 100 MW, ...).
//! Storage durations, efficiencies and minimum up/down times are our own
//! choices. Demand and capacity-factor series are synthetic: smooth daily and
//! weekly shapes plus seeded noise, tagged [`PROFILE_VERSION`].

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scenario::{GeneratorSpec, ResSpec, Scenario, StorageKind, StorageSpec, SystemParams, SCHEMA_VERSION};

pub const PROFILE_VERSION: &str = "gb-template-v1";
pub const TEMPLATE_HOURS: usize = 168;
const SEED: u64 = 0x6762_7631;

struct Thermal {
    tech: &'static str,
    count: usize,
    p_max: f64,
    p_msg: f64,
    h: f64,
    pfr_max: f64,
    lambda_e: f64,
    lambda_h: f64,
    lambda_pfr: f64,
    min_up: u32,
    min_down: u32,
    initially_on: bool,
}

const THERMAL: [Thermal; 6] = [
    Thermal { tech: "Big Nuclear", count: 1, p_max: 1800.0, p_msg: 1800.0, h: 5.0, pfr_max: 0.0, lambda_e: 78.0, lambda_h: 1.0, lambda_pfr: 0.0, min_up: 24, min_down: 24, initially_on: true },
    Thermal { tech: "Nuclear", count: 2, p_max: 1600.0, p_msg: 1600.0, h: 5.0, pfr_max: 0.0, lambda_e: 78.0, lambda_h: 1.0, lambda_pfr: 0.0, min_up: 24, min_down: 24, initially_on: true },
    Thermal { tech: "CCGT", count: 25, p_max: 1000.0, p_msg: 500.0, h: 5.0, pfr_max: 300.0, lambda_e: 99.0, lambda_h: 2.0, lambda_pfr: 3.0, min_up: 4, min_down: 4, initially_on: false },
    Thermal { tech: "OCGT", count: 10, p_max: 100.0, p_msg: 50.0, h: 5.0, pfr_max: 30.0, lambda_e: 222.0, lambda_h: 5.0, lambda_pfr: 7.0, min_up: 1, min_down: 1, initially_on: false },
    Thermal { tech: "Biomass", count: 6, p_max: 500.0, p_msg: 450.0, h: 5.0, pfr_max: 100.0, lambda_e: 98.0, lambda_h: 4.0, lambda_pfr: 4.5, min_up: 6, min_down: 6, initially_on: false },
    Thermal { tech: "BECCS", count: 2, p_max: 500.0, p_msg: 450.0, h: 5.0, pfr_max: 100.0, lambda_e: 138.0, lambda_h: 3.5, lambda_pfr: 4.5, min_up: 6, min_down: 6, initially_on: false },
];

/// Synthetic GB-like system demand (MW): weekday peak near 62.7 GW.
pub fn synthetic_demand(hours: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..hours)
        .map(|t| {
            let h = (t % 24) as f64;
            let day = t / 24;
            let morning = (-((h - 9.0) / 3.0).powi(2)).exp();
            let evening = (-((h - 18.5) / 2.5).powi(2)).exp();
            let night = 0.5 * (1.0 + (2.0 * PI * (h - 15.0) / 24.0).cos());
            let weekend = if day % 7 >= 5 { 0.9 } else { 1.0 };
            let base = 36_000.0 + 6_000.0 * night + 14_000.0 * morning + 19_000.0 * evening;
            (base * weekend * (1.0 + 0.015 * rng.gen_range(-1.0..1.0))).min(62_700.0)
        })
        .collect()
}

fn wind_profile(hours: usize, mean: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    // AR(1) around a slow synoptic swing.
    let mut x = 0.0;
    (0..hours)
        .map(|t| {
            x = 0.9 * x + 0.1 * rng.gen_range(-1.0..1.0);
            let swing = 0.25 * (2.0 * PI * t as f64 / 96.0).sin();
            (mean + swing + x).clamp(0.02, 0.98)
        })
        .collect()
}

fn solar_profile(hours: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..hours)
        .map(|t| {
            let h = (t % 24) as f64;
            let sun = if (6.0..=20.0).contains(&h) { (PI * (h - 6.0) / 14.0).sin() } else { 0.0 };
            let cloud = rng.gen_range(0.6..1.0);
            (0.8 * sun * cloud).clamp(0.0, 1.0)
        })
        .collect()
}

/// GB reference scenario over [`TEMPLATE_HOURS`] hours.
pub fn gb_template() -> Scenario {
    let hours = TEMPLATE_HOURS;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let demand = synthetic_demand(hours, &mut rng);

    let mut generators = Vec::new();
    for th in &THERMAL {
        for k in 0..th.count {
            generators.push(GeneratorSpec {
                id: format!("{}-{}", th.tech.replace(' ', ""), k + 1),
                technology: th.tech.to_string(),
                p_max: th.p_max,
                p_msg: th.p_msg,
                h: th.h,
                pfr_max: th.pfr_max,
                lambda_e: th.lambda_e,
                lambda_h: th.lambda_h,
                lambda_pfr: th.lambda_pfr,
                t_mut: th.min_up,
                t_mdt: th.min_down,
                t_st: 0,
                loss_eligible: true,
                initially_on: th.initially_on,
            });
        }
    }

    let offshore = wind_profile(hours, 0.45, &mut rng);
    let onshore = wind_profile(hours, 0.30, &mut rng);
    let solar = solar_profile(hours, &mut rng);
    let mut res_units = Vec::new();
    for (tech, count, p_max, lambda_e, cf) in [
        ("Offshore", 28, 1800.0, 47.0, &offshore),
        ("Onshore", 50, 600.0, 45.0, &onshore),
        ("Solar", 168, 250.0, 39.0, &solar),
    ] {
        for k in 0..count {
            res_units.push(ResSpec {
                id: format!("{tech}-{}", k + 1),
                technology: tech.to_string(),
                p_max,
                cf: cf.clone(),
                lambda_e,
                loss_eligible: true,
            });
        }
    }

    let mut storage_units = Vec::new();
    for k in 0..12 {
        // 5 h reservoir, 75% round trip.
        let eta = 0.75f64.sqrt();
        storage_units.push(StorageSpec {
            id: format!("PHES-{}", k + 1),
            technology: "PHES".into(),
            kind: StorageKind::Phes,
            p_max: 400.0,
            p_msg: 0.0,
            e_min: 0.0,
            e_max: 2000.0,
            e_ini: 1000.0,
            e_end: 1000.0,
            eta_cha: eta,
            eta_dis: eta,
            h: 5.0,
            pfr_max: 80.0,
            efr_max: 0.0,
            lambda_e: 60.0,
            lambda_h: 1.0,
            lambda_pfr: 5.0,
            lambda_efr: 0.0,
            loss_eligible: true,
        });
    }
    for k in 0..200 {
        // 2 h battery.
        storage_units.push(StorageSpec {
            id: format!("BESS-{}", k + 1),
            technology: "BESS".into(),
            kind: StorageKind::Bess,
            p_max: 100.0,
            p_msg: 0.0,
            e_min: 0.0,
            e_max: 200.0,
            e_ini: 100.0,
            e_end: 100.0,
            eta_cha: 0.95,
            eta_dis: 0.95,
            h: 0.0,
            pfr_max: 0.0,
            efr_max: 5.0,
            lambda_e: 50.0,
            lambda_h: 0.0,
            lambda_pfr: 0.0,
            lambda_efr: 10.0,
            loss_eligible: true,
        });
    }

    Scenario {
        schema_version: SCHEMA_VERSION,
        name: PROFILE_VERSION.to_string(),
        horizon: hours,
        params: SystemParams::gb(),
        demand,
        p_loss_cap: Some(vec![1800.0; hours]),
        generators,
        res_units,
        storage_units,
    }
}

/// Ten-unit, 24-hour desk scenario with GB frequency limits.
///
/// No loss-eligible unit exceeds the 1.8 GW nuclear block, so the largest
/// loss stays securable at every hour. Wind and solar are aggregates and are
/// not loss-eligible. The battery block holds EFR well above the 5% used for
/// individual GB batteries.
pub fn toy_scenario() -> Scenario {
    let hours = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x746f79);
    let demand: Vec<f64> = synthetic_demand(hours, &mut rng).iter().map(|d| d * 0.18).collect();
    let gen = |id: &str, tech: &str, p_max: f64, p_msg: f64, pfr_max: f64, offers: [f64; 3], min_ud: u32, on: bool| GeneratorSpec {
        id: id.into(),
        technology: tech.into(),
        p_max,
        p_msg,
        h: 5.0,
        pfr_max,
        lambda_e: offers[0],
        lambda_h: offers[1],
        lambda_pfr: offers[2],
        t_mut: min_ud,
        t_mdt: min_ud,
        t_st: 0,
        loss_eligible: true,
        initially_on: on,
    };
    let generators = vec![
        gen("BigNuclear", "Big Nuclear", 1800.0, 1800.0, 0.0, [78.0, 1.0, 0.0], 24, true),
        gen("Nuclear", "Nuclear", 1600.0, 1000.0, 0.0, [78.0, 1.0, 0.0], 24, true),
        gen("CCGT-A", "CCGT", 1800.0, 700.0, 500.0, [99.0, 2.0, 3.0], 4, true),
        gen("CCGT-B", "CCGT", 1800.0, 700.0, 500.0, [99.0, 2.0, 3.0], 4, false),
        gen("OCGT", "OCGT", 500.0, 250.0, 150.0, [222.0, 5.0, 7.0], 1, false),
        gen("Biomass", "Biomass", 1500.0, 750.0, 300.0, [98.0, 4.0, 4.5], 6, false),
    ];
    let res_units = vec![
        ResSpec {
            id: "Offshore".into(),
            technology: "Offshore".into(),
            p_max: 3000.0,
            cf: wind_profile(hours, 0.45, &mut rng),
            lambda_e: 47.0,
            loss_eligible: false,
        },
        ResSpec {
            id: "Solar".into(),
            technology: "Solar".into(),
            p_max: 2000.0,
            cf: solar_profile(hours, &mut rng),
            lambda_e: 39.0,
            loss_eligible: false,
        },
    ];
    let eta = 0.75f64.sqrt();
    let storage_units = vec![
        StorageSpec {
            id: "PHES".into(),
            technology: "PHES".into(),
            kind: StorageKind::Phes,
            p_max: 1200.0,
            p_msg: 0.0,
            e_min: 0.0,
            e_max: 6000.0,
            e_ini: 3000.0,
            e_end: 3000.0,
            eta_cha: eta,
            eta_dis: eta,
            h: 5.0,
            pfr_max: 360.0,
            efr_max: 0.0,
            lambda_e: 60.0,
            lambda_h: 1.0,
            lambda_pfr: 5.0,
            lambda_efr: 0.0,
            loss_eligible: true,
        },
        StorageSpec {
            id: "BESS".into(),
            technology: "BESS".into(),
            kind: StorageKind::Bess,
            p_max: 1500.0,
            p_msg: 0.0,
            e_min: 0.0,
            e_max: 3000.0,
            e_ini: 1500.0,
            e_end: 1500.0,
            eta_cha: 0.95,
            eta_dis: 0.95,
            h: 0.0,
            pfr_max: 0.0,
            efr_max: 1500.0,
            lambda_e: 50.0,
            lambda_h: 0.0,
            lambda_pfr: 0.0,
            lambda_efr: 10.0,
            loss_eligible: true,
        },
    ];
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: "toy-10".into(),
        horizon: hours,
        params: SystemParams::gb(),
        demand,
        p_loss_cap: None,
        generators,
        res_units,
        storage_units,
    }
}

/// Three-unit, 24-hour scenario: a must-run nuclear block, a flexible CCGT
/// carrying PFR and a battery carrying EFR.
pub fn toy3_scenario() -> Scenario {
    let hours = 24;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x746f7933);
    let demand: Vec<f64> = synthetic_demand(hours, &mut rng).iter().map(|d| d * 0.015).collect();
    let gen = |id: &str, p_max: f64, p_msg: f64, h: f64, pfr_max: f64, offers: [f64; 3], min_ud: u32| GeneratorSpec {
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
        initially_on: true,
    };
    Scenario {
        schema_version: SCHEMA_VERSION,
        name: "toy-3".into(),
        horizon: hours,
        params: SystemParams::gb(),
        demand,
        p_loss_cap: None,
        generators: vec![
            gen("Nuclear", 1200.0, 400.0, 8.0, 0.0, [10.0, 1.0, 0.0], 24),
            gen("CCGT", 1000.0, 300.0, 6.0, 300.0, [60.0, 2.0, 3.0], 3),
        ],
        res_units: Vec::new(),
        storage_units: vec![StorageSpec {
            id: "BESS".into(),
            technology: "BESS".into(),
            kind: StorageKind::Bess,
            p_max: 400.0,
            p_msg: 0.0,
            e_min: 0.0,
            e_max: 1600.0,
            e_ini: 800.0,
            e_end: 800.0,
            eta_cha: 0.95,
            eta_dis: 0.95,
            h: 0.0,
            pfr_max: 0.0,
            efr_max: 400.0,
            lambda_e: 50.0,
            lambda_h: 0.0,
            lambda_pfr: 0.0,
            lambda_efr: 10.0,
            loss_eligible: true,
        }],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn published_characteristics() {
        let s = gb_template();
        let big: Vec<_> = s.generators.iter().filter(|g| g.technology == "Big Nuclear").collect();
        assert_eq!(big.len(), 1);
        assert_eq!((big[0].p_max, big[0].h, big[0].lambda_h), (1800.0, 5.0, 1.0));

        let ccgt = s.generators.iter().find(|g| g.technology == "CCGT").unwrap();
        assert_eq!(ccgt.pfr_max, 300.0);
        let ccgt_cap: f64 = s.generators.iter().filter(|g| g.technology == "CCGT").map(|g| g.p_max).sum();
        assert_eq!(ccgt_cap, 25_000.0);

        let bess = s.storage_units.iter().find(|u| u.kind == StorageKind::Bess).unwrap();
        assert_eq!((bess.efr_max, bess.lambda_efr), (5.0, 10.0));

        assert_eq!(s.params, SystemParams { f0: 50.0, rocof_max: 1.0, delta_f_max: 0.8, t_efr: 1.0, t_pfr: 10.0 });
    }

    #[test]
    fn toy_has_ten_valid_units() {
        let s = toy_scenario();
        assert_eq!(s.num_units(), 10);
        assert!(s.diagnostics().is_empty(), "{:?}", s.diagnostics());
    }

    #[test]
    fn deterministic_and_bounded() {
        let a = gb_template();
        assert_eq!(a, gb_template());
        let peak = a.demand.iter().cloned().fold(0.0, f64::max);
        assert!(peak <= 62_700.0 && peak > 55_000.0, "{peak}");
    }
}
