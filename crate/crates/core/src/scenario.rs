//! Market instance data model, validation and the scenario document format.
//!
//! Documents are JSON with unit-suffixed keys (`p_max_mw`, `inertia_h_s`, ...)
//! and a `schema_version` field. [`load_scenario`] parses and validates in one
//! step and reports every violated invariant with its field path.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Diagnostic, ScenarioError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    #[serde(rename = "f0_hz")]
    pub f0: f64,
    #[serde(rename = "rocof_max_hz_per_s")]
    pub rocof_max: f64,
    #[serde(rename = "delta_f_max_hz")]
    pub delta_f_max: f64,
    #[serde(rename = "t_efr_s")]
    pub t_efr: f64,
    #[serde(rename = "t_pfr_s")]
    pub t_pfr: f64,
}

impl SystemParams {
    /// GB frequency limits: 50 Hz, 1 Hz/s RoCoF, 0.8 Hz nadir, EFR in 1 s, PFR in 10 s.
    pub fn gb() -> Self {
        Self {
            f0: 50.0,
            rocof_max: 1.0,
            delta_f_max: 0.8,
            t_efr: 1.0,
            t_pfr: 10.0,
        }
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub id: String,
    #[serde(default)]
    pub technology: String,
    #[serde(rename = "p_max_mw")]
    pub p_max: f64,
    #[serde(rename = "p_msg_mw")]
    pub p_msg: f64,
    /// Inertia constant (s).
    #[serde(rename = "inertia_h_s")]
    pub h: f64,
    #[serde(rename = "pfr_max_mw")]
    pub pfr_max: f64,
    #[serde(rename = "offer_energy_gbp_per_mwh")]
    pub lambda_e: f64,
    #[serde(rename = "offer_inertia_gbp_per_mws")]
    pub lambda_h: f64,
    #[serde(rename = "offer_pfr_gbp_per_mw")]
    pub lambda_pfr: f64,
    #[serde(rename = "min_up_h")]
    pub t_mut: u32,
    #[serde(rename = "min_down_h")]
    pub t_mdt: u32,
    #[serde(rename = "start_lead_h")]
    pub t_st: u32,
    #[serde(default = "yes")]
    pub loss_eligible: bool,
    /// Commitment state in the hour before the horizon.
    #[serde(default)]
    pub initially_on: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResSpec {
    pub id: String,
    #[serde(default)]
    pub technology: String,
    #[serde(rename = "p_max_mw")]
    pub p_max: f64,
    #[serde(rename = "capacity_factor")]
    pub cf: Vec<f64>,
    #[serde(rename = "offer_energy_gbp_per_mwh")]
    pub lambda_e: f64,
    #[serde(default = "yes")]
    pub loss_eligible: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum StorageKind {
    Phes,
    Bess,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StorageSpec {
    pub id: String,
    #[serde(default)]
    pub technology: String,
    pub kind: StorageKind,
    #[serde(rename = "p_max_mw")]
    pub p_max: f64,
    #[serde(rename = "p_msg_mw")]
    pub p_msg: f64,
    #[serde(rename = "e_min_mwh")]
    pub e_min: f64,
    #[serde(rename = "e_max_mwh")]
    pub e_max: f64,
    #[serde(rename = "e_ini_mwh")]
    pub e_ini: f64,
    #[serde(rename = "e_end_mwh")]
    pub e_end: f64,
    pub eta_cha: f64,
    pub eta_dis: f64,
    #[serde(rename = "inertia_h_s")]
    pub h: f64,
    #[serde(rename = "pfr_max_mw")]
    pub pfr_max: f64,
    #[serde(rename = "efr_max_mw")]
    pub efr_max: f64,
    #[serde(rename = "offer_energy_gbp_per_mwh")]
    pub lambda_e: f64,
    #[serde(rename = "offer_inertia_gbp_per_mws")]
    pub lambda_h: f64,
    #[serde(rename = "offer_pfr_gbp_per_mw")]
    pub lambda_pfr: f64,
    #[serde(rename = "offer_efr_gbp_per_mw")]
    pub lambda_efr: f64,
    #[serde(default = "yes")]
    pub loss_eligible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(rename = "horizon_h")]
    pub horizon: usize,
    pub params: SystemParams,
    #[serde(rename = "demand_mw")]
    pub demand: Vec<f64>,
    /// Credible-loss floor per hour (MW); when absent no floor row is built.
    #[serde(rename = "p_loss_floor_mw", default, skip_serializing_if = "Option::is_none")]
    pub p_loss_cap: Option<Vec<f64>>,
    #[serde(default)]
    pub generators: Vec<GeneratorSpec>,
    #[serde(default)]
    pub res_units: Vec<ResSpec>,
    #[serde(default)]
    pub storage_units: Vec<StorageSpec>,
}

/// Kind-tagged reference to one unit of a scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UnitRef {
    Generator(usize),
    Res(usize),
    Storage(usize),
}

impl fmt::Display for UnitRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UnitRef::Generator(i) => write!(f, "generators[{i}]"),
            UnitRef::Res(i) => write!(f, "res_units[{i}]"),
            UnitRef::Storage(i) => write!(f, "storage_units[{i}]"),
        }
    }
}

impl Scenario {
    pub fn units(&self) -> impl Iterator<Item = UnitRef> + '_ {
        (0..self.generators.len())
            .map(UnitRef::Generator)
            .chain((0..self.res_units.len()).map(UnitRef::Res))
            .chain((0..self.storage_units.len()).map(UnitRef::Storage))
    }

    pub fn unit_id(&self, u: UnitRef) -> &str {
        match u {
            UnitRef::Generator(i) => &self.generators[i].id,
            UnitRef::Res(i) => &self.res_units[i].id,
            UnitRef::Storage(i) => &self.storage_units[i].id,
        }
    }

    pub fn technology(&self, u: UnitRef) -> &str {
        let t = match u {
            UnitRef::Generator(i) => &self.generators[i].technology,
            UnitRef::Res(i) => &self.res_units[i].technology,
            UnitRef::Storage(i) => &self.storage_units[i].technology,
        };
        if t.is_empty() {
            self.unit_id(u)
        } else {
            t
        }
    }

    pub fn unit_p_max(&self, u: UnitRef) -> f64 {
        match u {
            UnitRef::Generator(i) => self.generators[i].p_max,
            UnitRef::Res(i) => self.res_units[i].p_max,
            UnitRef::Storage(i) => self.storage_units[i].p_max,
        }
    }

    pub fn loss_eligible(&self, u: UnitRef) -> bool {
        match u {
            UnitRef::Generator(i) => self.generators[i].loss_eligible,
            UnitRef::Res(i) => self.res_units[i].loss_eligible,
            UnitRef::Storage(i) => self.storage_units[i].loss_eligible,
        }
    }

    pub fn find_unit(&self, id: &str) -> Option<UnitRef> {
        self.units().find(|&u| self.unit_id(u) == id)
    }

    pub fn num_units(&self) -> usize {
        self.generators.len() + self.res_units.len() + self.storage_units.len()
    }

    /// Keeps the first `hours` hours of every series.
    pub fn truncated(&self, hours: usize) -> Scenario {
        let hours = hours.min(self.horizon);
        let mut s = self.clone();
        s.horizon = hours;
        s.demand.truncate(hours);
        if let Some(cap) = s.p_loss_cap.as_mut() {
            cap.truncate(hours);
        }
        for r in s.res_units.iter_mut() {
            r.cf.truncate(hours);
        }
        s
    }

    /// Every violated invariant; empty for a valid scenario.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        let mut bad = |path: String, msg: String| out.push(Diagnostic { path, message: msg });

        if self.schema_version != SCHEMA_VERSION {
            bad(
                "schema_version".into(),
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            );
        }
        if self.horizon == 0 {
            bad("horizon_h".into(), "must be at least 1".into());
        }

        let p = &self.params;
        for (name, v) in [
            ("f0_hz", p.f0),
            ("rocof_max_hz_per_s", p.rocof_max),
            ("delta_f_max_hz", p.delta_f_max),
            ("t_efr_s", p.t_efr),
            ("t_pfr_s", p.t_pfr),
        ] {
            if !(v.is_finite() && v > 0.0) {
                bad(format!("params.{name}"), format!("must be strictly positive, got {v}"));
            }
        }
        if p.t_efr >= p.t_pfr {
            bad("params.t_efr_s".into(), "EFR delivery time must be shorter than PFR's".into());
        }
        if p.delta_f_max >= p.f0 {
            bad("params.delta_f_max_hz".into(), "must be below the nominal frequency".into());
        }

        if self.demand.len() != self.horizon {
            bad(
                "demand_mw".into(),
                format!("length {} differs from horizon {}", self.demand.len(), self.horizon),
            );
        }
        for (t, &d) in self.demand.iter().enumerate() {
            if !(d.is_finite() && d > 0.0) {
                bad(format!("demand_mw[{t}]"), format!("demand must be positive, got {d}"));
            }
        }
        if let Some(cap) = &self.p_loss_cap {
            if cap.len() != self.horizon {
                bad("p_loss_floor_mw".into(), format!("length {} differs from horizon", cap.len()));
            }
            for (t, &c) in cap.iter().enumerate() {
                if !(c.is_finite() && c >= 0.0) {
                    bad(format!("p_loss_floor_mw[{t}]"), format!("must be >= 0, got {c}"));
                }
            }
        }

        let mut seen = std::collections::HashSet::new();
        for u in self.units() {
            let id = self.unit_id(u);
            if id.is_empty() {
                bad(format!("{u}.id"), "empty unit id".into());
            } else if !seen.insert(id.to_string()) {
                bad(format!("{u}.id"), format!("duplicate unit id {id:?}"));
            }
        }

        let nonneg = |path: String, v: f64, out: &mut Vec<Diagnostic>| {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Diagnostic {
                    path,
                    message: format!("must be finite and >= 0, got {v}"),
                });
            }
        };

        for (i, g) in self.generators.iter().enumerate() {
            let at = |f: &str| format!("generators[{i}].{f}");
            for (f, v) in [
                ("p_max_mw", g.p_max),
                ("p_msg_mw", g.p_msg),
                ("inertia_h_s", g.h),
                ("pfr_max_mw", g.pfr_max),
                ("offer_energy_gbp_per_mwh", g.lambda_e),
                ("offer_inertia_gbp_per_mws", g.lambda_h),
                ("offer_pfr_gbp_per_mw", g.lambda_pfr),
            ] {
                nonneg(at(f), v, &mut out);
            }
            if g.p_msg > g.p_max {
                out.push(Diagnostic::new(at("p_msg_mw"), "exceeds p_max_mw"));
            }
            if g.pfr_max > g.p_max {
                out.push(Diagnostic::new(at("pfr_max_mw"), "exceeds p_max_mw"));
            }
        }

        for (i, r) in self.res_units.iter().enumerate() {
            let at = |f: &str| format!("res_units[{i}].{f}");
            nonneg(at("p_max_mw"), r.p_max, &mut out);
            nonneg(at("offer_energy_gbp_per_mwh"), r.lambda_e, &mut out);
            if r.cf.len() != self.horizon {
                out.push(Diagnostic::new(
                    at("capacity_factor"),
                    format!("length {} differs from horizon {}", r.cf.len(), self.horizon),
                ));
            }
            for (t, &c) in r.cf.iter().enumerate() {
                if !(0.0..=1.0).contains(&c) {
                    out.push(Diagnostic::new(
                        format!("res_units[{i}].capacity_factor[{t}]"),
                        format!("must lie in [0, 1], got {c}"),
                    ));
                }
            }
        }

        for (i, s) in self.storage_units.iter().enumerate() {
            let at = |f: &str| format!("storage_units[{i}].{f}");
            for (f, v) in [
                ("p_max_mw", s.p_max),
                ("p_msg_mw", s.p_msg),
                ("e_min_mwh", s.e_min),
                ("e_max_mwh", s.e_max),
                ("e_ini_mwh", s.e_ini),
                ("e_end_mwh", s.e_end),
                ("inertia_h_s", s.h),
                ("pfr_max_mw", s.pfr_max),
                ("efr_max_mw", s.efr_max),
                ("offer_energy_gbp_per_mwh", s.lambda_e),
                ("offer_inertia_gbp_per_mws", s.lambda_h),
                ("offer_pfr_gbp_per_mw", s.lambda_pfr),
                ("offer_efr_gbp_per_mw", s.lambda_efr),
            ] {
                nonneg(at(f), v, &mut out);
            }
            for (f, v) in [("eta_cha", s.eta_cha), ("eta_dis", s.eta_dis)] {
                if !(v > 0.0 && v <= 1.0) {
                    out.push(Diagnostic::new(at(f), format!("efficiency must lie in (0, 1], got {v}")));
                }
            }
            if s.p_msg > s.p_max {
                out.push(Diagnostic::new(at("p_msg_mw"), "exceeds p_max_mw"));
            }
            if !(s.e_min <= s.e_ini && s.e_ini <= s.e_max) {
                out.push(Diagnostic::new(at("e_ini_mwh"), "must lie in [e_min_mwh, e_max_mwh]"));
            }
            if !(s.e_min <= s.e_end && s.e_end <= s.e_max) {
                out.push(Diagnostic::new(at("e_end_mwh"), "must lie in [e_min_mwh, e_max_mwh]"));
            }
            if s.pfr_max > s.p_max {
                out.push(Diagnostic::new(at("pfr_max_mw"), "exceeds p_max_mw"));
            }
            if s.efr_max > s.p_max {
                out.push(Diagnostic::new(at("efr_max_mw"), "exceeds p_max_mw"));
            }
            match s.kind {
                StorageKind::Bess => {
                    if s.pfr_max != 0.0 {
                        out.push(Diagnostic::new(at("pfr_max_mw"), "BESS provides EFR only"));
                    }
                    if s.h != 0.0 {
                        out.push(Diagnostic::new(at("inertia_h_s"), "BESS has no synchronous inertia"));
                    }
                }
                StorageKind::Phes => {
                    if s.efr_max != 0.0 {
                        out.push(Diagnostic::new(at("efr_max_mw"), "PHES provides PFR only"));
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Validation(d))
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
    s.validate()?;
    Ok(s)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scenario(&text)
}

pub fn scenario_to_string(s: &Scenario) -> String {
    serde_json::to_string_pretty(s).expect("scenario serialises")
}

pub fn write_scenario(s: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, scenario_to_string(s)).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::gb_template;

    fn tiny() -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: "tiny".into(),
            horizon: 2,
            params: SystemParams::gb(),
            demand: vec![60.0, 70.0],
            p_loss_cap: None,
            generators: vec![GeneratorSpec {
                id: "g1".into(),
                technology: "CCGT".into(),
                p_max: 100.0,
                p_msg: 0.0,
                h: 5.0,
                pfr_max: 30.0,
                lambda_e: 10.0,
                lambda_h: 1.0,
                lambda_pfr: 1.0,
                t_mut: 0,
                t_mdt: 0,
                t_st: 0,
                loss_eligible: true,
                initially_on: false,
            }],
            res_units: vec![],
            storage_units: vec![],
        }
    }

    #[test]
    fn valid_scenario_has_no_diagnostics() {
        assert!(tiny().diagnostics().is_empty());
        assert!(gb_template().diagnostics().is_empty());
    }

    #[test]
    fn efficiency_out_of_range_names_field() {
        let mut s = gb_template();
        let i = s.storage_units.len() - 1;
        s.storage_units[i].eta_cha = 1.3;
        let d = s.diagnostics();
        assert!(d.iter().any(|d| d.path.ends_with("eta_cha")), "{d:?}");
    }

    #[test]
    fn zero_demand_empty_fleet_rejected() {
        let mut s = tiny();
        s.generators.clear();
        s.demand = vec![0.0, 0.0];
        let d = s.diagnostics();
        assert!(d.iter().any(|d| d.path.starts_with("demand_mw")));
    }

    #[test]
    fn every_violation_is_reported() {
        let mut s = tiny();
        s.generators[0].p_msg = 200.0;
        s.generators[0].pfr_max = 150.0;
        s.demand.push(1.0);
        let d = s.diagnostics();
        let paths: Vec<_> = d.iter().map(|d| d.path.as_str()).collect();
        assert!(paths.contains(&"generators[0].p_msg_mw"));
        assert!(paths.contains(&"generators[0].pfr_max_mw"));
        assert!(paths.contains(&"demand_mw"));
    }

    #[test]
    fn storage_service_mapping_enforced() {
        let mut s = gb_template();
        let bess = s.storage_units.iter().position(|u| u.kind == StorageKind::Bess).unwrap();
        s.storage_units[bess].pfr_max = 1.0;
        assert!(s
            .diagnostics()
            .iter()
            .any(|d| d.path == format!("storage_units[{bess}].pfr_max_mw")));
    }

    #[test]
    fn malformed_document_is_parse_error() {
        assert!(matches!(parse_scenario("{ not json"), Err(ScenarioError::Parse(_))));
        assert!(matches!(
            parse_scenario(r#"{"schema_version": 1}"#),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn truncation_keeps_series_consistent() {
        let s = gb_template().truncated(5);
        assert_eq!(s.horizon, 5);
        assert!(s.diagnostics().is_empty());
    }
}
