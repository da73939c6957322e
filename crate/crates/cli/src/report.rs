//! Tabular and JSON artifacts of a run. Every CSV has a one-line header,
//! a fixed column order and a leading `run_id` column.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use fcas_core::allocation::AllocationSeries;
use fcas_core::pricing::{AsPrices, StandAloneCosts};
use fcas_core::scenario::Scenario;
use fcas_core::uc::{CommitmentSchedule, DispatchSolution};
use fcas_core::UnitRef;

use crate::exit::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct CommitmentRow<'a> {
    run_id: &'a str,
    unit: &'a str,
    hour: usize,
    online: Option<u8>,
    start: Option<u8>,
    shutdown: Option<u8>,
    charging: Option<u8>,
    discharging: Option<u8>,
}

#[derive(Serialize)]
struct DispatchRow<'a> {
    run_id: &'a str,
    unit: &'a str,
    technology: &'a str,
    hour: usize,
    output_mw: f64,
    charge_mw: f64,
    energy_mwh: Option<f64>,
    pfr_mw: f64,
    efr_mw: f64,
}

#[derive(Serialize)]
struct SystemRow<'a> {
    run_id: &'a str,
    hour: usize,
    demand_mw: f64,
    inertia_mws: f64,
    pfr_mw: f64,
    efr_mw: f64,
    loss_mw: f64,
}

#[derive(Serialize)]
struct PriceRow<'a> {
    run_id: &'a str,
    hour: usize,
    lambda_e: f64,
    lambda_h: f64,
    lambda_pfr: f64,
    lambda_efr: f64,
    omega_loss: f64,
}

#[derive(Serialize)]
struct StandAloneRow<'a> {
    run_id: &'a str,
    hour: usize,
    unit: &'a str,
    technology: &'a str,
    dispatch_mw: f64,
    omega: f64,
}

#[derive(Serialize)]
struct ChargeRow<'a> {
    run_id: &'a str,
    rule: &'a str,
    hour: usize,
    unit: &'a str,
    technology: &'a str,
    standalone: f64,
    charge: f64,
}

#[derive(Serialize)]
struct TechnologyRow<'a> {
    run_id: &'a str,
    rule: &'a str,
    technology: &'a str,
    charge: f64,
}

fn bit(v: f64) -> Option<u8> {
    Some(u8::from(v > 0.5))
}

/// Writes artifacts into one directory and keeps the inventory.
pub struct Writer {
    dir: PathBuf,
    run_id: String,
    files: Vec<OutputFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

impl Writer {
    pub fn new(dir: &Path, run_id: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), run_id: run_id.into(), files: Vec::new() })
    }

    pub fn files(&self) -> &[OutputFile] {
        &self.files
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, &bytes).map_err(|e| CliError::io(&path, e))?;
        self.files.retain(|f| f.name != name);
        self.files.push(OutputFile { name: name.into(), sha256: sha256_hex(&bytes), bytes: bytes.len() });
        Ok(())
    }

    fn csv<R: Serialize>(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::io(&self.dir.join(name), e))?;
        for r in rows {
            w.serialize(r).map_err(|e| CliError::io(&self.dir.join(name), e))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::io(&self.dir.join(name), e.error().to_string()))?;
        self.put(name, bytes)
    }

    /// Pretty JSON with `run_id` as the first field.
    pub fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<(), CliError> {
        let mut doc = serde_json::Map::new();
        doc.insert("run_id".into(), self.run_id.clone().into());
        match serde_json::to_value(body).map_err(|e| CliError::io(&self.dir.join(name), e))? {
            serde_json::Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&doc).map_err(|e| CliError::io(&self.dir.join(name), e))?;
        bytes.push(b'\n');
        self.put(name, bytes)
    }

    pub fn commitment(&mut self, s: &Scenario, c: &CommitmentSchedule) -> Result<(), CliError> {
        let id = self.run_id.clone();
        let mut rows = Vec::new();
        for g in &c.generators {
            for t in 0..s.horizon {
                rows.push(CommitmentRow {
                    run_id: &id,
                    unit: &g.id,
                    hour: t,
                    online: bit(g.y[t]),
                    start: bit(g.sg[t]),
                    shutdown: bit(g.sd[t]),
                    charging: None,
                    discharging: None,
                });
            }
        }
        for st in &c.storage {
            for t in 0..s.horizon {
                rows.push(CommitmentRow {
                    run_id: &id,
                    unit: &st.id,
                    hour: t,
                    online: None,
                    start: None,
                    shutdown: None,
                    charging: bit(st.cha[t]),
                    discharging: bit(st.dis[t]),
                });
            }
        }
        self.csv("commitment.csv", &["run_id", "unit", "hour", "online", "start", "shutdown", "charging", "discharging"], rows)
    }

    pub fn dispatch(&mut self, s: &Scenario, d: &DispatchSolution) -> Result<(), CliError> {
        let id = self.run_id.clone();
        let mut rows = Vec::new();
        for u in s.units() {
            let tech = s.technology(u);
            for t in 0..s.horizon {
                let mut row = DispatchRow {
                    run_id: &id,
                    unit: s.unit_id(u),
                    technology: tech,
                    hour: t,
                    output_mw: d.power(u, t),
                    charge_mw: 0.0,
                    energy_mwh: None,
                    pfr_mw: 0.0,
                    efr_mw: 0.0,
                };
                match u {
                    UnitRef::Generator(g) => row.pfr_mw = d.generators[g].pfr[t],
                    UnitRef::Res(_) => {}
                    UnitRef::Storage(k) => {
                        let sd = &d.storage[k];
                        row.charge_mw = sd.cha[t];
                        row.energy_mwh = Some(sd.e[t]);
                        row.pfr_mw = sd.pfr[t];
                        row.efr_mw = sd.efr[t];
                    }
                }
                rows.push(row);
            }
        }
        self.csv("dispatch.csv", &["run_id", "unit", "technology", "hour", "output_mw", "charge_mw", "energy_mwh", "pfr_mw", "efr_mw"], rows)?;
        let system = (0..s.horizon).map(|t| SystemRow {
            run_id: &id,
            hour: t,
            demand_mw: s.demand[t],
            inertia_mws: d.h[t],
            pfr_mw: d.pfr[t],
            efr_mw: d.efr[t],
            loss_mw: d.p_loss[t],
        });
        self.csv("system.csv", &["run_id", "hour", "demand_mw", "inertia_mws", "pfr_mw", "efr_mw", "loss_mw"], system)
    }

    pub fn prices(&mut self, p: &AsPrices) -> Result<(), CliError> {
        let id = self.run_id.clone();
        let rows = p.hours.iter().enumerate().map(|(t, h)| PriceRow {
            run_id: &id,
            hour: t,
            lambda_e: h.lambda_e,
            lambda_h: h.lambda_h,
            lambda_pfr: h.lambda_pfr,
            lambda_efr: h.lambda_efr,
            omega_loss: h.omega_loss,
        });
        self.csv("prices.csv", &["run_id", "hour", "lambda_e", "lambda_h", "lambda_pfr", "lambda_efr", "omega_loss"], rows)
    }

    pub fn standalone(&mut self, sa: &StandAloneCosts) -> Result<(), CliError> {
        let id = self.run_id.clone();
        let rows = sa.hours.iter().enumerate().flat_map(|(t, entries)| {
            let id = &id;
            entries.iter().map(move |e| StandAloneRow {
                run_id: id,
                hour: t,
                unit: &e.id,
                technology: &e.technology,
                dispatch_mw: e.dispatch,
                omega: e.omega,
            })
        });
        self.csv("standalone.csv", &["run_id", "hour", "unit", "technology", "dispatch_mw", "omega"], rows)
    }

    /// `allocation_<rule>.csv` per unit and hour, `allocation_<rule>_technology.csv` per technology.
    pub fn allocation(&mut self, sa: &StandAloneCosts, series: &AllocationSeries) -> Result<(), CliError> {
        let id = self.run_id.clone();
        let rule = series.rule.as_str();
        let mut rows = Vec::new();
        for (t, entries) in sa.hours.iter().enumerate() {
            let alloc = &series.hours[t];
            for e in entries {
                rows.push(ChargeRow {
                    run_id: &id,
                    rule,
                    hour: t,
                    unit: &e.id,
                    technology: &e.technology,
                    standalone: e.omega,
                    charge: alloc.get(&e.id).unwrap_or(0.0),
                });
            }
        }
        self.csv(&format!("allocation_{rule}.csv"), &["run_id", "rule", "hour", "unit", "technology", "standalone", "charge"], rows)?;
        let tech = series.technologies.iter().map(|(name, v)| TechnologyRow { run_id: &id, rule, technology: name, charge: *v });
        self.csv(&format!("allocation_{rule}_technology.csv"), &["run_id", "rule", "technology", "charge"], tech)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageStatus {
    pub stage: String,
    /// `ok`, `warning` or `failed`.
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub mip_gap: f64,
    pub integrality: f64,
    pub cone: f64,
    pub price_check: f64,
    pub audit: f64,
    pub zero_snap: f64,
    pub type_grouping: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub tool_version: String,
    pub scenario_file: String,
    pub scenario_sha256: String,
    pub hours: usize,
    pub loss_rule: String,
    pub rules: Vec<String>,
    pub node_limit: usize,
    pub tolerances: Tolerances,
    pub started_at: String,
    pub finished_at: String,
    /// `ok` when every stage succeeded, else `failed`.
    pub status: String,
    pub stages: Vec<StageStatus>,
    pub files: Vec<OutputFile>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::io(&path, e))
    }

    /// Checks that every inventoried file exists with the recorded digest
    /// and mentions the run id. Header-only tables are exempt from the
    /// run id check.
    pub fn verify(&self, dir: &Path) -> Result<(), String> {
        for f in &self.files {
            let bytes = std::fs::read(dir.join(&f.name)).map_err(|e| format!("{}: {e}", f.name))?;
            if sha256_hex(&bytes) != f.sha256 {
                return Err(format!("{}: digest mismatch", f.name));
            }
            let text = String::from_utf8_lossy(&bytes);
            if text.lines().count() > 1 && !text.contains(&self.run_id) {
                return Err(format!("{}: run id missing", f.name));
            }
        }
        Ok(())
    }
}

pub fn write_manifest(dir: &Path, m: &RunManifest) -> Result<(), CliError> {
    let path = dir.join(MANIFEST_FILE);
    let mut bytes = serde_json::to_vec_pretty(m).map_err(|e| CliError::io(&path, e))?;
    bytes.push(b'\n');
    std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
}
