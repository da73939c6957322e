//! Primal and dual results of a clearing run, keyed by unit and hour.

use serde::{Deserialize, Serialize};

use super::model::{RowKind, RowTag, UcModel};
use crate::scenario::UnitRef;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenCommitment {
    pub id: String,
    pub y: Vec<f64>,
    pub st: Vec<f64>,
    pub sg: Vec<f64>,
    pub sd: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StorCommitment {
    pub id: String,
    pub cha: Vec<f64>,
    pub dis: Vec<f64>,
}

/// Commitment decisions; integral after branch and bound, fractional when
/// read from a relaxation.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CommitmentSchedule {
    pub generators: Vec<GenCommitment>,
    pub storage: Vec<StorCommitment>,
}

impl CommitmentSchedule {
    /// Largest distance of any decision from {0, 1}.
    pub fn max_fractionality(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut see = |v: &[f64]| {
            for x in v {
                worst = worst.max(x.min(1.0 - x).max(0.0));
            }
        };
        for g in &self.generators {
            see(&g.y);
            see(&g.st);
            see(&g.sg);
            see(&g.sd);
        }
        for s in &self.storage {
            see(&s.cha);
            see(&s.dis);
        }
        worst
    }

    /// Whether the unit counts as dispatched at hour `t` given its power.
    pub fn dispatched(&self, u: UnitRef, t: usize, power: f64) -> bool {
        match u {
            UnitRef::Generator(g) => self.generators[g].y[t] > 0.5,
            UnitRef::Res(_) => power > DISPATCH_TOL,
            UnitRef::Storage(s) => self.storage[s].dis[t] > 0.5,
        }
    }
}

/// Power below this (MW) counts as not dispatched.
pub const DISPATCH_TOL: f64 = 1e-6;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenDispatch {
    pub id: String,
    pub p: Vec<f64>,
    pub pfr: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResDispatch {
    pub id: String,
    pub p: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StorDispatch {
    pub id: String,
    pub cha: Vec<f64>,
    pub dis: Vec<f64>,
    /// Energy at the end of each hour (MWh).
    pub e: Vec<f64>,
    pub e_initial: f64,
    pub pfr: Vec<f64>,
    pub efr: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub generators: Vec<GenDispatch>,
    pub res_units: Vec<ResDispatch>,
    pub storage: Vec<StorDispatch>,
    /// Aggregate inertia (MWs).
    pub h: Vec<f64>,
    pub pfr: Vec<f64>,
    pub efr: Vec<f64>,
    pub p_loss: Vec<f64>,
    pub objective: f64,
    pub commitment: CommitmentSchedule,
}

impl DispatchSolution {
    pub fn power(&self, u: UnitRef, t: usize) -> f64 {
        match u {
            UnitRef::Generator(g) => self.generators[g].p[t],
            UnitRef::Res(r) => self.res_units[r].p[t],
            UnitRef::Storage(s) => self.storage[s].dis[t],
        }
    }
}

/// System-wide multipliers of one hour.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HourDuals {
    pub lambda_e: f64,
    pub lambda_h: f64,
    pub lambda_pfr: f64,
    pub lambda_efr: f64,
    pub mu_rocof: f64,
    pub mu_nadir_1: f64,
    pub mu_nadir_2: f64,
    pub mu_nadir_3: f64,
    pub mu_qss: f64,
    /// Sum of the multipliers of every lower bound on `P^Loss_t`.
    pub omega_loss: f64,
    /// Multiplier of the loss-parameter row alone.
    pub omega_param: f64,
    /// Right-hand side of the loss-parameter row (0 when absent).
    pub loss_rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenDuals {
    pub id: String,
    pub psi_max_y: Vec<f64>,
    pub psi_max_st: Vec<f64>,
    pub psi_max_sg: Vec<f64>,
    pub psi_max_sd: Vec<f64>,
    pub psi_mdt: Vec<f64>,
    pub psi_mut: Vec<f64>,
    pub transition: Vec<f64>,
    pub psi_min_p: Vec<f64>,
    pub psi_max_p: Vec<f64>,
    pub psi_pfr_cap: Vec<f64>,
    pub psi_pfr_margin: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResDuals {
    pub id: String,
    pub psi_cf: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StorDuals {
    pub id: String,
    pub psi_min_e: Vec<f64>,
    pub psi_max_e: Vec<f64>,
    pub psi_min_e0: f64,
    pub psi_max_e0: f64,
    pub psi_max_ycha: Vec<f64>,
    pub psi_max_ydis: Vec<f64>,
    pub psi_dis_cha: Vec<f64>,
    pub psi_ini: f64,
    pub psi_end: f64,
    pub dynamics: Vec<f64>,
}

/// A constraint with its right-hand side and raw multiplier `y`
/// (`y <= 0` on `<=` rows, `y >= 0` on `>=` rows).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDual {
    pub kind: RowKind,
    pub unit: Option<UnitRef>,
    pub hour: usize,
    pub rhs: f64,
    pub y: f64,
}

/// Multipliers of a relaxed solve. Inequality multipliers are reported with
/// nonnegative sign; `rows` keeps the raw registry for audits.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DualSolution {
    pub hours: Vec<HourDuals>,
    pub generators: Vec<GenDuals>,
    pub res_units: Vec<ResDuals>,
    pub storage: Vec<StorDuals>,
    pub rows: Vec<RowDual>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub iterations: usize,
    pub cut_rounds: usize,
    pub cuts: usize,
    pub mip_gap: f64,
    pub duality_gap: f64,
    /// Largest `|y_i * slack_i|` over rows, relative to `max(1, |objective|)`.
    pub cs_residual: f64,
    /// Largest nadir-cone violation `||a|| - c` left in the solution.
    pub cone_violation: f64,
    pub gap_reached: bool,
    pub wall_time_s: f64,
}

fn pick(x: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&j| x[j]).collect()
}

/// Primal quantities from an LP point of `model`.
pub fn extract_primal(model: &UcModel, x: &[f64]) -> DispatchSolution {
    let sc = &model.scenario;
    let generators = sc
        .generators
        .iter()
        .zip(&model.gens)
        .map(|(g, v)| GenDispatch {
            id: g.id.clone(),
            p: pick(x, &v.p),
            pfr: pick(x, &v.pfr),
        })
        .collect();
    let res_units = sc
        .res_units
        .iter()
        .zip(&model.res)
        .map(|(r, v)| ResDispatch { id: r.id.clone(), p: pick(x, &v.p) })
        .collect();
    let storage = sc
        .storage_units
        .iter()
        .zip(&model.stor)
        .map(|(s, v)| StorDispatch {
            id: s.id.clone(),
            cha: pick(x, &v.cha),
            dis: pick(x, &v.dis),
            e: pick(x, &v.e),
            e_initial: x[v.e0],
            pfr: pick(x, &v.pfr),
            efr: pick(x, &v.efr),
        })
        .collect();
    let commitment = CommitmentSchedule {
        generators: sc
            .generators
            .iter()
            .zip(&model.gens)
            .map(|(g, v)| GenCommitment {
                id: g.id.clone(),
                y: pick(x, &v.y),
                st: pick(x, &v.st),
                sg: pick(x, &v.sg),
                sd: pick(x, &v.sd),
            })
            .collect(),
        storage: sc
            .storage_units
            .iter()
            .zip(&model.stor)
            .map(|(s, v)| StorCommitment {
                id: s.id.clone(),
                cha: pick(x, &v.ycha),
                dis: pick(x, &v.ydis),
            })
            .collect(),
    };
    let hv = &model.hours;
    DispatchSolution {
        generators,
        res_units,
        storage,
        h: hv.iter().map(|h| x[h.h]).collect(),
        pfr: hv.iter().map(|h| x[h.pfr]).collect(),
        efr: hv.iter().map(|h| x[h.efr]).collect(),
        p_loss: hv.iter().map(|h| x[h.loss]).collect(),
        objective: model.lp.objective(x),
        commitment,
    }
}

/// Multipliers from an optimal LP of `model`; `tags` covers every row of the
/// LP including separated cuts.
pub fn extract_duals(model: &UcModel, tags: &[RowTag], rhs: &[f64], y: &[f64], d: &[f64]) -> DualSolution {
    let sc = &model.scenario;
    let nt = sc.horizon;
    let mut hours = vec![HourDuals::default(); nt];
    let mut generators: Vec<GenDuals> = sc
        .generators
        .iter()
        .zip(&model.gens)
        .map(|(g, v)| GenDuals {
            id: g.id.clone(),
            psi_max_y: v.y.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_max_st: v.st.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_max_sg: v.sg.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_max_sd: v.sd.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_mdt: vec![0.0; nt],
            psi_mut: vec![0.0; nt],
            transition: vec![0.0; nt],
            psi_min_p: vec![0.0; nt],
            psi_max_p: vec![0.0; nt],
            psi_pfr_cap: vec![0.0; nt],
            psi_pfr_margin: vec![0.0; nt],
        })
        .collect();
    let res_units = sc
        .res_units
        .iter()
        .zip(&model.res)
        .map(|(r, v)| ResDuals {
            id: r.id.clone(),
            psi_cf: v.p.iter().map(|&j| (-d[j]).max(0.0)).collect(),
        })
        .collect();
    let mut storage: Vec<StorDuals> = sc
        .storage_units
        .iter()
        .zip(&model.stor)
        .map(|(s, v)| StorDuals {
            id: s.id.clone(),
            psi_min_e: v.e.iter().map(|&j| d[j].max(0.0)).collect(),
            psi_max_e: v.e.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_min_e0: d[v.e0].max(0.0),
            psi_max_e0: (-d[v.e0]).max(0.0),
            psi_max_ycha: v.ycha.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_max_ydis: v.ydis.iter().map(|&j| (-d[j]).max(0.0)).collect(),
            psi_dis_cha: vec![0.0; nt],
            psi_ini: 0.0,
            psi_end: 0.0,
            dynamics: vec![0.0; nt],
        })
        .collect();

    let mut rows = Vec::with_capacity(tags.len());
    for (i, tag) in tags.iter().enumerate() {
        let yi = y[i];
        let t = tag.hour;
        let hd = &mut hours[t];
        use RowKind::*;
        match (tag.kind, tag.unit) {
            (Balance, _) => hd.lambda_e = yi,
            (AggInertia, _) => hd.lambda_h = yi,
            (AggPfr, _) => hd.lambda_pfr = yi,
            (AggEfr, _) => hd.lambda_efr = yi,
            (Rocof, _) => hd.mu_rocof = yi,
            (Qss, _) => hd.mu_qss = yi,
            (LossParam, _) => {
                hd.omega_param = yi;
                hd.loss_rhs = rhs[i];
                hd.omega_loss += yi;
            }
            (LossUnit, _) => hd.omega_loss += yi,
            (NadirCut, _) => {
                let [z1, z2] = tag.dir.expect("cut direction");
                hd.mu_nadir_1 += yi * z1;
                hd.mu_nadir_2 += yi * z2;
                hd.mu_nadir_3 += yi;
            }
            (kind, Some(UnitRef::Generator(g))) => {
                let gd = &mut generators[g];
                match kind {
                    Transition => gd.transition[t] = yi,
                    MinDown => gd.psi_mdt[t] = -yi,
                    MinUp => gd.psi_mut[t] = -yi,
                    GenMin => gd.psi_min_p[t] = yi,
                    GenMax => gd.psi_max_p[t] = -yi,
                    GenPfrCap => gd.psi_pfr_cap[t] = -yi,
                    GenPfrMargin => gd.psi_pfr_margin[t] = -yi,
                    _ => {}
                }
            }
            (kind, Some(UnitRef::Storage(s))) => {
                let sd = &mut storage[s];
                match kind {
                    StorInit => sd.psi_ini = -yi,
                    StorEnd => sd.psi_end = yi,
                    StorMode => sd.psi_dis_cha[t] = -yi,
                    StorDyn => sd.dynamics[t] = yi,
                    _ => {}
                }
            }
            _ => {}
        }
        rows.push(RowDual {
            kind: tag.kind,
            unit: tag.unit,
            hour: t,
            rhs: rhs[i],
            y: yi,
        });
    }

    DualSolution {
        hours,
        generators,
        res_units,
        storage,
        rows,
    }
}
