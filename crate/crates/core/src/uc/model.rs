//! Frequency-secured unit-commitment model.
//!
//! Every constraint is registered with a [`RowTag`] so that duals can be read
//! back by kind, unit and hour. Commitment variables always carry `[0, 1]`
//! bounds in the LP; the `relaxed` flag only decides whether branch and bound
//! has to make them integral.

use std::f64::consts::PI;

use fcas_lp::{Problem, Sense};
use serde::{Deserialize, Serialize};

use super::cone::nadir_cut;
use crate::error::{ConstraintClass, UcError};
use crate::scenario::{Scenario, UnitRef};

/// How the credible-loss variable `P^Loss_t` is bounded from below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum LossRule {
    /// `P^Loss_t >= P_{i,t}` for every loss-eligible unit, plus the scenario
    /// floor when one is given.
    EndogenousMax,
    /// `P^Loss_t >= value_t` only.
    FixedProfile(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowKind {
    Balance,
    Transition,
    StartLead,
    MinDown,
    MinUp,
    GenMin,
    GenMax,
    GenPfrCap,
    GenPfrMargin,
    StorInit,
    StorDyn,
    StorEnd,
    ChaMin,
    ChaMax,
    DisMin,
    DisMax,
    StorPfrCap,
    StorPfrMargin,
    StorEfrCap,
    StorEfrMargin,
    StorMode,
    AggInertia,
    AggPfr,
    AggEfr,
    LossParam,
    LossUnit,
    Rocof,
    Qss,
    NadirCut,
}

impl RowKind {
    pub fn class(self) -> ConstraintClass {
        use RowKind::*;
        match self {
            Balance => ConstraintClass::Balance,
            Transition | StartLead | MinDown | MinUp | GenMin | GenMax | GenPfrCap | GenPfrMargin => {
                ConstraintClass::Thermal
            }
            StorInit | StorDyn | StorEnd | ChaMin | ChaMax | DisMin | DisMax | StorPfrCap | StorPfrMargin
            | StorEfrCap | StorEfrMargin | StorMode => ConstraintClass::Storage,
            AggInertia | AggPfr | AggEfr => ConstraintClass::Aggregation,
            LossParam | LossUnit => ConstraintClass::MaxLoss,
            Rocof => ConstraintClass::Rocof,
            Qss => ConstraintClass::Qss,
            NadirCut => ConstraintClass::Nadir,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowTag {
    pub kind: RowKind,
    pub unit: Option<UnitRef>,
    pub hour: usize,
    /// Cone direction for nadir cuts.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dir: Option<[f64; 2]>,
}

#[derive(Clone, Debug, Default)]
pub struct GenVars {
    pub p: Vec<usize>,
    pub y: Vec<usize>,
    pub st: Vec<usize>,
    pub sg: Vec<usize>,
    pub sd: Vec<usize>,
    pub pfr: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct ResVars {
    pub p: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct StorVars {
    pub cha: Vec<usize>,
    pub dis: Vec<usize>,
    pub ycha: Vec<usize>,
    pub ydis: Vec<usize>,
    /// Stored energy at the end of each hour.
    pub e: Vec<usize>,
    /// Stored energy before the first hour.
    pub e0: usize,
    pub pfr: Vec<usize>,
    pub efr: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct HourVars {
    pub h: usize,
    pub pfr: usize,
    pub efr: usize,
    pub loss: usize,
}

/// Commitment variable with its owner, used for branching order.
#[derive(Clone, Copy, Debug)]
pub struct Binary {
    pub var: usize,
    pub unit: UnitRef,
    pub hour: usize,
}

#[derive(Clone, Debug)]
pub struct UcModel {
    pub scenario: Scenario,
    pub loss_rule: LossRule,
    pub relaxed: bool,
    pub lp: Problem,
    pub tags: Vec<RowTag>,
    pub gens: Vec<GenVars>,
    pub res: Vec<ResVars>,
    pub stor: Vec<StorVars>,
    pub hours: Vec<HourVars>,
    pub binaries: Vec<Binary>,
}

/// Directions of the nadir cuts present before any separation round.
pub const INITIAL_CUTS: usize = 8;

impl UcModel {
    pub fn horizon(&self) -> usize {
        self.scenario.horizon
    }

    pub fn rows_of(&self, kind: RowKind) -> impl Iterator<Item = usize> + '_ {
        self.tags.iter().enumerate().filter(move |(_, t)| t.kind == kind).map(|(i, _)| i)
    }

    pub fn count(&self, kind: RowKind) -> usize {
        self.rows_of(kind).count()
    }

    /// Copy with the integrality requirement dropped.
    pub fn relax(&self) -> UcModel {
        UcModel {
            relaxed: true,
            ..self.clone()
        }
    }

    /// Loss-eligible power variable of a unit at hour `t`.
    pub fn loss_var(&self, u: UnitRef, t: usize) -> usize {
        match u {
            UnitRef::Generator(g) => self.gens[g].p[t],
            UnitRef::Res(r) => self.res[r].p[t],
            UnitRef::Storage(s) => self.stor[s].dis[t],
        }
    }
}

struct Builder {
    lp: Problem,
    tags: Vec<RowTag>,
}

impl Builder {
    fn row(&mut self, kind: RowKind, unit: Option<UnitRef>, hour: usize, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.tags.push(RowTag { kind, unit, hour, dir: None });
        self.lp.add_row(coeffs, sense, rhs)
    }

    fn vars(&mut self, n: usize, cost: f64, lo: f64, hi: f64) -> Vec<usize> {
        (0..n).map(|_| self.lp.add_var(cost, lo, hi)).collect()
    }
}

/// Builds the clearing model for `scenario`.
pub fn build_uc(scenario: &Scenario, loss_rule: LossRule, relaxed: bool) -> Result<UcModel, UcError> {
    let diags = scenario.diagnostics();
    if !diags.is_empty() {
        let msg = diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ");
        return Err(UcError::Build(format!("invalid scenario: {msg}")));
    }
    if scenario.num_units() == 0 {
        return Err(UcError::Build("empty fleet".into()));
    }
    let nt = scenario.horizon;
    if let LossRule::FixedProfile(v) = &loss_rule {
        if v.len() != nt {
            return Err(UcError::Build(format!("loss profile has {} hours, horizon is {nt}", v.len())));
        }
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(UcError::Build("loss profile must be finite and nonnegative".into()));
        }
    }
    let prm = &scenario.params;
    let mut b = Builder { lp: Problem::new(), tags: Vec::new() };
    let mut binaries = Vec::new();
    let inf = f64::INFINITY;

    let hours: Vec<HourVars> = (0..nt)
        .map(|_| HourVars {
            h: b.lp.add_var(0.0, -inf, inf),
            pfr: b.lp.add_var(0.0, -inf, inf),
            efr: b.lp.add_var(0.0, -inf, inf),
            loss: b.lp.add_var(0.0, -inf, inf),
        })
        .collect();

    let mut gens = Vec::with_capacity(scenario.generators.len());
    for (gi, g) in scenario.generators.iter().enumerate() {
        let u = UnitRef::Generator(gi);
        let v = GenVars {
            p: b.vars(nt, g.lambda_e, 0.0, inf),
            y: b.vars(nt, g.lambda_h * g.p_max * g.h, 0.0, 1.0),
            st: b.vars(nt, 0.0, 0.0, 1.0),
            sg: b.vars(nt, 0.0, 0.0, 1.0),
            sd: b.vars(nt, 0.0, 0.0, 1.0),
            pfr: b.vars(nt, g.lambda_pfr, 0.0, if g.pfr_max > 0.0 { inf } else { 0.0 }),
        };
        for t in 0..nt {
            for var in [v.y[t], v.st[t], v.sg[t], v.sd[t]] {
                binaries.push(Binary { var, unit: u, hour: t });
            }
        }
        let y_init = if g.initially_on { 1.0 } else { 0.0 };
        for t in 0..nt {
            // y_t - y_{t-1} - sg_t + sd_t = 0
            let mut c = vec![(v.y[t], 1.0), (v.sg[t], -1.0), (v.sd[t], 1.0)];
            let mut rhs = 0.0;
            if t > 0 {
                c.push((v.y[t - 1], -1.0));
            } else {
                rhs = y_init;
            }
            b.row(RowKind::Transition, Some(u), t, c, Sense::Eq, rhs);

            let lead = g.t_st as usize;
            let c = if t >= lead {
                vec![(v.sg[t], 1.0), (v.st[t - lead], -1.0)]
            } else {
                vec![(v.sg[t], 1.0)]
            };
            b.row(RowKind::StartLead, Some(u), t, c, Sense::Eq, 0.0);

            // st_t + y_{t-1} + sum of recent shut-downs <= 1
            let mut c = vec![(v.st[t], 1.0)];
            let mut rhs = 1.0;
            if t > 0 {
                c.push((v.y[t - 1], 1.0));
            } else {
                rhs -= y_init;
            }
            let from = (t + 1).saturating_sub(g.t_mdt as usize);
            c.extend((from..t).map(|j| (v.sd[j], 1.0)));
            b.row(RowKind::MinDown, Some(u), t, c, Sense::Le, rhs);

            // sd_t - y_{t-1} + sum of recent start-ups <= 0
            let mut c = vec![(v.sd[t], 1.0)];
            let mut rhs = 0.0;
            if t > 0 {
                c.push((v.y[t - 1], -1.0));
            } else {
                rhs = y_init;
            }
            let from = (t + 1).saturating_sub(g.t_mut as usize);
            c.extend((from..t).map(|j| (v.sg[j], 1.0)));
            b.row(RowKind::MinUp, Some(u), t, c, Sense::Le, rhs);

            if g.p_msg > 0.0 {
                b.row(RowKind::GenMin, Some(u), t, vec![(v.p[t], 1.0), (v.y[t], -g.p_msg)], Sense::Ge, 0.0);
            }
            b.row(RowKind::GenMax, Some(u), t, vec![(v.p[t], 1.0), (v.y[t], -g.p_max)], Sense::Le, 0.0);
            if g.pfr_max > 0.0 {
                b.row(RowKind::GenPfrCap, Some(u), t, vec![(v.pfr[t], 1.0), (v.y[t], -g.pfr_max)], Sense::Le, 0.0);
                b.row(
                    RowKind::GenPfrMargin,
                    Some(u),
                    t,
                    vec![(v.pfr[t], 1.0), (v.p[t], 1.0), (v.y[t], -g.p_max)],
                    Sense::Le,
                    0.0,
                );
            }
        }
        gens.push(v);
    }

    let res: Vec<ResVars> = scenario
        .res_units
        .iter()
        .map(|r| ResVars {
            p: (0..nt).map(|t| b.lp.add_var(r.lambda_e, 0.0, r.cf[t] * r.p_max)).collect(),
        })
        .collect();

    let mut stor = Vec::with_capacity(scenario.storage_units.len());
    for (si, s) in scenario.storage_units.iter().enumerate() {
        let u = UnitRef::Storage(si);
        let inertia_cost = s.lambda_h * s.p_max * s.h;
        let v = StorVars {
            cha: b.vars(nt, 0.0, 0.0, inf),
            dis: b.vars(nt, s.lambda_e, 0.0, inf),
            ycha: b.vars(nt, inertia_cost, 0.0, 1.0),
            ydis: b.vars(nt, inertia_cost, 0.0, 1.0),
            e: b.vars(nt, 0.0, s.e_min, s.e_max),
            e0: b.lp.add_var(0.0, s.e_min, s.e_max),
            pfr: b.vars(nt, s.lambda_pfr, 0.0, if s.pfr_max > 0.0 { inf } else { 0.0 }),
            efr: b.vars(nt, s.lambda_efr, 0.0, if s.efr_max > 0.0 { inf } else { 0.0 }),
        };
        for t in 0..nt {
            binaries.push(Binary { var: v.ycha[t], unit: u, hour: t });
            binaries.push(Binary { var: v.ydis[t], unit: u, hour: t });
        }
        b.row(RowKind::StorInit, Some(u), 0, vec![(v.e0, 1.0)], Sense::Le, s.e_ini);
        for t in 0..nt {
            let prev = if t == 0 { v.e0 } else { v.e[t - 1] };
            b.row(
                RowKind::StorDyn,
                Some(u),
                t,
                vec![(v.e[t], 1.0), (prev, -1.0), (v.cha[t], -s.eta_cha), (v.dis[t], 1.0 / s.eta_dis)],
                Sense::Eq,
                0.0,
            );
            if s.p_msg > 0.0 {
                b.row(RowKind::ChaMin, Some(u), t, vec![(v.cha[t], 1.0), (v.ycha[t], -s.p_msg)], Sense::Ge, 0.0);
            }
            b.row(RowKind::ChaMax, Some(u), t, vec![(v.cha[t], 1.0), (v.ycha[t], -s.p_max)], Sense::Le, 0.0);
            if s.p_msg > 0.0 {
                b.row(RowKind::DisMin, Some(u), t, vec![(v.dis[t], 1.0), (v.ydis[t], -s.p_msg)], Sense::Ge, 0.0);
            }
            b.row(RowKind::DisMax, Some(u), t, vec![(v.dis[t], 1.0), (v.ydis[t], -s.p_max)], Sense::Le, 0.0);
            if s.pfr_max > 0.0 {
                b.row(
                    RowKind::StorPfrCap,
                    Some(u),
                    t,
                    vec![(v.pfr[t], 1.0), (v.ydis[t], -s.pfr_max), (v.ycha[t], -s.pfr_max)],
                    Sense::Le,
                    0.0,
                );
                b.row(
                    RowKind::StorPfrMargin,
                    Some(u),
                    t,
                    vec![(v.pfr[t], 1.0), (v.dis[t], 1.0), (v.cha[t], -1.0), (v.ydis[t], -s.p_max)],
                    Sense::Le,
                    0.0,
                );
            }
            if s.efr_max > 0.0 {
                b.row(
                    RowKind::StorEfrCap,
                    Some(u),
                    t,
                    vec![(v.efr[t], 1.0), (v.ydis[t], -s.efr_max), (v.ycha[t], -s.efr_max)],
                    Sense::Le,
                    0.0,
                );
                b.row(
                    RowKind::StorEfrMargin,
                    Some(u),
                    t,
                    vec![
                        (v.efr[t], 1.0),
                        (v.dis[t], 1.0),
                        (v.cha[t], -1.0),
                        (v.ydis[t], -s.p_max),
                        (v.ycha[t], -s.p_max),
                    ],
                    Sense::Le,
                    0.0,
                );
            }
            b.row(RowKind::StorMode, Some(u), t, vec![(v.ycha[t], 1.0), (v.ydis[t], 1.0)], Sense::Le, 1.0);
        }
        b.row(RowKind::StorEnd, Some(u), nt - 1, vec![(v.e[nt - 1], 1.0)], Sense::Ge, s.e_end);
        stor.push(v);
    }

    for (t, hv) in hours.iter().enumerate() {
        let mut bal = Vec::new();
        bal.extend(gens.iter().map(|g| (g.p[t], 1.0)));
        bal.extend(res.iter().map(|r| (r.p[t], 1.0)));
        for s in &stor {
            bal.push((s.dis[t], 1.0));
            bal.push((s.cha[t], -1.0));
        }
        b.row(RowKind::Balance, None, t, bal, Sense::Eq, scenario.demand[t]);

        let mut agg = vec![(hv.h, -1.0)];
        for (g, v) in scenario.generators.iter().zip(&gens) {
            agg.push((v.y[t], g.h * g.p_max));
        }
        for (s, v) in scenario.storage_units.iter().zip(&stor) {
            agg.push((v.ycha[t], s.h * s.p_max));
            agg.push((v.ydis[t], s.h * s.p_max));
        }
        b.row(RowKind::AggInertia, None, t, agg, Sense::Eq, 0.0);

        let mut agg = vec![(hv.pfr, -1.0)];
        agg.extend(gens.iter().map(|g| (g.pfr[t], 1.0)));
        agg.extend(stor.iter().map(|s| (s.pfr[t], 1.0)));
        b.row(RowKind::AggPfr, None, t, agg, Sense::Eq, 0.0);

        let mut agg = vec![(hv.efr, -1.0)];
        agg.extend(stor.iter().map(|s| (s.efr[t], 1.0)));
        b.row(RowKind::AggEfr, None, t, agg, Sense::Eq, 0.0);

        match &loss_rule {
            LossRule::FixedProfile(v) => {
                b.row(RowKind::LossParam, None, t, vec![(hv.loss, 1.0)], Sense::Ge, v[t]);
            }
            LossRule::EndogenousMax => {
                if let Some(floor) = &scenario.p_loss_cap {
                    b.row(RowKind::LossParam, None, t, vec![(hv.loss, 1.0)], Sense::Ge, floor[t]);
                }
                for u in scenario.units().filter(|&u| scenario.loss_eligible(u)) {
                    let var = match u {
                        UnitRef::Generator(g) => gens[g].p[t],
                        UnitRef::Res(r) => res[r].p[t],
                        UnitRef::Storage(s) => stor[s].dis[t],
                    };
                    b.row(RowKind::LossUnit, Some(u), t, vec![(hv.loss, 1.0), (var, -1.0)], Sense::Ge, 0.0);
                }
            }
        }

        b.row(
            RowKind::Rocof,
            None,
            t,
            vec![(hv.h, 1.0), (hv.loss, -prm.f0 / (2.0 * prm.rocof_max))],
            Sense::Ge,
            0.0,
        );
        b.row(RowKind::Qss, None, t, vec![(hv.efr, 1.0), (hv.pfr, 1.0), (hv.loss, -1.0)], Sense::Ge, 0.0);

        for k in 0..INITIAL_CUTS {
            let th = 2.0 * PI * k as f64 / INITIAL_CUTS as f64;
            let z = [th.cos(), th.sin()];
            let row = nadir_row(hv, z, prm);
            b.row(RowKind::NadirCut, None, t, row, Sense::Ge, 0.0);
            b.tags.last_mut().unwrap().dir = Some(z);
        }
    }

    Ok(UcModel {
        scenario: scenario.clone(),
        loss_rule,
        relaxed,
        lp: b.lp,
        tags: b.tags,
        gens,
        res,
        stor,
        hours,
        binaries,
    })
}

/// Nadir cut in direction `z` over the hour's aggregate variables.
pub fn nadir_row(hv: &HourVars, z: [f64; 2], prm: &crate::scenario::SystemParams) -> Vec<(usize, f64)> {
    let k = nadir_cut(z, prm);
    vec![(hv.h, k[0]), (hv.efr, k[1]), (hv.pfr, k[2]), (hv.loss, k[3])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{GeneratorSpec, SystemParams, SCHEMA_VERSION};
    use crate::template::gb_template;

    fn one_gen() -> Scenario {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: String::new(),
            horizon: 1,
            params: SystemParams::gb(),
            demand: vec![60.0],
            p_loss_cap: None,
            generators: vec![GeneratorSpec {
                id: "g".into(),
                technology: String::new(),
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
    fn single_hour_row_counts() {
        let m = build_uc(&one_gen(), LossRule::FixedProfile(vec![0.0]), true).unwrap();
        assert_eq!(m.count(RowKind::Balance), 1);
        assert_eq!(m.count(RowKind::Rocof), 1);
        assert_eq!(m.count(RowKind::Qss), 1);
        assert_eq!(m.count(RowKind::NadirCut), INITIAL_CUTS);
        assert_eq!(m.binaries.len(), 4);
        for r in &m.lp.rows {
            assert!(r.coeffs.iter().all(|&(j, _)| j < m.lp.num_vars()));
        }
    }

    #[test]
    fn fixed_profile_sets_loss_rhs() {
        let s = gb_template().truncated(3);
        let m = build_uc(&s, LossRule::FixedProfile(vec![1800.0; 3]), true).unwrap();
        let rows: Vec<_> = m.rows_of(RowKind::LossParam).collect();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|&i| m.lp.rows[i].rhs == 1800.0));
        assert_eq!(m.count(RowKind::LossUnit), 0);
    }

    #[test]
    fn build_errors() {
        let mut s = one_gen();
        assert!(build_uc(&s, LossRule::FixedProfile(vec![0.0, 0.0]), true).is_err());
        s.generators.clear();
        assert!(matches!(build_uc(&s, LossRule::EndogenousMax, true), Err(UcError::Build(_))));
    }
}
