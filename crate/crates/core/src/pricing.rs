//! Ancillary-service prices from the relaxed multipliers, the strong-duality
//! payment audit, and per-unit stand-alone AS markets.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::PricingError;
use crate::scenario::{Scenario, SystemParams, UnitRef};
use crate::uc::{
    build_uc, solve_relaxed_with, CommitmentSchedule, DispatchSolution, DualSolution, LossRule, RowKind, SolveOptions,
};

/// Prices of one hour. AS prices are in £/MWs (inertia) and £/MW.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HourPrices {
    pub lambda_e: f64,
    pub lambda_h: f64,
    pub lambda_pfr: f64,
    pub lambda_efr: f64,
    pub omega_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AsPrices {
    pub hours: Vec<HourPrices>,
}

/// Relative tolerance of the stationarity cross-check.
pub const PRICE_TOL: f64 = 1e-6;

/// Prices from the cone, RoCoF and q-s-s multipliers, checked against the
/// multipliers of the aggregation rows and the loss rows.
pub fn as_prices_from_duals(duals: &DualSolution, params: &SystemParams) -> Result<AsPrices, PricingError> {
    let sq = params.delta_f_max.sqrt();
    let mut hours = Vec::with_capacity(duals.hours.len());
    for (t, d) in duals.hours.iter().enumerate() {
        let p = HourPrices {
            lambda_e: d.lambda_e,
            lambda_h: (d.mu_nadir_3 - d.mu_nadir_1) / params.f0 + d.mu_rocof,
            lambda_pfr: (d.mu_nadir_3 + d.mu_nadir_1) / params.t_pfr + d.mu_qss,
            lambda_efr: (d.mu_nadir_1 - d.mu_nadir_3) * params.t_efr / (4.0 * params.delta_f_max)
                + d.mu_nadir_2 / sq
                + d.mu_qss,
            omega_loss: d.mu_rocof * params.f0 / (2.0 * params.rocof_max) + d.mu_nadir_2 / sq + d.mu_qss,
        };
        let scale = [p.lambda_h, p.lambda_pfr, p.lambda_efr, p.omega_loss, d.lambda_h, d.lambda_pfr, d.lambda_efr]
            .iter()
            .fold(1.0f64, |m, v| m.max(v.abs()));
        for (which, formula, direct) in [
            ("lambda_h", p.lambda_h, d.lambda_h),
            ("lambda_pfr", p.lambda_pfr, d.lambda_pfr),
            ("lambda_efr", p.lambda_efr, d.lambda_efr),
            ("omega_loss", p.omega_loss, d.omega_loss),
        ] {
            if (formula - direct).abs() > PRICE_TOL * scale {
                return Err(PricingError::PriceMismatch { hour: t, which, formula, direct });
            }
        }
        hours.push(p);
    }
    Ok(AsPrices { hours })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HourMarket {
    pub inertia: f64,
    pub pfr: f64,
    pub efr: f64,
    /// `P^Loss * omega`.
    pub omega: f64,
}

impl HourMarket {
    pub fn services(&self) -> f64 {
        self.inertia + self.pfr + self.efr
    }
}

/// Horizon revenues and offer costs of one technology.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TechnologyTotals {
    pub technology: String,
    pub energy_revenue: f64,
    pub inertia_revenue: f64,
    pub pfr_revenue: f64,
    pub efr_revenue: f64,
    pub offer_cost: f64,
}

/// Itemised strong-duality identity of one relaxed solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarketBreakdown {
    pub hours: Vec<HourMarket>,
    pub technologies: Vec<TechnologyTotals>,
    pub energy_payments: f64,
    pub as_payments: f64,
    pub system_costs: f64,
    pub thermal_profits: f64,
    pub renewable_profits: f64,
    pub storage_profits: f64,
    /// Dual terms of constraints the payment identity does not list
    /// (minimum up/down and transition right-hand sides, initial energy bounds).
    pub omitted_terms: f64,
    /// `payments - (costs + profits + omitted)`.
    pub residual: f64,
    pub relative_residual: f64,
}

/// Relative tolerance of the duality audit.
pub const AUDIT_TOL: f64 = 1e-5;

pub fn duality_audit(
    primal: &DispatchSolution,
    duals: &DualSolution,
    scenario: &Scenario,
) -> Result<MarketBreakdown, PricingError> {
    let nt = scenario.horizon;
    let hours: Vec<HourMarket> = (0..nt)
        .map(|t| {
            let d = &duals.hours[t];
            HourMarket {
                inertia: d.lambda_h * primal.h[t],
                pfr: d.lambda_pfr * primal.pfr[t],
                efr: d.lambda_efr * primal.efr[t],
                omega: d.omega_loss * primal.p_loss[t],
            }
        })
        .collect();

    let energy_payments: f64 = (0..nt).map(|t| scenario.demand[t] * duals.hours[t].lambda_e).sum();
    let as_payments: f64 = duals.hours.iter().map(|d| d.loss_rhs * d.omega_param).sum();

    let mut tech: BTreeMap<String, TechnologyTotals> = BTreeMap::new();
    let mut system_costs = 0.0;
    for (gi, g) in scenario.generators.iter().enumerate() {
        let unit = UnitRef::Generator(gi);
        let (p, pf, y) = (&primal.generators[gi].p, &primal.generators[gi].pfr, &primal.commitment.generators[gi].y);
        let mut acc = TechnologyTotals::default();
        for t in 0..nt {
            let d = &duals.hours[t];
            let inertia = g.h * g.p_max * y[t];
            acc.energy_revenue += d.lambda_e * p[t];
            acc.inertia_revenue += d.lambda_h * inertia;
            acc.pfr_revenue += d.lambda_pfr * pf[t];
            acc.offer_cost += g.lambda_e * p[t] + g.lambda_h * inertia + g.lambda_pfr * pf[t];
        }
        system_costs += acc.offer_cost;
        merge(&mut tech, scenario, unit, &acc);
    }
    for (ri, r) in scenario.res_units.iter().enumerate() {
        let unit = UnitRef::Res(ri);
        let p = &primal.res_units[ri].p;
        let mut acc = TechnologyTotals::default();
        for t in 0..nt {
            acc.energy_revenue += duals.hours[t].lambda_e * p[t];
            acc.offer_cost += r.lambda_e * p[t];
        }
        system_costs += acc.offer_cost;
        merge(&mut tech, scenario, unit, &acc);
    }
    for (si, s) in scenario.storage_units.iter().enumerate() {
        let unit = UnitRef::Storage(si);
        let (sd, sc) = (&primal.storage[si], &primal.commitment.storage[si]);
        let mut acc = TechnologyTotals::default();
        for t in 0..nt {
            let d = &duals.hours[t];
            let inertia = s.h * s.p_max * (sc.cha[t] + sc.dis[t]);
            acc.energy_revenue += d.lambda_e * (sd.dis[t] - sd.cha[t]);
            acc.inertia_revenue += d.lambda_h * inertia;
            acc.pfr_revenue += d.lambda_pfr * sd.pfr[t];
            acc.efr_revenue += d.lambda_efr * sd.efr[t];
            acc.offer_cost +=
                s.lambda_e * sd.dis[t] + s.lambda_h * inertia + s.lambda_pfr * sd.pfr[t] + s.lambda_efr * sd.efr[t];
        }
        system_costs += acc.offer_cost;
        merge(&mut tech, scenario, unit, &acc);
    }

    let thermal_profits: f64 = duals
        .generators
        .iter()
        .map(|g| (0..nt).map(|t| g.psi_max_y[t] + g.psi_max_st[t] + g.psi_max_sg[t] + g.psi_max_sd[t]).sum::<f64>())
        .sum();
    let renewable_profits: f64 = scenario
        .res_units
        .iter()
        .zip(&duals.res_units)
        .map(|(r, d)| (0..nt).map(|t| r.cf[t] * r.p_max * d.psi_cf[t]).sum::<f64>())
        .sum();
    let mut storage_profits = 0.0;
    let mut omitted_terms = 0.0;
    for (s, d) in scenario.storage_units.iter().zip(&duals.storage) {
        for t in 0..nt {
            storage_profits += -s.e_min * d.psi_min_e[t]
                + s.e_max * d.psi_max_e[t]
                + d.psi_max_ycha[t]
                + d.psi_max_ydis[t]
                + d.psi_dis_cha[t];
        }
        storage_profits += s.e_ini * d.psi_ini - s.e_end * d.psi_end;
        omitted_terms += s.e_max * d.psi_max_e0 - s.e_min * d.psi_min_e0;
    }
    for r in &duals.rows {
        use RowKind::*;
        match r.kind {
            Balance | LossParam | StorInit | StorEnd | StorMode => {}
            _ => omitted_terms -= r.rhs * r.y,
        }
    }

    let lhs = energy_payments + as_payments;
    let rhs = system_costs + thermal_profits + renewable_profits + storage_profits + omitted_terms;
    let residual = lhs - rhs;
    let relative_residual = residual.abs() / lhs.abs().max(rhs.abs()).max(1.0);
    let breakdown = MarketBreakdown {
        hours,
        technologies: tech.into_values().collect(),
        energy_payments,
        as_payments,
        system_costs,
        thermal_profits,
        renewable_profits,
        storage_profits,
        omitted_terms,
        residual,
        relative_residual,
    };
    if relative_residual > AUDIT_TOL {
        return Err(PricingError::AuditMismatch { residual, relative: relative_residual });
    }
    Ok(breakdown)
}

/// Technology label of a unit; falls back to the unit id.
pub fn technology_label(scenario: &Scenario, u: UnitRef) -> String {
    let name = scenario.technology(u);
    if name.is_empty() { scenario.unit_id(u) } else { name }.to_string()
}

fn merge(tech: &mut BTreeMap<String, TechnologyTotals>, scenario: &Scenario, u: UnitRef, acc: &TechnologyTotals) {
    let name = technology_label(scenario, u);
    let e = tech.entry(name.clone()).or_insert_with(|| TechnologyTotals { technology: name, ..Default::default() });
    e.energy_revenue += acc.energy_revenue;
    e.inertia_revenue += acc.inertia_revenue;
    e.pfr_revenue += acc.pfr_revenue;
    e.efr_revenue += acc.efr_revenue;
    e.offer_cost += acc.offer_cost;
}

/// One unit's stand-alone AS market at one hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandAloneEntry {
    pub unit: UnitRef,
    pub id: String,
    pub technology: String,
    /// Dispatch used as the loss parameter (MW).
    pub dispatch: f64,
    /// `Omega^Loss_{i,t}` (£).
    pub omega: f64,
}

/// Per hour, one entry per dispatched unit; units that cannot set the
/// credible loss carry zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StandAloneCosts {
    pub hours: Vec<Vec<StandAloneEntry>>,
}

/// Values within this fraction of the largest market snap to zero.
pub const ZERO_SNAP: f64 = 1e-8;

/// Stand-alone AS market of every dispatched unit: one relaxed solve per
/// distinct dispatch profile, with the loss parameter set to that profile.
pub fn standalone_markets(
    scenario: &Scenario,
    schedule: &CommitmentSchedule,
    dispatch: &DispatchSolution,
) -> Result<StandAloneCosts, PricingError> {
    standalone_markets_with(scenario, schedule, dispatch, &SolveOptions::default())
}

pub fn standalone_markets_with(
    scenario: &Scenario,
    schedule: &CommitmentSchedule,
    dispatch: &DispatchSolution,
    opts: &SolveOptions,
) -> Result<StandAloneCosts, PricingError> {
    let nt = scenario.horizon;
    let mut units: Vec<(UnitRef, Vec<bool>, Vec<f64>)> = Vec::new();
    for u in scenario.units() {
        let on: Vec<bool> = (0..nt).map(|t| schedule.dispatched(u, t, dispatch.power(u, t))).collect();
        if !on.iter().any(|&b| b) {
            continue;
        }
        let profile = (0..nt).map(|t| if on[t] { dispatch.power(u, t).max(0.0) } else { 0.0 }).collect();
        units.push((u, on, profile));
    }

    // A unit whose outage is not a credible loss creates no market of its own.
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    let mut slot: HashMap<Vec<u64>, usize> = HashMap::new();
    let which: Vec<Option<usize>> = units
        .iter()
        .map(|(u, _, p)| {
            scenario.loss_eligible(*u).then(|| {
                let key: Vec<u64> = p.iter().map(|v| v.to_bits()).collect();
                *slot.entry(key).or_insert_with(|| {
                    distinct.push(p);
                    distinct.len() - 1
                })
            })
        })
        .collect();

    let markets: Vec<Result<Vec<f64>, PricingError>> = distinct
        .par_iter()
        .map(|profile| standalone_profile(scenario, profile, opts))
        .collect();
    let mut solved = Vec::with_capacity(markets.len());
    for (k, m) in markets.into_iter().enumerate() {
        match m {
            Ok(v) => solved.push(v),
            Err(PricingError::Uc(source)) => {
                let u = units[which.iter().position(|&w| w == Some(k)).unwrap()].0;
                return Err(PricingError::StandAlone { unit: scenario.unit_id(u).to_string(), source });
            }
            Err(e) => return Err(e),
        }
    }

    let scale = solved.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut hours = vec![Vec::new(); nt];
    for ((u, on, profile), &k) in units.iter().zip(&which) {
        for t in (0..nt).filter(|&t| on[t]) {
            let mut omega = k.map_or(0.0, |k| solved[k][t]);
            if omega.abs() <= ZERO_SNAP * scale {
                omega = 0.0;
            }
            hours[t].push(StandAloneEntry {
                unit: *u,
                id: scenario.unit_id(*u).to_string(),
                technology: technology_label(scenario, *u),
                dispatch: profile[t],
                omega: omega.max(0.0),
            });
        }
    }
    Ok(StandAloneCosts { hours })
}

/// Hourly `P^Loss * omega` of the relaxed model with the loss parameter fixed to `profile`.
pub fn standalone_profile(scenario: &Scenario, profile: &[f64], opts: &SolveOptions) -> Result<Vec<f64>, PricingError> {
    let model = build_uc(scenario, LossRule::FixedProfile(profile.to_vec()), true)?;
    let (_, duals, _) = solve_relaxed_with(&model, opts)?;
    Ok(duals.hours.iter().map(|d| d.loss_rhs * d.omega_param).collect())
}
