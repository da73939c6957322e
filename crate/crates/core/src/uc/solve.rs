//! Relaxed solve with nadir cut separation, and branch and bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use fcas_lp::{LpError, Options, Sense, Simplex, Solution};

use super::cone::{nadir_violation, separating_direction};
use super::model::{nadir_row, Binary, RowKind, RowTag, UcModel};
use super::solution::{extract_duals, extract_primal, CommitmentSchedule, DispatchSolution, DualSolution, SolveStats};
use crate::error::{ConstraintClass, UcError};
use crate::scenario::UnitRef;

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative cone violation accepted before another cut round.
    pub cone_tol: f64,
    pub max_cut_rounds: usize,
    /// Relative MIP gap.
    pub rel_gap: f64,
    pub int_tol: f64,
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    pub lp: Options,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            cone_tol: 1e-9,
            max_cut_rounds: 200,
            rel_gap: 1e-6,
            int_tol: 1e-6,
            node_limit: 50_000,
            time_limit: None,
            lp: Options::default(),
        }
    }
}

/// LP of a model together with the cuts separated so far.
#[derive(Clone)]
struct CutLp {
    sim: Simplex,
    tags: Vec<RowTag>,
    rounds: usize,
}

fn lp_error(e: LpError, tags: &[RowTag]) -> UcError {
    match e {
        LpError::Infeasible { rows } => {
            let mut classes: Vec<ConstraintClass> = rows.iter().filter_map(|&i| tags.get(i)).map(|t| t.kind.class()).collect();
            classes.sort();
            classes.dedup();
            if classes.is_empty() {
                classes.push(ConstraintClass::Bounds);
            }
            UcError::Infeasible { classes }
        }
        LpError::Unbounded { .. } => UcError::Unbounded,
        other => UcError::Solver(other.to_string()),
    }
}

impl CutLp {
    fn new(model: &UcModel, opts: &SolveOptions) -> Self {
        Self {
            sim: Simplex::new(&model.lp, opts.lp.clone()),
            tags: model.tags.clone(),
            rounds: 0,
        }
    }

    fn solve(&mut self, model: &UcModel, opts: &SolveOptions) -> Result<(), UcError> {
        self.sim.solve().map_err(|e| lp_error(e, &self.tags))?;
        self.separate(model, opts)
    }

    fn reoptimize(&mut self, model: &UcModel, opts: &SolveOptions) -> Result<(), UcError> {
        self.sim.reoptimize().map_err(|e| lp_error(e, &self.tags))?;
        self.separate(model, opts)
    }

    /// Adds nadir cuts until every hour's cone holds to `cone_tol`.
    fn separate(&mut self, model: &UcModel, opts: &SolveOptions) -> Result<(), UcError> {
        let prm = &model.scenario.params;
        for _ in 0..opts.max_cut_rounds {
            let x = self.sim.solution().x;
            let mut added = false;
            for (t, hv) in model.hours.iter().enumerate() {
                if let Some(z) = separating_direction(x[hv.h], x[hv.efr], x[hv.pfr], x[hv.loss], prm, opts.cone_tol) {
                    self.sim.add_row(nadir_row(hv, z, prm), Sense::Ge, 0.0);
                    self.tags.push(RowTag { kind: RowKind::NadirCut, unit: None, hour: t, dir: Some(z) });
                    added = true;
                }
            }
            if !added {
                return Ok(());
            }
            self.rounds += 1;
            self.sim.reoptimize().map_err(|e| lp_error(e, &self.tags))?;
        }
        Err(UcError::Solver(format!("nadir cuts did not converge in {} rounds", opts.max_cut_rounds)))
    }

    fn cuts(&self, model: &UcModel) -> usize {
        self.tags.len() - model.tags.len()
    }
}

fn cone_violation(model: &UcModel, x: &[f64]) -> f64 {
    let prm = &model.scenario.params;
    model
        .hours
        .iter()
        .map(|hv| nadir_violation(x[hv.h], x[hv.efr], x[hv.pfr], x[hv.loss], prm).max(0.0))
        .fold(0.0, f64::max)
}

fn cs_residual(sim: &Simplex, sol: &Solution) -> f64 {
    let scale = sol.objective.abs().max(1.0);
    sim.rows()
        .iter()
        .zip(&sol.row_duals)
        .map(|(r, y)| (y * (r.activity(&sol.x) - r.rhs)).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Solves the convex relaxation and recovers every multiplier.
pub fn solve_relaxed(model: &UcModel) -> Result<(DispatchSolution, DualSolution, SolveStats), UcError> {
    solve_relaxed_with(model, &SolveOptions::default())
}

pub fn solve_relaxed_with(
    model: &UcModel,
    opts: &SolveOptions,
) -> Result<(DispatchSolution, DualSolution, SolveStats), UcError> {
    if !model.relaxed {
        return Err(UcError::WrongMode("solve_relaxed needs a relaxed model"));
    }
    let start = Instant::now();
    let mut lp = CutLp::new(model, opts);
    lp.solve(model, opts)?;
    let sol = lp.sim.solution();
    let rhs: Vec<f64> = lp.sim.rows().iter().map(|r| r.rhs).collect();
    let duals = extract_duals(model, &lp.tags, &rhs, &sol.row_duals, &sol.reduced_costs);
    let primal = extract_primal(model, &sol.x);
    let stats = SolveStats {
        nodes: 1,
        iterations: lp.sim.iterations(),
        cut_rounds: lp.rounds,
        cuts: lp.cuts(model),
        mip_gap: 0.0,
        duality_gap: (sol.objective - sol.dual_objective).abs() / sol.objective.abs().max(1.0),
        cs_residual: cs_residual(&lp.sim, &sol),
        cone_violation: cone_violation(model, &sol.x),
        gap_reached: true,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((primal, duals, stats))
}

/// Solves the model with every commitment variable fixed to `values`
/// (ordered as `model.binaries`). Returns the dispatch and its objective.
pub fn with_fixed_binaries(model: &UcModel, values: &[f64]) -> Result<DispatchSolution, UcError> {
    assert_eq!(values.len(), model.binaries.len());
    let mut lp = model.lp.clone();
    for (b, &v) in model.binaries.iter().zip(values) {
        lp.lower[b.var] = v;
        lp.upper[b.var] = v;
    }
    let fixed = UcModel { lp, ..model.clone() };
    let opts = SolveOptions::default();
    let mut cl = CutLp::new(&fixed, &opts);
    cl.solve(&fixed, &opts)?;
    Ok(extract_primal(&fixed, &cl.sim.solution().x))
}

struct Node {
    bound: f64,
    seq: usize,
    fixes: Vec<(usize, f64)>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    // Max-heap: smallest bound first, then most recent.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(self.seq.cmp(&o.seq))
    }
}

struct Search<'a> {
    model: &'a UcModel,
    opts: &'a SolveOptions,
    /// Single LP reused across nodes; only binary bounds change between them.
    work: CutLp,
    /// Bounds currently installed on each binary, indexed like `model.binaries`.
    installed: Vec<(f64, f64)>,
    slot: Vec<Option<usize>>,
    incumbent: Option<(f64, Vec<f64>)>,
    iterations: usize,
    rounds: usize,
    deadline: Option<Instant>,
}

impl<'a> Search<'a> {
    fn new(model: &'a UcModel, opts: &'a SolveOptions, work: CutLp, deadline: Option<Instant>) -> Self {
        let mut slot = vec![None; model.lp.num_vars()];
        for (k, b) in model.binaries.iter().enumerate() {
            slot[b.var] = Some(k);
        }
        let installed = model.binaries.iter().map(|b| (model.lp.lower[b.var], model.lp.upper[b.var])).collect();
        Self {
            model,
            opts,
            iterations: work.sim.iterations(),
            rounds: work.rounds,
            work,
            installed,
            slot,
            incumbent: None,
            deadline,
        }
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() > d)
    }

    fn evaluate(&mut self, fixes: &[(usize, f64)]) -> Option<(f64, Vec<f64>)> {
        let mut target: Vec<(f64, f64)> =
            self.model.binaries.iter().map(|b| (self.model.lp.lower[b.var], self.model.lp.upper[b.var])).collect();
        for &(j, v) in fixes {
            if let Some(k) = self.slot[j] {
                target[k] = (v, v);
            }
        }
        for (k, &(lo, hi)) in target.iter().enumerate() {
            if self.installed[k] != (lo, hi) {
                self.work.sim.set_bounds(self.model.binaries[k].var, lo, hi);
                self.installed[k] = (lo, hi);
            }
        }
        let before = self.work.sim.iterations();
        let base_rounds = self.work.rounds;
        let res = self.work.reoptimize(self.model, self.opts);
        self.iterations += self.work.sim.iterations() - before;
        self.rounds += self.work.rounds - base_rounds;
        match res {
            Ok(()) => {
                let sol = self.work.sim.solution();
                Some((sol.objective, sol.x))
            }
            Err(UcError::Infeasible { .. }) => None,
            Err(_) => {
                // Numerical trouble: start over from the model; cuts are separated again.
                let mut fresh = CutLp::new(self.model, self.opts);
                if fresh.solve(self.model, self.opts).is_ok() {
                    self.work = fresh;
                    self.installed = self
                        .model
                        .binaries
                        .iter()
                        .map(|b| (self.model.lp.lower[b.var], self.model.lp.upper[b.var]))
                        .collect();
                }
                None
            }
        }
    }

    fn fractional(&self, x: &[f64]) -> Option<usize> {
        let sc = &self.model.scenario;
        let mut best: Option<(usize, f64, f64)> = None;
        for (k, b) in self.model.binaries.iter().enumerate() {
            let v = x[b.var];
            let f = v.min(1.0 - v);
            if f <= self.opts.int_tol {
                continue;
            }
            let size = sc.unit_p_max(b.unit);
            let better = match best {
                None => true,
                Some((_, bf, bs)) => f > bf + 1e-9 || ((f - bf).abs() <= 1e-9 && size > bs),
            };
            if better {
                best = Some((k, f, size));
            }
        }
        best.map(|(k, _, _)| k)
    }

    fn offer(&mut self, obj: f64, x: Vec<f64>) {
        if self.incumbent.as_ref().map_or(true, |(o, _)| obj < *o) {
            self.incumbent = Some((obj, x));
        }
    }

    /// Rounds the relaxed commitment at `threshold`, repairs the thermal
    /// timing rules, and solves the resulting fixed dispatch.
    fn round_and_repair(&mut self, x: &[f64], threshold: f64) {
        let fixes = rounded_commitment(self.model, x, threshold);
        if let Some((obj, nx)) = self.evaluate(&fixes) {
            if self.fractional(&nx).is_none() {
                self.offer(obj, nx);
            }
        }
    }

    fn is_state(&self, b: &Binary) -> bool {
        match b.unit {
            UnitRef::Generator(i) => self.model.gens[i].y[b.hour] == b.var,
            _ => true,
        }
    }

    /// Dive from `x0`. Each step fixes the fractional commitment of the
    /// largest remaining unit at once, rounding hour by hour.
    fn dive(&mut self, x0: &[f64], max_steps: usize) {
        let sc = &self.model.scenario;
        let mut fixes: Vec<(usize, f64)> = Vec::new();
        let mut x = x0.to_vec();
        for _ in 0..max_steps {
            if self.out_of_time() {
                return;
            }
            // Start-up and shut-down flags follow from the on/off states.
            let frac = |x: &[f64], b: &Binary| x[b.var].min(1.0 - x[b.var]) > self.opts.int_tol && self.is_state(b);
            let Some(unit) = self
                .model
                .binaries
                .iter()
                .filter(|b| frac(&x, b))
                .map(|b| b.unit)
                .fold(None, |best: Option<UnitRef>, u| match best {
                    Some(b) if sc.unit_p_max(b) >= sc.unit_p_max(u) => Some(b),
                    _ => Some(u),
                })
            else {
                if self.fractional(&x).is_none() {
                    let obj = self.model.lp.objective(&x);
                    self.offer(obj, x);
                } else {
                    fixes.extend(self.model.binaries.iter().filter(|b| self.is_state(b)).map(|b| (b.var, x[b.var].round())));
                    if let Some((obj, nx)) = self.evaluate(&fixes) {
                        if self.fractional(&nx).is_none() {
                            self.offer(obj, nx);
                        }
                    }
                }
                return;
            };
            let batch: Vec<(usize, f64)> = self
                .model
                .binaries
                .iter()
                .filter(|b| b.unit == unit && frac(&x, b))
                .map(|b| (b.var, if x[b.var] >= 0.5 { 1.0 } else { 0.0 }))
                .collect();
            let mark = fixes.len();
            let mut next = None;
            for flip in [false, true] {
                fixes.truncate(mark);
                fixes.extend(batch.iter().map(|&(j, v)| (j, if flip { 1.0 - v } else { v })));
                if let Some(r) = self.evaluate(&fixes) {
                    next = Some(r);
                    break;
                }
            }
            match next {
                Some((_, nx)) => x = nx,
                None => return,
            }
        }
    }
}

/// Commitment obtained by rounding `x` up at `threshold`, with short
/// off-gaps filled and short on-runs extended until the timing rules hold.
/// Start-up, shut-down and mode flags are derived from the result.
fn rounded_commitment(model: &UcModel, x: &[f64], threshold: f64) -> Vec<(usize, f64)> {
    let nt = model.hours.len();
    let mut fixes = Vec::with_capacity(model.binaries.len());
    for (g, v) in model.scenario.generators.iter().zip(&model.gens) {
        let mut y: Vec<bool> = v.y.iter().map(|&j| x[j] > threshold).collect();
        let lead = g.t_st as usize;
        if !g.initially_on {
            y.iter_mut().take(lead).for_each(|b| *b = false);
        }
        repair_timing(&mut y, g.initially_on, lead, g.t_mut as usize, g.t_mdt as usize);
        let prev = |t: usize| if t == 0 { g.initially_on } else { y[t - 1] };
        let sg: Vec<bool> = (0..nt).map(|t| y[t] && !prev(t)).collect();
        for t in 0..nt {
            fixes.push((v.y[t], f64::from(u8::from(y[t]))));
            fixes.push((v.sg[t], f64::from(u8::from(sg[t]))));
            fixes.push((v.sd[t], f64::from(u8::from(!y[t] && prev(t)))));
            let st = t + lead < nt && sg[t + lead];
            fixes.push((v.st[t], f64::from(u8::from(st))));
        }
    }
    for v in &model.stor {
        for t in 0..nt {
            let (c, d) = (x[v.ycha[t]], x[v.ydis[t]]);
            let cha = c > threshold && c > d;
            let dis = d > threshold && !cha;
            fixes.push((v.ycha[t], f64::from(u8::from(cha))));
            fixes.push((v.ydis[t], f64::from(u8::from(dis))));
        }
    }
    fixes
}

/// Makes an on/off sequence satisfy minimum up and down times and the
/// start lead. Only switches units on, so it terminates.
fn repair_timing(y: &mut [bool], on0: bool, lead: usize, min_up: usize, min_down: usize) {
    let nt = y.len();
    let (min_up, min_down) = (min_up.max(1), min_down.max(1));
    loop {
        let mut changed = false;
        let mut last_down: Option<usize> = None;
        let mut run_start: Option<usize> = None;
        let mut prev = on0;
        for t in 0..nt {
            if y[t] && !prev {
                // Start at t, initiated at t - lead.
                let ok = t >= lead && last_down.map_or(true, |d| t - lead >= d + min_down);
                if !ok {
                    if let Some(d) = last_down {
                        y[d..t].iter_mut().for_each(|b| *b = true);
                        changed = true;
                        break;
                    }
                }
                run_start = Some(t);
            } else if !y[t] && prev {
                if let Some(s) = run_start {
                    if t - s < min_up {
                        let end = (s + min_up).min(nt);
                        y[t..end].iter_mut().for_each(|b| *b = true);
                        changed = true;
                        break;
                    }
                }
                last_down = Some(t);
            }
            prev = y[t];
        }
        if !changed {
            return;
        }
    }
}

fn relative_gap(inc: f64, bound: f64) -> f64 {
    ((inc - bound) / inc.abs().max(1.0)).max(0.0)
}

/// Branch and bound over the commitment variables.
pub fn solve_mip(model: &UcModel, rel_gap: f64) -> Result<(CommitmentSchedule, DispatchSolution, SolveStats), UcError> {
    solve_mip_with(model, &SolveOptions { rel_gap, ..SolveOptions::default() })
}

pub fn solve_mip_with(
    model: &UcModel,
    opts: &SolveOptions,
) -> Result<(CommitmentSchedule, DispatchSolution, SolveStats), UcError> {
    if model.relaxed {
        return Err(UcError::WrongMode("solve_mip needs an unrelaxed model"));
    }
    let start = Instant::now();
    let mut root = CutLp::new(model, opts);
    root.solve(model, opts)?;
    let root_sol = root.sim.solution();
    let deadline = opts.time_limit.map(|l| start + l);
    let mut search = Search::new(model, opts, root, deadline);
    for threshold in [1e-6, 0.5] {
        search.round_and_repair(&root_sol.x, threshold);
    }
    search.dive(&root_sol.x, 64);

    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    heap.push(Node { bound: root_sol.objective, seq, fixes: Vec::new(), x: root_sol.x });
    let mut nodes = 1usize;
    let mut exhausted = true;

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &search.incumbent {
            if relative_gap(*inc, node.bound) <= opts.rel_gap {
                heap.clear();
                break;
            }
        }
        if nodes >= opts.node_limit || search.out_of_time() {
            heap.push(node);
            exhausted = false;
            break;
        }
        let Some(k) = search.fractional(&node.x) else {
            search.offer(node.bound, node.x);
            continue;
        };
        let var = model.binaries[k].var;
        for v in [0.0, 1.0] {
            let mut fixes = node.fixes.clone();
            fixes.push((var, v));
            nodes += 1;
            if let Some((obj, x)) = search.evaluate(&fixes) {
                let prune = search
                    .incumbent
                    .as_ref()
                    .is_some_and(|(inc, _)| relative_gap(*inc, obj) <= opts.rel_gap);
                if !prune {
                    seq += 1;
                    heap.push(Node { bound: obj, seq, fixes, x });
                }
            }
        }
    }

    let Some((obj, x)) = search.incumbent.take() else {
        return Err(if exhausted {
            UcError::Infeasible { classes: vec![ConstraintClass::Integrality] }
        } else {
            UcError::Solver(format!("no integral solution within {nodes} nodes"))
        });
    };
    let best_bound = heap.iter().map(|n| n.bound).fold(obj, f64::min);
    let mip_gap = relative_gap(obj, best_bound);
    let dispatch = extract_primal(model, &x);
    let stats = SolveStats {
        nodes,
        iterations: search.iterations,
        cut_rounds: search.rounds,
        cuts: search.work.cuts(model),
        mip_gap,
        duality_gap: 0.0,
        cs_residual: 0.0,
        cone_violation: cone_violation(model, &x),
        gap_reached: mip_gap <= opts.rel_gap,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let mut schedule = dispatch.commitment.clone();
    round_schedule(&mut schedule);
    Ok((schedule, dispatch, stats))
}

fn round_schedule(s: &mut CommitmentSchedule) {
    let r = |v: &mut Vec<f64>| v.iter_mut().for_each(|x| *x = x.round());
    for g in s.generators.iter_mut() {
        r(&mut g.y);
        r(&mut g.st);
        r(&mut g.sg);
        r(&mut g.sd);
    }
    for st in s.storage.iter_mut() {
        r(&mut st.cha);
        r(&mut st.dis);
    }
}
