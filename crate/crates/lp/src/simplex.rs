//! Dense-tableau bounded-variable simplex.
//!
//! Every row `a·x (sense) b` is stored as `a·x + s = b` with a logical `s` whose
//! bounds encode the sense (`<=`: `s >= 0`, `>=`: `s <= 0`, `=`: `s = 0`). The
//! logical columns of the tableau therefore hold `B^-1`, which is how row duals
//! are read back: `y_i = -d(s_i)` under the Lagrangian `c·x - y·(A·x - b)`.
//!
//! Phase one uses artificial columns; afterwards they are dropped. Rows added
//! after a solve (cutting planes) and bound changes (branching) are handled by
//! the dual simplex from the last optimal basis.
//!
//! The tableau is updated in place between refactorizations; every
//! `REFACTOR_EVERY` pivots, and before optimality is declared, it is rebuilt
//! from the original rows through an LU of the basis so rounding does not
//! accumulate.

use crate::lu::BasisLu;
use crate::problem::{merge_coeffs, Row, Sense};
use crate::{LpError, Problem};

const ZAP: f64 = 1e-13;
const STALL_LIMIT: usize = 60;
const REFACTOR_EVERY: usize = 100;

#[derive(Clone, Debug)]
pub struct Options {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub pivot_tol: f64,
    pub max_iter: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            pivot_tol: 1e-7,
            max_iter: 500_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Basic(usize),
    Lower,
    Upper,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Col {
    Struct(usize),
    Logical(usize),
    /// Row and whether the column is `-e_row`.
    Artificial(usize, bool),
}

/// Optimal primal/dual pair.
#[derive(Clone, Debug)]
pub struct Solution {
    pub x: Vec<f64>,
    /// Row multipliers `y` with `c - A^T y = reduced costs`; `y <= 0` on `<=`
    /// rows and `y >= 0` on `>=` rows at optimality.
    pub row_duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    /// `b·y + sum_j bound_j * d_j` over nonbasic columns.
    pub dual_objective: f64,
}

enum Primal {
    Optimal,
    Unbounded(usize),
}

#[derive(Clone, Debug)]
pub struct Simplex {
    opts: Options,
    n_struct: usize,
    cost: Vec<f64>,
    rows: Vec<Row>,
    cols: Vec<Col>,
    logical_of_row: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    tab: Vec<Vec<f64>>,
    d: Vec<f64>,
    solved: bool,
    iterations: usize,
    since_refactor: usize,
}

impl Simplex {
    pub fn new(problem: &Problem, opts: Options) -> Self {
        let n = problem.num_vars();
        let m = problem.num_rows();
        let mut cols: Vec<Col> = (0..n).map(Col::Struct).collect();
        cols.extend((0..m).map(Col::Logical));
        let mut lo = problem.lower.clone();
        let mut hi = problem.upper.clone();
        for row in &problem.rows {
            let (l, h) = logical_bounds(row.sense);
            lo.push(l);
            hi.push(h);
        }
        let mut x = vec![0.0; n + m];
        let mut status = vec![Status::Lower; n + m];
        for j in 0..n {
            let (s, v) = resting_place(lo[j], hi[j]);
            status[j] = s;
            x[j] = v;
        }

        let mut basis = Vec::with_capacity(m);
        let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
        for (i, row) in problem.rows.iter().enumerate() {
            let mut t = vec![0.0; n + m];
            for &(j, a) in &row.coeffs {
                t[j] = a;
            }
            t[n + i] = 1.0;
            x[n + i] = row.rhs - row.activity(&x);
            status[n + i] = Status::Basic(i);
            basis.push(n + i);
            tab.push(t);
        }

        let ncols = cols.len();
        let mut cost = problem.cost.clone();
        cost.resize(ncols, 0.0);
        Self {
            opts,
            n_struct: n,
            cost,
            rows: problem.rows.clone(),
            cols,
            logical_of_row: (n..n + m).collect(),
            lo,
            hi,
            x,
            status,
            basis,
            tab,
            d: vec![0.0; ncols],
            solved: false,
            iterations: 0,
            since_refactor: 0,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_vars(&self) -> usize {
        self.n_struct
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lo[j], self.hi[j])
    }

    /// Solves from the slack basis: dual simplex when that basis is dual
    /// feasible, otherwise two-phase primal simplex.
    pub fn solve(&mut self) -> Result<(), LpError> {
        if self.iterations > 0 {
            let iterations = self.iterations;
            *self = Simplex::new(&self.problem(), self.opts.clone());
            self.iterations = iterations;
        }
        let cost = self.cost.clone();
        self.price(&cost);
        if self.dual_feasible() {
            self.dual(&cost)?;
            if let Primal::Unbounded(j) = self.primal(&cost)? {
                return Err(LpError::Unbounded { var: self.struct_index(j) });
            }
            self.solved = true;
            return Ok(());
        }
        self.install_artificials();
        let has_art = self.cols.iter().any(|c| matches!(c, Col::Artificial(..)));
        if has_art {
            let phase1: Vec<f64> = self
                .cols
                .iter()
                .map(|c| if matches!(c, Col::Artificial(..)) { 1.0 } else { 0.0 })
                .collect();
            self.price(&phase1);
            if let Primal::Unbounded(_) = self.primal(&phase1)? {
                return Err(LpError::Numerical("phase one unbounded".into()));
            }
            let infeas: f64 = self
                .cols
                .iter()
                .enumerate()
                .filter(|(_, c)| matches!(c, Col::Artificial(..)))
                .map(|(k, _)| self.x[k])
                .sum();
            let scale = 1.0 + self.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
            if infeas > 1e-7 * scale {
                let rows = (0..self.rows.len())
                    .filter(|&i| self.d[self.logical_of_row[i]].abs() > 1e-9)
                    .collect();
                return Err(LpError::Infeasible { rows });
            }
            self.drop_artificials();
        }
        let cost = self.cost.clone();
        self.price(&cost);
        match self.primal(&cost)? {
            Primal::Optimal => {
                self.solved = true;
                Ok(())
            }
            Primal::Unbounded(j) => Err(LpError::Unbounded { var: self.struct_index(j) }),
        }
    }

    fn problem(&self) -> Problem {
        let n = self.n_struct;
        Problem {
            cost: self.cost[..n].to_vec(),
            lower: self.lo[..n].to_vec(),
            upper: self.hi[..n].to_vec(),
            rows: self.rows.clone(),
        }
    }

    fn dual_feasible(&self) -> bool {
        let tol = self.opts.opt_tol;
        (0..self.cols.len()).all(|k| match self.status[k] {
            Status::Basic(_) => true,
            _ if self.is_fixed(k) => true,
            Status::Lower => self.d[k] >= -tol,
            Status::Upper => self.d[k] <= tol,
            Status::Free => self.d[k].abs() <= tol,
        })
    }

    /// Replaces each out-of-bounds logical of the slack basis by an artificial.
    fn install_artificials(&mut self) {
        for i in 0..self.rows.len() {
            let s = self.logical_of_row[i];
            let v = self.x[s];
            if v >= self.lo[s] && v <= self.hi[s] {
                continue;
            }
            let (st, rest) = resting_place(self.lo[s], self.hi[s]);
            self.x[s] = rest;
            self.status[s] = st;
            let r = v - rest;
            let c = self.cols.len();
            self.cols.push(Col::Artificial(i, r < 0.0));
            self.lo.push(0.0);
            self.hi.push(f64::INFINITY);
            self.x.push(r.abs());
            self.status.push(Status::Basic(i));
            self.cost.push(0.0);
            self.d.push(0.0);
            self.basis[i] = c;
            let sign = if r >= 0.0 { 1.0 } else { -1.0 };
            for (k, t) in self.tab.iter_mut().enumerate() {
                t.push(if k == i { sign } else { 0.0 });
            }
            // B^-1 row i is sign * e_i.
            if sign < 0.0 {
                for v in self.tab[i].iter_mut() {
                    *v = -*v;
                }
            }
        }
    }

    /// Restores optimality after `add_row`/`set_bounds` from the last optimal basis.
    pub fn reoptimize(&mut self) -> Result<(), LpError> {
        if !self.solved {
            return self.solve();
        }
        let cost = self.cost.clone();
        self.dual(&cost)?;
        // Harris steps can leave tiny dual infeasibilities behind.
        if let Primal::Unbounded(j) = self.primal(&cost)? {
            return Err(LpError::Unbounded { var: self.struct_index(j) });
        }
        Ok(())
    }

    /// Appends a constraint over structural variables; returns its row index.
    /// Only valid after a successful `solve`.
    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        assert!(self.solved, "add_row requires an optimal basis");
        let coeffs = merge_coeffs(coeffs);
        let new_col = self.cols.len();
        let i = self.rows.len();
        for t in self.tab.iter_mut() {
            t.push(0.0);
        }
        let (l, h) = logical_bounds(sense);
        self.cols.push(Col::Logical(i));
        self.lo.push(l);
        self.hi.push(h);
        self.cost.push(0.0);
        self.d.push(0.0);

        let mut t = vec![0.0; new_col + 1];
        for &(j, a) in &coeffs {
            t[j] += a;
        }
        t[new_col] = 1.0;
        for &(j, a) in &coeffs {
            if let Status::Basic(k) = self.status[j] {
                let src = &self.tab[k];
                for (v, s) in t.iter_mut().zip(src) {
                    *v -= a * s;
                }
            }
        }
        for v in t.iter_mut() {
            if v.abs() < ZAP {
                *v = 0.0;
            }
        }
        // Basic columns must stay unit vectors.
        for &b in &self.basis {
            t[b] = 0.0;
        }
        t[new_col] = 1.0;
        let act: f64 = coeffs.iter().map(|&(j, a)| a * self.x[j]).sum();
        self.x.push(rhs - act);
        self.status.push(Status::Basic(i));
        self.basis.push(new_col);
        self.tab.push(t);
        self.rows.push(Row { coeffs, sense, rhs });
        self.logical_of_row.push(new_col);
        i
    }

    /// Changes the bounds of structural variable `j`.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(j < self.n_struct);
        assert!(self.solved, "set_bounds requires an optimal basis");
        self.lo[j] = lo;
        self.hi[j] = hi;
        match self.status[j] {
            Status::Basic(_) => {}
            st => {
                let (new_st, v) = match st {
                    Status::Upper if hi.is_finite() => (Status::Upper, hi),
                    Status::Lower if lo.is_finite() => (Status::Lower, lo),
                    _ => resting_place(lo, hi),
                };
                // Keep dual feasibility where possible: a side switch is only
                // needed when the old side became infinite.
                let delta = v - self.x[j];
                self.shift_nonbasic(j, delta);
                self.status[j] = new_st;
            }
        }
    }

    pub fn solution(&self) -> Solution {
        let n = self.n_struct;
        let x = self.x[..n].to_vec();
        let reduced_costs = self.d[..n].to_vec();
        let row_duals: Vec<f64> = self.logical_of_row.iter().map(|&s| -self.d[s]).collect();
        let objective = self.cost[..n].iter().zip(&x).map(|(c, v)| c * v).sum();
        let mut dual_objective: f64 = self
            .rows
            .iter()
            .zip(&row_duals)
            .map(|(r, y)| r.rhs * y)
            .sum();
        for j in 0..n {
            match self.status[j] {
                Status::Lower => dual_objective += self.lo[j] * self.d[j],
                Status::Upper => dual_objective += self.hi[j] * self.d[j],
                _ => {}
            }
        }
        Solution {
            x,
            row_duals,
            reduced_costs,
            objective,
            dual_objective,
        }
    }

    fn struct_index(&self, col: usize) -> Option<usize> {
        match self.cols[col] {
            Col::Struct(j) => Some(j),
            _ => None,
        }
    }

    fn shift_nonbasic(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[j] += delta;
        for (i, t) in self.tab.iter().enumerate() {
            let a = t[j];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * delta;
            }
        }
    }

    /// Reduced costs for `cost` under the current basis.
    fn price(&mut self, cost: &[f64]) {
        self.d.clear();
        self.d.extend_from_slice(cost);
        for (i, t) in self.tab.iter().enumerate() {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for (dk, tk) in self.d.iter_mut().zip(t) {
                    *dk -= cb * tk;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn is_fixed(&self, k: usize) -> bool {
        self.lo[k] == self.hi[k]
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for k in 0..self.cols.len() {
            let dk = self.d[k];
            let dir = match self.status[k] {
                Status::Basic(_) => continue,
                _ if self.is_fixed(k) => continue,
                Status::Lower if dk < -tol => 1.0,
                Status::Upper if dk > tol => -1.0,
                Status::Free if dk.abs() > tol => -dk.signum(),
                _ => continue,
            };
            if bland {
                return Some((k, dir));
            }
            let score = dk.abs();
            if best.map_or(true, |b| score > b.2) {
                best = Some((k, dir, score));
            }
        }
        best.map(|(k, dir, _)| (k, dir))
    }

    fn primal(&mut self, cost: &[f64]) -> Result<Primal, LpError> {
        let ftol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        let mut stall = 0usize;
        loop {
            self.bump()?;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor(cost);
            }
            let Some((q, dir)) = self.choose_entering(stall > STALL_LIMIT) else {
                if self.since_refactor > 0 {
                    self.refactor(cost);
                    continue;
                }
                return Ok(Primal::Optimal);
            };

            // Harris pass one.
            let mut bound = f64::INFINITY;
            for (i, t) in self.tab.iter().enumerate() {
                let a = dir * t[q];
                if a.abs() <= ptol {
                    continue;
                }
                let b = self.basis[i];
                let r = if a > 0.0 {
                    (self.x[b] - self.lo[b] + ftol) / a
                } else {
                    (self.hi[b] - self.x[b] + ftol) / -a
                };
                if r < bound {
                    bound = r;
                }
            }
            let flip = self.hi[q] - self.lo[q];
            if bound.is_infinite() && flip.is_infinite() {
                return Ok(Primal::Unbounded(q));
            }
            // Pass two: largest pivot among rows within the relaxed bound.
            let mut leave: Option<(usize, f64, f64)> = None;
            for (i, t) in self.tab.iter().enumerate() {
                let a = dir * t[q];
                if a.abs() <= ptol {
                    continue;
                }
                let b = self.basis[i];
                let r = if a > 0.0 {
                    (self.x[b] - self.lo[b]) / a
                } else {
                    (self.hi[b] - self.x[b]) / -a
                };
                if r <= bound && leave.map_or(true, |l| a.abs() > l.1) {
                    leave = Some((i, a.abs(), r.max(0.0)));
                }
            }

            match leave {
                Some((_, _, r)) if flip > r => {
                    let (row, _, theta) = leave.unwrap();
                    stall = if theta < 1e-12 { stall + 1 } else { 0 };
                    self.step(q, dir * theta);
                    let b = self.basis[row];
                    let to_lower = dir * self.tab[row][q] > 0.0;
                    self.pivot(row, q);
                    if to_lower {
                        self.x[b] = self.lo[b];
                        self.status[b] = Status::Lower;
                    } else {
                        self.x[b] = self.hi[b];
                        self.status[b] = Status::Upper;
                    }
                }
                _ => {
                    stall = 0;
                    self.step(q, dir * flip);
                    if dir > 0.0 {
                        self.x[q] = self.hi[q];
                        self.status[q] = Status::Upper;
                    } else {
                        self.x[q] = self.lo[q];
                        self.status[q] = Status::Lower;
                    }
                }
            }
        }
    }

    fn dual(&mut self, cost: &[f64]) -> Result<(), LpError> {
        let ftol = self.opts.feas_tol;
        let ptol = self.opts.pivot_tol;
        let otol = self.opts.opt_tol;
        loop {
            self.bump()?;
            if self.since_refactor >= REFACTOR_EVERY {
                self.refactor(cost);
            }
            let mut leave: Option<(usize, f64, f64, bool)> = None;
            for (i, &b) in self.basis.iter().enumerate() {
                let v = self.x[b];
                let (gap, target, up) = if v < self.lo[b] - ftol * (1.0 + self.lo[b].abs()) {
                    (self.lo[b] - v, self.lo[b], true)
                } else if v > self.hi[b] + ftol * (1.0 + self.hi[b].abs()) {
                    (v - self.hi[b], self.hi[b], false)
                } else {
                    continue;
                };
                if leave.map_or(true, |l| gap > l.1) {
                    leave = Some((i, gap, target, up));
                }
            }
            let Some((r, _, target, up)) = leave else {
                if self.since_refactor > 0 {
                    self.refactor(cost);
                    continue;
                }
                return Ok(());
            };

            let row = &self.tab[r];
            let eligible = |k: usize, a: f64, st: Status| -> Option<f64> {
                if a.abs() <= ptol {
                    return None;
                }
                // x_B(r) moves by -a * t for a nonbasic step t.
                let ok = match st {
                    Status::Lower => (a < 0.0) == up,
                    Status::Upper => (a > 0.0) == up,
                    Status::Free => true,
                    Status::Basic(_) => false,
                };
                if !ok {
                    return None;
                }
                let dk = match st {
                    Status::Lower => self.d[k].max(0.0),
                    Status::Upper => (-self.d[k]).max(0.0),
                    _ => self.d[k].abs(),
                };
                Some(dk)
            };
            let mut bound = f64::INFINITY;
            for k in 0..self.cols.len() {
                if self.is_fixed(k) {
                    continue;
                }
                if let Some(dk) = eligible(k, row[k], self.status[k]) {
                    bound = bound.min((dk + otol) / row[k].abs());
                }
            }
            if bound.is_infinite() {
                let rows = self
                    .logical_of_row
                    .iter()
                    .enumerate()
                    .filter(|(_, &s)| row[s].abs() > 1e-9)
                    .map(|(i, _)| i)
                    .collect();
                return Err(LpError::Infeasible { rows });
            }
            let mut enter: Option<(usize, f64)> = None;
            for k in 0..self.cols.len() {
                if self.is_fixed(k) {
                    continue;
                }
                if let Some(dk) = eligible(k, row[k], self.status[k]) {
                    if dk / row[k].abs() <= bound && enter.map_or(true, |e| row[k].abs() > e.1) {
                        enter = Some((k, row[k].abs()));
                    }
                }
            }
            let (q, _) = enter.expect("harris pass two finds a column");
            let b = self.basis[r];
            let t = (self.x[b] - target) / self.tab[r][q];
            self.step(q, t);
            self.pivot(r, q);
            self.x[b] = target;
            self.status[b] = if up { Status::Lower } else { Status::Upper };
        }
    }

    fn bump(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.opts.max_iter {
            Err(LpError::IterationLimit(self.opts.max_iter))
        } else {
            Ok(())
        }
    }

    /// Moves nonbasic column `q` by `delta` and updates basic values.
    fn step(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[q] += delta;
        for (i, t) in self.tab.iter().enumerate() {
            let a = t[q];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * delta;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        self.since_refactor += 1;
        let mut prow = std::mem::take(&mut self.tab[r]);
        let inv = 1.0 / prow[q];
        let mut nz = Vec::with_capacity(prow.len() / 4);
        for (k, v) in prow.iter_mut().enumerate() {
            *v *= inv;
            if v.abs() < ZAP {
                *v = 0.0;
            } else {
                nz.push(k);
            }
        }
        prow[q] = 1.0;
        let dense = nz.len() * 3 > prow.len();
        let update = |row: &mut Vec<f64>, f: f64| {
            if dense {
                for (a, b) in row.iter_mut().zip(&prow) {
                    *a -= f * b;
                }
            } else {
                for &k in &nz {
                    let v = row[k] - f * prow[k];
                    row[k] = if v.abs() < ZAP { 0.0 } else { v };
                }
            }
            row[q] = 0.0;
        };
        for (i, row) in self.tab.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[q];
            if f != 0.0 {
                update(row, f);
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            update(&mut self.d, f);
        }
        let old = self.basis[r];
        self.tab[r] = prow;
        self.basis[r] = q;
        self.status[q] = Status::Basic(r);
        self.status[old] = Status::Lower;
    }

    fn column(&self, k: usize, acols: &[Vec<(usize, f64)>]) -> Vec<(usize, f64)> {
        match self.cols[k] {
            Col::Struct(j) => acols[j].clone(),
            Col::Logical(i) => vec![(i, 1.0)],
            Col::Artificial(i, neg) => vec![(i, if neg { -1.0 } else { 1.0 })],
        }
    }

    /// Rebuilds tableau, basic values and reduced costs from the original rows.
    fn refactor(&mut self, cost: &[f64]) {
        self.since_refactor = 0;
        let m = self.rows.len();
        let ncols = self.cols.len();
        let mut acols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.n_struct];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, a) in &r.coeffs {
                acols[j].push((i, a));
            }
        }
        let lu = loop {
            let bcols = self.basis.iter().map(|&k| self.column(k, &acols)).collect();
            match BasisLu::new(m, bcols) {
                Ok(lu) => break lu,
                Err(sing) => {
                    // Swap dependent columns for the logicals of uncovered rows.
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let old = self.basis[p];
                        let (st, v) = nearest_bound(self.lo[old], self.hi[old], self.x[old]);
                        self.status[old] = st;
                        self.x[old] = v;
                        let s = self.logical_of_row[r];
                        self.basis[p] = s;
                        self.status[s] = Status::Basic(p);
                    }
                }
            }
        };

        let mut w: Vec<f64> = self.rows.iter().map(|r| r.rhs).collect();
        for k in 0..ncols {
            if !matches!(self.status[k], Status::Basic(_)) && self.x[k] != 0.0 {
                for (i, a) in self.column(k, &acols) {
                    w[i] -= a * self.x[k];
                }
            }
        }
        let xb = lu.ftran(w);
        for (p, &k) in self.basis.iter().enumerate() {
            self.x[k] = xb[p];
        }

        // Tableau row p is row p of B^-1 times [A | I | artificials].
        let mut extra: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (k, c) in self.cols.iter().enumerate() {
            match *c {
                Col::Logical(i) => extra[i].push((k, 1.0)),
                Col::Artificial(i, neg) => extra[i].push((k, if neg { -1.0 } else { 1.0 })),
                Col::Struct(_) => {}
            }
        }
        let mut unit = vec![0.0; m];
        for p in 0..m {
            unit[p] = 1.0;
            let binv = lu.btran(&unit);
            unit[p] = 0.0;
            let t = &mut self.tab[p];
            t.iter_mut().for_each(|v| *v = 0.0);
            for (r, &b) in binv.iter().enumerate() {
                if b == 0.0 {
                    continue;
                }
                for &(j, a) in &self.rows[r].coeffs {
                    t[j] += b * a;
                }
                for &(k, a) in &extra[r] {
                    t[k] += b * a;
                }
            }
            for v in t.iter_mut() {
                if v.abs() < ZAP {
                    *v = 0.0;
                }
            }
            for &k in &self.basis {
                t[k] = 0.0;
            }
            t[self.basis[p]] = 1.0;
        }

        let cb: Vec<f64> = self.basis.iter().map(|&k| cost[k]).collect();
        let y = lu.btran(&cb);
        for k in 0..ncols {
            self.d[k] = match self.status[k] {
                Status::Basic(_) => 0.0,
                _ => cost[k] - self.column(k, &acols).iter().map(|&(i, a)| a * y[i]).sum::<f64>(),
            };
        }
    }

    fn drop_artificials(&mut self) {
        // Pivot basic artificials (all at zero) out where the row allows it.
        for r in 0..self.basis.len() {
            if !matches!(self.cols[self.basis[r]], Col::Artificial(..)) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for (k, c) in self.cols.iter().enumerate() {
                if matches!(c, Col::Artificial(..)) || matches!(self.status[k], Status::Basic(_)) {
                    continue;
                }
                let a = self.tab[r][k].abs();
                if a > 1e-7 && best.map_or(true, |b| a > b.1) {
                    best = Some((k, a));
                }
            }
            if let Some((q, _)) = best {
                let b = self.basis[r];
                let t = (self.x[b] - 0.0) / self.tab[r][q];
                self.step(q, t);
                self.pivot(r, q);
                self.x[b] = 0.0;
            }
        }
        let keep: Vec<bool> = (0..self.cols.len())
            .map(|k| !matches!(self.cols[k], Col::Artificial(..)) || matches!(self.status[k], Status::Basic(_)))
            .collect();
        let mut remap = vec![usize::MAX; self.cols.len()];
        let mut next = 0;
        for (k, &kp) in keep.iter().enumerate() {
            if kp {
                remap[k] = next;
                next += 1;
            }
        }
        let filter = |v: &mut Vec<f64>| {
            let mut idx = 0;
            v.retain(|_| {
                let k = keep[idx];
                idx += 1;
                k
            });
        };
        for t in self.tab.iter_mut() {
            filter(t);
        }
        filter(&mut self.lo);
        filter(&mut self.hi);
        filter(&mut self.x);
        filter(&mut self.cost);
        filter(&mut self.d);
        let mut idx = 0;
        self.status.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        let mut idx = 0;
        self.cols.retain(|_| {
            let k = keep[idx];
            idx += 1;
            k
        });
        for b in self.basis.iter_mut() {
            *b = remap[*b];
        }
        for s in self.logical_of_row.iter_mut() {
            *s = remap[*s];
        }
        // Remaining artificials sit on redundant rows; pin them at zero.
        for k in 0..self.cols.len() {
            if matches!(self.cols[k], Col::Artificial(..)) {
                self.hi[k] = 0.0;
                self.x[k] = 0.0;
            }
        }
    }
}

fn logical_bounds(sense: Sense) -> (f64, f64) {
    match sense {
        Sense::Le => (0.0, f64::INFINITY),
        Sense::Ge => (f64::NEG_INFINITY, 0.0),
        Sense::Eq => (0.0, 0.0),
    }
}

fn nearest_bound(lo: f64, hi: f64, v: f64) -> (Status, f64) {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) if hi - v < v - lo => (Status::Upper, hi),
        (true, _) => (Status::Lower, lo),
        (false, true) => (Status::Upper, hi),
        _ => (Status::Free, 0.0),
    }
}

fn resting_place(lo: f64, hi: f64) -> (Status, f64) {
    if lo.is_finite() {
        (Status::Lower, lo)
    } else if hi.is_finite() {
        (Status::Upper, hi)
    } else {
        (Status::Free, 0.0)
    }
}

