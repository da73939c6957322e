//! Hourly AS cost allocation as an airport game: proportional shares, the
//! Shapley value (sequential closed form) and the nucleolus (inductive
//! form over cost types), each with an enumeration oracle.

use std::collections::BTreeMap;

use fcas_lp::{Problem, Sense, Simplex};
use serde::{Deserialize, Serialize};

use crate::error::AllocationError;
use crate::pricing::StandAloneCosts;

/// Players of one hour with their stand-alone costs, ascending by cost and
/// then by id. The cost of a coalition is its largest member cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AirportGame {
    pub hour: usize,
    pub players: Vec<(String, f64)>,
}

impl AirportGame {
    pub fn new(hour: usize, players: impl IntoIterator<Item = (String, f64)>) -> Result<Self, AllocationError> {
        let mut players: Vec<(String, f64)> = players.into_iter().collect();
        if let Some(&(_, c)) = players.iter().find(|(_, c)| !(*c >= 0.0) || !c.is_finite()) {
            return Err(AllocationError::NegativeCost(c));
        }
        players.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        Ok(Self { hour, players })
    }

    /// Game with players named `p1, p2, ...`.
    pub fn from_costs(costs: &[f64]) -> Result<Self, AllocationError> {
        Self::new(0, costs.iter().enumerate().map(|(i, &c)| (format!("p{}", i + 1), c)))
    }

    pub fn len(&self) -> usize {
        self.players.len()
    }

    pub fn is_empty(&self) -> bool {
        self.players.is_empty()
    }

    pub fn costs(&self) -> Vec<f64> {
        self.players.iter().map(|p| p.1).collect()
    }

    /// Cost of the grand coalition.
    pub fn total(&self) -> f64 {
        self.players.last().map_or(0.0, |p| p.1)
    }

    /// Cost of the coalition encoded by the bit mask `set`.
    pub fn coalition_cost(&self, set: u64) -> f64 {
        self.players
            .iter()
            .enumerate()
            .filter(|(i, _)| set >> i & 1 == 1)
            .fold(0.0, |m, (_, p)| m.max(p.1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rule {
    Proportional,
    Shapley,
    Nucleolus,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Proportional, Rule::Shapley, Rule::Nucleolus];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Proportional => "proportional",
            Rule::Shapley => "shapley",
            Rule::Nucleolus => "nucleolus",
        }
    }
}

impl std::str::FromStr for Rule {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown rule `{s}` (proportional, shapley, nucleolus)"))
    }
}

/// Payments of one hour under one rule, in the game's player order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub rule: String,
    pub hour: usize,
    pub shares: Vec<(String, f64)>,
    /// `sum(phi) - C(N)`.
    pub efficiency_gap: f64,
}

impl Allocation {
    fn new(rule: &str, game: &AirportGame, phi: Vec<f64>) -> Self {
        let efficiency_gap = phi.iter().sum::<f64>() - game.total();
        Self {
            rule: rule.into(),
            hour: game.hour,
            shares: game.players.iter().map(|p| p.0.clone()).zip(phi).collect(),
            efficiency_gap,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.shares.iter().map(|s| s.1).collect()
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.shares.iter().find(|s| s.0 == id).map(|s| s.1)
    }
}

/// Shares proportional to stand-alone costs, scaled to the largest cost.
pub fn proportional(game: &AirportGame) -> Allocation {
    let sum: f64 = game.players.iter().map(|p| p.1).sum();
    let total = game.total();
    let phi = if sum > 0.0 {
        game.players.iter().map(|p| p.1 * total / sum).collect()
    } else {
        vec![0.0; game.len()]
    };
    Allocation::new(Rule::Proportional.name(), game, phi)
}

/// Each cost increment is split equally among the players that need it.
pub fn shapley_airport(game: &AirportGame) -> Allocation {
    let n = game.len();
    let mut phi = Vec::with_capacity(n);
    let mut acc = 0.0;
    let mut prev = 0.0;
    for (k, p) in game.players.iter().enumerate() {
        acc += (p.1 - prev) / (n - k) as f64;
        prev = p.1;
        phi.push(acc);
    }
    Allocation::new(Rule::Shapley.name(), game, phi)
}

pub const SHAPLEY_ORACLE_MAX: usize = 12;

/// Shapley value by summing weighted marginal costs over every coalition.
pub fn shapley_bruteforce(game: &AirportGame, max_n: usize) -> Result<Allocation, AllocationError> {
    let n = game.len();
    if n > max_n || n > 30 {
        return Err(AllocationError::TooManyPlayers { players: n, max: max_n.min(30) });
    }
    // weight[s] = s! (n-s-1)! / n!
    let mut fact = vec![1.0f64; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1] * i as f64;
    }
    let weight: Vec<f64> = (0..n).map(|s| fact[s] * fact[n - s - 1] / fact[n]).collect();
    let costs: Vec<f64> = (0..1u64 << n).map(|m| game.coalition_cost(m)).collect();
    let mut phi = Vec::with_capacity(n);
    for i in 0..n {
        let bit = 1u64 << i;
        let mut sum = Neumaier::default();
        for m in (0..1u64 << n).filter(|m| m & bit == 0) {
            let s = m.count_ones() as usize;
            sum.add(weight[s] * (costs[(m | bit) as usize] - costs[m as usize]));
        }
        phi.push(sum.value());
    }
    Ok(Allocation::new(Rule::Shapley.name(), game, phi))
}

/// Compensated summation.
#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Players merged into cost types, ascending by cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TypedGroups {
    pub hour: usize,
    pub groups: Vec<CostType>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostType {
    pub cost: f64,
    pub members: Vec<String>,
}

impl TypedGroups {
    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g.members.len()).collect()
    }

    /// Cumulative member counts `l_k`.
    pub fn cumulative(&self) -> Vec<usize> {
        self.groups
            .iter()
            .scan(0, |acc, g| {
                *acc += g.members.len();
                Some(*acc)
            })
            .collect()
    }
}

pub const GROUP_TOL: f64 = 1e-9;

/// Merges consecutive players whose costs lie within `tol` (relative to
/// the largest cost) of the first member of the band; the band's cost is
/// its largest member cost.
pub fn group_by_type(game: &AirportGame, tol: f64) -> TypedGroups {
    let band = tol * game.total().abs().max(1.0);
    let mut groups: Vec<CostType> = Vec::new();
    let mut start = f64::NAN;
    for (id, c) in &game.players {
        match groups.last_mut() {
            Some(g) if *c - start <= band => {
                g.cost = g.cost.max(*c);
                g.members.push(id.clone());
            }
            _ => {
                start = *c;
                groups.push(CostType { cost: *c, members: vec![id.clone()] });
            }
        }
    }
    TypedGroups { hour: game.hour, groups }
}

/// One step of the nucleolus recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NucleolusStep {
    pub alpha: f64,
    /// Last type (1-based) settled by this step.
    pub k: usize,
    /// Members settled by this step.
    pub settled: usize,
}

/// Nucleolus of the airport game by the inductive excess recursion.
pub fn nucleolus_airport(groups: &TypedGroups) -> Result<Allocation, AllocationError> {
    let (phi_types, _) = nucleolus_steps(groups)?;
    let mut ids = Vec::new();
    let mut phi = Vec::new();
    for (g, v) in groups.groups.iter().zip(&phi_types) {
        for m in &g.members {
            ids.push((m.clone(), g.cost));
            phi.push(*v);
        }
    }
    let game = AirportGame { hour: groups.hour, players: ids };
    let mut a = Allocation::new(Rule::Nucleolus.name(), &game, phi);
    a.efficiency_gap = a.values().iter().sum::<f64>() - groups.groups.last().map_or(0.0, |g| g.cost);
    Ok(a)
}

/// Per-type payments together with the recursion trace.
pub fn nucleolus_steps(groups: &TypedGroups) -> Result<(Vec<f64>, Vec<NucleolusStep>), AllocationError> {
    let m = groups.groups.len();
    if m == 0 {
        return Err(AllocationError::Empty);
    }
    let cost: Vec<f64> = groups.groups.iter().map(|g| g.cost).collect();
    let count = groups.counts();
    let mut phi = vec![0.0; m];
    let mut steps: Vec<NucleolusStep> = Vec::new();
    // Amount already assigned, i.e. -sum_r l^r * alpha_r.
    let mut paid = 0.0;
    let mut done = 0usize;
    while done < m {
        let mut best: Option<(f64, usize)> = None;
        let mut remaining = 0usize;
        for k in done..m {
            remaining += count[k];
            let denom = if k + 1 < m { remaining + 1 } else { remaining } as f64;
            let v = (cost[k] - paid) / denom;
            if best.map_or(true, |(b, _)| v < b) {
                best = Some((v, k));
            }
        }
        let (v, k) = best.expect("nonempty range");
        let settled: usize = count[done..=k].iter().sum();
        for p in phi.iter_mut().take(k + 1).skip(done) {
            *p = v;
        }
        paid += v * settled as f64;
        steps.push(NucleolusStep { alpha: -v, k: k + 1, settled });
        assert!(k + 1 > done, "split index must increase");
        done = k + 1;
    }
    Ok((phi, steps))
}

pub const NUCLEOLUS_ORACLE_MAX: usize = 8;

/// Nucleolus by sequential LPs over all proper coalitions: minimise the
/// largest excess `phi(S) - C(S)`, fix every coalition with a positive
/// multiplier at that level (tight in all optimal solutions), and repeat
/// until the fixed coalitions determine the payments.
pub fn nucleolus_lp_oracle(game: &AirportGame, max_n: usize) -> Result<Allocation, AllocationError> {
    let n = game.len();
    if n > max_n || n > 20 {
        return Err(AllocationError::TooManyPlayers { players: n, max: max_n.min(20) });
    }
    if n == 0 {
        return Err(AllocationError::Empty);
    }
    let full = (1u64 << n) - 1;
    let mut fixed: Vec<(u64, f64)> = Vec::new();
    let mut open: Vec<u64> = (1..full).collect();
    let mut space = RowSpace::new(n);
    space.insert(full);
    while space.rank() < n {
        let (eps, _, duals) = excess_lp(game, &fixed, &open)?;
        let before = fixed.len();
        let mut keep = Vec::with_capacity(open.len());
        for (&s, &y) in open.iter().zip(&duals) {
            if y > 1e-9 {
                fixed.push((s, eps));
                space.insert(s);
            } else {
                keep.push(s);
            }
        }
        if fixed.len() == before {
            return Err(AllocationError::Lp("no coalition became tight".into()));
        }
        open = keep;
    }
    let (_, phi, _) = excess_lp(game, &fixed, &[])?;
    Ok(Allocation::new(Rule::Nucleolus.name(), game, phi))
}

/// Solves `min eps` subject to the open excess rows, the fixed coalitions
/// and efficiency. Returns `eps`, the payments and the open-row multipliers.
fn excess_lp(game: &AirportGame, fixed: &[(u64, f64)], open: &[u64]) -> Result<(f64, Vec<f64>, Vec<f64>), AllocationError> {
    let n = game.len();
    let inf = f64::INFINITY;
    let mut lp = Problem::new();
    let phi: Vec<usize> = (0..n).map(|_| lp.add_var(0.0, -inf, inf)).collect();
    let eps = if open.is_empty() { lp.add_var(0.0, 0.0, 0.0) } else { lp.add_var(1.0, -inf, inf) };
    let row = |s: u64| -> Vec<(usize, f64)> { (0..n).filter(|i| s >> i & 1 == 1).map(|i| (phi[i], 1.0)).collect() };
    for &s in open {
        let mut r = row(s);
        r.push((eps, -1.0));
        lp.add_row(r, Sense::Le, game.coalition_cost(s));
    }
    for &(s, e) in fixed {
        lp.add_row(row(s), Sense::Eq, game.coalition_cost(s) + e);
    }
    lp.add_row(row((1u64 << n) - 1), Sense::Eq, game.total());
    let mut sim = Simplex::new(&lp, Default::default());
    sim.solve().map_err(|e| AllocationError::Lp(e.to_string()))?;
    let sol = sim.solution();
    let duals = sol.row_duals[..open.len()].iter().map(|y| -y).collect();
    Ok((sol.x[eps], sol.x[..n].to_vec(), duals))
}

/// Incremental rank of 0/1 coalition vectors.
struct RowSpace {
    n: usize,
    rows: Vec<Vec<f64>>,
}

impl RowSpace {
    fn new(n: usize) -> Self {
        Self { n, rows: Vec::new() }
    }

    fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Adds the indicator of `s`; returns whether the rank grew.
    fn insert(&mut self, s: u64) -> bool {
        let mut v: Vec<f64> = (0..self.n).map(|i| (s >> i & 1) as f64).collect();
        for r in &self.rows {
            let p = r.iter().position(|x| x.abs() > 1e-9).unwrap();
            if v[p].abs() > 1e-12 {
                let f = v[p] / r[p];
                for (a, b) in v.iter_mut().zip(r) {
                    *a -= f * b;
                }
            }
        }
        if v.iter().all(|x| x.abs() <= 1e-9) {
            return false;
        }
        self.rows.push(v);
        true
    }
}

/// Coalitional checks of an allocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoreReport {
    pub efficiency_gap: f64,
    /// Largest `phi_i - C({i})`.
    pub worst_individual: f64,
    /// Largest `phi(S) - C(S)` over proper coalitions, with its members.
    pub worst_coalition: f64,
    pub worst_members: Vec<String>,
    pub tolerance: f64,
    pub efficient: bool,
    pub individually_rational: bool,
    pub coalitionally_rational: bool,
}

impl CoreReport {
    pub fn pass(&self) -> bool {
        self.efficient && self.individually_rational && self.coalitionally_rational
    }
}

pub const CORE_CHECK_MAX: usize = 20;

/// Enumerates every coalition; tolerance is `1e-9 * max(1, C(N))`.
pub fn core_check(alloc: &Allocation, game: &AirportGame) -> Result<CoreReport, AllocationError> {
    let n = game.len();
    if n > CORE_CHECK_MAX {
        return Err(AllocationError::TooManyPlayers { players: n, max: CORE_CHECK_MAX });
    }
    let phi: Vec<f64> = game
        .players
        .iter()
        .map(|(id, _)| alloc.get(id).unwrap_or(0.0))
        .collect();
    let tol = 1e-9 * game.total().max(1.0);
    let efficiency_gap = phi.iter().sum::<f64>() - game.total();
    let worst_individual = (0..n).map(|i| phi[i] - game.players[i].1).fold(f64::NEG_INFINITY, f64::max);
    let full = if n == 0 { 0 } else { (1u64 << n) - 1 };
    let mut worst = (f64::NEG_INFINITY, 0u64);
    for s in 1..full {
        let paid: f64 = (0..n).filter(|i| s >> i & 1 == 1).map(|i| phi[i]).sum();
        let e = paid - game.coalition_cost(s);
        if e > worst.0 {
            worst = (e, s);
        }
    }
    let worst_members = (0..n).filter(|i| worst.1 >> i & 1 == 1).map(|i| game.players[i].0.clone()).collect();
    Ok(CoreReport {
        efficiency_gap,
        worst_individual,
        worst_coalition: worst.0,
        worst_members,
        tolerance: tol,
        efficient: efficiency_gap.abs() <= tol,
        individually_rational: worst_individual <= tol,
        coalitionally_rational: worst.0 <= tol,
    })
}

/// Allocation of one rule over every hour, with technology totals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationSeries {
    pub rule: String,
    /// Per hour, every unit with an entry that hour (zero-cost units pay 0).
    pub hours: Vec<Allocation>,
    /// Horizon total per technology.
    pub technologies: Vec<(String, f64)>,
}

impl AllocationSeries {
    /// Largest `|sum(phi) - C(N)|` over hours.
    pub fn worst_efficiency_gap(&self) -> f64 {
        self.hours.iter().map(|a| a.efficiency_gap.abs()).fold(0.0, f64::max)
    }
}

/// Applies `rule` hour by hour. Units with zero stand-alone cost are left
/// out of the game and re-inserted with zero payment.
pub fn allocate_hourly(standalone: &StandAloneCosts, rule: Rule) -> Result<AllocationSeries, AllocationError> {
    let mut hours = Vec::with_capacity(standalone.hours.len());
    let mut tech: BTreeMap<String, f64> = BTreeMap::new();
    for (t, entries) in standalone.hours.iter().enumerate() {
        let game = AirportGame::new(t, entries.iter().filter(|e| e.omega > 0.0).map(|e| (e.id.clone(), e.omega)))?;
        let mut alloc = if game.is_empty() {
            Allocation::new(rule.name(), &game, Vec::new())
        } else {
            match rule {
                Rule::Proportional => proportional(&game),
                Rule::Shapley => shapley_airport(&game),
                Rule::Nucleolus => nucleolus_airport(&group_by_type(&game, GROUP_TOL))?,
            }
        };
        alloc.hour = t;
        for e in entries.iter().filter(|e| e.omega <= 0.0) {
            alloc.shares.push((e.id.clone(), 0.0));
        }
        for e in entries {
            let v = alloc.get(&e.id).unwrap_or(0.0);
            *tech.entry(e.technology.clone()).or_insert(0.0) += v;
        }
        hours.push(alloc);
    }
    Ok(AllocationSeries { rule: rule.name().into(), hours, technologies: tech.into_iter().collect() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn proportional_examples() {
        let g = AirportGame::from_costs(&[4.0, 6.0, 10.0]).unwrap();
        assert!(close(&proportional(&g).values(), &[2.0, 3.0, 5.0], 1e-12));
        let g = AirportGame::from_costs(&[1.0, 1.0, 2.0]).unwrap();
        assert!(close(&proportional(&g).values(), &[0.5, 0.5, 1.0], 1e-12));
        let g = AirportGame::from_costs(&[7.0]).unwrap();
        assert_eq!(proportional(&g).values(), vec![7.0]);
        let g = AirportGame::from_costs(&[0.0, 0.0]).unwrap();
        assert_eq!(proportional(&g).values(), vec![0.0, 0.0]);
    }

    #[test]
    fn shapley_examples() {
        let g = AirportGame::from_costs(&[1.0, 2.0, 3.0]).unwrap();
        assert!(close(&shapley_airport(&g).values(), &[1.0 / 3.0, 5.0 / 6.0, 11.0 / 6.0], 1e-15));
        let g = AirportGame::from_costs(&[5.0, 5.0]).unwrap();
        assert_eq!(shapley_airport(&g).values(), vec![2.5, 2.5]);
    }

    #[test]
    fn grouping() {
        let g = AirportGame::from_costs(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(group_by_type(&g, GROUP_TOL).counts(), vec![2, 1]);
        let g = AirportGame::from_costs(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!(group_by_type(&g, GROUP_TOL).counts(), vec![1, 1, 1]);
        let g = AirportGame::from_costs(&[10.0, 10.0 + 1e-12, 20.0]).unwrap();
        let t = group_by_type(&g, 1e-9);
        assert_eq!(t.counts(), vec![2, 1]);
        assert_eq!(t.groups[0].cost, 10.0 + 1e-12);
        assert_eq!(t.cumulative(), vec![2, 3]);
    }

    #[test]
    fn nucleolus_trace() {
        let g = AirportGame::from_costs(&[1.0, 2.0, 3.0]).unwrap();
        let (phi, steps) = nucleolus_steps(&group_by_type(&g, GROUP_TOL)).unwrap();
        assert!(close(&phi, &[0.5, 0.75, 1.75], 1e-15));
        assert_eq!(steps.iter().map(|s| s.k).collect::<Vec<_>>(), vec![1, 2, 3]);
        assert_eq!(steps[0].alpha, -0.5);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(AirportGame::from_costs(&[-1.0]), Err(AllocationError::NegativeCost(_))));
        assert!(matches!(AirportGame::from_costs(&[f64::NAN]), Err(AllocationError::NegativeCost(_))));
        let g = AirportGame::from_costs(&[1.0; 13]).unwrap();
        assert!(matches!(shapley_bruteforce(&g, 12), Err(AllocationError::TooManyPlayers { .. })));
        let g = AirportGame::from_costs(&[1.0; 9]).unwrap();
        assert!(matches!(nucleolus_lp_oracle(&g, 8), Err(AllocationError::TooManyPlayers { .. })));
        assert_eq!(nucleolus_airport(&TypedGroups { hour: 0, groups: vec![] }), Err(AllocationError::Empty));
    }

    #[test]
    fn rule_names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
        }
        assert!("banzhaf".parse::<Rule>().is_err());
    }
}
