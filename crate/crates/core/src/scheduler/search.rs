//! Exact search for the best periodic schedule within bounds.
//!
//! Every periodic steady state of period `T` that delivers `k` packets per
//! source activates each route hop exactly `k` times per period. The search
//! therefore works on *activations* (source, hop):
//!
//! 1. enumerate the maximal admissible activation sets (slot family);
//! 2. bound the achievable rate with the covering LP over that family;
//! 3. for each `(T, k)` in decreasing `k/T` order, find `T` family members
//!    covering every activation `k` times (memoised depth-first search);
//! 4. order the chosen slots cyclically so every transmitted packet is held by
//!    its transmitter and per-source in-flight packets stay within bounds.
//!
//! Which packets a node knows depends only on the routes: a secondary on
//! source X's hop i knows the packet of a primary on source Y's hop j exactly
//! when its transmitter sits on Y's route before position j.

use std::collections::{BTreeMap, HashSet, VecDeque};

use minilp::{ComparisonOp, OptimizationDirection, Problem as LpProblem};

use super::replay::verify_schedule;
use crate::error::{domain, Error, Result};
use crate::schedule::{InFlight, Mode, PacketId, Schedule, Slot, Transmission};
use crate::topology::{Link, Topology, TrafficSpec};

type Mask = u128;
const MAX_ACTIVATIONS: usize = Mask::BITS as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Longest period considered.
    pub t_max: usize,
    /// Most packets per source per period.
    pub k_max: usize,
    /// Most packets of one source held by relays at any slot boundary.
    pub inflight_max: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            t_max: 24,
            k_max: 3,
            inflight_max: 4,
        }
    }
}

/// Work limits guarding against runaway searches on large inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_family: usize,
    pub max_cover_nodes: u64,
    pub max_order_nodes: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_family: 200_000,
            max_cover_nodes: 20_000_000,
            max_order_nodes: 200_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub schedule: Schedule,
    /// Covering-LP optimum of per-source deliveries per slot (no period limit).
    pub lp_bound: f64,
    pub family_size: usize,
    /// `(T, k)` pairs examined before the answer, including it.
    pub candidates_tried: usize,
}

/// Best schedule under `bounds` with the default work limits.
pub fn best_periodic_schedule(
    topo: &Topology,
    traffic: &TrafficSpec,
    mode: Mode,
    bounds: &Bounds,
) -> Result<Schedule> {
    search(topo, traffic, mode, bounds, &SearchLimits::default()).map(|o| o.schedule)
}

pub fn search(
    topo: &Topology,
    traffic: &TrafficSpec,
    mode: Mode,
    bounds: &Bounds,
    limits: &SearchLimits,
) -> Result<SearchOutcome> {
    if bounds.t_max == 0 || bounds.k_max == 0 || bounds.inflight_max == 0 {
        return domain("search bounds must be positive");
    }
    if traffic.is_empty() {
        return domain("traffic has no sources");
    }
    let problem = ActivationProblem::new(topo, traffic, mode)?;
    let family = problem.maximal_sets(limits.max_family)?;
    let lp_bound = covering_lp(&family, problem.acts.len())?;

    let mut candidates: Vec<(usize, usize)> = (1..=bounds.t_max)
        .flat_map(|t| (1..=bounds.k_max).map(move |k| (t, k)))
        .filter(|&(t, k)| k as f64 / t as f64 <= lp_bound + 1e-9)
        .collect();
    // Highest rate first, then shortest period.
    candidates.sort_by(|a, b| (b.1 * a.0).cmp(&(a.1 * b.0)).then(a.0.cmp(&b.0)));

    let mut cover = CoverSearch::new(&problem, &family, limits);
    for (i, &(t, k)) in candidates.iter().enumerate() {
        if let Some(order) = cover.run(t, k as u8, bounds.inflight_max)? {
            let schedule = problem.build_schedule(&order, k)?;
            verify_schedule(topo, &schedule, 2)
                .map_err(|e| Error::Numeric(format!("internal: schedule failed replay: {e}")))?;
            return Ok(SearchOutcome {
                schedule,
                lp_bound,
                family_size: family.len(),
                candidates_tried: i + 1,
            });
        }
    }
    Err(Error::Infeasible {
        t_max: bounds.t_max,
        k_max: bounds.k_max,
        inflight_max: bounds.inflight_max,
    })
}

#[derive(Debug, Clone, Copy)]
struct Activation {
    route: usize,
    hop: usize,
    link: Link,
    /// Buffer drained by this hop (none for the source hop).
    takes: Option<usize>,
    /// Buffer filled by this hop (none for the gateway hop).
    gives: Option<usize>,
}

/// Activations of a traffic spec together with their pairwise relations.
pub(crate) struct ActivationProblem<'a> {
    traffic: &'a TrafficSpec,
    mode: Mode,
    acts: Vec<Activation>,
    /// Baseline conflicts, including shared nodes.
    conflict: Vec<Mask>,
    /// Pairs allowed to coexist as primary and secondary.
    pairable: Vec<Mask>,
    /// `knows[a] & bit(b)`: a's transmitter knows b's packet.
    knows: Vec<Mask>,
    buffers: Vec<(usize, usize)>,
}

fn bit(i: usize) -> Mask {
    1 << i
}

fn bits(mut m: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let i = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(i)
        }
    })
}

impl<'a> ActivationProblem<'a> {
    pub(crate) fn new(topo: &Topology, traffic: &'a TrafficSpec, mode: Mode) -> Result<Self> {
        let mut acts = Vec::new();
        let mut buffers = Vec::new();
        for (r, route) in traffic.routes().iter().enumerate() {
            let hops = route.hop_count();
            let first_buf = buffers.len();
            buffers.extend((1..hops).map(|p| (r, p)));
            for h in 0..hops {
                acts.push(Activation {
                    route: r,
                    hop: h,
                    link: route.link(h),
                    takes: (h >= 1).then(|| first_buf + h - 1),
                    gives: (h + 1 < hops).then(|| first_buf + h),
                });
            }
        }
        let m = acts.len();
        if m > MAX_ACTIVATIONS {
            return Err(Error::TooLarge(format!(
                "{m} route hops; at most {MAX_ACTIVATIONS} supported"
            )));
        }
        let mut conflict = vec![0; m];
        let mut pairable = vec![0; m];
        let mut knows = vec![0; m];
        for a in 0..m {
            for b in 0..m {
                if a == b {
                    continue;
                }
                let (la, lb) = (acts[a].link, acts[b].link);
                let route_b = &traffic.routes()[acts[b].route];
                if route_b.nodes()[..acts[b].hop].contains(&la.tx) {
                    knows[a] |= bit(b);
                }
                if topo.conflicts_unchecked(&la, &lb) {
                    conflict[a] |= bit(b);
                }
            }
        }
        for a in 0..m {
            for b in bits(conflict[a]) {
                let shared = acts[a].link.shares_node(&acts[b].link);
                let knowing = knows[a] & bit(b) != 0 || knows[b] & bit(a) != 0;
                if !shared && knowing {
                    pairable[a] |= bit(b);
                }
            }
        }
        Ok(ActivationProblem {
            traffic,
            mode,
            acts,
            conflict,
            pairable,
            knows,
            buffers,
        })
    }

    /// Whether `a` can join `set`, whose already-paired members are `paired`.
    fn admits(&self, set: Mask, paired: Mask, a: usize) -> Option<Mask> {
        let hit = self.conflict[a] & set;
        if hit == 0 {
            return Some(paired);
        }
        if self.mode == Mode::Overlay
            && hit.count_ones() == 1
            && hit & self.pairable[a] == hit
            && hit & paired == 0
        {
            return Some(paired | hit | bit(a));
        }
        None
    }

    /// Maximal admissible activation sets, in a deterministic order.
    pub(crate) fn maximal_sets(&self, cap: usize) -> Result<Vec<Mask>> {
        let m = self.acts.len();
        // later[i]: activations after i that can make i inadmissible. In overlay
        // mode that includes anything able to pair with one of i's conflicts.
        let later: Vec<Mask> = (0..m)
            .map(|i| {
                let after = if i + 1 >= MAX_ACTIVATIONS {
                    0
                } else {
                    !0 << (i + 1)
                };
                let mut blockers = self.conflict[i];
                if self.mode == Mode::Overlay {
                    for p in bits(self.conflict[i]) {
                        blockers |= self.conflict[p];
                    }
                }
                blockers & after
            })
            .collect();
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0 as Mask, 0 as Mask)];
        while let Some((i, set, paired)) = stack.pop() {
            if i == m {
                let maximal =
                    (0..m).all(|a| set & bit(a) != 0 || self.admits(set, paired, a).is_none());
                if maximal {
                    out.push(set);
                    if out.len() > cap {
                        return Err(Error::TooLarge(format!(
                            "more than {cap} maximal slot sets"
                        )));
                    }
                }
                continue;
            }
            let add = self.admits(set, paired, i);
            // Leaving i out only helps when something later can block it.
            if add.is_none() || later[i] != 0 {
                stack.push((i + 1, set, paired));
            }
            if let Some(p) = add {
                stack.push((i + 1, set | bit(i), p));
            }
        }
        out.sort_unstable_by(|a, b| b.count_ones().cmp(&a.count_ones()).then(a.cmp(b)));
        Ok(out)
    }

    /// Replays `order` from its minimal prefill and names every packet.
    fn build_schedule(&self, order: &CyclicOrder, k: usize) -> Result<Schedule> {
        let routes = self.traffic.routes();
        let mut queues: Vec<VecDeque<u64>> = vec![VecDeque::new(); self.buffers.len()];
        let mut next_seq = vec![0u64; routes.len()];
        let mut prefill = Vec::new();
        for r in 0..routes.len() {
            for (b, &(br, pos)) in self.buffers.iter().enumerate().rev() {
                if br != r {
                    continue;
                }
                for _ in 0..order.prefill[b] {
                    let seq = next_seq[r];
                    next_seq[r] += 1;
                    queues[b].push_back(seq);
                    prefill.push(InFlight {
                        packet: PacketId::new(routes[r].source(), seq),
                        position: pos,
                    });
                }
            }
        }
        prefill.sort();

        let mut slots = Vec::with_capacity(order.slots.len());
        for &mask in &order.slots {
            let mut txs = Vec::new();
            let mut arrivals = Vec::new();
            for a in bits(mask) {
                let act = self.acts[a];
                let seq = match act.takes {
                    None => {
                        next_seq[act.route] += 1;
                        next_seq[act.route] - 1
                    }
                    Some(b) => queues[b].pop_front().ok_or_else(|| {
                        Error::Numeric("internal: ordering drained an empty buffer".into())
                    })?,
                };
                if let Some(b) = act.gives {
                    arrivals.push((b, seq));
                }
                let packet = PacketId::new(routes[act.route].source(), seq);
                let partner = bits(self.conflict[a] & mask).next();
                let tx = match partner {
                    Some(p) if self.is_secondary(a, p) => {
                        Transmission::secondary(act.link, packet, self.acts[p].link)
                    }
                    _ => Transmission::primary(act.link, packet),
                };
                txs.push(tx);
            }
            for (b, seq) in arrivals {
                queues[b].push_back(seq);
            }
            slots.push(Slot::new(txs));
        }
        let deliveries = routes
            .iter()
            .map(|r| (r.source(), k))
            .collect::<BTreeMap<_, _>>();
        Ok(Schedule {
            mode: self.mode,
            traffic: self.traffic.clone(),
            slots,
            deliveries_per_period: deliveries,
            prefill,
        })
    }

    /// In a cognitive pair, the secondary is the side whose transmitter knows
    /// the other's packet; when both do, the larger link yields.
    fn is_secondary(&self, a: usize, p: usize) -> bool {
        let a_knows = self.knows[a] & bit(p) != 0;
        let p_knows = self.knows[p] & bit(a) != 0;
        match (a_knows, p_knows) {
            (true, false) => true,
            (false, true) => false,
            _ => self.acts[a].link > self.acts[p].link,
        }
    }
}

/// Maximises `r` subject to `Σ x_S ≤ 1` and `Σ_{S∋a} x_S ≥ r` for every activation.
fn covering_lp(family: &[Mask], m: usize) -> Result<f64> {
    let mut lp = LpProblem::new(OptimizationDirection::Maximize);
    let r = lp.add_var(1.0, (0.0, f64::INFINITY));
    let xs: Vec<_> = family.iter().map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    lp.add_constraint(xs.iter().map(|&x| (x, 1.0)), ComparisonOp::Le, 1.0);
    for a in 0..m {
        let mut expr: Vec<_> = family
            .iter()
            .zip(&xs)
            .filter(|(s, _)| **s & bit(a) != 0)
            .map(|(_, &x)| (x, 1.0))
            .collect();
        expr.push((r, -1.0));
        lp.add_constraint(expr, ComparisonOp::Ge, 0.0);
    }
    let sol = lp
        .solve()
        .map_err(|e| Error::Numeric(format!("covering LP failed: {e}")))?;
    Ok(sol.objective())
}

struct CyclicOrder {
    slots: Vec<Mask>,
    prefill: Vec<u32>,
}

struct CoverSearch<'p> {
    problem: &'p ActivationProblem<'p>,
    family: &'p [Mask],
    containing: Vec<Vec<usize>>,
    max_size: u32,
    cliques: Vec<(Mask, u32)>,
    limits: SearchLimits,
    nodes: u64,
}

impl<'p> CoverSearch<'p> {
    fn new(problem: &'p ActivationProblem<'p>, family: &'p [Mask], limits: &SearchLimits) -> Self {
        let m = problem.acts.len();
        let containing = (0..m)
            .map(|a| {
                (0..family.len())
                    .filter(|&s| family[s] & bit(a) != 0)
                    .collect()
            })
            .collect();
        let max_size = family.iter().map(|s| s.count_ones()).max().unwrap_or(0);
        let mut cliques = Vec::new();
        for seed in 0..m {
            let mut clique = bit(seed);
            let mut cand = problem.conflict[seed];
            while cand != 0 {
                let next = bits(cand)
                    .max_by_key(|&c| {
                        (
                            (problem.conflict[c] & cand).count_ones(),
                            std::cmp::Reverse(c),
                        )
                    })
                    .unwrap();
                clique |= bit(next);
                cand &= problem.conflict[next];
            }
            if clique.count_ones() >= 2 && !cliques.iter().any(|&(c, _)| c == clique) {
                let cap = family
                    .iter()
                    .map(|s| (s & clique).count_ones())
                    .max()
                    .unwrap_or(0);
                cliques.push((clique, cap));
            }
        }
        CoverSearch {
            problem,
            family,
            containing,
            max_size,
            cliques,
            limits: *limits,
            nodes: 0,
        }
    }

    fn run(&mut self, t: usize, k: u8, inflight_max: usize) -> Result<Option<CyclicOrder>> {
        let m = self.problem.acts.len();
        let mut failed = HashSet::new();
        let mut chosen = Vec::with_capacity(t);
        let residual = vec![k; m];
        self.nodes = 0;
        self.dfs(residual, t, &mut chosen, &mut failed, k, inflight_max)
    }

    fn dfs(
        &mut self,
        residual: Vec<u8>,
        remaining: usize,
        chosen: &mut Vec<usize>,
        failed: &mut HashSet<(Vec<u8>, usize)>,
        k: u8,
        inflight_max: usize,
    ) -> Result<Option<CyclicOrder>> {
        self.nodes += 1;
        if self.nodes > self.limits.max_cover_nodes {
            return Err(Error::TooLarge(format!(
                "cover search exceeded {} nodes",
                self.limits.max_cover_nodes
            )));
        }
        let open: Vec<usize> = (0..residual.len()).filter(|&a| residual[a] > 0).collect();
        if open.is_empty() {
            let mut slots: Vec<Mask> = chosen.iter().map(|&s| self.family[s]).collect();
            slots.resize(slots.len() + remaining, 0);
            let slots = trim(&slots, k, self.problem.acts.len());
            return Ok(order_cyclically(
                self.problem,
                slots,
                inflight_max,
                self.limits.max_order_nodes,
            ));
        }
        if remaining == 0 || failed.contains(&(residual.clone(), remaining)) {
            return Ok(None);
        }
        let rem = remaining as u32;
        let total: u32 = residual.iter().map(|&r| r as u32).sum();
        let over_clique = self
            .cliques
            .iter()
            .any(|&(c, cap)| bits(c).map(|a| residual[a] as u32).sum::<u32>() > rem * cap);
        if total > rem * self.max_size || residual.iter().any(|&r| r as u32 > rem) || over_clique {
            failed.insert((residual, remaining));
            return Ok(None);
        }

        let pick = *open
            .iter()
            .min_by_key(|&&a| (self.containing[a].len(), std::cmp::Reverse(residual[a]), a))
            .unwrap();
        let mut options: Vec<(u32, usize)> = self.containing[pick]
            .iter()
            .map(|&s| {
                let gain = bits(self.family[s]).filter(|&a| residual[a] > 0).count() as u32;
                (gain, s)
            })
            .collect();
        options.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut tried: Vec<Mask> = Vec::new();
        for (_, s) in options {
            // Sets that differ only on saturated activations behave alike.
            let useful = self.family[s] & open.iter().fold(0, |acc, &a| acc | bit(a));
            if tried.contains(&useful) {
                continue;
            }
            tried.push(useful);
            let mut next = residual.clone();
            for a in bits(useful) {
                next[a] -= 1;
            }
            chosen.push(s);
            let found = self.dfs(next, remaining - 1, chosen, failed, k, inflight_max)?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        failed.insert((residual, remaining));
        Ok(None)
    }
}

/// Removes surplus coverage from the last slots first so every activation
/// appears exactly `k` times.
fn trim(slots: &[Mask], k: u8, m: usize) -> Vec<Mask> {
    let mut slots = slots.to_vec();
    for a in 0..m {
        let mut count = slots.iter().filter(|&&s| s & bit(a) != 0).count();
        for s in slots.iter_mut().rev() {
            if count <= k as usize {
                break;
            }
            if *s & bit(a) != 0 {
                *s &= !bit(a);
                count -= 1;
            }
        }
    }
    slots
}

/// Finds a cyclic order of `slots` whose minimal prefill keeps every source
/// within `inflight_max` relayed packets.
fn order_cyclically(
    problem: &ActivationProblem<'_>,
    mut slots: Vec<Mask>,
    inflight_max: usize,
    max_nodes: u64,
) -> Option<CyclicOrder> {
    slots.sort_unstable();
    let mut kinds: Vec<(Mask, usize)> = Vec::new();
    for s in slots {
        match kinds.last_mut() {
            Some((m, n)) if *m == s => *n += 1,
            _ => kinds.push((s, 1)),
        }
    }
    let total: usize = kinds.iter().map(|k| k.1).sum();
    let nb = problem.buffers.len();
    let nr = problem.traffic.len();
    let mut st = OrderState {
        level: vec![0; nb],
        need: vec![0; nb],
        route_level: vec![0; nr],
        route_peak: vec![0; nr],
        seq: Vec::with_capacity(total),
    };
    let mut nodes = 0u64;
    // Rotations are equivalent, so the first kind always opens the cycle.
    kinds[0].1 -= 1;
    let first = kinds[0].0;
    apply(problem, &mut st, first);
    let ok = order_dfs(
        problem,
        &mut kinds,
        &mut st,
        total - 1,
        inflight_max as i32,
        &mut nodes,
        max_nodes,
    );
    ok.then(|| CyclicOrder {
        prefill: st.need.iter().map(|&n| n as u32).collect(),
        slots: st.seq.clone(),
    })
}

#[derive(Clone)]
struct OrderState {
    /// Net buffer change since the start of the period.
    level: Vec<i32>,
    /// Prefill needed so far: max of `-level`.
    need: Vec<i32>,
    route_level: Vec<i32>,
    route_peak: Vec<i32>,
    seq: Vec<Mask>,
}

fn apply(problem: &ActivationProblem<'_>, st: &mut OrderState, mask: Mask) {
    for a in bits(mask) {
        let act = &problem.acts[a];
        if let Some(b) = act.takes {
            st.level[b] -= 1;
            st.need[b] = st.need[b].max(-st.level[b]);
            st.route_level[act.route] -= 1;
        }
        if let Some(b) = act.gives {
            st.level[b] += 1;
            st.route_level[act.route] += 1;
        }
    }
    for r in 0..st.route_level.len() {
        st.route_peak[r] = st.route_peak[r].max(st.route_level[r]);
    }
    st.seq.push(mask);
}

fn inflight_bound(problem: &ActivationProblem<'_>, st: &OrderState) -> i32 {
    let mut per_route = vec![0; st.route_peak.len()];
    for (b, &(r, _)) in problem.buffers.iter().enumerate() {
        per_route[r] += st.need[b];
    }
    per_route
        .iter()
        .zip(&st.route_peak)
        .map(|(n, p)| n + p)
        .max()
        .unwrap_or(0)
}

fn order_dfs(
    problem: &ActivationProblem<'_>,
    kinds: &mut [(Mask, usize)],
    st: &mut OrderState,
    left: usize,
    inflight_max: i32,
    nodes: &mut u64,
    max_nodes: u64,
) -> bool {
    *nodes += 1;
    if *nodes > max_nodes || inflight_bound(problem, st) > inflight_max {
        return false;
    }
    if left == 0 {
        return true;
    }
    for i in 0..kinds.len() {
        if kinds[i].1 == 0 {
            continue;
        }
        let saved = st.clone();
        kinds[i].1 -= 1;
        apply(problem, st, kinds[i].0);
        if order_dfs(problem, kinds, st, left - 1, inflight_max, nodes, max_nodes) {
            return true;
        }
        kinds[i].1 += 1;
        *st = saved;
    }
    false
}
