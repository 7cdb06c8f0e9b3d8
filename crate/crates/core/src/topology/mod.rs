//! Mesh topologies under the discrete transmission/interference-range model.
//!
//! A node can deliver error-free to any node within one transmission range and
//! silences every node inside its interference range. Coordinates, when present,
//! are measured in transmission-range radii.

use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Error, Result};

mod file;

pub use file::{load_topology, parse_topology, TopologyDoc};

/// Default ratio of interference range to transmission range.
pub const DEFAULT_INTERFERENCE_FACTOR: f64 = 3.0;

const GEOM_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    /// Id used by the built-in generators for the gateway; rendered as `GW`.
    pub const GATEWAY: NodeId = NodeId(0);
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == NodeId::GATEWAY {
            f.write_str("GW")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for NodeId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("gw") {
            return Ok(NodeId::GATEWAY);
        }
        s.parse::<u32>()
            .map(NodeId)
            .map_err(|_| format!("invalid node id `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub tx: NodeId,
    pub rx: NodeId,
}

impl Link {
    pub fn new(tx: NodeId, rx: NodeId) -> Self {
        Link { tx, rx }
    }

    pub fn shares_node(&self, other: &Link) -> bool {
        self.tx == other.tx || self.tx == other.rx || self.rx == other.tx || self.rx == other.rx
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tx, self.rx)
    }
}

/// A loop-free node sequence from a source to the gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Route {
    hops: Vec<NodeId>,
}

impl Route {
    pub fn new(hops: Vec<NodeId>) -> Self {
        Route { hops }
    }

    pub fn source(&self) -> NodeId {
        self.hops[0]
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.hops
    }

    /// Number of transmissions needed to reach the gateway.
    pub fn hop_count(&self) -> usize {
        self.hops.len() - 1
    }

    pub fn link(&self, hop: usize) -> Link {
        Link::new(self.hops[hop], self.hops[hop + 1])
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        self.hops.windows(2).map(|w| Link::new(w[0], w[1]))
    }

    /// Position of `node` on the route, if it lies on it.
    pub fn position(&self, node: NodeId) -> Option<usize> {
        self.hops.iter().position(|&n| n == node)
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.hops.iter().map(|n| n.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// A problem found while checking topology invariants.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    /// `a` lists `b` as an interferer but not the other way around.
    AsymmetricInterference {
        a: NodeId,
        b: NodeId,
        line: Option<usize>,
    },
    /// Adjacent nodes that are not inside each other's interference range.
    LinkOutsideInterference {
        a: NodeId,
        b: NodeId,
        line: Option<usize>,
    },
    Disconnected {
        node: NodeId,
    },
    InvalidRoute {
        source: NodeId,
        reason: String,
        line: Option<usize>,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = |line: &Option<usize>| line.map(|l| format!("line {l}: ")).unwrap_or_default();
        match self {
            Violation::AsymmetricInterference { a, b, line } => write!(
                f,
                "{}interference not symmetric: {a} lists {b} but {b} does not list {a}",
                at(line)
            ),
            Violation::LinkOutsideInterference { a, b, line } => write!(
                f,
                "{}link {a}-{b} joins nodes outside each other's interference range",
                at(line)
            ),
            Violation::Disconnected { node } => {
                write!(f, "node {node} has no transmission path to the gateway")
            }
            Violation::InvalidRoute {
                source,
                reason,
                line,
            } => {
                write!(f, "{}route from {source} invalid: {reason}", at(line))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: BTreeSet<NodeId>,
    coords: Option<BTreeMap<NodeId, (f64, f64)>>,
    gateway: NodeId,
    adjacency: BTreeMap<NodeId, BTreeSet<NodeId>>,
    interference: BTreeMap<NodeId, BTreeSet<NodeId>>,
    interference_factor: f64,
    routes: BTreeMap<NodeId, Route>,
}

impl Topology {
    /// Derives both relations from coordinates with the given interference factor.
    pub fn geometric(
        coords: BTreeMap<NodeId, (f64, f64)>,
        gateway: NodeId,
        interference_factor: f64,
    ) -> Result<Self> {
        let topo = Self::geometric_unchecked(coords, gateway, interference_factor)?;
        topo.check()?;
        Ok(topo)
    }

    pub(crate) fn geometric_unchecked(
        coords: BTreeMap<NodeId, (f64, f64)>,
        gateway: NodeId,
        interference_factor: f64,
    ) -> Result<Self> {
        if interference_factor.is_nan() || interference_factor < 1.0 {
            return domain(format!(
                "interference factor must be at least 1, got {interference_factor}"
            ));
        }
        if !coords.contains_key(&gateway) {
            return domain(format!("gateway {gateway} is not a node"));
        }
        let nodes: BTreeSet<NodeId> = coords.keys().copied().collect();
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            nodes.iter().map(|&n| (n, BTreeSet::new())).collect();
        let mut interference = adjacency.clone();
        for (&a, &pa) in &coords {
            for (&b, &pb) in &coords {
                if a == b {
                    continue;
                }
                let d = (pa.0 - pb.0).hypot(pa.1 - pb.1);
                if d <= 1.0 + GEOM_EPS {
                    adjacency.get_mut(&a).unwrap().insert(b);
                }
                if d <= interference_factor + GEOM_EPS {
                    interference.get_mut(&a).unwrap().insert(b);
                }
            }
        }
        let topo = Topology {
            nodes,
            coords: Some(coords),
            gateway,
            adjacency,
            interference,
            interference_factor,
            routes: BTreeMap::new(),
        };
        Ok(topo)
    }

    /// Builds a topology from explicit relations. Adjacency is symmetrised;
    /// interference lists must already be symmetric.
    pub fn explicit(
        nodes: BTreeSet<NodeId>,
        gateway: NodeId,
        links: &[(NodeId, NodeId)],
        interference: BTreeMap<NodeId, BTreeSet<NodeId>>,
    ) -> Result<Self> {
        let topo = Self::explicit_unchecked(nodes, gateway, links, interference)?;
        topo.check()?;
        Ok(topo)
    }

    fn explicit_unchecked(
        nodes: BTreeSet<NodeId>,
        gateway: NodeId,
        links: &[(NodeId, NodeId)],
        interference: BTreeMap<NodeId, BTreeSet<NodeId>>,
    ) -> Result<Self> {
        if !nodes.contains(&gateway) {
            return domain(format!("gateway {gateway} is not a node"));
        }
        let mut adjacency: BTreeMap<NodeId, BTreeSet<NodeId>> =
            nodes.iter().map(|&n| (n, BTreeSet::new())).collect();
        for &(a, b) in links {
            if a == b || !nodes.contains(&a) || !nodes.contains(&b) {
                return domain(format!("invalid link {a}-{b}"));
            }
            adjacency.get_mut(&a).unwrap().insert(b);
            adjacency.get_mut(&b).unwrap().insert(a);
        }
        let mut full: BTreeMap<NodeId, BTreeSet<NodeId>> =
            nodes.iter().map(|&n| (n, BTreeSet::new())).collect();
        for (n, set) in interference {
            if !nodes.contains(&n) {
                return domain(format!("interference row for unknown node {n}"));
            }
            if let Some(bad) = set.iter().find(|m| !nodes.contains(m) || **m == n) {
                return domain(format!("node {n} lists invalid interferer {bad}"));
            }
            full.insert(n, set);
        }
        Ok(Topology {
            nodes,
            coords: None,
            gateway,
            adjacency,
            interference: full,
            interference_factor: DEFAULT_INTERFERENCE_FACTOR,
            routes: BTreeMap::new(),
        })
    }

    fn check(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            None => Ok(()),
            Some(v) => Err(Error::Validation(v.to_string())),
        }
    }

    /// All invariant violations, in deterministic order.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for (&a, set) in &self.interference {
            for &b in set {
                if !self.interference[&b].contains(&a) {
                    out.push(Violation::AsymmetricInterference { a, b, line: None });
                }
            }
        }
        for (&a, set) in &self.adjacency {
            for &b in set {
                if a < b
                    && !(self.interference[&a].contains(&b) && self.interference[&b].contains(&a))
                {
                    out.push(Violation::LinkOutsideInterference { a, b, line: None });
                }
            }
        }
        let dist = self.hop_distances();
        for &n in &self.nodes {
            if !dist.contains_key(&n) {
                out.push(Violation::Disconnected { node: n });
            }
        }
        for route in self.routes.values() {
            if let Err(reason) = self.check_route(route) {
                out.push(Violation::InvalidRoute {
                    source: route.source(),
                    reason,
                    line: None,
                });
            }
        }
        out
    }

    pub(crate) fn check_route(&self, route: &Route) -> std::result::Result<(), String> {
        let hops = route.nodes();
        if hops.len() < 2 {
            return Err("route needs at least one hop".into());
        }
        if hops[0] == self.gateway {
            return Err("route starts at the gateway".into());
        }
        if *hops.last().unwrap() != self.gateway {
            return Err("route does not end at the gateway".into());
        }
        let mut seen = BTreeSet::new();
        for &n in hops {
            if !self.nodes.contains(&n) {
                return Err(format!("unknown node {n}"));
            }
            if !seen.insert(n) {
                return Err(format!("node {n} visited twice"));
            }
        }
        for link in route.links() {
            if !self.adjacency[&link.tx].contains(&link.rx) {
                return Err(format!("hop {link} is not a transmission link"));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = NodeId> + ExactSizeIterator + '_ {
        self.nodes.iter().copied()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, n: NodeId) -> bool {
        self.nodes.contains(&n)
    }

    pub fn gateway(&self) -> NodeId {
        self.gateway
    }

    pub fn interference_factor(&self) -> f64 {
        self.interference_factor
    }

    pub fn coords(&self, n: NodeId) -> Option<(f64, f64)> {
        self.coords.as_ref().and_then(|c| c.get(&n).copied())
    }

    pub fn has_coords(&self) -> bool {
        self.coords.is_some()
    }

    pub fn neighbors(&self, n: NodeId) -> &BTreeSet<NodeId> {
        &self.adjacency[&n]
    }

    pub fn interference_set(&self, n: NodeId) -> &BTreeSet<NodeId> {
        &self.interference[&n]
    }

    pub fn is_link(&self, link: &Link) -> bool {
        link.tx != link.rx
            && self
                .adjacency
                .get(&link.tx)
                .is_some_and(|s| s.contains(&link.rx))
    }

    /// Routes supplied explicitly with the topology, keyed by source.
    pub fn explicit_routes(&self) -> &BTreeMap<NodeId, Route> {
        &self.routes
    }

    pub fn with_routes(mut self, routes: Vec<Route>) -> Result<Self> {
        for r in routes {
            self.check_route(&r)
                .map_err(|e| Error::Validation(format!("route from {}: {e}", r.source())))?;
            self.routes.insert(r.source(), r);
        }
        Ok(self)
    }

    fn require_link(&self, link: &Link) -> Result<()> {
        if self.is_link(link) {
            Ok(())
        } else {
            domain(format!("{link} is not a transmission link"))
        }
    }

    /// Nodes silenced while `link` is active, including its endpoints.
    pub fn interference_region(&self, link: &Link) -> Result<BTreeSet<NodeId>> {
        self.require_link(link)?;
        Ok(self.region_unchecked(link))
    }

    pub(crate) fn region_unchecked(&self, link: &Link) -> BTreeSet<NodeId> {
        let mut region: BTreeSet<NodeId> = self.interference[&link.tx]
            .union(&self.interference[&link.rx])
            .copied()
            .collect();
        region.insert(link.tx);
        region.insert(link.rx);
        region
    }

    /// Whether two links may not be active in the same slot without cognition.
    pub fn conflicts(&self, l1: &Link, l2: &Link) -> Result<bool> {
        self.require_link(l1)?;
        self.require_link(l2)?;
        Ok(self.conflicts_unchecked(l1, l2))
    }

    pub(crate) fn conflicts_unchecked(&self, l1: &Link, l2: &Link) -> bool {
        if l1.shares_node(l2) {
            return true;
        }
        let hit = |l: &Link, n: NodeId| {
            n == l.tx
                || n == l.rx
                || self.interference[&l.tx].contains(&n)
                || self.interference[&l.rx].contains(&n)
        };
        hit(l1, l2.tx) || hit(l1, l2.rx) || hit(l2, l1.tx) || hit(l2, l1.rx)
    }

    fn hop_distances(&self) -> BTreeMap<NodeId, usize> {
        let mut dist = BTreeMap::new();
        dist.insert(self.gateway, 0usize);
        let mut queue = VecDeque::from([self.gateway]);
        while let Some(u) = queue.pop_front() {
            let du = dist[&u];
            for &v in &self.adjacency[&u] {
                if let Entry::Vacant(e) = dist.entry(v) {
                    e.insert(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Minimum-hop route to the gateway, preferring the smallest next hop on ties.
    pub fn shortest_route(&self, src: NodeId) -> Result<Route> {
        if !self.nodes.contains(&src) {
            return domain(format!("unknown node {src}"));
        }
        if src == self.gateway {
            return domain("the gateway has no route to itself");
        }
        let dist = self.hop_distances();
        let Some(&d0) = dist.get(&src) else {
            return Err(Error::Unreachable(src));
        };
        let mut hops = vec![src];
        let mut cur = src;
        for remaining in (0..d0).rev() {
            cur = *self.adjacency[&cur]
                .iter()
                .find(|v| dist.get(v) == Some(&remaining))
                .expect("BFS layer has a predecessor");
            hops.push(cur);
        }
        Ok(Route::new(hops))
    }

    /// Explicit route for `src` when one was supplied, else [`Self::shortest_route`].
    pub fn route_for(&self, src: NodeId) -> Result<Route> {
        match self.routes.get(&src) {
            Some(r) => Ok(r.clone()),
            None => self.shortest_route(src),
        }
    }

    /// Serialises the topology in the line-oriented file format.
    pub fn to_file_string(&self) -> String {
        let mut out = String::new();
        out.push_str("[nodes]\n");
        for &n in &self.nodes {
            match self.coords(n) {
                Some((x, y)) => out.push_str(&format!("{n} {} {}\n", fmt_coord(x), fmt_coord(y))),
                None => out.push_str(&format!("{n}\n")),
            }
        }
        out.push_str(&format!("[gateway]\n{}\n", self.gateway));
        if self.coords.is_none() {
            out.push_str("[links]\n");
            for (&a, set) in &self.adjacency {
                let later: Vec<String> = set
                    .iter()
                    .filter(|&&b| b > a)
                    .map(|b| b.to_string())
                    .collect();
                if !later.is_empty() {
                    out.push_str(&format!("{a}: {}\n", later.join(",")));
                }
            }
            out.push_str("[interference]\n");
            for (&a, set) in &self.interference {
                let all: Vec<String> = set.iter().map(|b| b.to_string()).collect();
                out.push_str(&format!("{a}: {}\n", all.join(",")));
            }
        }
        if !self.routes.is_empty() {
            out.push_str("[routes]\n");
            for (src, r) in &self.routes {
                let rest: Vec<String> = r.nodes()[1..].iter().map(|n| n.to_string()).collect();
                out.push_str(&format!("{src}: {}\n", rest.join(",")));
            }
        }
        out
    }
}

fn fmt_coord(x: f64) -> String {
    // Round-trips exactly through `str::parse::<f64>`.
    format!("{x:?}")
}

/// Nodes `1..=n` on a line at unit spacing, gateway at the origin.
pub fn chain_topology(n_nodes: usize) -> Result<Topology> {
    chain_topology_with_factor(n_nodes, DEFAULT_INTERFERENCE_FACTOR)
}

pub fn chain_topology_with_factor(n_nodes: usize, factor: f64) -> Result<Topology> {
    if n_nodes == 0 {
        return domain("a chain needs at least one node");
    }
    let mut coords = BTreeMap::new();
    coords.insert(NodeId::GATEWAY, (0.0, 0.0));
    for i in 1..=n_nodes {
        coords.insert(NodeId(i as u32), (i as f64, 0.0));
    }
    Topology::geometric(coords, NodeId::GATEWAY, factor)
}

/// Angular positions available to the regular layout; ids are numbered ring by
/// ring over all eight positions so that branch subsets keep their labels.
pub const REGULAR_POSITIONS: u32 = 8;

/// Radial chains at equal angles around the gateway.
///
/// Node `(ring - 1) * 8 + position + 1` sits at distance `ring` and angle
/// `position * 45°`; a layout with `b` branches uses every `8 / b`-th position.
pub fn regular_topology(branches: usize, depth: usize) -> Result<Topology> {
    regular_topology_with_factor(branches, depth, DEFAULT_INTERFERENCE_FACTOR)
}

pub fn regular_topology_with_factor(
    branches: usize,
    depth: usize,
    factor: f64,
) -> Result<Topology> {
    if !matches!(branches, 2 | 4 | 8) {
        return domain(format!(
            "unsupported branch count {branches}; use 2, 4 or 8"
        ));
    }
    if depth == 0 {
        return domain("depth must be at least 1");
    }
    let step = REGULAR_POSITIONS as usize / branches;
    let mut coords = BTreeMap::new();
    coords.insert(NodeId::GATEWAY, (0.0, 0.0));
    for ring in 1..=depth {
        for pos in (0..REGULAR_POSITIONS as usize).step_by(step) {
            let angle = pos as f64 * std::f64::consts::FRAC_PI_4;
            let r = ring as f64;
            let id = (ring as u32 - 1) * REGULAR_POSITIONS + pos as u32 + 1;
            coords.insert(NodeId(id), (r * angle.cos(), r * angle.sin()));
        }
    }
    Topology::geometric(coords, NodeId::GATEWAY, factor)
}

/// Random connected geometric topology: each new node lands between 0.4 and 1
/// from an earlier node and at least 0.3 from all others. The gateway is node 0.
pub fn random_geometric_topology(n_nodes: usize, factor: f64, seed: u64) -> Result<Topology> {
    if n_nodes == 0 {
        return domain("a topology needs at least one node");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    while pts.len() < n_nodes {
        let (ax, ay) = pts[rng.gen_range(0..pts.len())];
        let r = rng.gen_range(0.4..1.0);
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = (ax + r * th.cos(), ay + r * th.sin());
        if pts.iter().all(|q| (p.0 - q.0).hypot(p.1 - q.1) >= 0.3) {
            pts.push(p);
        }
    }
    let coords = pts
        .into_iter()
        .enumerate()
        .map(|(i, p)| (NodeId(i as u32), p))
        .collect();
    Topology::geometric(coords, NodeId::GATEWAY, factor)
}

/// Sources and their routes to the gateway.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficSpec {
    routes: Vec<Route>,
}

impl TrafficSpec {
    /// Uses the topology's explicit route for a source when present, else the
    /// shortest route.
    pub fn for_sources(topo: &Topology, sources: &[NodeId]) -> Result<Self> {
        let routes = sources
            .iter()
            .map(|&s| topo.route_for(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(topo, routes)
    }

    pub fn new(topo: &Topology, routes: Vec<Route>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &routes {
            topo.check_route(r)
                .map_err(|e| Error::Validation(format!("route from {}: {e}", r.source())))?;
            if !seen.insert(r.source()) {
                return domain(format!("source {} listed twice", r.source()));
            }
        }
        Ok(TrafficSpec { routes })
    }

    pub fn empty() -> Self {
        TrafficSpec { routes: Vec::new() }
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn sources(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.routes.iter().map(|r| r.source())
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn route_of(&self, src: NodeId) -> Option<&Route> {
        self.routes.iter().find(|r| r.source() == src)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> BTreeSet<NodeId> {
        v.iter().map(|&i| NodeId(i)).collect()
    }

    fn l(tx: u32, rx: u32) -> Link {
        Link::new(NodeId(tx), NodeId(rx))
    }

    #[test]
    fn chain_single_node() {
        let t = chain_topology(1).unwrap();
        assert_eq!(t.interference_set(NodeId(1)), &ids(&[0]));
        assert_eq!(t.interference_region(&l(1, 0)).unwrap(), ids(&[0, 1]));
        assert!(chain_topology(0).is_err());
    }

    #[test]
    fn chain_interference_set() {
        let t = chain_topology(8).unwrap();
        assert_eq!(t.interference_set(NodeId(5)), &ids(&[2, 3, 4, 6, 7, 8]));
        let mut region = t.interference_region(&l(5, 4)).unwrap();
        region.remove(&NodeId(5));
        region.remove(&NodeId(4));
        assert_eq!(region, ids(&[1, 2, 3, 6, 7, 8]));
    }

    #[test]
    fn chain_conflicts() {
        let t = chain_topology(8).unwrap();
        assert!(!t.conflicts(&l(8, 7), &l(3, 2)).unwrap());
        assert!(t.conflicts(&l(8, 7), &l(4, 3)).unwrap());
        assert!(t.conflicts(&l(8, 7), &l(8, 7)).unwrap());
        assert!(t.conflicts(&l(8, 6), &l(3, 2)).is_err());
    }

    #[test]
    fn chain_routes() {
        let t = chain_topology(8).unwrap();
        let r = t.shortest_route(NodeId(8)).unwrap();
        assert_eq!(r.to_string(), "8,7,6,5,4,3,2,1,GW");
        assert!(t.shortest_route(NodeId::GATEWAY).is_err());
    }

    #[test]
    fn regular_layouts() {
        let t = regular_topology(4, 1).unwrap();
        assert_eq!(t.node_count(), 5);
        for a in [1, 3, 5, 7] {
            assert!(t.neighbors(NodeId(a)).contains(&NodeId::GATEWAY));
            for b in [1, 3, 5, 7] {
                if a != b {
                    assert!(t.interference_set(NodeId(a)).contains(&NodeId(b)));
                }
            }
        }
        let t = regular_topology(8, 5).unwrap();
        assert_eq!(t.node_count(), 41);
        let t = regular_topology(2, 5).unwrap();
        let r = t.shortest_route(NodeId(37)).unwrap();
        assert_eq!(r.to_string(), "37,29,21,13,5,GW");
        assert!(regular_topology(3, 5).is_err());
        assert!(regular_topology(2, 0).is_err());
    }

    #[test]
    fn explicit_asymmetry_rejected() {
        let mut rows = BTreeMap::new();
        rows.insert(NodeId(1), ids(&[0, 2]));
        rows.insert(NodeId(2), ids(&[0]));
        rows.insert(NodeId(0), ids(&[1, 2]));
        let err = Topology::explicit(
            ids(&[0, 1, 2]),
            NodeId(0),
            &[(NodeId(1), NodeId(0)), (NodeId(2), NodeId(0))],
            rows,
        )
        .unwrap_err();
        assert!(err.to_string().contains("1 lists 2"), "{err}");
    }

    #[test]
    fn disconnected_rejected() {
        let mut coords = BTreeMap::new();
        coords.insert(NodeId(0), (0.0, 0.0));
        coords.insert(NodeId(1), (5.0, 0.0));
        assert!(Topology::geometric(coords, NodeId(0), 3.0).is_err());
    }

    #[test]
    fn traffic_validation() {
        let t = chain_topology(3).unwrap();
        assert!(
            TrafficSpec::new(&t, vec![Route::new(vec![NodeId(3), NodeId(1), NodeId(0)])]).is_err()
        );
        assert!(TrafficSpec::for_sources(&t, &[NodeId(3), NodeId(3)]).is_err());
        let tr = TrafficSpec::for_sources(&t, &[NodeId(3)]).unwrap();
        assert_eq!(tr.routes()[0].hop_count(), 3);
    }
}
