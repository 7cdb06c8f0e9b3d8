//! Line-oriented topology file format.
//!
//! ```text
//! # comment
//! [nodes]
//! GW 0 0          # id x y, or a bare id when relations are listed explicitly
//! 1 1 0
//! [gateway]
//! GW
//! [links]         # explicit only: undirected, `id: id,id,...`
//! [interference]  # explicit only: `id: id,id,a-b,...`
//! [routes]        # optional: `src: hop,hop,...,GW`
//! [factor]        # optional, geometric only: interference/transmission ratio
//! ```

use std::collections::{BTreeMap, BTreeSet};

use super::{NodeId, Route, Topology, Violation, DEFAULT_INTERFERENCE_FACTOR};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Nodes,
    Gateway,
    Links,
    Interference,
    Routes,
    Factor,
}

/// A declared node, its optional coordinates and its line number.
pub type NodeRow = (NodeId, Option<(f64, f64)>, usize);

/// Parsed but not yet validated topology file, with source line numbers.
#[derive(Debug, Clone, Default)]
pub struct TopologyDoc {
    pub nodes: Vec<NodeRow>,
    pub gateway: Option<(NodeId, usize)>,
    pub links: Option<Vec<(NodeId, NodeId, usize)>>,
    pub interference: Option<BTreeMap<NodeId, (BTreeSet<NodeId>, usize)>>,
    pub routes: Vec<(Route, usize)>,
    pub factor: Option<f64>,
}

fn perr<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

fn parse_id(tok: &str, line: usize) -> Result<NodeId> {
    tok.parse::<NodeId>().or_else(|e| perr(line, e))
}

fn parse_list(body: &str, line: usize) -> Result<Vec<NodeId>> {
    let mut out = Vec::new();
    for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match tok.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse_id(a, line)?, parse_id(b, line)?);
                if a > b {
                    return perr(line, format!("empty range `{tok}`"));
                }
                out.extend((a.0..=b.0).map(NodeId));
            }
            None => out.push(parse_id(tok, line)?),
        }
    }
    Ok(out)
}

fn split_row(content: &str, line: usize) -> Result<(NodeId, Vec<NodeId>)> {
    let Some((head, body)) = content.split_once(':') else {
        return perr(line, "expected `id: id,id,...`");
    };
    Ok((parse_id(head, line)?, parse_list(body, line)?))
}

/// Parses the text without checking topology invariants.
pub fn parse_topology(text: &str) -> Result<TopologyDoc> {
    let mut doc = TopologyDoc::default();
    let mut section = None;
    let mut seen_sections = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if content.starts_with('[') {
            let s = match content {
                "[nodes]" => Section::Nodes,
                "[gateway]" => Section::Gateway,
                "[links]" => Section::Links,
                "[interference]" => Section::Interference,
                "[routes]" => Section::Routes,
                "[factor]" => Section::Factor,
                other => return perr(line, format!("unknown section {other}")),
            };
            if seen_sections.contains(&s) {
                return perr(line, format!("duplicate section {content}"));
            }
            seen_sections.push(s);
            match s {
                Section::Links => doc.links = Some(Vec::new()),
                Section::Interference => doc.interference = Some(BTreeMap::new()),
                _ => {}
            }
            section = Some(s);
            continue;
        }
        let Some(s) = section else {
            return perr(line, "content before the first section header");
        };
        match s {
            Section::Nodes => {
                let toks: Vec<&str> = content.split_whitespace().collect();
                let id = parse_id(toks[0], line)?;
                let xy = match toks.len() {
                    1 => None,
                    3 => {
                        let x = toks[1]
                            .parse::<f64>()
                            .or_else(|_| perr(line, "bad x coordinate"))?;
                        let y = toks[2]
                            .parse::<f64>()
                            .or_else(|_| perr(line, "bad y coordinate"))?;
                        Some((x, y))
                    }
                    _ => return perr(line, "expected `id` or `id x y`"),
                };
                if doc.nodes.iter().any(|(n, _, _)| *n == id) {
                    return perr(line, format!("node {id} declared twice"));
                }
                doc.nodes.push((id, xy, line));
            }
            Section::Gateway => {
                if doc.gateway.is_some() {
                    return perr(line, "only one gateway is supported");
                }
                doc.gateway = Some((parse_id(content, line)?, line));
            }
            Section::Links => {
                let (a, bs) = split_row(content, line)?;
                let links = doc.links.as_mut().unwrap();
                links.extend(bs.into_iter().map(|b| (a, b, line)));
            }
            Section::Interference => {
                let (a, bs) = split_row(content, line)?;
                let rows = doc.interference.as_mut().unwrap();
                if rows.contains_key(&a) {
                    return perr(line, format!("interference row for {a} given twice"));
                }
                rows.insert(a, (bs.into_iter().collect(), line));
            }
            Section::Routes => {
                let (src, rest) = split_row(content, line)?;
                let mut hops = vec![src];
                hops.extend(rest);
                doc.routes.push((Route::new(hops), line));
            }
            Section::Factor => {
                if doc.factor.is_some() {
                    return perr(line, "factor given twice");
                }
                let f = content
                    .parse::<f64>()
                    .or_else(|_| perr(line, "bad factor"))?;
                doc.factor = Some(f);
            }
        }
    }

    if doc.nodes.is_empty() {
        return perr(last_line.max(1), "no nodes declared");
    }
    let Some((gw, gw_line)) = doc.gateway else {
        return perr(last_line.max(1), "missing [gateway] section");
    };
    if !doc.nodes.iter().any(|(n, _, _)| *n == gw) {
        return perr(gw_line, format!("unknown gateway {gw}"));
    }
    let with_xy = doc.nodes.iter().filter(|(_, xy, _)| xy.is_some()).count();
    if with_xy != 0 && with_xy != doc.nodes.len() {
        let (n, _, line) = doc.nodes.iter().find(|(_, xy, _)| xy.is_none()).unwrap();
        return perr(
            *line,
            format!("node {n} lacks coordinates while others have them"),
        );
    }
    let known: BTreeSet<NodeId> = doc.nodes.iter().map(|(n, _, _)| *n).collect();
    let unknown = |n: &NodeId| !known.contains(n);
    if with_xy != 0 {
        if doc.links.is_some() || doc.interference.is_some() {
            return perr(
                gw_line,
                "coordinates and explicit [links]/[interference] cannot be mixed",
            );
        }
    } else {
        if doc.links.is_none() || doc.interference.is_none() {
            return perr(
                last_line,
                "without coordinates both [links] and [interference] are required",
            );
        }
        if doc.factor.is_some() {
            return perr(last_line, "[factor] applies only to coordinate topologies");
        }
        for &(a, b, line) in doc.links.as_ref().unwrap() {
            if unknown(&a) || unknown(&b) {
                return perr(line, format!("link {a}-{b} names an unknown node"));
            }
            if a == b {
                return perr(line, format!("self link at {a}"));
            }
        }
        for (a, (set, line)) in doc.interference.as_ref().unwrap() {
            if unknown(a) {
                return perr(*line, format!("interference row for unknown node {a}"));
            }
            if let Some(b) = set.iter().find(|b| unknown(b) || *b == a) {
                return perr(*line, format!("node {a} lists invalid interferer {b}"));
            }
        }
    }
    for (r, line) in &doc.routes {
        if let Some(n) = r.nodes().iter().find(|n| unknown(n)) {
            return perr(*line, format!("route names unknown node {n}"));
        }
    }
    Ok(doc)
}

impl TopologyDoc {
    fn build_unchecked(&self) -> Result<Topology> {
        let gw = self.gateway.expect("checked by parser").0;
        let mut topo = if self.nodes[0].1.is_some() {
            let coords = self
                .nodes
                .iter()
                .map(|(n, xy, _)| (*n, xy.unwrap()))
                .collect();
            let factor = self.factor.unwrap_or(DEFAULT_INTERFERENCE_FACTOR);
            let mut t = Topology::geometric_unchecked(coords, gw, factor)?;
            t.routes.clear();
            t
        } else {
            let nodes = self.nodes.iter().map(|(n, _, _)| *n).collect();
            let links: Vec<(NodeId, NodeId)> = self
                .links
                .as_ref()
                .unwrap()
                .iter()
                .map(|&(a, b, _)| (a, b))
                .collect();
            let rows = self
                .interference
                .as_ref()
                .unwrap()
                .iter()
                .map(|(n, (set, _))| (*n, set.clone()))
                .collect();
            Topology::explicit_unchecked(nodes, gw, &links, rows)?
        };
        for (r, _) in &self.routes {
            topo.routes.insert(r.source(), r.clone());
        }
        Ok(topo)
    }

    /// Invariant violations annotated with the source line that caused them.
    pub fn validate(&self) -> Result<Vec<Violation>> {
        let topo = self.build_unchecked()?;
        let row_line = |n: &NodeId| {
            self.interference
                .as_ref()
                .and_then(|m| m.get(n))
                .map(|(_, l)| *l)
        };
        let link_line = |a: NodeId, b: NodeId| {
            self.links.as_ref().and_then(|ls| {
                ls.iter()
                    .find(|&&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a))
                    .map(|&(_, _, l)| l)
            })
        };
        let route_line = |s: NodeId| {
            self.routes
                .iter()
                .find(|(r, _)| r.source() == s)
                .map(|(_, l)| *l)
        };
        let mut dup_sources = BTreeSet::new();
        let mut out = Vec::new();
        for (r, line) in &self.routes {
            if !dup_sources.insert(r.source()) {
                out.push(Violation::InvalidRoute {
                    source: r.source(),
                    reason: "source given more than one route".into(),
                    line: Some(*line),
                });
            }
        }
        for v in topo.violations() {
            out.push(match v {
                Violation::AsymmetricInterference { a, b, .. } => {
                    Violation::AsymmetricInterference {
                        a,
                        b,
                        line: row_line(&a),
                    }
                }
                Violation::LinkOutsideInterference { a, b, .. } => {
                    Violation::LinkOutsideInterference {
                        a,
                        b,
                        line: link_line(a, b),
                    }
                }
                Violation::InvalidRoute { source, reason, .. } => Violation::InvalidRoute {
                    source,
                    reason,
                    line: route_line(source),
                },
                other => other,
            });
        }
        Ok(out)
    }

    pub fn build(&self) -> Result<Topology> {
        let violations = self.validate()?;
        if !violations.is_empty() {
            let msgs: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            return Err(Error::Validation(msgs.join("; ")));
        }
        self.build_unchecked()
    }
}

/// Parses and validates a topology file.
pub fn load_topology(text: &str) -> Result<Topology> {
    parse_topology(text)?.build()
}
