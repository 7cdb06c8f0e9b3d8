//! Transmissions, slots and periodic schedules, with their text serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::topology::{Link, NodeId, TrafficSpec};

/// Identifies a packet by its source and per-source sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PacketId {
    pub source: NodeId,
    pub seq: u64,
}

impl PacketId {
    pub fn new(source: NodeId, seq: u64) -> Self {
        PacketId { source, seq }
    }
}

impl fmt::Display for PacketId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.source, self.seq)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// One transmission per interference region.
    Baseline,
    /// A second, cognitive transmission may share a primary's region.
    Overlay,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Baseline => "baseline",
            Mode::Overlay => "overlay",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Kind {
    Primary,
    /// Cognitive transmission exempted from its paired primary's region.
    Secondary {
        paired: Link,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transmission {
    pub link: Link,
    pub packet: PacketId,
    pub kind: Kind,
}

impl Transmission {
    pub fn primary(link: Link, packet: PacketId) -> Self {
        Transmission {
            link,
            packet,
            kind: Kind::Primary,
        }
    }

    pub fn secondary(link: Link, packet: PacketId, paired: Link) -> Self {
        Transmission {
            link,
            packet,
            kind: Kind::Secondary { paired },
        }
    }

    pub fn is_secondary(&self) -> bool {
        matches!(self.kind, Kind::Secondary { .. })
    }
}

impl fmt::Display for Transmission {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.link, self.packet)?;
        match self.kind {
            Kind::Primary => f.write_str("[P]"),
            Kind::Secondary { paired } => write!(f, "[S({paired})]"),
        }
    }
}

/// Transmissions sharing one time slot, kept sorted by link.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Slot {
    transmissions: Vec<Transmission>,
}

impl Slot {
    pub fn new(mut transmissions: Vec<Transmission>) -> Self {
        transmissions.sort();
        Slot { transmissions }
    }

    pub fn transmissions(&self) -> &[Transmission] {
        &self.transmissions
    }

    pub fn push(&mut self, t: Transmission) {
        let at = self.transmissions.partition_point(|x| x < &t);
        self.transmissions.insert(at, t);
    }

    pub fn is_empty(&self) -> bool {
        self.transmissions.is_empty()
    }

    pub fn len(&self) -> usize {
        self.transmissions.len()
    }

    pub fn has_secondary(&self) -> bool {
        self.transmissions.iter().any(Transmission::is_secondary)
    }

    /// `slot i: ...` serialization line.
    pub fn render(&self, index: usize) -> String {
        let mut line = format!("slot {index}:");
        for t in &self.transmissions {
            line.push(' ');
            line.push_str(&t.to_string());
        }
        line
    }
}

/// Packets each node has originated or transmitted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KnowledgeState {
    known: BTreeMap<NodeId, BTreeSet<PacketId>>,
}

impl KnowledgeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn knows(&self, node: NodeId, packet: &PacketId) -> bool {
        self.known.get(&node).is_some_and(|s| s.contains(packet))
    }

    pub fn learn(&mut self, node: NodeId, packet: PacketId) {
        self.known.entry(node).or_default().insert(packet);
    }

    /// Drops a delivered packet from every node.
    pub fn forget(&mut self, packet: &PacketId) {
        for set in self.known.values_mut() {
            set.remove(packet);
        }
    }

    pub fn known_by(&self, node: NodeId) -> impl Iterator<Item = &PacketId> {
        self.known.get(&node).into_iter().flatten()
    }

    pub fn total(&self) -> usize {
        self.known.values().map(BTreeSet::len).sum()
    }
}

/// A packet already in flight when the periodic schedule starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct InFlight {
    pub packet: PacketId,
    /// Index on the source's route of the node holding the packet.
    pub position: usize,
}

/// Periodic slot assignment; replaying `slots` forever from the `prefill`
/// state delivers `deliveries_per_period[src]` packets of each source per period.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub mode: Mode,
    pub traffic: TrafficSpec,
    pub slots: Vec<Slot>,
    pub deliveries_per_period: BTreeMap<NodeId, usize>,
    pub prefill: Vec<InFlight>,
}

impl Schedule {
    pub fn period(&self) -> usize {
        self.slots.len()
    }

    pub fn uses_secondary(&self) -> bool {
        self.slots.iter().any(Slot::has_secondary)
    }

    pub fn secondary_count(&self) -> usize {
        self.slots
            .iter()
            .flat_map(|s| s.transmissions())
            .filter(|t| t.is_secondary())
            .count()
    }

    /// Smallest per-source deliveries per slot, before any rate scaling.
    pub fn min_rate(&self) -> f64 {
        let k = self
            .deliveries_per_period
            .values()
            .copied()
            .min()
            .unwrap_or(0);
        k as f64 / self.period() as f64
    }

    pub fn rate_of(&self, source: NodeId) -> f64 {
        self.deliveries_per_period
            .get(&source)
            .copied()
            .unwrap_or(0) as f64
            / self.period() as f64
    }

    /// One `slot i: ...` line per slot.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, slot) in self.slots.iter().enumerate() {
            out.push_str(&slot.render(i));
            out.push('\n');
        }
        out
    }
}
