//! Slot admission rules shared by the exact scheduler and the simulator.
//!
//! Baseline: every pair of transmissions in a slot must be conflict-free.
//! Overlay: a secondary may sit inside exactly one primary's interference
//! region, provided its transmitter already knows the primary's packet, the two
//! links share no node, and the primary has no other secondary.

use std::collections::BTreeMap;
use std::fmt;

use crate::schedule::{Kind, KnowledgeState, Mode, PacketId, Slot, Transmission};
use crate::topology::{Link, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotViolation {
    InvalidLink(Link),
    /// A node appears in more than one transmission.
    HalfDuplex {
        node: NodeId,
    },
    /// Two transmissions interfere and neither is exempted by a pairing.
    Conflict {
        a: Link,
        b: Link,
    },
    SecondaryInBaseline(Link),
    /// The declared primary is absent or is itself a secondary.
    MissingPrimary {
        secondary: Link,
        paired: Link,
    },
    /// The declared primary does not actually conflict with the secondary.
    UnneededPairing {
        secondary: Link,
        paired: Link,
    },
    /// The secondary transmitter has not seen the primary's packet.
    UnknownPacket {
        secondary: Link,
        packet: PacketId,
    },
    MultipleSecondaries {
        primary: Link,
    },
}

impl fmt::Display for SlotViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SlotViolation::InvalidLink(l) => write!(f, "{l} is not a transmission link"),
            SlotViolation::HalfDuplex { node } => write!(f, "half-duplex: node {node} used twice"),
            SlotViolation::Conflict { a, b } => write!(f, "conflict: {a} and {b}"),
            SlotViolation::SecondaryInBaseline(l) => write!(f, "secondary {l} in baseline mode"),
            SlotViolation::MissingPrimary { secondary, paired } => {
                write!(f, "secondary {secondary} paired to absent primary {paired}")
            }
            SlotViolation::UnneededPairing { secondary, paired } => {
                write!(f, "secondary {secondary} does not conflict with {paired}")
            }
            SlotViolation::UnknownPacket { secondary, packet } => write!(
                f,
                "secondary {secondary}: transmitter does not know packet {packet}"
            ),
            SlotViolation::MultipleSecondaries { primary } => {
                write!(f, "primary {primary} has more than one secondary")
            }
        }
    }
}

/// Checks every admission rule; all violations are returned, never a partial pass.
pub fn validate_slot(
    topo: &Topology,
    slot: &Slot,
    mode: Mode,
    knowledge: &KnowledgeState,
) -> Result<(), Vec<SlotViolation>> {
    let txs = slot.transmissions();
    let mut out = Vec::new();

    for t in txs {
        if !topo.is_link(&t.link) {
            out.push(SlotViolation::InvalidLink(t.link));
        }
    }
    if !out.is_empty() {
        return Err(out);
    }

    let mut uses: BTreeMap<NodeId, usize> = BTreeMap::new();
    for t in txs {
        *uses.entry(t.link.tx).or_default() += 1;
        *uses.entry(t.link.rx).or_default() += 1;
    }
    for (&node, &n) in &uses {
        if n > 1 {
            out.push(SlotViolation::HalfDuplex { node });
        }
    }

    let paired_with = |t: &Transmission| match t.kind {
        Kind::Secondary { paired } => Some(paired),
        Kind::Primary => None,
    };

    let mut secondaries_of: BTreeMap<Link, usize> = BTreeMap::new();
    for t in txs {
        let Some(paired) = paired_with(t) else {
            continue;
        };
        if mode == Mode::Baseline {
            out.push(SlotViolation::SecondaryInBaseline(t.link));
            continue;
        }
        match txs
            .iter()
            .find(|p| p.link == paired && p.kind == Kind::Primary)
        {
            None => out.push(SlotViolation::MissingPrimary {
                secondary: t.link,
                paired,
            }),
            Some(p) => {
                *secondaries_of.entry(p.link).or_default() += 1;
                if !topo.conflicts_unchecked(&t.link, &p.link) {
                    out.push(SlotViolation::UnneededPairing {
                        secondary: t.link,
                        paired,
                    });
                }
                if !knowledge.knows(t.link.tx, &p.packet) {
                    out.push(SlotViolation::UnknownPacket {
                        secondary: t.link,
                        packet: p.packet,
                    });
                }
            }
        }
    }
    for (primary, n) in secondaries_of {
        if n > 1 {
            out.push(SlotViolation::MultipleSecondaries { primary });
        }
    }

    for (i, a) in txs.iter().enumerate() {
        for b in &txs[i + 1..] {
            if a.link.shares_node(&b.link) || !topo.conflicts_unchecked(&a.link, &b.link) {
                continue;
            }
            let exempt = mode == Mode::Overlay
                && (paired_with(a) == Some(b.link) && b.kind == Kind::Primary
                    || paired_with(b) == Some(a.link) && a.kind == Kind::Primary);
            if !exempt {
                out.push(SlotViolation::Conflict {
                    a: a.link,
                    b: b.link,
                });
            }
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Secondary transmissions that could be added to `slot` one at a time.
///
/// `offers` are the (link, packet) pairs whose transmitters currently hold the
/// packet. Each returned transmission, added alone, keeps the slot valid.
pub fn overlay_pairing_candidates(
    topo: &Topology,
    slot: &Slot,
    knowledge: &KnowledgeState,
    offers: &[(Link, PacketId)],
) -> Vec<Transmission> {
    let txs = slot.transmissions();
    let mut taken: Vec<Link> = Vec::new();
    for t in txs {
        if let Kind::Secondary { paired } = t.kind {
            taken.push(paired);
        }
    }
    let mut out = Vec::new();
    for &(link, packet) in offers {
        if !topo.is_link(&link) || txs.iter().any(|t| t.link.shares_node(&link)) {
            continue;
        }
        let mut hits = txs
            .iter()
            .filter(|t| topo.conflicts_unchecked(&t.link, &link));
        let (Some(p), None) = (hits.next(), hits.next()) else {
            continue;
        };
        if p.kind != Kind::Primary || taken.contains(&p.link) {
            continue;
        }
        if knowledge.knows(link.tx, &p.packet) {
            out.push(Transmission::secondary(link, packet, p.link));
        }
    }
    out
}
