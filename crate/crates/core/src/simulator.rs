//! Slot-by-slot greedy simulation with saturated sources.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{domain, Result};
use crate::schedule::{KnowledgeState, Mode, PacketId, Slot, Transmission};
use crate::scheduler::{overlay_pairing_candidates, validate_slot};
use crate::topology::{Link, NodeId, Topology, TrafficSpec};

/// Slots discarded before measuring when callers have no better choice.
pub const DEFAULT_WARMUP: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct SimPolicy {
    pub mode: Mode,
    /// Randomizes ties between equally urgent packets; `None` breaks them by
    /// transmitter id.
    pub seed: Option<u64>,
    /// Rate factor applied to throughput when secondaries were used.
    pub gamma: f64,
    /// Keep the rendered slots of the run.
    pub record_trace: bool,
}

impl SimPolicy {
    pub fn new(mode: Mode, gamma: f64) -> Self {
        SimPolicy {
            mode,
            seed: None,
            gamma,
            record_trace: false,
        }
    }
}

/// Remaining hops, birth slot, random tie, transmitter, packet.
type OfferKey = (usize, u64, u64, NodeId, PacketId);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Queued {
    packet: PacketId,
    /// Index of the holder on the packet's route.
    position: usize,
    born: u64,
}

#[derive(Debug, Clone)]
pub struct SimState {
    pub clock: u64,
    queues: BTreeMap<NodeId, Vec<Queued>>,
    pub knowledge: KnowledgeState,
    pub delivered: BTreeMap<NodeId, u64>,
    next_seq: BTreeMap<NodeId, u64>,
    rng: Option<ChaCha8Rng>,
}

impl SimState {
    pub fn new(traffic: &TrafficSpec, seed: Option<u64>) -> Self {
        let mut state = SimState {
            clock: 0,
            queues: BTreeMap::new(),
            knowledge: KnowledgeState::new(),
            delivered: traffic.sources().map(|s| (s, 0)).collect(),
            next_seq: traffic.sources().map(|s| (s, 0)).collect(),
            rng: seed.map(ChaCha8Rng::seed_from_u64),
        };
        state.refill(traffic);
        state
    }

    /// Packets currently buffered at `node`, oldest first.
    pub fn queue(&self, node: NodeId) -> Vec<PacketId> {
        self.queues
            .get(&node)
            .map(|q| q.iter().map(|e| e.packet).collect())
            .unwrap_or_default()
    }

    /// Packets buffered anywhere in the network.
    pub fn in_network(&self) -> usize {
        self.queues.values().map(Vec::len).sum()
    }

    /// Packets ever created by `source`.
    pub fn created(&self, source: NodeId) -> u64 {
        self.next_seq.get(&source).copied().unwrap_or(0)
    }

    fn refill(&mut self, traffic: &TrafficSpec) {
        for src in traffic.sources() {
            let q = self.queues.entry(src).or_default();
            if !q.iter().any(|e| e.position == 0 && e.packet.source == src) {
                let seq = self.next_seq.get_mut(&src).expect("known source");
                let packet = PacketId::new(src, *seq);
                *seq += 1;
                q.push(Queued {
                    packet,
                    position: 0,
                    born: self.clock,
                });
                self.knowledge.learn(src, packet);
            }
        }
    }

    /// Chooses one slot greedily, moves the selected packets one hop and
    /// returns the slot.
    pub fn step(&mut self, topo: &Topology, traffic: &TrafficSpec, policy: &SimPolicy) -> Slot {
        // A source may run at most one route length of packets ahead of the
        // slowest source's deliveries.
        let window = traffic
            .routes()
            .iter()
            .map(|r| r.hop_count() as u64)
            .max()
            .unwrap_or(0);
        let fair_share = self.delivered.values().copied().min().unwrap_or(0) + window;
        let mut offers: Vec<(OfferKey, Link, Queued)> = Vec::new();
        for (&node, q) in &self.queues {
            for e in q {
                if e.position == 0 && e.packet.seq >= fair_share {
                    continue;
                }
                let route = traffic.route_of(e.packet.source).expect("known source");
                let link = route.link(e.position);
                debug_assert_eq!(link.tx, node);
                let tie = match &mut self.rng {
                    Some(rng) => rng.gen(),
                    None => 0,
                };
                let key = (route.hop_count() - e.position, e.born, tie, node, e.packet);
                offers.push((key, link, *e));
            }
        }
        offers.sort_by_key(|o| o.0);

        let mut slot = Slot::new(Vec::new());
        let mut chosen: Vec<Queued> = Vec::new();
        for (_, link, e) in &offers {
            let clear = slot
                .transmissions()
                .iter()
                .all(|t| !t.link.shares_node(link) && !topo.conflicts_unchecked(&t.link, link));
            if clear {
                slot.push(Transmission::primary(*link, e.packet));
                chosen.push(*e);
            } else if policy.mode == Mode::Overlay {
                let found =
                    overlay_pairing_candidates(topo, &slot, &self.knowledge, &[(*link, e.packet)]);
                if let Some(t) = found.into_iter().next() {
                    slot.push(t);
                    chosen.push(*e);
                }
            }
        }
        debug_assert!(validate_slot(topo, &slot, policy.mode, &self.knowledge).is_ok());

        for (t, e) in slot_order(&slot, &chosen) {
            let q = self.queues.get_mut(&t.link.tx).expect("holder queue");
            q.retain(|x| x.packet != e.packet);
            let route = traffic.route_of(e.packet.source).expect("known source");
            let position = e.position + 1;
            if position == route.hop_count() {
                self.knowledge.forget(&e.packet);
                *self
                    .delivered
                    .get_mut(&e.packet.source)
                    .expect("known source") += 1;
            } else {
                self.knowledge.learn(t.link.rx, e.packet);
                self.queues
                    .entry(t.link.rx)
                    .or_default()
                    .push(Queued { position, ..e });
            }
        }
        self.queues.retain(|_, q| !q.is_empty());
        self.clock += 1;
        self.refill(traffic);
        slot
    }
}

fn slot_order(slot: &Slot, chosen: &[Queued]) -> Vec<(Transmission, Queued)> {
    slot.transmissions()
        .iter()
        .map(|t| {
            let e = chosen
                .iter()
                .find(|c| c.packet == t.packet)
                .expect("chosen packet");
            (*t, *e)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceThroughput {
    pub delivered: u64,
    pub packets_per_slot: f64,
    /// Throughput in units of B after the cognitive rate factor.
    pub effective_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub mode: Mode,
    pub window: usize,
    pub per_source: BTreeMap<NodeId, SourceThroughput>,
    /// Secondary transmissions inside the measured window.
    pub secondaries: u64,
    pub rate_factor: f64,
    /// FNV-1a hash of every rendered slot.
    pub digest: u64,
    pub trace: Option<Vec<String>>,
}

impl SimReport {
    pub fn min_packets_per_slot(&self) -> f64 {
        self.per_source
            .values()
            .map(|s| s.packets_per_slot)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn min_effective_rate(&self) -> f64 {
        self.per_source
            .values()
            .map(|s| s.effective_rate)
            .fold(f64::INFINITY, f64::min)
    }

    /// `source,mode,packets_per_slot,effective_rate_over_B`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("source,mode,packets_per_slot,effective_rate_over_B\n");
        for (src, s) in &self.per_source {
            writeln!(
                out,
                "{src},{},{:.6},{:.6}",
                self.mode, s.packets_per_slot, s.effective_rate
            )
            .unwrap();
        }
        out
    }
}

fn fnv1a(hash: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *hash ^= b as u64;
        *hash = hash.wrapping_mul(0x0100_0000_01b3);
    }
}

/// Runs `n_slots` slots and measures deliveries after the first `warmup`.
pub fn run(
    topo: &Topology,
    traffic: &TrafficSpec,
    policy: &SimPolicy,
    n_slots: usize,
    warmup: usize,
) -> Result<SimReport> {
    if n_slots <= warmup {
        return domain(format!("n_slots ({n_slots}) must exceed warmup ({warmup})"));
    }
    if !(policy.gamma > 0.0 && policy.gamma <= 1.0) {
        return domain(format!("gamma must lie in (0,1], got {}", policy.gamma));
    }
    let mut state = SimState::new(traffic, policy.seed);
    let mut digest = 0xcbf2_9ce4_8422_2325u64;
    let mut trace = policy.record_trace.then(Vec::new);
    let mut at_warmup = state.delivered.clone();
    let mut secondaries = 0u64;
    for i in 0..n_slots {
        if i == warmup {
            at_warmup = state.delivered.clone();
        }
        let slot = state.step(topo, traffic, policy);
        if i >= warmup {
            secondaries += slot
                .transmissions()
                .iter()
                .filter(|t| t.is_secondary())
                .count() as u64;
        }
        let line = slot.render(i);
        fnv1a(&mut digest, line.as_bytes());
        fnv1a(&mut digest, b"\n");
        if let Some(t) = trace.as_mut() {
            t.push(line);
        }
    }
    let window = n_slots - warmup;
    let rate_factor = if secondaries > 0 { policy.gamma } else { 1.0 };
    let per_source = state
        .delivered
        .iter()
        .map(|(&src, &total)| {
            let delivered = total - at_warmup[&src];
            let pps = delivered as f64 / window as f64;
            (
                src,
                SourceThroughput {
                    delivered,
                    packets_per_slot: pps,
                    effective_rate: pps * rate_factor,
                },
            )
        })
        .collect();
    Ok(SimReport {
        mode: policy.mode,
        window,
        per_source,
        secondaries,
        rate_factor,
        digest,
        trace,
    })
}
