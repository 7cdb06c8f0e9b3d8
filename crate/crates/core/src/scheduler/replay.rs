//! Replays a periodic schedule packet by packet.

use std::collections::BTreeMap;

use super::admission::validate_slot;
use crate::schedule::{KnowledgeState, PacketId, Schedule, Slot, Transmission};
use crate::topology::{NodeId, Topology};

/// Replays `periods` periods from the schedule's prefill and checks that
/// every slot is admissible, every transmitted packet is held by its
/// transmitter and moves along its route, each source delivers its quota per
/// period, and the in-flight state repeats with sequence numbers advanced.
pub fn verify_schedule(topo: &Topology, schedule: &Schedule, periods: usize) -> Result<(), String> {
    let routes = schedule.traffic.routes();
    let route_of = |src: NodeId| {
        schedule
            .traffic
            .route_of(src)
            .ok_or_else(|| format!("packet from unknown source {src}"))
    };
    let quota = |src: NodeId| {
        schedule
            .deliveries_per_period
            .get(&src)
            .copied()
            .unwrap_or(0) as u64
    };

    let mut held: BTreeMap<PacketId, usize> = BTreeMap::new();
    let mut knowledge = KnowledgeState::new();
    let mut next_seq: BTreeMap<NodeId, u64> = routes.iter().map(|r| (r.source(), 0)).collect();
    for f in &schedule.prefill {
        let route = route_of(f.packet.source)?;
        if f.position == 0 || f.position >= route.hop_count() {
            return Err(format!(
                "prefill {} at invalid position {}",
                f.packet, f.position
            ));
        }
        if held.insert(f.packet, f.position).is_some() {
            return Err(format!("prefill lists {} twice", f.packet));
        }
        for &n in &route.nodes()[..f.position] {
            knowledge.learn(n, f.packet);
        }
        *next_seq.get_mut(&f.packet.source).unwrap() += 1;
    }
    for (&src, &n) in &next_seq {
        let expected: Vec<u64> = (0..n).collect();
        let got: Vec<u64> = held
            .keys()
            .filter(|p| p.source == src)
            .map(|p| p.seq)
            .collect();
        if got != expected {
            return Err(format!("prefill of {src} is not numbered 0..{n}"));
        }
    }
    let initial = held.clone();

    for period in 0..periods as u64 {
        let mut delivered: BTreeMap<NodeId, u64> = BTreeMap::new();
        for (i, slot) in schedule.slots.iter().enumerate() {
            let shifted = Slot::new(
                slot.transmissions()
                    .iter()
                    .map(|t| Transmission {
                        packet: PacketId::new(
                            t.packet.source,
                            t.packet.seq + period * quota(t.packet.source),
                        ),
                        ..*t
                    })
                    .collect(),
            );
            if let Err(v) = validate_slot(topo, &shifted, schedule.mode, &knowledge) {
                let msgs: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                return Err(format!("period {period} slot {i}: {}", msgs.join("; ")));
            }
            let mut moves = Vec::new();
            for t in shifted.transmissions() {
                let route = route_of(t.packet.source)?;
                let pos = match held.get(&t.packet) {
                    Some(&p) => p,
                    None => {
                        let fresh = next_seq.get_mut(&t.packet.source).unwrap();
                        if t.packet.seq != *fresh || t.link.tx != route.source() {
                            return Err(format!(
                                "period {period} slot {i}: {} sends {} it does not hold",
                                t.link.tx, t.packet
                            ));
                        }
                        *fresh += 1;
                        0
                    }
                };
                if route.link(pos) != t.link {
                    return Err(format!(
                        "period {period} slot {i}: {} moved over {} instead of {}",
                        t.packet,
                        t.link,
                        route.link(pos)
                    ));
                }
                moves.push((t.packet, t.link.tx, pos + 1, route.hop_count()));
            }
            for (packet, tx, pos, hops) in moves {
                knowledge.learn(tx, packet);
                if pos == hops {
                    held.remove(&packet);
                    knowledge.forget(&packet);
                    *delivered.entry(packet.source).or_default() += 1;
                } else {
                    held.insert(packet, pos);
                }
            }
        }
        for r in routes {
            let got = delivered.get(&r.source()).copied().unwrap_or(0);
            if got != quota(r.source()) {
                return Err(format!(
                    "period {period}: source {} delivered {got}, expected {}",
                    r.source(),
                    quota(r.source())
                ));
            }
        }
        let expected: BTreeMap<PacketId, usize> = initial
            .iter()
            .map(|(p, &pos)| {
                let shift = (period + 1) * quota(p.source);
                (PacketId::new(p.source, p.seq + shift), pos)
            })
            .collect();
        if held != expected {
            return Err(format!("period {period}: in-flight state does not repeat"));
        }
    }
    Ok(())
}
