//! Built-in topologies.

use crate::error::Result;
use crate::topology::{load_topology, NodeId, Topology};

/// Text of the arbitrary 23-node topology with explicit interference table.
pub const MESH23_TOPO: &str = include_str!("../fixtures/mesh23.topo");

/// Sources used with [`mesh23`].
pub const MESH23_SOURCES: [u32; 6] = [4, 5, 12, 22, 24, 26];

pub fn mesh23() -> Result<Topology> {
    load_topology(MESH23_TOPO)
}

pub fn mesh23_sources() -> Vec<NodeId> {
    MESH23_SOURCES.iter().map(|&n| NodeId(n)).collect()
}
