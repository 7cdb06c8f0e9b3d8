//! Capacity of wireless mesh networks whose nodes may transmit as overlay
//! cognitive radios.
//!
//! * [`rate`]: primary/secondary achievable rates and the balanced rate factor γ.
//! * [`topology`]: discrete transmission/interference-range topologies.
//! * [`scheduler`]: exact periodic schedules and capacity reports.
//! * [`simulator`]: greedy slot-by-slot simulation.

pub mod error;
pub mod fixtures;
pub mod rate;
pub mod schedule;
pub mod scheduler;
pub mod simulator;
pub mod topology;

pub use error::{Error, Result};
pub use rate::{GammaResult, RatePair, RateParams};
pub use schedule::{InFlight, Kind, KnowledgeState, Mode, PacketId, Schedule, Slot, Transmission};
pub use scheduler::{Bounds, CapacityReport};
pub use topology::{Link, NodeId, Route, Topology, TrafficSpec};
