//! Conflict-free periodic schedules in baseline and overlay modes.

mod admission;
mod replay;
mod report;
mod search;

pub use admission::{overlay_pairing_candidates, validate_slot, SlotViolation};
pub use replay::verify_schedule;
pub use report::{
    capacity_report, capacity_report_with, CapacityReport, ModeCapacity, RateAccounting,
};
pub use search::{best_periodic_schedule, search, Bounds, SearchLimits, SearchOutcome};
