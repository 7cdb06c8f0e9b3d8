use std::collections::BTreeMap;
use std::fmt;

use crate::error::{domain, Result};
use crate::schedule::{Mode, Schedule};
use crate::topology::NodeId;

/// How the cognitive rate penalty is charged against a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RateAccounting {
    /// Any secondary in the period scales every delivery by γ.
    #[default]
    WholePeriod,
    /// Only slots carrying a secondary run at γ·B; they take `1/γ` slot times.
    PerSlot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeCapacity {
    pub mode: Mode,
    pub period: usize,
    pub deliveries: BTreeMap<NodeId, usize>,
    pub rate_factor: f64,
    /// Per-source capacity in units of B.
    pub capacity: BTreeMap<NodeId, f64>,
    pub secondaries: usize,
}

impl ModeCapacity {
    fn of(schedule: &Schedule, gamma: f64, accounting: RateAccounting) -> Self {
        let cognitive = schedule.slots.iter().filter(|s| s.has_secondary()).count();
        let t = schedule.period() as f64;
        let (rate_factor, time) = match accounting {
            RateAccounting::WholePeriod => (if cognitive > 0 { gamma } else { 1.0 }, t),
            RateAccounting::PerSlot => (1.0, t - cognitive as f64 + cognitive as f64 / gamma),
        };
        let capacity = schedule
            .deliveries_per_period
            .iter()
            .map(|(&s, &k)| (s, k as f64 / time * rate_factor))
            .collect();
        ModeCapacity {
            mode: schedule.mode,
            period: schedule.period(),
            deliveries: schedule.deliveries_per_period.clone(),
            rate_factor,
            capacity,
            secondaries: schedule.secondary_count(),
        }
    }

    /// Smallest per-source capacity.
    pub fn min_capacity(&self) -> f64 {
        self.capacity
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub gamma: f64,
    pub baseline: ModeCapacity,
    /// Overlay answer; equals the baseline schedule's figures when the
    /// cognitive schedule would be slower.
    pub overlay: ModeCapacity,
    pub overlay_fell_back: bool,
    /// `overlay / baseline - 1` on the minimum per-source capacity.
    pub improvement: f64,
}

pub fn capacity_report(
    baseline: &Schedule,
    overlay: &Schedule,
    gamma: f64,
) -> Result<CapacityReport> {
    capacity_report_with(baseline, overlay, gamma, RateAccounting::WholePeriod)
}

pub fn capacity_report_with(
    baseline: &Schedule,
    overlay: &Schedule,
    gamma: f64,
    accounting: RateAccounting,
) -> Result<CapacityReport> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return domain(format!("gamma must lie in (0,1], got {gamma}"));
    }
    if baseline.traffic != overlay.traffic {
        return domain("baseline and overlay schedules carry different traffic");
    }
    let base = ModeCapacity::of(baseline, gamma, accounting);
    let over = ModeCapacity::of(overlay, gamma, accounting);
    let (overlay, fell_back) = if over.min_capacity() < base.min_capacity() {
        let mut fallback = base.clone();
        fallback.mode = Mode::Overlay;
        (fallback, true)
    } else {
        (over, false)
    };
    let improvement = overlay.min_capacity() / base.min_capacity() - 1.0;
    Ok(CapacityReport {
        gamma,
        baseline: base,
        overlay,
        overlay_fell_back: fell_back,
        improvement,
    })
}

impl fmt::Display for CapacityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma: {:.4}", self.gamma)?;
        for m in [&self.baseline, &self.overlay] {
            let k = m.deliveries.values().copied().min().unwrap_or(0);
            writeln!(
                f,
                "{:<9} k/T = {}/{}  capacity = {:.4} B per source  (secondaries per period: {})",
                m.mode.to_string() + ":",
                k,
                m.period,
                m.min_capacity(),
                m.secondaries
            )?;
        }
        if self.overlay_fell_back {
            writeln!(f, "overlay fell back to the baseline schedule")?;
        }
        write!(f, "improvement: {:.1}%", self.improvement * 100.0)
    }
}
