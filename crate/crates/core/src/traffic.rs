//! Flows, fluid capacity sharing, and class-of-service shaping.

use alloc::vec::Vec;

use crate::ids::{FlowId, TerminalId};
use crate::policy::CsClass;

/// Traffic types carried by flows, per the differentiated service mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficType {
    Voice,
    Video,
    Background,
}

/// IEEE 802.11e access categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessCategory {
    Voice,
    Video,
    Background,
}

/// DiffServ per-hop behavior aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phb {
    ExpeditedForwarding,
    AssuredForwarding,
    BestEffort,
}

/// Map a traffic type onto its access category, broker class of service
/// and DiffServ PHB. Pure lookup.
pub fn map_traffic_class(traffic: TrafficType) -> (AccessCategory, CsClass, Phb) {
    match traffic {
        TrafficType::Voice => (AccessCategory::Voice, CsClass::Cs2, Phb::ExpeditedForwarding),
        TrafficType::Video => (AccessCategory::Video, CsClass::Cs1, Phb::AssuredForwarding),
        TrafficType::Background => (AccessCategory::Background, CsClass::Cs0, Phb::BestEffort),
    }
}

/// One constant-bit-rate flow, served to exactly one terminal.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub id: FlowId,
    pub terminal: TerminalId,
    /// Contractual rate, bits per second.
    pub cbr_rate: f64,
    /// Seconds from simulation start.
    pub start_time: f64,
    pub traffic_type: TrafficType,
}

/// Max-min fair allocation of `capacity` among `demands`.
///
/// Every flow receives at most its demand, the total never exceeds the
/// capacity, and when the total demand fits, every flow gets exactly what
/// it asked for.
pub fn share_capacity(demands: &[f64], capacity: f64) -> Vec<f64> {
    debug_assert!(capacity > 0.0, "capacity must be positive");
    let n = demands.len();
    let mut alloc = alloc::vec![0.0; n];
    if n == 0 {
        return alloc;
    }
    let total: f64 = demands.iter().sum();
    if total <= capacity {
        alloc.copy_from_slice(demands);
        return alloc;
    }
    // Water-filling: satisfy the smallest demands first, then split what
    // remains evenly among the still-unsatisfied flows.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        demands[a]
            .partial_cmp(&demands[b])
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut remaining = capacity;
    let mut left = n;
    for &idx in &order {
        let fair = remaining / left as f64;
        let given = demands[idx].min(fair);
        alloc[idx] = given;
        remaining -= given;
        left -= 1;
    }
    alloc
}

/// Context a class-of-service shaper needs about the serving NAP.
#[derive(Debug, Clone, Copy)]
pub struct NapShapingContext {
    /// Capacity still unclaimed on the wireless channel, bits/s.
    pub remaining_capacity: f64,
    /// Current NAP quality.
    pub nap_quality: f64,
    /// Quality threshold the NAP must stay above.
    pub qual_thr: f64,
}

/// Throttled flows are never shaped below this fraction of their
/// contractual rate.
pub const CS1_MIN_RATE_FRACTION: f64 = 0.1;

/// Shape one flow's allocated rate according to the active class of
/// service.
///
/// - CS0: any rate up to the remaining channel capacity, no per-flow cap.
/// - CS1: while the NAP quality sits at or below the threshold, throttle
///   low-priority traffic (background first, then video) by the factor
///   needed to lift the quality back over it, but never below 10% of the
///   contractual rate.
/// - CS2: never above the contractual rate.
pub fn enforce_cs(flow: &Flow, allocation: f64, cs: CsClass, ctx: &NapShapingContext) -> f64 {
    debug_assert!(allocation >= 0.0);
    match cs {
        CsClass::Cs0 => allocation.min(ctx.remaining_capacity),
        CsClass::Cs2 => allocation.min(flow.cbr_rate),
        CsClass::Cs1 => {
            if ctx.nap_quality > ctx.qual_thr {
                return allocation.min(flow.cbr_rate);
            }
            let throttleable = matches!(
                flow.traffic_type,
                TrafficType::Background | TrafficType::Video
            );
            if !throttleable {
                return allocation.min(flow.cbr_rate);
            }
            // Scale down proportionally to the quality shortfall; video is
            // throttled half as hard as background.
            let shortfall = ((ctx.qual_thr - ctx.nap_quality) / ctx.qual_thr).clamp(0.0, 1.0);
            let severity = match flow.traffic_type {
                TrafficType::Background => shortfall,
                TrafficType::Video => shortfall * 0.5,
                TrafficType::Voice => 0.0,
            };
            let factor = (1.0 - severity).max(CS1_MIN_RATE_FRACTION);
            (allocation * factor).max(flow.cbr_rate * CS1_MIN_RATE_FRACTION)
        }
    }
}
