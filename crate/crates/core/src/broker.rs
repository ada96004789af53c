//! Broker units: per-technology slaves probing the backhaul and
//! aggregating quality metrics, and the master assigning technology
//! priorities.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::backhaul::{backhaul_rtt, BackhaulModel};
use crate::ids::{NapId, ProviderId, TechnologyId};
use crate::metrics::{
    compute_backhaul_quality, compute_nap_quality, compute_reputation, Quality,
};
use crate::policy::PolicySet;

/// Active probing schedule of a broker slave unit.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    /// Seconds between probe rounds.
    pub period: f64,
    /// Seconds a probe reply may take before it counts as lost.
    pub timeout: f64,
    /// Retransmissions after a lost reply.
    pub max_retries: u32,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            period: 0.5,
            timeout: 0.1,
            max_retries: 3,
        }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<(), ProbeConfigError> {
        if self.timeout >= self.period {
            return Err(ProbeConfigError::TimeoutNotBelowPeriod);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeConfigError {
    TimeoutNotBelowPeriod,
}

impl fmt::Display for ProbeConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "probe timeout must be below the probe period")
    }
}

/// The broker-slave view of one access technology.
#[derive(Debug, Clone, PartialEq)]
pub struct TechnologyState {
    pub technology: TechnologyId,
    pub provider: ProviderId,
    pub backhaul: BackhaulModel,
    /// Most recently recorded backhaul RTT, milliseconds.
    pub last_rtt: f64,
    pub q_back: Quality,
    /// Last aggregated quality per NAP of this technology.
    pub q_nap_by_nap: BTreeMap<NapId, Quality>,
    /// Technology quality, i.e. the provider reputation: the mean of all
    /// NAP qualities, refreshed on every aggregation.
    pub reputation: Quality,
    /// Priority assigned by the master; larger numbers rank better.
    pub priority: u32,
}

impl TechnologyState {
    pub fn new(technology: TechnologyId, provider: ProviderId, backhaul: BackhaulModel) -> Self {
        let rtt_base = backhaul.rtt_base;
        TechnologyState {
            technology,
            provider,
            backhaul,
            last_rtt: rtt_base,
            q_back: Quality::new(1.0),
            q_nap_by_nap: BTreeMap::new(),
            reputation: Quality::new(1.0),
            priority: 1,
        }
    }
}

/// Quality metrics a NAP disseminates to in-coverage terminals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnouncedMetrics {
    pub nap: NapId,
    pub technology: TechnologyId,
    pub q_nap: Quality,
    pub reputation: Quality,
    pub priority: u32,
    /// Simulation time the metrics were computed, seconds.
    pub timestamp: f64,
}

/// A wireless-status report from a NAP that does not belong to the slave's
/// technology.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForeignNapReport {
    pub nap: NapId,
    pub expected_technology: TechnologyId,
}

impl fmt::Display for ForeignNapReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "NAP {} does not belong to technology {}",
            self.nap, self.expected_technology
        )
    }
}

/// One probe round: measure the backhaul RTT under the current offered
/// load and refresh the backhaul quality.
///
/// A probe succeeds when the reply returns within the timeout; otherwise
/// it is retried up to `max_retries` times against the same model, and
/// once the retries are exhausted the RTT is recorded as `rtt_max` (the
/// worst case).
pub fn slave_probe(
    tech: &mut TechnologyState,
    offered_load: f64,
    probe: &ProbeConfig,
    policy: &PolicySet,
) {
    let rtt = backhaul_rtt(offered_load, &tech.backhaul);
    let timeout_ms = probe.timeout * 1000.0;
    // The model is deterministic, so retries observe the same RTT; they
    // are modeled as repeated comparisons against the timeout.
    let mut recorded = None;
    for _ in 0..=probe.max_retries {
        if rtt <= timeout_ms {
            recorded = Some(rtt);
            break;
        }
    }
    tech.last_rtt = recorded.unwrap_or(policy.rtt_max);
    tech.q_back = compute_backhaul_quality(tech.last_rtt, policy)
        .expect("model RTT is non-negative");
}

/// Aggregate wireless reports into per-NAP qualities and the technology
/// reputation, and emit one metrics announcement per NAP.
///
/// NAPs missing from this round keep their previous quality: the metrics
/// are state, not samples. A report from a NAP of another technology is
/// rejected.
pub fn slave_aggregate(
    tech: &mut TechnologyState,
    wireless_reports: &BTreeMap<NapId, Quality>,
    known_naps: &BTreeMap<NapId, TechnologyId>,
    now: f64,
    policy: &PolicySet,
) -> Result<Vec<AnnouncedMetrics>, ForeignNapReport> {
    for nap in wireless_reports.keys() {
        match known_naps.get(nap) {
            Some(owner) if *owner == tech.technology => {}
            _ => {
                return Err(ForeignNapReport {
                    nap: *nap,
                    expected_technology: tech.technology,
                });
            }
        }
    }
    for (nap, wq) in wireless_reports {
        let q = compute_nap_quality(*wq, tech.q_back, policy);
        tech.q_nap_by_nap.insert(*nap, q);
    }
    let qualities: Vec<Quality> = tech.q_nap_by_nap.values().copied().collect();
    if let Ok(rep) = compute_reputation(&qualities) {
        tech.reputation = rep;
    }
    Ok(tech
        .q_nap_by_nap
        .iter()
        .map(|(nap, q)| AnnouncedMetrics {
            nap: *nap,
            technology: tech.technology,
            q_nap: *q,
            reputation: tech.reputation,
            priority: tech.priority,
            timestamp: now,
        })
        .collect())
}

/// The master's centralized policy: hierarchize the technologies by their
/// quality, consigning a distinct priority to each one.
///
/// The best technology receives the largest priority number (`n` for `n`
/// technologies, i.e. rank 1); equal qualities are broken by technology id
/// so repeated runs agree.
pub fn master_prioritize(
    tech_qualities: &BTreeMap<TechnologyId, Quality>,
) -> BTreeMap<TechnologyId, u32> {
    let mut order: Vec<(TechnologyId, Quality)> =
        tech_qualities.iter().map(|(t, q)| (*t, *q)).collect();
    order.sort_by(|(ta, qa), (tb, qb)| {
        qb.value()
            .partial_cmp(&qa.value())
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(ta.cmp(tb))
    });
    let n = order.len() as u32;
    order
        .into_iter()
        .enumerate()
        .map(|(rank, (tech, _))| (tech, n - rank as u32))
        .collect()
}
