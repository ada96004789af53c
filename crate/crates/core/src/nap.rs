//! Network attachment points: flow bookkeeping, wireless-quality
//! measurement, and the periodic metric broadcast to in-coverage
//! terminals.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::broker::AnnouncedMetrics;
use crate::geom::{received_power, Position};
use crate::ids::{FlowId, NapId, TechnologyId, TerminalId};
use crate::metrics::{compute_wireless_quality, Quality};

/// One access node with a wireless and a wired interface.
#[derive(Debug, Clone, PartialEq)]
pub struct NapState {
    pub id: NapId,
    pub technology: TechnologyId,
    pub position: Position,
    /// Meters; beyond this the received power is zero.
    pub coverage_radius: f64,
    /// Raw wireless channel capacity, bits/s.
    pub wireless_capacity: f64,
    /// Load coefficient of this NAP's technology.
    pub k1: f64,
    pub attached_flows: BTreeSet<FlowId>,
    /// Wireless quality, recomputed on every attach/detach.
    pub wq: Quality,
    /// Latest enriched metrics received from the broker slave, if any.
    pub last_metrics: Option<AnnouncedMetrics>,
    /// Seconds between metric broadcasts on the wireless channel.
    pub broadcast_period: f64,
}

/// A metrics delivery to one in-coverage terminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsDelivery {
    pub terminal: TerminalId,
    pub metrics: AnnouncedMetrics,
    /// Received signal power at the terminal, watts.
    pub power: f64,
}

impl NapState {
    pub fn new(
        id: NapId,
        technology: TechnologyId,
        position: Position,
        coverage_radius: f64,
        wireless_capacity: f64,
        k1: f64,
        broadcast_period: f64,
    ) -> Self {
        NapState {
            id,
            technology,
            position,
            coverage_radius,
            wireless_capacity,
            k1,
            attached_flows: BTreeSet::new(),
            wq: Quality::new(1.0),
            last_metrics: None,
            broadcast_period,
        }
    }

    pub fn flow_count(&self) -> u32 {
        self.attached_flows.len() as u32
    }

    /// Attach a flow and refresh the wireless quality.
    ///
    /// Attaching a flow twice is a simulator bug and aborts the run.
    pub fn attach(&mut self, flow: FlowId) {
        let inserted = self.attached_flows.insert(flow);
        assert!(inserted, "flow {flow} attached twice to NAP {}", self.id);
        self.recompute_wq();
    }

    /// Detach a flow and refresh the wireless quality.
    ///
    /// Detaching an unknown flow is a simulator bug and aborts the run.
    pub fn detach(&mut self, flow: FlowId) {
        let removed = self.attached_flows.remove(&flow);
        assert!(removed, "flow {flow} not attached to NAP {}", self.id);
        self.recompute_wq();
    }

    fn recompute_wq(&mut self) {
        self.wq = compute_wireless_quality(self.flow_count(), self.k1)
            .expect("k1 validated at construction");
    }

    /// Admission control on the wireless channel: a new flow is accepted
    /// only while the wireless quality it would leave behind stays above
    /// the quality threshold.
    pub fn admits_new_flow(&self, qual_thr: f64) -> bool {
        let prospective = compute_wireless_quality(self.flow_count() + 1, self.k1)
            .expect("k1 validated at construction");
        prospective.value() > qual_thr
    }

    /// Received power of this NAP's signal at `at`.
    pub fn power_at(&self, at: &Position, edge_power: f64) -> f64 {
        received_power(self.position.distance(at), self.coverage_radius, edge_power)
    }

    /// Broadcast the piggybacked metrics: one delivery per in-coverage
    /// terminal. A no-op until the first broker aggregation arrives.
    pub fn broadcast(
        &self,
        terminals: &[(TerminalId, Position)],
        edge_power: f64,
    ) -> Vec<MetricsDelivery> {
        let Some(metrics) = self.last_metrics else {
            return Vec::new();
        };
        terminals
            .iter()
            .filter_map(|(terminal, pos)| {
                let power = self.power_at(pos, edge_power);
                (power > 0.0).then_some(MetricsDelivery {
                    terminal: *terminal,
                    metrics,
                    power,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn wifi_nap() -> NapState {
        NapState::new(
            NapId(1),
            TechnologyId(1),
            Position::new(995.0, 1000.0),
            20.0,
            3.5e6,
            0.0524,
            0.1,
        )
    }

    fn wimax_nap() -> NapState {
        NapState::new(
            NapId(0),
            TechnologyId(0),
            Position::new(1000.0, 1300.0),
            1000.0,
            16e6,
            0.0183,
            0.5,
        )
    }

    fn metrics_for(nap: &NapState) -> AnnouncedMetrics {
        AnnouncedMetrics {
            nap: nap.id,
            technology: nap.technology,
            q_nap: Quality::new(0.9),
            reputation: Quality::new(0.95),
            priority: 1,
            timestamp: 0.5,
        }
    }

    #[test]
    fn attach_updates_wireless_quality() {
        let mut nap = wifi_nap();
        nap.attach(FlowId(0));
        assert_abs_diff_eq!(nap.wq.value(), 0.9476, epsilon = 1e-9);
    }

    #[test]
    fn ninth_wifi_flow_sits_just_above_qt() {
        let mut nap = wifi_nap();
        for i in 0..9 {
            nap.attach(FlowId(i));
        }
        assert_abs_diff_eq!(nap.wq.value(), 0.5284, epsilon = 1e-9);
        assert!(nap.wq.value() > 0.525);
        // The tenth flow would push the channel under the threshold.
        assert!(!nap.admits_new_flow(0.525));
    }

    #[test]
    #[should_panic(expected = "attached twice")]
    fn double_attach_aborts() {
        let mut nap = wifi_nap();
        nap.attach(FlowId(3));
        nap.attach(FlowId(3));
    }

    #[test]
    fn detach_restores_quality() {
        let mut nap = wifi_nap();
        nap.attach(FlowId(0));
        nap.detach(FlowId(0));
        assert_abs_diff_eq!(nap.wq.value(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn wimax_detach_to_25_flows() {
        let mut nap = wimax_nap();
        for i in 0..26 {
            nap.attach(FlowId(i));
        }
        nap.detach(FlowId(25));
        assert_abs_diff_eq!(nap.wq.value(), 0.5425, epsilon = 1e-9);
    }

    #[test]
    #[should_panic(expected = "not attached")]
    fn detach_unknown_aborts() {
        let mut nap = wifi_nap();
        nap.detach(FlowId(9));
    }

    #[test]
    fn broadcast_without_metrics_is_a_noop() {
        let nap = wifi_nap();
        let terminals = [(TerminalId(0), Position::new(1000.0, 999.0))];
        assert!(nap.broadcast(&terminals, 7e-9).is_empty());
    }

    #[test]
    fn broadcast_reaches_only_in_coverage_terminals() {
        let mut nap = wifi_nap();
        nap.last_metrics = Some(metrics_for(&nap));
        let terminals = [
            (TerminalId(0), Position::new(1000.0, 999.0)), // ~5.1 m away
            (TerminalId(1), Position::new(900.0, 999.0)),  // ~95 m away
            (TerminalId(2), Position::new(995.0, 980.0)),  // exactly 20 m
        ];
        let deliveries = nap.broadcast(&terminals, 7e-9);
        assert_eq!(deliveries.len(), 2);
        assert_eq!(deliveries[0].terminal, TerminalId(0));
        assert_eq!(deliveries[1].terminal, TerminalId(2));
        // Edge of coverage receives exactly the power threshold.
        assert_abs_diff_eq!(deliveries[1].power, 7e-9, epsilon = 1e-18);
    }

    #[test]
    fn broadcast_fans_out_identical_metrics_distinct_powers() {
        let mut nap = wifi_nap();
        nap.last_metrics = Some(metrics_for(&nap));
        let terminals = [
            (TerminalId(0), Position::new(996.0, 1000.0)),
            (TerminalId(1), Position::new(1000.0, 999.0)),
            (TerminalId(2), Position::new(990.0, 1001.0)),
        ];
        let deliveries = nap.broadcast(&terminals, 7e-9);
        assert_eq!(deliveries.len(), 3);
        assert!(deliveries.windows(2).all(|w| w[0].metrics == w[1].metrics));
        assert!(deliveries[0].power != deliveries[1].power);
    }

    #[test]
    fn attach_detach_round_trip_over_random_sequences() {
        // State/formula equivalence: after any attach/detach sequence the
        // stored quality equals the closed form on the final count.
        let mut nap = wimax_nap();
        let mut next = 0u32;
        let mut live: Vec<FlowId> = Vec::new();
        let mut x = 42u64;
        for _ in 0..500 {
            // Tiny xorshift keeps the test self-contained.
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            if live.is_empty() || x % 3 != 0 {
                let id = FlowId(next);
                next += 1;
                nap.attach(id);
                live.push(id);
            } else {
                let id = live.swap_remove((x % live.len() as u64) as usize);
                nap.detach(id);
            }
            let expect = compute_wireless_quality(live.len() as u32, 0.0183).unwrap();
            assert_eq!(nap.wq, expect);
        }
    }
}
