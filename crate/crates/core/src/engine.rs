//! The deterministic fixed-tick discrete-event engine.
//!
//! Each tick runs, in fixed order: mobility updates, NAP broadcasts due
//! this tick, broker probe/aggregation rounds due, terminal decisions,
//! traffic allocation, and statistics hand-off. Given the same scenario
//! and seed, a run is bit-identical.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::broker::{
    master_prioritize, slave_aggregate, slave_probe, AnnouncedMetrics, ProbeConfig,
    TechnologyState,
};
use crate::ids::{FlowId, NapId, TechnologyId, TerminalId};
use crate::metrics::Quality;
use crate::nap::NapState;
use crate::policy::{CsClass, PolicySet};
use crate::terminal::{Action, Attachment, TerminalState};
use crate::traffic::{enforce_cs, share_capacity, Flow, NapShapingContext};

/// Size of the fluid model's accounting packet, bits (1000 bytes).
pub const PACKET_BITS: f64 = 8000.0;

/// Monotonic simulation clock advancing in exact tick multiples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimClock {
    tick_index: u64,
    /// Tick length, seconds.
    pub tick_s: f64,
}

impl SimClock {
    pub fn new(tick_s: f64) -> Self {
        assert!(tick_s > 0.0, "tick must be positive");
        SimClock {
            tick_index: 0,
            tick_s,
        }
    }

    /// Current simulation time, seconds.
    pub fn now(&self) -> f64 {
        self.tick_index as f64 * self.tick_s
    }

    pub fn tick_index(&self) -> u64 {
        self.tick_index
    }

    fn advance(&mut self) {
        self.tick_index += 1;
    }

    /// Ticks per `period` seconds, at least one.
    pub fn period_ticks(&self, period: f64) -> u64 {
        let ticks = libm::round(period / self.tick_s) as u64;
        ticks.max(1)
    }
}

/// Runtime wrapper around one technology's broker slave.
#[derive(Debug, Clone, PartialEq)]
pub struct TechnologyRuntime {
    pub state: TechnologyState,
    pub probe: ProbeConfig,
}

/// State changes worth reporting to the scenario layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EngineEvent {
    FlowAttached {
        time: f64,
        terminal: TerminalId,
        flow: FlowId,
        nap: NapId,
    },
    FlowHandedOver {
        time: f64,
        terminal: TerminalId,
        flow: FlowId,
        from: NapId,
        to: NapId,
    },
    FlowBlocked {
        time: f64,
        terminal: TerminalId,
        flow: FlowId,
    },
}

/// Everything one tick produced.
#[derive(Debug, Clone, Default)]
pub struct TickOutput {
    pub events: Vec<EngineEvent>,
}

/// The complete simulation state.
#[derive(Debug, Clone)]
pub struct World {
    pub clock: SimClock,
    pub policy: PolicySet,
    pub broker_enabled: bool,
    /// Technology terminals fall back to when the brokerage service is
    /// disabled.
    pub default_technology: TechnologyId,
    pub technologies: BTreeMap<TechnologyId, TechnologyRuntime>,
    pub naps: BTreeMap<NapId, NapState>,
    pub terminals: BTreeMap<TerminalId, TerminalState>,
    pub flows: BTreeMap<FlowId, Flow>,
    /// Final per-flow allocation of the last tick, bits/s.
    pub last_allocations: BTreeMap<FlowId, f64>,
    flow_by_terminal: BTreeMap<TerminalId, FlowId>,
    /// Deliveries in flight, keyed by due tick.
    pending_deliveries: BTreeMap<u64, Vec<PendingDelivery>>,
    /// One admission is allowed per NAP per broadcast round.
    attach_token: BTreeMap<NapId, bool>,
    /// One corrective departure is allowed per NAP per broadcast round.
    departure_token: BTreeMap<NapId, bool>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PendingDelivery {
    terminal: TerminalId,
    metrics: AnnouncedMetrics,
    staleness_window: f64,
}

/// Staleness window, in broadcast periods of the announcing NAP.
const STALENESS_PERIODS: f64 = 3.0;

impl World {
    pub fn new(
        tick_s: f64,
        policy: PolicySet,
        broker_enabled: bool,
        default_technology: TechnologyId,
        technologies: BTreeMap<TechnologyId, TechnologyRuntime>,
        naps: BTreeMap<NapId, NapState>,
        terminals: BTreeMap<TerminalId, TerminalState>,
        seed: u64,
    ) -> Self {
        let mut flows = BTreeMap::new();
        let mut flow_by_terminal = BTreeMap::new();
        for terminal in terminals.values() {
            if let Some(flow) = &terminal.flow {
                flows.insert(flow.id, flow.clone());
                flow_by_terminal.insert(terminal.id, flow.id);
            }
        }
        let attach_token = naps.keys().map(|id| (*id, true)).collect();
        let departure_token = naps.keys().map(|id| (*id, true)).collect();
        World {
            clock: SimClock::new(tick_s),
            policy,
            broker_enabled,
            default_technology,
            technologies,
            naps,
            terminals,
            flows,
            last_allocations: BTreeMap::new(),
            flow_by_terminal,
            pending_deliveries: BTreeMap::new(),
            attach_token,
            departure_token,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Attached flows per technology, counted from NAP state.
    pub fn attached_per_technology(&self) -> BTreeMap<TechnologyId, u32> {
        let mut counts: BTreeMap<TechnologyId, u32> =
            self.technologies.keys().map(|t| (*t, 0)).collect();
        for nap in self.naps.values() {
            *counts.entry(nap.technology).or_insert(0) += nap.flow_count();
        }
        counts
    }

    /// Terminals whose flow is currently blocked.
    pub fn blocked_count(&self) -> u32 {
        let now = self.clock.now();
        self.terminals
            .values()
            .filter(|t| t.attachment == Attachment::Blocked && t.wants_attachment(now))
            .count() as u32
    }

    /// Offered load on one technology's backhaul: the contractual rates of
    /// every flow attached to its NAPs.
    fn offered_backhaul_load(&self, tech: TechnologyId) -> f64 {
        self.naps
            .values()
            .filter(|nap| nap.technology == tech)
            .flat_map(|nap| nap.attached_flows.iter())
            .map(|flow| self.flows[flow].cbr_rate)
            .sum()
    }

    /// Run one tick and report what happened.
    pub fn advance_tick(&mut self) -> TickOutput {
        let mut out = TickOutput::default();
        self.step_mobility();
        if self.broker_enabled {
            self.step_broadcasts();
            self.step_probes();
        }
        self.step_decisions(&mut out);
        self.step_allocation();
        self.clock.advance();
        out
    }

    // (1) Move every terminal along its plan.
    fn step_mobility(&mut self) {
        let now = self.clock.now();
        for terminal in self.terminals.values_mut() {
            terminal.position = terminal.mobility.position_at(terminal.home, now);
        }
    }

    // (2) NAP broadcasts due this tick: schedule one delivery per
    // in-coverage terminal, spread over the broadcast period to model
    // terminals picking the frames up at random instants.
    fn step_broadcasts(&mut self) {
        let now_tick = self.clock.tick_index();
        let terminal_positions: Vec<(TerminalId, crate::geom::Position)> = self
            .terminals
            .values()
            .map(|t| (t.id, t.position))
            .collect();
        let nap_ids: Vec<NapId> = self.naps.keys().copied().collect();
        for nap_id in nap_ids {
            let (deliveries, period_ticks, period) = {
                let nap = &self.naps[&nap_id];
                let period_ticks = self.clock.period_ticks(nap.broadcast_period);
                if now_tick % period_ticks != 0 {
                    continue;
                }
                (
                    nap.broadcast(&terminal_positions, self.policy.pow_thr),
                    period_ticks,
                    nap.broadcast_period,
                )
            };
            self.attach_token.insert(nap_id, true);
            self.departure_token.insert(nap_id, true);
            let staleness_window = STALENESS_PERIODS * period;
            for delivery in deliveries {
                let jitter = if period_ticks > 1 {
                    self.rng.gen_range(0..period_ticks)
                } else {
                    0
                };
                self.pending_deliveries
                    .entry(now_tick + jitter)
                    .or_default()
                    .push(PendingDelivery {
                        terminal: delivery.terminal,
                        metrics: delivery.metrics,
                        staleness_window,
                    });
            }
        }
    }

    // (3) Broker probe + aggregation rounds due this tick, then the master
    // refreshes technology priorities from the new reputations.
    fn step_probes(&mut self) {
        let now = self.clock.now();
        let now_tick = self.clock.tick_index();
        let tech_ids: Vec<TechnologyId> = self.technologies.keys().copied().collect();
        let known_naps: BTreeMap<NapId, TechnologyId> = self
            .naps
            .iter()
            .map(|(id, nap)| (*id, nap.technology))
            .collect();

        let mut fresh_announcements: Vec<AnnouncedMetrics> = Vec::new();
        let mut any_round = false;
        for tech_id in &tech_ids {
            let period_ticks = {
                let runtime = &self.technologies[tech_id];
                self.clock.period_ticks(runtime.probe.period)
            };
            if now_tick % period_ticks != 0 {
                continue;
            }
            any_round = true;
            let offered = self.offered_backhaul_load(*tech_id);
            let reports: BTreeMap<NapId, Quality> = self
                .naps
                .values()
                .filter(|nap| nap.technology == *tech_id)
                .map(|nap| (nap.id, nap.wq))
                .collect();
            let runtime = self.technologies.get_mut(tech_id).expect("known tech");
            slave_probe(&mut runtime.state, offered, &runtime.probe, &self.policy);
            let announcements =
                slave_aggregate(&mut runtime.state, &reports, &known_naps, now, &self.policy)
                    .expect("reports come from this technology's NAPs");
            fresh_announcements.extend(announcements);
        }
        if !any_round {
            return;
        }

        let qualities: BTreeMap<TechnologyId, Quality> = self
            .technologies
            .iter()
            .map(|(id, rt)| (*id, rt.state.reputation))
            .collect();
        let priorities = master_prioritize(&qualities);
        for (tech_id, priority) in &priorities {
            if let Some(rt) = self.technologies.get_mut(tech_id) {
                rt.state.priority = *priority;
            }
        }
        for mut metrics in fresh_announcements {
            metrics.priority = priorities[&metrics.technology];
            if let Some(nap) = self.naps.get_mut(&metrics.nap) {
                nap.last_metrics = Some(metrics);
            }
        }
    }

    // (4) Terminal decisions, in terminal-id order.
    fn step_decisions(&mut self, out: &mut TickOutput) {
        let now = self.clock.now();
        let now_tick = self.clock.tick_index();

        // Terminals with deliveries due this tick.
        let mut due: BTreeMap<TerminalId, Vec<PendingDelivery>> = BTreeMap::new();
        let due_ticks: Vec<u64> = self
            .pending_deliveries
            .range(..=now_tick)
            .map(|(t, _)| *t)
            .collect();
        for t in due_ticks {
            for delivery in self.pending_deliveries.remove(&t).unwrap_or_default() {
                due.entry(delivery.terminal).or_default().push(delivery);
            }
        }

        let terminal_ids: Vec<TerminalId> = self.terminals.keys().copied().collect();
        for terminal_id in terminal_ids {
            let mut terminal = self.terminals.remove(&terminal_id).expect("known terminal");
            let deliveries = due.remove(&terminal_id).unwrap_or_default();
            let heard_news = !deliveries.is_empty();
            for d in deliveries {
                // The received power is measured at pick-up time; a
                // terminal that moved out of range since the frame was
                // scheduled no longer hears it.
                let power = self.naps[&d.metrics.nap].power_at(&terminal.position, self.policy.pow_thr);
                if power > 0.0 {
                    terminal.on_announcement(d.metrics, power, d.staleness_window, now);
                }
            }
            let flow_starts_now = terminal.flow.as_ref().is_some_and(|f| {
                f.start_time > now - self.clock.tick_s && f.start_time <= now
            });
            if terminal.wants_attachment(now) && (heard_news || flow_starts_now) {
                if self.broker_enabled {
                    self.apply_brokered_decision(&mut terminal, now, out);
                } else {
                    self.apply_default_attachment(&mut terminal, now, out);
                }
            } else if !self.broker_enabled && terminal.wants_attachment(now) {
                // Without announcements there is no event to react to;
                // re-evaluate coverage every tick instead.
                self.apply_default_attachment(&mut terminal, now, out);
            }
            self.terminals.insert(terminal_id, terminal);
        }
    }

    /// Run the decision algorithm and apply its outcome, mediating NAP
    /// admission. A NAP that refuses admission is excluded and the
    /// decision re-run; corrective departures (leaving a serving NAP that
    /// fell to or below the threshold) are limited to one per NAP per
    /// broadcast round so one metric round corrects one flow.
    fn apply_brokered_decision(
        &mut self,
        terminal: &mut TerminalState,
        now: f64,
        out: &mut TickOutput,
    ) {
        let flow_id = self.flow_by_terminal[&terminal.id];
        let mut excluded: BTreeSet<NapId> = BTreeSet::new();
        loop {
            let action = terminal.decide_excluding(&self.policy, &excluded);
            match action {
                Action::Stay => break,
                Action::Attach(target) => {
                    if self.try_admit(target) {
                        self.naps.get_mut(&target).expect("known NAP").attach(flow_id);
                        terminal.attachment = Attachment::Attached(target);
                        out.events.push(EngineEvent::FlowAttached {
                            time: now,
                            terminal: terminal.id,
                            flow: flow_id,
                            nap: target,
                        });
                        break;
                    }
                    excluded.insert(target);
                }
                Action::Handover { from, to } => {
                    // Leaving a NAP that fell under the threshold is a
                    // corrective departure, serialized per metric round;
                    // leaving one whose signal is gone is not.
                    let serving_lost = !terminal.known_naps.contains_key(&from);
                    let corrective = !serving_lost
                        && terminal.known_naps[&from].metrics.q_nap.value()
                            <= self.policy.qual_thr;
                    if corrective && !self.take_departure_token(from) {
                        break; // deferred to the next metric round
                    }
                    if self.try_admit(to) {
                        if corrective {
                            self.departure_token.insert(from, false);
                        }
                        self.naps.get_mut(&from).expect("known NAP").detach(flow_id);
                        self.naps.get_mut(&to).expect("known NAP").attach(flow_id);
                        terminal.attachment = Attachment::Attached(to);
                        terminal.handover_count += 1;
                        out.events.push(EngineEvent::FlowHandedOver {
                            time: now,
                            terminal: terminal.id,
                            flow: flow_id,
                            from,
                            to,
                        });
                        break;
                    }
                    excluded.insert(to);
                }
                Action::Block => {
                    if let Attachment::Attached(from) = terminal.attachment {
                        let serving_lost = !terminal.known_naps.contains_key(&from);
                        if !serving_lost {
                            if !self.take_departure_token(from) {
                                break; // deferred to the next metric round
                            }
                            self.departure_token.insert(from, false);
                        }
                        self.naps.get_mut(&from).expect("known NAP").detach(flow_id);
                    }
                    if terminal.attachment != Attachment::Blocked {
                        terminal.block_events += 1;
                        out.events.push(EngineEvent::FlowBlocked {
                            time: now,
                            terminal: terminal.id,
                            flow: flow_id,
                        });
                    }
                    terminal.attachment = Attachment::Blocked;
                    break;
                }
            }
        }
    }

    /// Admission control at the NAP: the wireless channel must keep its
    /// quality above the threshold with the new flow aboard, and each NAP
    /// accepts at most one new attachment per broadcast round.
    fn try_admit(&mut self, nap_id: NapId) -> bool {
        if !self.attach_token.get(&nap_id).copied().unwrap_or(true) {
            return false;
        }
        let admits = self
            .naps
            .get(&nap_id)
            .is_some_and(|nap| nap.admits_new_flow(self.policy.qual_thr));
        if admits {
            self.attach_token.insert(nap_id, false);
        }
        admits
    }

    fn take_departure_token(&mut self, nap_id: NapId) -> bool {
        self.departure_token.get(&nap_id).copied().unwrap_or(true)
    }

    /// Best-effort attachment used when the brokerage service is disabled:
    /// the terminal latches onto the default technology's strongest
    /// in-coverage NAP and stays there, with no admission control.
    fn apply_default_attachment(
        &mut self,
        terminal: &mut TerminalState,
        now: f64,
        out: &mut TickOutput,
    ) {
        let flow_id = self.flow_by_terminal[&terminal.id];
        if let Attachment::Attached(serving) = terminal.attachment {
            let still_covered = self.naps[&serving].power_at(&terminal.position, self.policy.pow_thr)
                > 0.0;
            if still_covered {
                return;
            }
        }
        let best = self
            .naps
            .values()
            .filter(|nap| nap.technology == self.default_technology)
            .map(|nap| (nap.id, nap.power_at(&terminal.position, self.policy.pow_thr)))
            .filter(|(_, power)| *power > 0.0)
            .max_by(|(ida, pa), (idb, pb)| {
                pa.partial_cmp(pb)
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then(idb.cmp(ida))
            });
        match best {
            Some((target, _)) => {
                let was = terminal.attachment;
                if let Attachment::Attached(from) = was {
                    self.naps.get_mut(&from).expect("known NAP").detach(flow_id);
                }
                self.naps.get_mut(&target).expect("known NAP").attach(flow_id);
                terminal.attachment = Attachment::Attached(target);
                match was {
                    Attachment::Attached(from) => {
                        terminal.handover_count += 1;
                        out.events.push(EngineEvent::FlowHandedOver {
                            time: now,
                            terminal: terminal.id,
                            flow: flow_id,
                            from,
                            to: target,
                        });
                    }
                    _ => out.events.push(EngineEvent::FlowAttached {
                        time: now,
                        terminal: terminal.id,
                        flow: flow_id,
                        nap: target,
                    }),
                }
            }
            None => {
                if let Attachment::Attached(from) = terminal.attachment {
                    self.naps.get_mut(&from).expect("known NAP").detach(flow_id);
                }
                if terminal.attachment != Attachment::Blocked {
                    terminal.block_events += 1;
                    out.events.push(EngineEvent::FlowBlocked {
                        time: now,
                        terminal: terminal.id,
                        flow: flow_id,
                    });
                }
                terminal.attachment = Attachment::Blocked;
            }
        }
    }

    // (5) Fluid traffic: share each wireless channel among its flows,
    // shape per class of service, then pass the shaped rates through the
    // technology backhaul.
    fn step_allocation(&mut self) {
        self.last_allocations.clear();
        let mut per_tech_flows: BTreeMap<TechnologyId, Vec<(FlowId, f64)>> = BTreeMap::new();

        for nap in self.naps.values() {
            let flow_ids: Vec<FlowId> = nap.attached_flows.iter().copied().collect();
            if flow_ids.is_empty() {
                continue;
            }
            let demands: Vec<f64> = flow_ids
                .iter()
                .map(|id| match self.policy.cs_class {
                    CsClass::Cs0 => nap.wireless_capacity,
                    CsClass::Cs1 | CsClass::Cs2 => self.flows[id].cbr_rate,
                })
                .collect();
            let allocations = share_capacity(&demands, nap.wireless_capacity);
            let total: f64 = allocations.iter().sum();
            let q_back = self.technologies[&nap.technology].state.q_back;
            let nap_quality = self.policy.w1 * nap.wq.value() + self.policy.w2 * q_back.value();
            let shaped: Vec<(FlowId, f64)> = flow_ids
                .iter()
                .zip(&allocations)
                .map(|(id, allocation)| {
                    let ctx = NapShapingContext {
                        remaining_capacity: nap.wireless_capacity - (total - allocation),
                        nap_quality,
                        qual_thr: self.policy.qual_thr,
                    };
                    let rate = enforce_cs(&self.flows[id], *allocation, self.policy.cs_class, &ctx);
                    (*id, rate)
                })
                .collect();
            per_tech_flows
                .entry(nap.technology)
                .or_default()
                .extend(shaped);
        }

        for (tech, mut entries) in per_tech_flows {
            entries.sort_by_key(|(id, _)| *id);
            let rates: Vec<f64> = entries.iter().map(|(_, r)| *r).collect();
            let capacity = self.technologies[&tech].state.backhaul.capacity;
            let through = share_capacity(&rates, capacity);
            for ((flow, _), rate) in entries.iter().zip(through) {
                self.last_allocations.insert(*flow, rate);
            }
        }
    }
}
