//! The terminal agent: keeps a ranked list of announced NAPs, admits or
//! blocks its flow against the quality threshold, and performs
//! hysteresis-guarded handovers.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use crate::broker::AnnouncedMetrics;
use crate::geom::Position;
use crate::ids::{NapId, ProviderId, TerminalId};
use crate::metrics::{build_ranking, RankCandidate, RankScore};
use crate::mobility::MobilityPlan;
use crate::policy::PolicySet;
use crate::traffic::Flow;

/// What a terminal last heard from one NAP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownNap {
    pub metrics: AnnouncedMetrics,
    /// Received power at the last delivery, watts.
    pub power: f64,
    /// When the last delivery arrived, seconds.
    pub last_heard: f64,
    /// Entries unheard for longer than this are dropped (three broadcast
    /// periods of the NAP in question).
    pub staleness_window: f64,
}

/// Where the terminal's flow currently lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attachment {
    Detached,
    Attached(NapId),
    Blocked,
}

/// The decision taken by one invocation of [`TerminalState::decide`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Stay,
    Attach(NapId),
    Handover { from: NapId, to: NapId },
    Block,
}

/// A multimode mobile terminal and its agent state.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalState {
    pub id: TerminalId,
    /// Placement position; the origin of the mobility plan.
    pub home: Position,
    /// Current position, updated by the engine every tick.
    pub position: Position,
    pub mobility: MobilityPlan,
    pub subscription: ProviderId,
    pub flow: Option<Flow>,
    pub attachment: Attachment,
    pub known_naps: BTreeMap<NapId, KnownNap>,
    pub handover_count: u32,
    pub block_events: u32,
}

impl TerminalState {
    pub fn new(
        id: TerminalId,
        home: Position,
        mobility: MobilityPlan,
        subscription: ProviderId,
    ) -> Self {
        TerminalState {
            id,
            home,
            position: home,
            mobility,
            subscription,
            flow: None,
            attachment: Attachment::Detached,
            known_naps: BTreeMap::new(),
            handover_count: 0,
            block_events: 0,
        }
    }

    /// The NAP currently serving this terminal's flow, if any.
    pub fn serving_nap(&self) -> Option<NapId> {
        match self.attachment {
            Attachment::Attached(nap) => Some(nap),
            _ => None,
        }
    }

    /// Whether the terminal has a flow demanding attachment at time `now`.
    pub fn wants_attachment(&self, now: f64) -> bool {
        self.flow.as_ref().is_some_and(|f| f.start_time <= now)
    }

    /// Record a metrics delivery from a NAP whose signal reaches this
    /// terminal, then drop every entry that has gone silent past its
    /// staleness window.
    pub fn on_announcement(
        &mut self,
        metrics: AnnouncedMetrics,
        power: f64,
        staleness_window: f64,
        now: f64,
    ) {
        debug_assert!(power > 0.0, "deliveries only reach in-coverage terminals");
        self.known_naps.insert(
            metrics.nap,
            KnownNap {
                metrics,
                power,
                last_heard: now,
                staleness_window,
            },
        );
        self.evict_stale(now);
    }

    /// Drop NAPs that have gone silent past their staleness window.
    pub fn evict_stale(&mut self, now: f64) {
        self.known_naps
            .retain(|_, known| now - known.last_heard <= known.staleness_window);
    }

    /// Rank every known NAP by the terminal-side score.
    pub fn ranking(&self, policy: &PolicySet) -> Vec<(NapId, RankScore)> {
        let candidates: Vec<RankCandidate> = self
            .known_naps
            .values()
            .map(|k| RankCandidate {
                nap: k.metrics.nap,
                power: k.power,
                q_nap: k.metrics.q_nap,
                reputation: k.metrics.reputation,
                priority: k.metrics.priority,
            })
            .collect();
        build_ranking(&candidates, policy)
    }

    /// The decision algorithm over the announced metrics.
    ///
    /// Candidates whose announced quality sits at or below the quality
    /// threshold are ineligible. A detached or blocked flow attaches to
    /// the top eligible NAP, if any. An attached flow moves to a better
    /// eligible NAP only when the score improvement exceeds the hysteresis
    /// margin; a flow whose serving NAP has dropped to or below the
    /// threshold escapes without hysteresis, or blocks when nowhere is
    /// left to go.
    pub fn decide(&self, policy: &PolicySet) -> Action {
        self.decide_excluding(policy, &BTreeSet::new())
    }

    /// [`TerminalState::decide`] with a set of NAPs to skip; the engine
    /// re-runs the decision with the NAPs that refused admission excluded.
    pub fn decide_excluding(&self, policy: &PolicySet, excluded: &BTreeSet<NapId>) -> Action {
        let ranking = self.ranking(policy);
        let eligible: Vec<(NapId, RankScore)> = ranking
            .iter()
            .filter(|(nap, _)| {
                !excluded.contains(nap)
                    && self.known_naps[nap].metrics.q_nap.value() > policy.qual_thr
            })
            .copied()
            .collect();

        let serving = match self.attachment {
            Attachment::Detached | Attachment::Blocked => {
                return match eligible.first() {
                    Some((nap, _)) => Action::Attach(*nap),
                    None => Action::Block,
                };
            }
            Attachment::Attached(nap) => nap,
        };

        let serving_known = self.known_naps.get(&serving);
        let serving_eligible =
            serving_known.is_some_and(|k| k.metrics.q_nap.value() > policy.qual_thr);

        if serving_eligible {
            let serving_score = ranking
                .iter()
                .find(|(nap, _)| *nap == serving)
                .map(|(_, s)| s.value())
                .expect("serving NAP is known");
            for (nap, score) in &eligible {
                if *nap == serving {
                    continue;
                }
                if score.value() - serving_score > policy.delta {
                    return Action::Handover {
                        from: serving,
                        to: *nap,
                    };
                }
            }
            Action::Stay
        } else {
            // The serving NAP fell to or below the threshold (or went
            // silent): escape without hysteresis.
            match eligible.iter().find(|(nap, _)| *nap != serving) {
                Some((nap, _)) => Action::Handover {
                    from: serving,
                    to: *nap,
                },
                None => Action::Block,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{FlowId, TechnologyId};
    use crate::metrics::Quality;
    use crate::traffic::TrafficType;

    fn policy() -> PolicySet {
        let mut p = PolicySet::default();
        p.k1_per_technology.insert(TechnologyId(0), 0.0183);
        p.k1_per_technology.insert(TechnologyId(1), 0.0524);
        p
    }

    fn terminal() -> TerminalState {
        let mut t = TerminalState::new(
            TerminalId(0),
            Position::new(1000.0, 999.0),
            MobilityPlan::Static,
            ProviderId(0),
        );
        t.flow = Some(Flow {
            id: FlowId(0),
            terminal: TerminalId(0),
            cbr_rate: 320e3,
            start_time: 9.0,
            traffic_type: TrafficType::Voice,
        });
        t
    }

    fn announce(t: &mut TerminalState, nap: u32, q_nap: f64, reputation: f64, now: f64) {
        let m = AnnouncedMetrics {
            nap: NapId(nap),
            technology: TechnologyId(nap % 2),
            q_nap: Quality::new(q_nap),
            reputation: Quality::new(reputation),
            priority: 1,
            timestamp: now,
        };
        t.on_announcement(m, 2e-8, 0.3, now);
    }

    #[test]
    fn first_announcement_above_qt_attaches() {
        let mut t = terminal();
        announce(&mut t, 0, 0.9, 1.0, 10.0);
        assert_eq!(t.decide(&policy()), Action::Attach(NapId(0)));
    }

    #[test]
    fn all_below_qt_blocks() {
        let mut t = terminal();
        announce(&mut t, 0, 0.5, 1.0, 10.0);
        announce(&mut t, 1, 0.5, 1.0, 10.0);
        assert_eq!(t.decide(&policy()), Action::Block);
    }

    #[test]
    fn quality_exactly_at_qt_is_ineligible() {
        let mut t = terminal();
        announce(&mut t, 0, 0.525, 1.0, 10.0);
        assert_eq!(t.decide(&policy()), Action::Block);
    }

    #[test]
    fn hysteresis_holds_small_improvements() {
        // Serving score 0.2 vs alternative 0.4: the 0.2 gap sits below the
        // 0.33 hysteresis margin.
        let mut t = terminal();
        // q_nap chosen so the scores come out near 0.2 and 0.4:
        // score = rep * (0.2*1 + 0.8*(q-0.525)/0.525) with clamped power.
        announce(&mut t, 0, 0.525, 1.0, 10.0); // score 0.2
        announce(&mut t, 1, 0.6563, 1.0, 10.0); // score ~0.4
        t.attachment = Attachment::Attached(NapId(0));
        // Serving at exactly QT would be ineligible; lift it just above.
        announce(&mut t, 0, 0.526, 1.0, 10.0);
        let action = t.decide(&policy());
        assert_eq!(action, Action::Stay);
    }

    #[test]
    fn large_improvement_triggers_handover() {
        // Serving ~0.2 vs alternative ~0.6: gap 0.4 exceeds delta 0.33.
        let mut t = terminal();
        announce(&mut t, 0, 0.526, 1.0, 10.0);
        announce(&mut t, 1, 0.7875, 1.0, 10.0); // score ~0.6
        t.attachment = Attachment::Attached(NapId(0));
        assert_eq!(
            t.decide(&policy()),
            Action::Handover {
                from: NapId(0),
                to: NapId(1)
            }
        );
    }

    #[test]
    fn serving_below_qt_escapes_without_hysteresis() {
        let mut t = terminal();
        announce(&mut t, 0, 0.40, 1.0, 10.0);
        announce(&mut t, 1, 0.60, 1.0, 10.0); // small gap, still taken
        t.attachment = Attachment::Attached(NapId(0));
        assert_eq!(
            t.decide(&policy()),
            Action::Handover {
                from: NapId(0),
                to: NapId(1)
            }
        );
    }

    #[test]
    fn serving_below_qt_with_no_alternative_blocks() {
        let mut t = terminal();
        announce(&mut t, 0, 0.40, 1.0, 10.0);
        t.attachment = Attachment::Attached(NapId(0));
        assert_eq!(t.decide(&policy()), Action::Block);
    }

    #[test]
    fn unchanged_metrics_only_touch_the_timestamp() {
        let mut t = terminal();
        let metrics = AnnouncedMetrics {
            nap: NapId(0),
            technology: TechnologyId(0),
            q_nap: Quality::new(0.9),
            reputation: Quality::new(1.0),
            priority: 1,
            timestamp: 10.0,
        };
        t.on_announcement(metrics, 2e-8, 0.3, 10.0);
        t.attachment = Attachment::Attached(NapId(0));
        let before = t.known_naps[&NapId(0)];
        t.on_announcement(metrics, 2e-8, 0.3, 10.1);
        let after = t.known_naps[&NapId(0)];
        assert_eq!(before.metrics, after.metrics);
        assert_eq!(after.last_heard, 10.1);
        assert_eq!(t.decide(&policy()), Action::Stay);
    }

    #[test]
    fn silent_nap_is_evicted_and_treated_as_lost() {
        let mut t = terminal();
        announce(&mut t, 0, 0.9, 1.0, 10.0);
        announce(&mut t, 1, 0.8, 1.0, 10.0);
        t.attachment = Attachment::Attached(NapId(0));
        // NAP 0 goes silent; NAP 1 keeps announcing past the window.
        announce(&mut t, 1, 0.8, 1.0, 10.4);
        assert!(!t.known_naps.contains_key(&NapId(0)));
        assert_eq!(
            t.decide(&policy()),
            Action::Handover {
                from: NapId(0),
                to: NapId(1)
            }
        );
    }

    #[test]
    fn excluded_naps_are_skipped() {
        let mut t = terminal();
        announce(&mut t, 0, 0.9, 1.0, 10.0);
        announce(&mut t, 1, 0.8, 1.0, 10.0);
        let mut excluded = BTreeSet::new();
        excluded.insert(NapId(0));
        assert_eq!(
            t.decide_excluding(&policy(), &excluded),
            Action::Attach(NapId(1))
        );
        excluded.insert(NapId(1));
        assert_eq!(t.decide_excluding(&policy(), &excluded), Action::Block);
    }

    #[test]
    fn frozen_metrics_reach_a_fixed_point() {
        // Ping-pong freedom: with constant scores the decision never
        // oscillates between two NAPs.
        let mut t = terminal();
        announce(&mut t, 0, 0.70, 1.0, 10.0);
        announce(&mut t, 1, 0.95, 1.0, 10.0);
        match t.decide(&policy()) {
            Action::Attach(nap) => t.attachment = Attachment::Attached(nap),
            other => panic!("expected attach, got {other:?}"),
        }
        for _ in 0..50 {
            match t.decide(&policy()) {
                Action::Stay => {}
                Action::Handover { to, .. } => {
                    t.attachment = Attachment::Attached(to);
                    t.handover_count += 1;
                }
                other => panic!("unexpected action {other:?}"),
            }
        }
        assert!(t.handover_count <= 1, "no oscillation under frozen metrics");
    }
}
