//! Scenario configuration, the built-in presets, and replication running.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::backhaul::BackhaulModel;
use crate::broker::{ProbeConfig, TechnologyState};
use crate::engine::{TechnologyRuntime, TickOutput, World};
use crate::geom::Position;
use crate::ids::{FlowId, NapId, ProviderId, TechnologyId, TerminalId};
use crate::mobility::MobilityPlan;
use crate::nap::NapState;
use crate::policy::PolicySet;
use crate::stats::{Recorder, RunResult};
use crate::terminal::TerminalState;
use crate::traffic::{Flow, TrafficType};

/// One access technology in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TechnologySpec {
    pub id: TechnologyId,
    pub name: String,
    pub provider: ProviderId,
    /// Load coefficient of the wireless-quality formula.
    pub k1: f64,
    /// Wired backhaul capacity, bits/s.
    pub backhaul_capacity: f64,
    /// Default metric broadcast period of this technology's NAPs, seconds.
    pub broadcast_period: f64,
}

/// One attachment point in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NapSpec {
    pub id: NapId,
    pub technology: TechnologyId,
    pub position: Position,
    pub coverage_radius: f64,
    pub wireless_capacity: f64,
    /// Overrides the technology default when set.
    pub broadcast_period: Option<f64>,
}

/// One terminal in a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalSpec {
    pub id: TerminalId,
    pub position: Position,
    pub mobility: MobilityPlan,
    pub subscription: ProviderId,
    /// Explicit flow start; terminals without one are scheduled by the
    /// arrival process in id order.
    pub flow_start: Option<f64>,
}

/// The load arrival process: one new flow per `interval`, first at
/// `first_at`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrivalSchedule {
    pub first_at: f64,
    pub interval: f64,
}

impl Default for ArrivalSchedule {
    fn default() -> Self {
        ArrivalSchedule {
            first_at: 9.0,
            interval: 1.0,
        }
    }
}

/// A burst of simultaneous new flows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlashCrowd {
    pub at: f64,
    pub flows: u32,
    /// Where the crowd terminals appear.
    pub position: Position,
}

/// Demand common to every generated flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSpec {
    pub cbr_rate: f64,
    pub traffic_type: TrafficType,
}

impl Default for FlowSpec {
    fn default() -> Self {
        FlowSpec {
            cbr_rate: 320e3,
            traffic_type: TrafficType::Voice,
        }
    }
}

/// A full simulation scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub duration: f64,
    pub tick: f64,
    pub broker_enabled: bool,
    /// Fallback technology for broker-off runs; defaults to the one with
    /// the widest coverage.
    pub default_technology: Option<TechnologyId>,
    pub policy: PolicySet,
    pub probe: ProbeConfig,
    pub technologies: Vec<TechnologySpec>,
    pub naps: Vec<NapSpec>,
    pub terminals: Vec<TerminalSpec>,
    pub arrivals: ArrivalSchedule,
    pub flash_crowds: Vec<FlashCrowd>,
    pub flow: FlowSpec,
    pub iterations: u32,
    pub base_seed: u64,
}

/// A configuration rejected by validation, naming the offending key.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioError {
    pub key: String,
    pub message: String,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid scenario: {}: {}", self.key, self.message)
    }
}

#[cfg(test)]
impl std::error::Error for ScenarioError {}

macro_rules! reject {
    ($key:expr, $($msg:tt)*) => {
        return Err(ScenarioError {
            key: String::from($key),
            message: alloc::format!($($msg)*),
        })
    };
}

impl ScenarioConfig {
    /// Check every scenario invariant.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration > 0.0) {
            reject!("duration", "must be positive, got {}", self.duration);
        }
        if !(self.tick > 0.0) {
            reject!("tick", "must be positive, got {}", self.tick);
        }
        if self.iterations < 1 {
            reject!("iterations", "at least one replication is required");
        }
        if self.technologies.is_empty() {
            reject!("technologies", "at least one technology is required");
        }
        let mut policy = self.policy.clone();
        for tech in &self.technologies {
            policy.k1_per_technology.insert(tech.id, tech.k1);
            if !(tech.backhaul_capacity > 0.0) {
                reject!(
                    "technologies.backhaul_capacity",
                    "technology {} needs a positive capacity",
                    tech.name
                );
            }
            if !(tech.broadcast_period > 0.0) {
                reject!(
                    "technologies.broadcast_period",
                    "technology {} needs a positive period",
                    tech.name
                );
            }
        }
        if let Err(e) = policy.validate() {
            reject!(alloc::format!("policy.{}", e.field), "{}", e.message);
        }
        if let Err(e) = self.probe.validate() {
            reject!("probe.timeout", "{e}");
        }
        let tech_ids: BTreeMap<TechnologyId, ()> =
            self.technologies.iter().map(|t| (t.id, ())).collect();
        if tech_ids.len() != self.technologies.len() {
            reject!("technologies.id", "duplicate technology ids");
        }
        if self.naps.is_empty() {
            reject!("naps", "at least one NAP is required");
        }
        let mut nap_ids = BTreeMap::new();
        for nap in &self.naps {
            if !tech_ids.contains_key(&nap.technology) {
                reject!(
                    "naps.technology",
                    "NAP {} references unknown technology {}",
                    nap.id,
                    nap.technology
                );
            }
            if !(nap.coverage_radius > 0.0) {
                reject!("naps.coverage_radius", "NAP {} must cover something", nap.id);
            }
            if !(nap.wireless_capacity > 0.0) {
                reject!(
                    "naps.wireless_capacity",
                    "NAP {} needs a positive capacity",
                    nap.id
                );
            }
            if nap_ids.insert(nap.id, ()).is_some() {
                reject!("naps.id", "duplicate NAP id {}", nap.id);
            }
        }
        let mut terminal_ids = BTreeMap::new();
        for t in &self.terminals {
            if terminal_ids.insert(t.id, ()).is_some() {
                reject!("terminals.id", "duplicate terminal id {}", t.id);
            }
        }
        if let Some(tech) = self.default_technology {
            if !tech_ids.contains_key(&tech) {
                reject!("default_technology", "unknown technology {tech}");
            }
        }
        for crowd in &self.flash_crowds {
            if crowd.flows == 0 {
                reject!("flash_crowds.flows", "burst sizes must be positive");
            }
            if !(0.0..self.duration).contains(&crowd.at) {
                reject!(
                    "flash_crowds.at",
                    "crowd at {} s falls outside the run",
                    crowd.at
                );
            }
        }
        if !(self.flow.cbr_rate > 0.0) {
            reject!("flow.cbr_rate", "must be positive");
        }
        if !(self.arrivals.interval > 0.0) {
            reject!("arrivals.interval", "must be positive");
        }
        Ok(())
    }

    /// The technology broker-off terminals fall back to: the configured
    /// one, or the technology owning the widest-coverage NAP.
    pub fn effective_default_technology(&self) -> TechnologyId {
        self.default_technology.unwrap_or_else(|| {
            self.naps
                .iter()
                .max_by(|a, b| {
                    a.coverage_radius
                        .partial_cmp(&b.coverage_radius)
                        .unwrap_or(core::cmp::Ordering::Equal)
                        .then(b.id.cmp(&a.id))
                })
                .map(|nap| nap.technology)
                .unwrap_or(TechnologyId(0))
        })
    }

    /// Materialize the scenario into an engine world.
    pub fn build_world(&self, seed: u64) -> Result<World, ScenarioError> {
        self.validate()?;
        let mut policy = self.policy.clone();
        for tech in &self.technologies {
            policy.k1_per_technology.insert(tech.id, tech.k1);
        }

        let mut technologies = BTreeMap::new();
        for tech in &self.technologies {
            let backhaul = BackhaulModel {
                capacity: tech.backhaul_capacity,
                rtt_base: policy.rtt_base,
                rtt_max: policy.rtt_max,
                util_knee: 0.9,
                util_sat: 1.2,
            };
            technologies.insert(
                tech.id,
                TechnologyRuntime {
                    state: TechnologyState::new(tech.id, tech.provider, backhaul),
                    probe: self.probe.clone(),
                },
            );
        }

        let tech_by_id: BTreeMap<TechnologyId, &TechnologySpec> =
            self.technologies.iter().map(|t| (t.id, t)).collect();
        let mut naps = BTreeMap::new();
        for spec in &self.naps {
            let tech = tech_by_id[&spec.technology];
            naps.insert(
                spec.id,
                NapState::new(
                    spec.id,
                    spec.technology,
                    spec.position,
                    spec.coverage_radius,
                    spec.wireless_capacity,
                    tech.k1,
                    spec.broadcast_period.unwrap_or(tech.broadcast_period),
                ),
            );
        }

        let mut terminals = BTreeMap::new();
        let mut scheduled = 0u32;
        let mut next_id = 0u32;
        for spec in &self.terminals {
            let start = spec.flow_start.unwrap_or_else(|| {
                let s = self.arrivals.first_at + f64::from(scheduled) * self.arrivals.interval;
                scheduled += 1;
                s
            });
            let mut terminal =
                TerminalState::new(spec.id, spec.position, spec.mobility.clone(), spec.subscription);
            terminal.flow = Some(Flow {
                id: FlowId(spec.id.0),
                terminal: spec.id,
                cbr_rate: self.flow.cbr_rate,
                start_time: start,
                traffic_type: self.flow.traffic_type,
            });
            next_id = next_id.max(spec.id.0 + 1);
            terminals.insert(spec.id, terminal);
        }
        // Flash crowds spawn extra terminals demanding flows at the burst
        // instant.
        for crowd in &self.flash_crowds {
            for _ in 0..crowd.flows {
                let id = TerminalId(next_id);
                next_id += 1;
                let mut terminal = TerminalState::new(
                    id,
                    crowd.position,
                    MobilityPlan::Static,
                    ProviderId(0),
                );
                terminal.flow = Some(Flow {
                    id: FlowId(id.0),
                    terminal: id,
                    cbr_rate: self.flow.cbr_rate,
                    start_time: crowd.at,
                    traffic_type: self.flow.traffic_type,
                });
                terminals.insert(id, terminal);
            }
        }

        Ok(World::new(
            self.tick,
            policy,
            self.broker_enabled,
            self.effective_default_technology(),
            technologies,
            naps,
            terminals,
            seed,
        ))
    }

    fn tick_count(&self) -> u64 {
        libm::ceil(self.duration / self.tick - 1e-9) as u64
    }
}

/// Run one replication to completion.
pub fn run(config: &ScenarioConfig, seed: u64) -> Result<RunResult, ScenarioError> {
    run_with_inspector(config, seed, |_, _| {})
}

/// Run one replication, calling `inspect` with the world and tick output
/// after every tick. Used by invariant-checking tests.
pub fn run_with_inspector<F>(
    config: &ScenarioConfig,
    seed: u64,
    mut inspect: F,
) -> Result<RunResult, ScenarioError>
where
    F: FnMut(&World, &TickOutput),
{
    let mut world = config.build_world(seed)?;
    let mut recorder = Recorder::new(&world, config.duration);
    for tick in 0..config.tick_count() {
        let out = world.advance_tick();
        recorder.observe(&world, tick, &out.events);
        inspect(&world, &out);
    }
    Ok(recorder.finish())
}

/// Run every replication of the scenario (seeds `base_seed..+iterations`).
pub fn run_replications(config: &ScenarioConfig) -> Result<Vec<RunResult>, ScenarioError> {
    (0..config.iterations)
        .map(|i| run(config, config.base_seed + u64::from(i)))
        .collect()
}

pub const WIMAX: TechnologyId = TechnologyId(0);
pub const WIFI: TechnologyId = TechnologyId(1);

/// Wireless channel capacities calibrated against the evaluation topology:
/// 16 Mbit/s lets 80 contractual 320 kbit/s flows degrade to 62.5%, and
/// 3.5 Mbit/s matches the Wi-Fi-class per-AP client budget.
pub const WIMAX_WIRELESS_CAPACITY: f64 = 16e6;
pub const WIFI_WIRELESS_CAPACITY: f64 = 3.5e6;

/// Backhaul capacity used when a scenario leaves the wired side
/// unconstrained.
pub const UNCONSTRAINED_BACKHAUL: f64 = 100e6;

fn base_technologies(wimax_backhaul: f64) -> Vec<TechnologySpec> {
    alloc::vec![
        TechnologySpec {
            id: WIMAX,
            name: String::from("wimax"),
            provider: ProviderId(0),
            k1: 0.0183,
            backhaul_capacity: wimax_backhaul,
            broadcast_period: 0.5,
        },
        TechnologySpec {
            id: WIFI,
            name: String::from("wifi"),
            provider: ProviderId(1),
            k1: 0.0524,
            backhaul_capacity: UNCONSTRAINED_BACKHAUL,
            broadcast_period: 0.1,
        },
    ]
}

fn base_naps() -> Vec<NapSpec> {
    alloc::vec![
        NapSpec {
            id: NapId(0),
            technology: WIMAX,
            position: Position::new(1000.0, 1300.0),
            coverage_radius: 1000.0,
            wireless_capacity: WIMAX_WIRELESS_CAPACITY,
            broadcast_period: None,
        },
        NapSpec {
            id: NapId(1),
            technology: WIFI,
            position: Position::new(995.0, 1000.0),
            coverage_radius: 20.0,
            wireless_capacity: WIFI_WIRELESS_CAPACITY,
            broadcast_period: None,
        },
        NapSpec {
            id: NapId(2),
            technology: WIFI,
            position: Position::new(1005.0, 1000.0),
            coverage_radius: 20.0,
            wireless_capacity: WIFI_WIRELESS_CAPACITY,
            broadcast_period: None,
        },
    ]
}

const STATIC_POSITION: Position = Position { x: 1000.0, y: 999.0 };

/// Static terminals sit at the central spot; mobile ones walk in from the
/// edges at 1 m/s, each consecutive pair departing 5 s after the previous
/// one.
fn base_terminals(static_count: u32, mobile_count: u32) -> Vec<TerminalSpec> {
    let mut specs = Vec::new();
    for i in 0..static_count {
        specs.push(TerminalSpec {
            id: TerminalId(i),
            position: STATIC_POSITION,
            mobility: MobilityPlan::Static,
            subscription: ProviderId(0),
            flow_start: None,
        });
    }
    for m in 0..mobile_count {
        let x = if m % 2 == 0 { 900.0 } else { 1100.0 };
        let pair = m / 2;
        specs.push(TerminalSpec {
            id: TerminalId(static_count + m),
            position: Position::new(x, 999.0),
            mobility: MobilityPlan::LinearTo {
                dest: STATIC_POSITION,
                speed: 1.0,
                start_time: 10.0 + 5.0 * f64::from(pair),
            },
            subscription: ProviderId(0),
            flow_start: None,
        });
    }
    specs
}

fn base_config(name: &str, static_count: u32, mobile_count: u32) -> ScenarioConfig {
    ScenarioConfig {
        name: String::from(name),
        duration: 300.0,
        tick: 0.1,
        broker_enabled: true,
        default_technology: None,
        policy: PolicySet::default(),
        probe: ProbeConfig::default(),
        technologies: base_technologies(UNCONSTRAINED_BACKHAUL),
        naps: base_naps(),
        terminals: base_terminals(static_count, mobile_count),
        arrivals: ArrivalSchedule::default(),
        flash_crowds: Vec::new(),
        flow: FlowSpec::default(),
        iterations: 10,
        base_seed: 1,
    }
}

/// The built-in evaluation presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// 80 static terminals, brokerage disabled.
    A,
    /// 80 static terminals, brokerage on, QT 0.525.
    B,
    /// As B with QT 0.725.
    C,
    /// 64 static + 16 mobile terminals.
    D,
    /// 32 static + 48 mobile terminals.
    E,
    /// 40 flows, even weights, overprovisioned 15 Mbit/s backhaul.
    F,
    /// 40 flows, even weights, underprovisioned 5 Mbit/s backhaul.
    G,
    /// As G with QT 0.725.
    H,
    /// 80 flows plus three 40-flow flash crowds over 900 s.
    I,
    /// Load/threshold sweep: {40, 80} flows x QT {0.525, 0.725}.
    J,
}

impl Preset {
    pub const ALL: [Preset; 10] = [
        Preset::A,
        Preset::B,
        Preset::C,
        Preset::D,
        Preset::E,
        Preset::F,
        Preset::G,
        Preset::H,
        Preset::I,
        Preset::J,
    ];

    pub fn parse(name: &str) -> Option<Preset> {
        match name.trim().to_ascii_uppercase().as_str() {
            "A" => Some(Preset::A),
            "B" => Some(Preset::B),
            "C" => Some(Preset::C),
            "D" => Some(Preset::D),
            "E" => Some(Preset::E),
            "F" => Some(Preset::F),
            "G" => Some(Preset::G),
            "H" => Some(Preset::H),
            "I" => Some(Preset::I),
            "J" => Some(Preset::J),
            _ => None,
        }
    }

    pub fn letter(self) -> &'static str {
        match self {
            Preset::A => "A",
            Preset::B => "B",
            Preset::C => "C",
            Preset::D => "D",
            Preset::E => "E",
            Preset::F => "F",
            Preset::G => "G",
            Preset::H => "H",
            Preset::I => "I",
            Preset::J => "J",
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Preset::A => "80 static terminals, brokerage service disabled",
            Preset::B => "80 static terminals, brokerage on, QT 0.525",
            Preset::C => "80 static terminals, brokerage on, QT 0.725",
            Preset::D => "64 static + 16 mobile terminals, QT 0.525",
            Preset::E => "32 static + 48 mobile terminals, QT 0.525",
            Preset::F => "40 flows, weights (0.5, 0.5), 15 Mbit/s backhaul",
            Preset::G => "40 flows, weights (0.5, 0.5), 5 Mbit/s backhaul",
            Preset::H => "40 flows, weights (0.5, 0.5), 5 Mbit/s backhaul, QT 0.725",
            Preset::I => "80 flows + three 40-flow flash crowds over 900 s",
            Preset::J => "sweep: {40, 80} flows x QT {0.525, 0.725}",
        }
    }

    /// The concrete configurations behind the preset. Every preset maps to
    /// one configuration except J, the four-way sweep.
    pub fn configs(self) -> Vec<ScenarioConfig> {
        match self {
            Preset::A => {
                let mut c = base_config("A", 80, 0);
                c.broker_enabled = false;
                alloc::vec![c]
            }
            Preset::B => alloc::vec![base_config("B", 80, 0)],
            Preset::C => {
                let mut c = base_config("C", 80, 0);
                c.policy.qual_thr = 0.725;
                alloc::vec![c]
            }
            Preset::D => alloc::vec![base_config("D", 64, 16)],
            Preset::E => alloc::vec![base_config("E", 32, 48)],
            Preset::F => {
                let mut c = base_config("F", 40, 0);
                c.policy.w1 = 0.5;
                c.policy.w2 = 0.5;
                c.technologies = base_technologies(15e6);
                alloc::vec![c]
            }
            Preset::G => {
                let mut c = base_config("G", 40, 0);
                c.policy.w1 = 0.5;
                c.policy.w2 = 0.5;
                c.technologies = base_technologies(5e6);
                alloc::vec![c]
            }
            Preset::H => {
                let mut c = base_config("H", 40, 0);
                c.policy.w1 = 0.5;
                c.policy.w2 = 0.5;
                c.policy.qual_thr = 0.725;
                c.technologies = base_technologies(5e6);
                alloc::vec![c]
            }
            Preset::I => {
                let mut c = base_config("I", 80, 0);
                c.duration = 900.0;
                c.flash_crowds = alloc::vec![
                    FlashCrowd {
                        at: 260.0,
                        flows: 40,
                        position: STATIC_POSITION,
                    },
                    FlashCrowd {
                        at: 460.0,
                        flows: 40,
                        position: STATIC_POSITION,
                    },
                    FlashCrowd {
                        at: 660.0,
                        flows: 40,
                        position: STATIC_POSITION,
                    },
                ];
                alloc::vec![c]
            }
            Preset::J => {
                let mut configs = Vec::new();
                for (flows, qt) in [(40u32, 0.525), (40, 0.725), (80, 0.525), (80, 0.725)] {
                    let name = alloc::format!("J-{flows}-{qt}");
                    let mut c = base_config(&name, flows, 0);
                    c.policy.qual_thr = qt;
                    configs.push(c);
                }
                configs
            }
        }
    }
}
