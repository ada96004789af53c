//! The scenario file format: TOML with one table per concept, mapped onto
//! the core scenario configuration. Unknown keys are rejected with the
//! full key path.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use hetflow_core::broker::ProbeConfig;
use hetflow_core::geom::Position;
use hetflow_core::ids::{NapId, ProviderId, TechnologyId, TerminalId};
use hetflow_core::mobility::{parse_bonnmotion, MobilityPlan};
use hetflow_core::policy::{BackhaulQualityMode, CsClass, PolicySet};
use hetflow_core::scenario::{
    ArrivalSchedule, FlashCrowd, FlowSpec, NapSpec, ScenarioConfig, TechnologySpec, TerminalSpec,
};
use hetflow_core::traffic::TrafficType;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    duration_s: f64,
    #[serde(default = "default_tick")]
    tick_s: f64,
    #[serde(default = "default_true")]
    broker_enabled: bool,
    #[serde(default = "default_iterations")]
    iterations: u32,
    #[serde(default = "default_seed")]
    base_seed: u64,
    default_technology: Option<String>,
    #[serde(default)]
    policy: PolicyFile,
    #[serde(default)]
    probe: ProbeFile,
    #[serde(default)]
    flow: FlowFile,
    #[serde(default)]
    arrivals: ArrivalsFile,
    #[serde(rename = "technology")]
    technologies: Vec<TechnologyFile>,
    #[serde(rename = "nap")]
    naps: Vec<NapFile>,
    terminals: TerminalsFile,
    #[serde(rename = "flash_crowd", default)]
    flash_crowds: Vec<FlashCrowdFile>,
}

fn default_tick() -> f64 {
    0.1
}
fn default_true() -> bool {
    true
}
fn default_iterations() -> u32 {
    10
}
fn default_seed() -> u64 {
    1
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    rtt_max_ms: Option<f64>,
    k_back: Option<f64>,
    rtt_congestion_threshold_ms: Option<f64>,
    rtt_base_ms: Option<f64>,
    w1: Option<f64>,
    w2: Option<f64>,
    alpha: Option<f64>,
    pow_thr_w: Option<f64>,
    qual_thr: Option<f64>,
    delta: Option<f64>,
    backhaul_quality_mode: Option<String>,
    cs_class: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeFile {
    period_s: Option<f64>,
    timeout_s: Option<f64>,
    max_retries: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowFile {
    cbr_bps: Option<f64>,
    traffic: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArrivalsFile {
    first_at_s: Option<f64>,
    interval_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TechnologyFile {
    name: String,
    #[serde(default)]
    provider: u32,
    k1: f64,
    backhaul_capacity_bps: f64,
    broadcast_period_s: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NapFile {
    technology: String,
    x: f64,
    y: f64,
    coverage_radius_m: f64,
    wireless_capacity_bps: f64,
    broadcast_period_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerminalsFile {
    #[serde(default)]
    static_count: u32,
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
    /// Optional BonnMotion movements file (relative to the scenario file);
    /// one extra terminal follows each trace node.
    mobility_trace: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlashCrowdFile {
    at_s: f64,
    flows: u32,
    x: Option<f64>,
    y: Option<f64>,
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let file: ScenarioFile =
        toml::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))?;
    let config = into_config(file, path)?;
    config
        .validate()
        .map_err(|e| CliError::Scenario(e.to_string()))?;
    Ok(config)
}

fn into_config(file: ScenarioFile, path: &Path) -> Result<ScenarioConfig, CliError> {
    let mut policy = PolicySet::default();
    let p = &file.policy;
    if let Some(v) = p.rtt_max_ms {
        policy.rtt_max = v;
    }
    if let Some(v) = p.k_back {
        policy.k_back = v;
    }
    if let Some(v) = p.rtt_congestion_threshold_ms {
        policy.rtt_congestion_threshold = v;
    }
    if let Some(v) = p.rtt_base_ms {
        policy.rtt_base = v;
    }
    if let Some(v) = p.w1 {
        policy.w1 = v;
    }
    if let Some(v) = p.w2 {
        policy.w2 = v;
    }
    if let Some(v) = p.alpha {
        policy.alpha = v;
    }
    if let Some(v) = p.pow_thr_w {
        policy.pow_thr = v;
    }
    if let Some(v) = p.qual_thr {
        policy.qual_thr = v;
    }
    if let Some(v) = p.delta {
        policy.delta = v;
    }
    if let Some(mode) = &p.backhaul_quality_mode {
        policy.backhaul_quality_mode = match mode.as_str() {
            "literal" => BackhaulQualityMode::Literal,
            "normalized" => BackhaulQualityMode::Normalized,
            other => {
                return Err(CliError::parse(
                    path,
                    format!("policy.backhaul_quality_mode: unknown mode `{other}`"),
                ))
            }
        };
    }
    if let Some(cs) = &p.cs_class {
        policy.cs_class = match cs.to_ascii_lowercase().as_str() {
            "cs0" => CsClass::Cs0,
            "cs1" => CsClass::Cs1,
            "cs2" => CsClass::Cs2,
            other => {
                return Err(CliError::parse(
                    path,
                    format!("policy.cs_class: unknown class `{other}`"),
                ))
            }
        };
    }

    let mut probe = ProbeConfig::default();
    if let Some(v) = file.probe.period_s {
        probe.period = v;
    }
    if let Some(v) = file.probe.timeout_s {
        probe.timeout = v;
    }
    if let Some(v) = file.probe.max_retries {
        probe.max_retries = v;
    }

    let mut flow = FlowSpec::default();
    if let Some(v) = file.flow.cbr_bps {
        flow.cbr_rate = v;
    }
    if let Some(traffic) = &file.flow.traffic {
        flow.traffic_type = match traffic.to_ascii_lowercase().as_str() {
            "voice" => TrafficType::Voice,
            "video" => TrafficType::Video,
            "background" => TrafficType::Background,
            other => {
                return Err(CliError::parse(
                    path,
                    format!("flow.traffic: unknown type `{other}`"),
                ))
            }
        };
    }

    let mut arrivals = ArrivalSchedule::default();
    if let Some(v) = file.arrivals.first_at_s {
        arrivals.first_at = v;
    }
    if let Some(v) = file.arrivals.interval_s {
        arrivals.interval = v;
    }

    let mut tech_ids: BTreeMap<String, TechnologyId> = BTreeMap::new();
    let mut technologies = Vec::new();
    for (idx, tech) in file.technologies.iter().enumerate() {
        let id = TechnologyId(idx as u32);
        if tech_ids.insert(tech.name.clone(), id).is_some() {
            return Err(CliError::parse(
                path,
                format!("technology.name: duplicate `{}`", tech.name),
            ));
        }
        technologies.push(TechnologySpec {
            id,
            name: tech.name.clone(),
            provider: ProviderId(tech.provider),
            k1: tech.k1,
            backhaul_capacity: tech.backhaul_capacity_bps,
            broadcast_period: tech.broadcast_period_s,
        });
    }

    let finite = |key: &str, v: f64| -> Result<f64, CliError> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::parse(path, format!("{key}: must be finite")))
        }
    };

    let mut naps = Vec::new();
    for (idx, nap) in file.naps.iter().enumerate() {
        let technology = *tech_ids.get(&nap.technology).ok_or_else(|| {
            CliError::parse(
                path,
                format!("nap.technology: unknown technology `{}`", nap.technology),
            )
        })?;
        finite("nap.x", nap.x)?;
        finite("nap.y", nap.y)?;
        naps.push(NapSpec {
            id: NapId(idx as u32),
            technology,
            position: Position::new(nap.x, nap.y),
            coverage_radius: nap.coverage_radius_m,
            wireless_capacity: nap.wireless_capacity_bps,
            broadcast_period: nap.broadcast_period_s,
        });
    }

    finite("terminals.x", file.terminals.x)?;
    finite("terminals.y", file.terminals.y)?;
    for crowd in &file.flash_crowds {
        finite("flash_crowd.x", crowd.x.unwrap_or(0.0))?;
        finite("flash_crowd.y", crowd.y.unwrap_or(0.0))?;
    }

    let mut terminals = Vec::new();
    for i in 0..file.terminals.static_count {
        terminals.push(TerminalSpec {
            id: TerminalId(i),
            position: Position::new(file.terminals.x, file.terminals.y),
            mobility: MobilityPlan::Static,
            subscription: ProviderId(0),
            flow_start: None,
        });
    }
    if let Some(trace_rel) = &file.terminals.mobility_trace {
        let trace_path = path.parent().unwrap_or(Path::new(".")).join(trace_rel);
        let text = fs::read_to_string(&trace_path).map_err(|e| CliError::io(&trace_path, e))?;
        let plans =
            parse_bonnmotion(&text).map_err(|e| CliError::parse(&trace_path, e.to_string()))?;
        let base = file.terminals.static_count;
        for (i, plan) in plans.into_iter().enumerate() {
            let origin = Position::new(file.terminals.x, file.terminals.y);
            terminals.push(TerminalSpec {
                id: TerminalId(base + i as u32),
                position: plan.position_at(origin, 0.0),
                mobility: plan,
                subscription: ProviderId(0),
                flow_start: None,
            });
        }
    }

    let default_technology = match &file.default_technology {
        Some(name) => Some(*tech_ids.get(name).ok_or_else(|| {
            CliError::parse(
                path,
                format!("default_technology: unknown technology `{name}`"),
            )
        })?),
        None => None,
    };

    let flash_crowds = file
        .flash_crowds
        .iter()
        .map(|c| FlashCrowd {
            at: c.at_s,
            flows: c.flows,
            position: Position::new(
                c.x.unwrap_or(file.terminals.x),
                c.y.unwrap_or(file.terminals.y),
            ),
        })
        .collect();

    Ok(ScenarioConfig {
        name: file.name,
        duration: file.duration_s,
        tick: file.tick_s,
        broker_enabled: file.broker_enabled,
        default_technology,
        policy,
        probe,
        technologies,
        naps,
        terminals,
        arrivals,
        flash_crowds,
        flow,
        iterations: file.iterations,
        base_seed: file.base_seed,
    })
}

/// Technology id-to-name mapping used by report writers.
pub fn technology_names(config: &ScenarioConfig) -> BTreeMap<TechnologyId, String> {
    config
        .technologies
        .iter()
        .map(|t| (t.id, t.name.clone()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const MINIMAL: &str = r#"
name = "custom"
duration_s = 60.0

[[technology]]
name = "wimax"
k1 = 0.0183
backhaul_capacity_bps = 1e8
broadcast_period_s = 0.5

[[technology]]
name = "wifi"
provider = 1
k1 = 0.0524
backhaul_capacity_bps = 1e8
broadcast_period_s = 0.1

[[nap]]
technology = "wimax"
x = 1000.0
y = 1300.0
coverage_radius_m = 1000.0
wireless_capacity_bps = 16e6

[[nap]]
technology = "wifi"
x = 995.0
y = 1000.0
coverage_radius_m = 20.0
wireless_capacity_bps = 3.5e6

[terminals]
static_count = 10
x = 1000.0
y = 999.0
"#;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_scenario_loads() {
        let f = write_temp(MINIMAL);
        let config = load_scenario(f.path()).unwrap();
        assert_eq!(config.name, "custom");
        assert_eq!(config.terminals.len(), 10);
        assert_eq!(config.technologies.len(), 2);
        assert_eq!(config.policy.qual_thr, 0.525);
        assert_eq!(config.arrivals.first_at, 9.0);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_path() {
        let f = write_temp(&format!("{MINIMAL}\n[policy]\nnot_a_knob = 1.0\n"));
        let err = load_scenario(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("not_a_knob"), "{msg}");
    }

    #[test]
    fn bad_weights_are_rejected_with_the_key() {
        let f = write_temp(&format!("{MINIMAL}\n[policy]\nw1 = 0.9\nw2 = 0.2\n"));
        let err = load_scenario(f.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("w1+w2"), "{msg}");
    }

    #[test]
    fn mobility_trace_spawns_terminals() {
        let dir = tempfile::tempdir().unwrap();
        let trace_path = dir.path().join("trace.bm");
        std::fs::write(&trace_path, "0 1000 999 60 1010 999\n0 990 999 60 1000 999\n").unwrap();
        let scenario_path = dir.path().join("scenario.toml");
        std::fs::write(
            &scenario_path,
            format!("{MINIMAL}\n").replace(
                "static_count = 10",
                "static_count = 2\nmobility_trace = \"trace.bm\"",
            ),
        )
        .unwrap();
        let config = load_scenario(&scenario_path).unwrap();
        assert_eq!(config.terminals.len(), 4);
        assert!(matches!(
            config.terminals[2].mobility,
            MobilityPlan::WaypointTrace(_)
        ));
    }

    #[test]
    fn unknown_nap_technology_is_an_error() {
        let f = write_temp(&MINIMAL.replace("technology = \"wifi\"", "technology = \"lte\""));
        let err = load_scenario(f.path()).unwrap_err();
        assert!(err.to_string().contains("lte"));
    }
}
