//! Report emission: one CSV per figure-equivalent plus a plain-text
//! summary. Outputs are bit-stable given identical inputs and seeds.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hetflow_core::ids::TechnologyId;
use hetflow_core::policy::PolicySet;
use hetflow_core::scenario::ScenarioConfig;
use hetflow_core::stats::{CiValue, Summary};

use crate::CliError;

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

fn fmt_ci(ci: Option<f64>) -> String {
    ci.map(|v| format!("{v}")).unwrap_or_default()
}

/// Tick index to seconds, rounded to the millisecond so the time column
/// stays free of accumulated float noise.
fn tick_time(i: usize, tick: f64) -> f64 {
    (i as f64 * tick * 1e3).round() / 1e3
}

/// Write the six CSV reports and the text summary for one aggregated
/// scenario. Returns the paths written.
pub fn emit_summary(
    out_dir: &Path,
    config: &ScenarioConfig,
    summary: &Summary,
    tech_names: &BTreeMap<TechnologyId, String>,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut written = Vec::new();
    let tick = summary.tick_s;
    let name_of = |tech: &TechnologyId| -> &str {
        tech_names.get(tech).map(|s| s.as_str()).unwrap_or("?")
    };

    // Attached flows per technology, per tick.
    let mut csv = String::from("t,technology,attached_flows\n");
    for (tech, series) in &summary.flows_per_technology {
        for (i, mean) in series.mean.iter().enumerate() {
            let _ = writeln!(csv, "{},{},{}", tick_time(i, tick), name_of(tech), mean);
        }
    }
    written.push(write_file(out_dir, "flows_per_tech.csv", &csv)?);

    // Per-flow goodput, per second.
    let mut csv = String::from("t,flow,throughput_bps,ci95\n");
    for (flow, series) in &summary.flow_throughput {
        for (i, mean) in series.mean.iter().enumerate() {
            let ci = series.ci95.as_ref().map(|c| c[i]);
            let _ = writeln!(csv, "{i},{flow},{mean},{}", fmt_ci(ci));
        }
    }
    written.push(write_file(out_dir, "flow_throughput.csv", &csv)?);

    // Lost packets per flow, per second.
    let mut csv = String::from("t,flow,lost_packets,ci95\n");
    for (flow, series) in &summary.flow_lost_packets {
        for (i, mean) in series.mean.iter().enumerate() {
            let ci = series.ci95.as_ref().map(|c| c[i]);
            let _ = writeln!(csv, "{i},{flow},{mean},{}", fmt_ci(ci));
        }
    }
    written.push(write_file(out_dir, "lost_packets.csv", &csv)?);

    // Inter-arrival packet delay; rows appear only while the flow moves
    // traffic.
    let mut csv = String::from("t,flow,delay_ms,ci95\n");
    for (flow, series) in &summary.flow_delay_ms {
        for (i, mean) in series.mean.iter().enumerate() {
            if let Some(mean) = mean {
                let _ = writeln!(csv, "{i},{flow},{mean},{}", fmt_ci(series.ci95[i]));
            }
        }
    }
    written.push(write_file(out_dir, "interarrival_delay.csv", &csv)?);

    // Backhaul quality and technology reputation, per tick.
    let mut csv = String::from("t,technology,quality,ci95\n");
    for (tech, series) in &summary.backhaul_quality {
        for (i, mean) in series.mean.iter().enumerate() {
            let ci = series.ci95.as_ref().map(|c| c[i]);
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                tick_time(i, tick),
                name_of(tech),
                mean,
                fmt_ci(ci)
            );
        }
    }
    written.push(write_file(out_dir, "backhaul_quality.csv", &csv)?);

    let mut csv = String::from("t,technology,reputation,ci95\n");
    for (tech, series) in &summary.reputation {
        for (i, mean) in series.mean.iter().enumerate() {
            let ci = series.ci95.as_ref().map(|c| c[i]);
            let _ = writeln!(
                csv,
                "{},{},{},{}",
                tick_time(i, tick),
                name_of(tech),
                mean,
                fmt_ci(ci)
            );
        }
    }
    written.push(write_file(out_dir, "reputation.csv", &csv)?);

    written.push(write_file(
        out_dir,
        "summary.txt",
        &render_summary(config, summary, tech_names),
    )?);
    Ok(written)
}

fn render_ci_value(v: &CiValue) -> String {
    match v.ci95 {
        Some(ci) => format!("{:.3} +- {:.3}", v.mean, ci),
        None => format!("{:.3} (single run, no CI)", v.mean),
    }
}

fn render_summary(
    config: &ScenarioConfig,
    summary: &Summary,
    tech_names: &BTreeMap<TechnologyId, String>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {}", config.name);
    let _ = writeln!(
        out,
        "duration: {} s, tick: {} s, iterations: {}, base seed: {}",
        config.duration, config.tick, summary.iterations, config.base_seed
    );
    let _ = writeln!(
        out,
        "brokerage service: {}",
        if config.broker_enabled { "enabled" } else { "disabled" }
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "totals (mean over replications, 95% CI)");
    let _ = writeln!(out, "  handovers: {}", render_ci_value(&summary.handover_total));
    let _ = writeln!(out, "  blocks:    {}", render_ci_value(&summary.block_total));
    let _ = writeln!(out);
    let _ = writeln!(out, "final attached flows per technology");
    for (tech, series) in &summary.flows_per_technology {
        let name = tech_names.get(tech).map(|s| s.as_str()).unwrap_or("?");
        let last = series.mean.last().copied().unwrap_or(0.0);
        let _ = writeln!(out, "  {name}: {last:.1}");
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "policy");
    // Echo the effective policy: per-technology coefficients live in the
    // technology specs and are merged in here.
    let mut policy = config.policy.clone();
    for tech in &config.technologies {
        policy.k1_per_technology.insert(tech.id, tech.k1);
    }
    out.push_str(&render_policy(&policy));
    out
}

/// Echo the full policy for provenance.
fn render_policy(policy: &PolicySet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "  rtt_max_ms: {}", policy.rtt_max);
    let _ = writeln!(out, "  k_back: {}", policy.k_back);
    let _ = writeln!(
        out,
        "  rtt_congestion_threshold_ms: {}",
        policy.rtt_congestion_threshold
    );
    let _ = writeln!(out, "  rtt_base_ms: {}", policy.rtt_base);
    for (tech, k1) in &policy.k1_per_technology {
        let _ = writeln!(out, "  k1[technology {tech}]: {k1}");
    }
    let _ = writeln!(out, "  w1: {}", policy.w1);
    let _ = writeln!(out, "  w2: {}", policy.w2);
    let _ = writeln!(out, "  alpha: {}", policy.alpha);
    let _ = writeln!(out, "  pow_thr_w: {:e}", policy.pow_thr);
    let _ = writeln!(out, "  qual_thr: {}", policy.qual_thr);
    let _ = writeln!(out, "  delta: {}", policy.delta);
    let _ = writeln!(out, "  backhaul_quality_mode: {:?}", policy.backhaul_quality_mode);
    let _ = writeln!(out, "  cs_class: {:?}", policy.cs_class);
    out
}
