//! Per-run statistics and replication aggregation with Student-t
//! confidence intervals.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::engine::{EngineEvent, World, PACKET_BITS};
use crate::ids::{FlowId, TechnologyId};

/// Everything one simulation run reports.
///
/// Technology-level series are recorded per tick; per-flow series are
/// bucketed per second. Ticks during which a flow is not attached
/// contribute zero throughput and zero loss, and no delay sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub tick_s: f64,
    pub duration_s: f64,
    /// Attached flows per technology, per tick.
    pub flows_per_technology: BTreeMap<TechnologyId, Vec<u32>>,
    /// Blocked flows, per tick.
    pub blocked: Vec<u32>,
    /// Backhaul quality per technology, per tick.
    pub backhaul_quality: BTreeMap<TechnologyId, Vec<f64>>,
    /// Technology reputation, per tick.
    pub reputation: BTreeMap<TechnologyId, Vec<f64>>,
    /// Mean goodput per flow, bits/s, per second.
    pub flow_throughput: BTreeMap<FlowId, Vec<f64>>,
    /// Lost packets per flow, per second.
    pub flow_lost_packets: BTreeMap<FlowId, Vec<f64>>,
    /// Mean inter-arrival packet delay per flow, milliseconds, per second;
    /// absent while the flow moves no traffic.
    pub flow_delay_ms: BTreeMap<FlowId, Vec<Option<f64>>>,
    pub handovers_per_second: Vec<u32>,
    pub blocks_per_second: Vec<u32>,
    pub handover_total: u32,
    pub block_total: u32,
}

impl RunResult {
    /// Attached flows summed over technologies, per tick.
    pub fn attached_total(&self) -> Vec<u32> {
        let mut total = Vec::new();
        for series in self.flows_per_technology.values() {
            if total.is_empty() {
                total = series.clone();
            } else {
                for (acc, v) in total.iter_mut().zip(series) {
                    *acc += v;
                }
            }
        }
        total
    }
}

/// Accumulates per-tick observations of a [`World`] into a [`RunResult`].
#[derive(Debug)]
pub struct Recorder {
    tick_s: f64,
    ticks_per_second: u64,
    result: RunResult,
    delay_sums: BTreeMap<FlowId, Vec<(f64, u32)>>,
    throughput_ticks: Vec<u32>,
}

impl Recorder {
    pub fn new(world: &World, duration_s: f64) -> Self {
        let tick_s = world.clock.tick_s;
        let ticks_per_second = world.clock.period_ticks(1.0);
        let seconds = libm::ceil(duration_s - 1e-9) as usize;
        let techs: Vec<TechnologyId> = world.technologies.keys().copied().collect();
        let flows: Vec<FlowId> = world.flows.keys().copied().collect();
        let result = RunResult {
            tick_s,
            duration_s,
            flows_per_technology: techs.iter().map(|t| (*t, Vec::new())).collect(),
            blocked: Vec::new(),
            backhaul_quality: techs.iter().map(|t| (*t, Vec::new())).collect(),
            reputation: techs.iter().map(|t| (*t, Vec::new())).collect(),
            flow_throughput: flows
                .iter()
                .map(|f| (*f, alloc::vec![0.0; seconds]))
                .collect(),
            flow_lost_packets: flows
                .iter()
                .map(|f| (*f, alloc::vec![0.0; seconds]))
                .collect(),
            flow_delay_ms: flows
                .iter()
                .map(|f| (*f, alloc::vec![None; seconds]))
                .collect(),
            handovers_per_second: alloc::vec![0; seconds],
            blocks_per_second: alloc::vec![0; seconds],
            handover_total: 0,
            block_total: 0,
        };
        Recorder {
            tick_s,
            ticks_per_second,
            delay_sums: flows
                .iter()
                .map(|f| (*f, alloc::vec![(0.0, 0); seconds]))
                .collect(),
            throughput_ticks: alloc::vec![0; seconds],
            result,
        }
    }

    /// Record the world state right after a tick completed. `tick_index`
    /// is the index of the tick that just ran.
    pub fn observe(&mut self, world: &World, tick_index: u64, events: &[EngineEvent]) {
        let second = (tick_index / self.ticks_per_second) as usize;
        let seconds = self.result.handovers_per_second.len();

        let attached = world.attached_per_technology();
        for (tech, series) in &mut self.result.flows_per_technology {
            series.push(attached.get(tech).copied().unwrap_or(0));
        }
        self.result.blocked.push(world.blocked_count());
        for (tech, runtime) in &world.technologies {
            self.result
                .backhaul_quality
                .get_mut(tech)
                .expect("known tech")
                .push(runtime.state.q_back.value());
            self.result
                .reputation
                .get_mut(tech)
                .expect("known tech")
                .push(runtime.state.reputation.value());
        }

        if second < seconds {
            self.throughput_ticks[second] += 1;
            for (flow_id, flow) in &world.flows {
                let alloc = world.last_allocations.get(flow_id).copied();
                if let Some(rate) = alloc {
                    self.result.flow_throughput.get_mut(flow_id).expect("known")[second] +=
                        rate;
                    let lost = (flow.cbr_rate - rate).max(0.0) * self.tick_s / PACKET_BITS;
                    self.result
                        .flow_lost_packets
                        .get_mut(flow_id)
                        .expect("known")[second] += lost;
                    if rate > 0.0 {
                        let delay_ms = PACKET_BITS / rate * 1000.0;
                        let slot = &mut self.delay_sums.get_mut(flow_id).expect("known")[second];
                        slot.0 += delay_ms;
                        slot.1 += 1;
                    }
                }
            }
            for event in events {
                match event {
                    EngineEvent::FlowHandedOver { .. } => {
                        self.result.handovers_per_second[second] += 1;
                        self.result.handover_total += 1;
                    }
                    EngineEvent::FlowBlocked { .. } => {
                        self.result.blocks_per_second[second] += 1;
                        self.result.block_total += 1;
                    }
                    EngineEvent::FlowAttached { .. } => {}
                }
            }
        }
    }

    pub fn finish(mut self) -> RunResult {
        // Per-second throughput sums become means over the recorded ticks.
        for series in self.result.flow_throughput.values_mut() {
            for (second, value) in series.iter_mut().enumerate() {
                let ticks = self.throughput_ticks[second];
                if ticks > 0 {
                    *value /= f64::from(ticks);
                }
            }
        }
        for (flow, sums) in &self.delay_sums {
            let series = self.result.flow_delay_ms.get_mut(flow).expect("known");
            for (second, (sum, count)) in sums.iter().enumerate() {
                if *count > 0 {
                    series[second] = Some(sum / f64::from(*count));
                }
            }
        }
        self.result
    }
}

/// Two-sided 95% Student-t critical value for `df` degrees of freedom.
pub fn t_critical_95(df: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179,
        2.160, 2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
        2.060, 2.056, 2.052, 2.048, 2.045, 2.042,
    ];
    match df {
        0 => f64::INFINITY,
        1..=30 => TABLE[df - 1],
        31..=40 => 2.021,
        41..=60 => 2.000,
        61..=120 => 1.980,
        _ => 1.960,
    }
}

/// Mean with a 95% confidence half-width (`None` with fewer than two
/// samples).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiValue {
    pub mean: f64,
    pub ci95: Option<f64>,
}

/// Element-wise mean and confidence half-width over replications.
#[derive(Debug, Clone, PartialEq)]
pub struct CiSeries {
    pub mean: Vec<f64>,
    pub ci95: Option<Vec<f64>>,
}

/// Like [`CiSeries`] but tolerating absent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionalCiSeries {
    pub mean: Vec<Option<f64>>,
    pub ci95: Vec<Option<f64>>,
}

/// Replication summary: per-metric means with 95% confidence half-widths.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub iterations: usize,
    pub tick_s: f64,
    pub duration_s: f64,
    pub flows_per_technology: BTreeMap<TechnologyId, CiSeries>,
    pub blocked: CiSeries,
    pub backhaul_quality: BTreeMap<TechnologyId, CiSeries>,
    pub reputation: BTreeMap<TechnologyId, CiSeries>,
    pub flow_throughput: BTreeMap<FlowId, CiSeries>,
    pub flow_lost_packets: BTreeMap<FlowId, CiSeries>,
    pub flow_delay_ms: BTreeMap<FlowId, OptionalCiSeries>,
    pub handovers_per_second: CiSeries,
    pub blocks_per_second: CiSeries,
    pub handover_total: CiValue,
    pub block_total: CiValue,
}

fn ci_value(samples: &[f64]) -> CiValue {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return CiValue { mean, ci95: None };
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let half = t_critical_95(n - 1) * libm::sqrt(var / n as f64);
    CiValue {
        mean,
        ci95: Some(half),
    }
}

fn ci_series<'a, I, F>(runs: I, extract: F, len: usize, n: usize) -> CiSeries
where
    I: Iterator<Item = &'a RunResult> + Clone,
    F: Fn(&'a RunResult, usize) -> f64,
{
    let mut mean = Vec::with_capacity(len);
    let mut ci = Vec::with_capacity(len);
    for idx in 0..len {
        let samples: Vec<f64> = runs.clone().map(|r| extract(r, idx)).collect();
        let v = ci_value(&samples);
        mean.push(v.mean);
        ci.push(v.ci95.unwrap_or(0.0));
    }
    CiSeries {
        mean,
        ci95: (n >= 2).then_some(ci),
    }
}

/// Combine replications of one scenario into means and 95% confidence
/// half-widths per time index and per scalar counter.
///
/// With a single replication the means are reported and the interval is
/// flagged absent. All runs must come from the same scenario.
pub fn aggregate(results: &[RunResult]) -> Summary {
    assert!(!results.is_empty(), "aggregate needs at least one run");
    let first = &results[0];
    let n = results.len();
    let ticks = first.blocked.len();
    let seconds = first.handovers_per_second.len();

    let series_u32 = |pick: fn(&RunResult) -> &Vec<u32>| -> CiSeries {
        ci_series(
            results.iter(),
            move |r, i| f64::from(pick(r)[i]),
            ticks,
            n,
        )
    };

    let mut flows_per_technology = BTreeMap::new();
    let mut backhaul_quality = BTreeMap::new();
    let mut reputation = BTreeMap::new();
    for tech in first.flows_per_technology.keys() {
        let t = *tech;
        flows_per_technology.insert(
            t,
            ci_series(
                results.iter(),
                move |r, i| f64::from(r.flows_per_technology[&t][i]),
                ticks,
                n,
            ),
        );
        backhaul_quality.insert(
            t,
            ci_series(
                results.iter(),
                move |r, i| r.backhaul_quality[&t][i],
                ticks,
                n,
            ),
        );
        reputation.insert(
            t,
            ci_series(results.iter(), move |r, i| r.reputation[&t][i], ticks, n),
        );
    }

    let mut flow_throughput = BTreeMap::new();
    let mut flow_lost_packets = BTreeMap::new();
    let mut flow_delay_ms = BTreeMap::new();
    for flow in first.flow_throughput.keys() {
        let f = *flow;
        flow_throughput.insert(
            f,
            ci_series(
                results.iter(),
                move |r, i| r.flow_throughput[&f][i],
                seconds,
                n,
            ),
        );
        flow_lost_packets.insert(
            f,
            ci_series(
                results.iter(),
                move |r, i| r.flow_lost_packets[&f][i],
                seconds,
                n,
            ),
        );
        let mut mean = Vec::with_capacity(seconds);
        let mut ci = Vec::with_capacity(seconds);
        for idx in 0..seconds {
            let samples: Vec<f64> = results
                .iter()
                .filter_map(|r| r.flow_delay_ms[&f][idx])
                .collect();
            if samples.is_empty() {
                mean.push(None);
                ci.push(None);
            } else {
                let v = ci_value(&samples);
                mean.push(Some(v.mean));
                ci.push(v.ci95);
            }
        }
        flow_delay_ms.insert(f, OptionalCiSeries { mean, ci95: ci });
    }

    let totals = |pick: fn(&RunResult) -> u32| -> CiValue {
        let samples: Vec<f64> = results.iter().map(|r| f64::from(pick(r))).collect();
        ci_value(&samples)
    };

    Summary {
        iterations: n,
        tick_s: first.tick_s,
        duration_s: first.duration_s,
        flows_per_technology,
        blocked: series_u32(|r| &r.blocked),
        backhaul_quality,
        reputation,
        flow_throughput,
        flow_lost_packets,
        flow_delay_ms,
        handovers_per_second: ci_series(
            results.iter(),
            |r, i| f64::from(r.handovers_per_second[i]),
            seconds,
            n,
        ),
        blocks_per_second: ci_series(
            results.iter(),
            |r, i| f64::from(r.blocks_per_second[i]),
            seconds,
            n,
        ),
        handover_total: totals(|r| r.handover_total),
        block_total: totals(|r| r.block_total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn result_with_handover_total(total: u32) -> RunResult {
        RunResult {
            tick_s: 0.1,
            duration_s: 1.0,
            flows_per_technology: BTreeMap::new(),
            blocked: alloc::vec![0; 10],
            backhaul_quality: BTreeMap::new(),
            reputation: BTreeMap::new(),
            flow_throughput: BTreeMap::new(),
            flow_lost_packets: BTreeMap::new(),
            flow_delay_ms: BTreeMap::new(),
            handovers_per_second: alloc::vec![total; 1],
            blocks_per_second: alloc::vec![0; 1],
            handover_total: total,
            block_total: 0,
        }
    }

    #[test]
    fn identical_replications_have_zero_width_ci() {
        let runs = alloc::vec![result_with_handover_total(5); 4];
        let summary = aggregate(&runs);
        assert_abs_diff_eq!(summary.handover_total.mean, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(summary.handover_total.ci95.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_replications_use_t_with_one_degree_of_freedom() {
        // Samples {10, 14}: mean 12, sample sd 2*sqrt(2), half-width
        // t(0.975, 1) * s / sqrt(2) = 12.706 * 2 = 25.412.
        let runs = alloc::vec![
            result_with_handover_total(10),
            result_with_handover_total(14),
        ];
        let summary = aggregate(&runs);
        assert_abs_diff_eq!(summary.handover_total.mean, 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(summary.handover_total.ci95.unwrap(), 25.412, epsilon = 1e-9);
    }

    #[test]
    fn single_replication_reports_mean_only() {
        let runs = alloc::vec![result_with_handover_total(7)];
        let summary = aggregate(&runs);
        assert_abs_diff_eq!(summary.handover_total.mean, 7.0, epsilon = 1e-12);
        assert!(summary.handover_total.ci95.is_none());
        assert!(summary.handovers_per_second.ci95.is_none());
    }

    #[test]
    fn t_table_spot_checks() {
        assert_abs_diff_eq!(t_critical_95(1), 12.706);
        assert_abs_diff_eq!(t_critical_95(9), 2.262);
        assert_abs_diff_eq!(t_critical_95(200), 1.960);
    }
}
