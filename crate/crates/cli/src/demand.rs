//! Weekly demand ingestion: `hour,customers` CSV covering hours 0..=167.

use std::fs;
use std::path::Path;

use hetflow_core::planner::{DemandProfile, WEEK_HOURS};

use crate::CliError;

/// Load a demand CSV. Requires every hour 0..=167 exactly once and
/// non-negative counts; a header row is allowed.
pub fn load_demand(path: &Path) -> Result<DemandProfile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_demand(&text).map_err(|msg| CliError::parse(path, msg))
}

fn parse_demand(text: &str) -> Result<DemandProfile, String> {
    let mut seen: Vec<Option<u32>> = vec![None; WEEK_HOURS];
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let hour_field = fields.next().unwrap_or("").trim();
        let count_field = fields.next().unwrap_or("").trim();
        if fields.next().is_some() {
            return Err(format!("line {}: expected two columns", idx + 1));
        }
        if idx == 0 && hour_field.parse::<i64>().is_err() {
            continue; // header row
        }
        let hour: i64 = hour_field
            .parse()
            .map_err(|_| format!("line {}: hour `{hour_field}` is not a number", idx + 1))?;
        if !(0..WEEK_HOURS as i64).contains(&hour) {
            return Err(format!("line {}: hour {hour} outside 0..=167", idx + 1));
        }
        let count: i64 = count_field
            .parse()
            .map_err(|_| format!("line {}: count `{count_field}` is not a number", idx + 1))?;
        if count < 0 {
            return Err(format!("line {}: negative customer count {count}", idx + 1));
        }
        let slot = &mut seen[hour as usize];
        if slot.is_some() {
            return Err(format!("line {}: duplicate hour {hour}", idx + 1));
        }
        *slot = Some(count as u32);
    }
    let mut hourly = Vec::with_capacity(WEEK_HOURS);
    for (hour, slot) in seen.iter().enumerate() {
        match slot {
            Some(count) => hourly.push(*count),
            None => return Err(format!("missing hour {hour}")),
        }
    }
    DemandProfile::from_hourly(hourly).map_err(|e| e.to_string())
}

/// Scale every hourly count by `factor` (rounded to the nearest customer).
pub fn scale_demand(demand: &DemandProfile, factor: f64) -> DemandProfile {
    let hourly = demand
        .hourly()
        .iter()
        .map(|c| (f64::from(*c) * factor).round() as u32)
        .collect();
    DemandProfile::from_hourly(hourly).expect("length preserved")
}
