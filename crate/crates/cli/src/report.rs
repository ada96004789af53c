//! Planner comparison reports: CSV plus a plain-text table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use hetflow_core::planner::ComparisonRow;

use crate::CliError;

/// Render the comparison as CSV.
pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut csv = String::from(
        "strategy,broker,provider,weekly_profit,mean_quality,blocked,moved_out,moved_in,dominant\n",
    );
    for row in rows {
        let broker = if row.broker_enabled { "on" } else { "off" };
        for (provider, week) in [("A", &row.outcome.a), ("B", &row.outcome.b)] {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{}",
                row.strategy,
                broker,
                provider,
                week.profit,
                week.mean_quality,
                week.blocked,
                week.moved_out,
                week.moved_in,
                row.dominant
            );
        }
    }
    csv
}

/// Render the comparison as an aligned text table, flagging the dominant
/// provider per setting.
pub fn comparison_table(rows: &[ComparisonRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<9} {:<7} {:>16} {:>16} {:>10} {:>10} {:>9}",
        "strategy", "broker", "profit A", "profit B", "quality A", "quality B", "dominant"
    );
    for row in rows {
        let _ = writeln!(
            out,
            "{:<9} {:<7} {:>16.2} {:>16.2} {:>10.3} {:>10.3} {:>9}",
            row.strategy.number(),
            if row.broker_enabled { "on" } else { "off" },
            row.outcome.a.profit,
            row.outcome.b.profit,
            row.outcome.a.mean_quality,
            row.outcome.b.mean_quality,
            row.dominant
        );
    }
    out
}

/// Write both planner artifacts into `out_dir`.
pub fn write_reports(out_dir: &Path, rows: &[ComparisonRow]) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let csv_path = out_dir.join("planner_comparison.csv");
    fs::write(&csv_path, comparison_csv(rows)).map_err(|e| CliError::io(&csv_path, e))?;
    let table_path = out_dir.join("planner_summary.txt");
    fs::write(&table_path, comparison_table(rows)).map_err(|e| CliError::io(&table_path, e))?;
    Ok(vec![csv_path, table_path])
}
