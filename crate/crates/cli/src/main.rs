//! Command-line interface for the simulator and the planner.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hetflow::config::{load_scenario, technology_names};
use hetflow::demand::{load_demand, scale_demand};
use hetflow::emit::emit_summary;
use hetflow::report::{comparison_table, write_reports};
use hetflow_core::planner::{compare, DemandProfile};
use hetflow_core::scenario::{run_replications, Preset, ScenarioConfig};
use hetflow_core::stats::aggregate;

#[derive(Parser)]
#[command(
    name = "hetflow",
    about = "Deterministic simulator of policy-driven flow brokerage across heterogeneous wireless access networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario (a built-in preset or a scenario file) and write CSV
    /// reports.
    Run(RunArgs),
    /// List the built-in presets.
    ListPresets,
    /// Run the techno-economic planner over a week of demand.
    Plan(PlanArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Built-in preset letter (A..J).
    #[arg(long, conflicts_with = "scenario")]
    preset: Option<String>,
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Override the configured replication count.
    #[arg(long)]
    iterations: Option<u32>,
    /// Override the configured base seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; reports land in <out>/<scenario-name>/.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PlanArgs {
    /// Weekly demand CSV (hour,customers); synthetic commuter week when
    /// omitted.
    #[arg(long)]
    demand: Option<PathBuf>,
    /// Scale factor applied to the demand counts.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Peak customers of the synthetic week (ignored with --demand).
    #[arg(long, default_value_t = 90)]
    peak: u32,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => run_command(args),
        Command::ListPresets => {
            list_presets();
            Ok(())
        }
        Command::Plan(args) => plan_command(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_configs(args: &RunArgs) -> Result<Vec<ScenarioConfig>, String> {
    match (&args.preset, &args.scenario) {
        (Some(name), None) => {
            let preset = Preset::parse(name)
                .ok_or_else(|| format!("unknown preset `{name}` (see `hetflow list-presets`)"))?;
            Ok(preset.configs())
        }
        (None, Some(path)) => Ok(vec![load_scenario(path).map_err(|e| e.to_string())?]),
        (None, None) => Err("pass either --preset or --scenario".into()),
        (Some(_), Some(_)) => unreachable!("clap rejects the combination"),
    }
}

fn run_command(args: RunArgs) -> Result<(), String> {
    let mut configs = resolve_configs(&args)?;
    for config in &mut configs {
        if let Some(iterations) = args.iterations {
            config.iterations = iterations;
        }
        if let Some(seed) = args.seed {
            config.base_seed = seed;
        }
        config.validate().map_err(|e| e.to_string())?;
    }
    for config in &configs {
        println!(
            "running {}: {} replications of {} s...",
            config.name, config.iterations, config.duration
        );
        let results = run_replications(config).map_err(|e| e.to_string())?;
        let summary = aggregate(&results);
        let out_dir = args.out.join(&config.name);
        let names = technology_names(config);
        let written =
            emit_summary(&out_dir, config, &summary, &names).map_err(|e| e.to_string())?;
        let attached: f64 = summary
            .flows_per_technology
            .values()
            .map(|s| s.mean.last().copied().unwrap_or(0.0))
            .sum();
        println!(
            "  final attached flows: {attached:.1}; handovers {:.1}; blocks {:.1}",
            summary.handover_total.mean, summary.block_total.mean
        );
        println!("  wrote {} files under {}", written.len(), out_dir.display());
    }
    Ok(())
}

fn list_presets() {
    println!("built-in presets:");
    for preset in Preset::ALL {
        println!("  {}  {}", preset.letter(), preset.describe());
    }
    println!("(preset J expands to four runs, one per load/threshold pair)");
}

fn plan_command(args: PlanArgs) -> Result<(), String> {
    let demand = match &args.demand {
        Some(path) => load_demand(path).map_err(|e| e.to_string())?,
        None => DemandProfile::synthetic_week(args.peak),
    };
    let demand = if (args.scale - 1.0).abs() > f64::EPSILON {
        scale_demand(&demand, args.scale)
    } else {
        demand
    };
    let rows = compare(&demand);
    print!("{}", comparison_table(&rows));
    let written = write_reports(&args.out, &rows).map_err(|e| e.to_string())?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
