//! Command-line driver: synthesize or ingest a scenario, evaluate cache
//! architectures against a target hit ratio, and sweep the recommendation
//! (p) and locality (q) perturbations.
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 infeasible
//! target (evaluate with --strict).

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fogsim::cache::write_plan_summaries;
use fogsim::config::{Mode, RunConfig};
use fogsim::metrics::{emit_report, run_sweep, ReportFormat};
use fogsim::scenario::{build_from_trace, build_synthetic, IngestOptions, Scenario};
use fogsim::trace::{write_trace, CategoryRules};

const ENV_OUTPUT_DIR: &str = "FOGSIM_OUTPUT_DIR";
const ENV_JOBS: &str = "FOGSIM_JOBS";

#[derive(Parser)]
#[command(
    name = "fogsim",
    about = "Hierarchical cache sizing for cellular networks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides its config field.
#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Run configuration file (TOML). Defaults apply when omitted.
    #[arg(long, short = 'c')]
    config: Option<PathBuf>,
    /// Output directory (overrides config and FOGSIM_OUTPUT_DIR).
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Tree fanout.
    #[arg(long)]
    fanout: Option<usize>,
    /// Target hit ratio.
    #[arg(long)]
    target: Option<f64>,
    /// Worker cap (0 = one per core; overrides FOGSIM_JOBS).
    #[arg(long)]
    jobs: Option<usize>,
    /// Treat all item sizes as 1.
    #[arg(long)]
    unit_sizes: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario and write its files.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write requests as JSON lines.
        #[arg(long)]
        jsonl: bool,
    },
    /// Ingest a trace file into a scenario (vehicular demand only).
    Ingest {
        #[command(flatten)]
        common: CommonArgs,
        /// Trace CSV path (overrides config).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        jsonl: bool,
    },
    /// Evaluate cache architectures on previously written scenario files.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Exit with code 3 when the target is infeasible.
        #[arg(long)]
        strict: bool,
    },
    /// Sweep the p or q perturbation over a grid.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// Sweep axis: p (recommendation) or q (locality).
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated grid, e.g. 0,0.1,0.25,0.5.
        #[arg(long)]
        grid: Option<String>,
        /// Number of seeds to average over.
        #[arg(long)]
        seeds: Option<u32>,
    },
}

enum CliError {
    Validation(String),
    Io(String),
    InfeasibleTarget,
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::InfeasibleTarget => 3,
        }
    }
}

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn io_error(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn load_config(common: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path).map_err(validation)?,
        None => RunConfig::default(),
    };
    if let Ok(dir) = std::env::var(ENV_OUTPUT_DIR) {
        cfg.output_dir = PathBuf::from(dir);
    }
    if let Ok(jobs) = std::env::var(ENV_JOBS) {
        cfg.jobs = jobs
            .parse()
            .map_err(|e| validation(format!("{ENV_JOBS}: {e}")))?;
    }
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    if let Some(fanout) = common.fanout {
        cfg.fanout = fanout;
    }
    if let Some(target) = common.target {
        cfg.target_hit_ratio = target;
    }
    if let Some(jobs) = common.jobs {
        cfg.jobs = jobs;
    }
    if common.unit_sizes {
        cfg.unit_sizes = true;
    }
    Ok(cfg)
}

fn configure_rayon(cfg: &RunConfig) {
    if cfg.jobs > 0 {
        // May fail if a pool already exists; the cap is best-effort and
        // never changes results.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build_global();
    }
}

fn print_scenario_summary(scenario: &Scenario) {
    println!("operators: {}", scenario.topologies.len());
    for (op, topo) in &scenario.topologies {
        let counts: Vec<String> = fogsim::topology::Level::ALL
            .iter()
            .map(|l| format!("{}={}", l.as_str(), topo.level_count(*l)))
            .collect();
        println!("  {op}: {}", counts.join(" "));
    }
    println!("requests: {}", scenario.requests.len());
}

fn cmd_synth(common: &CommonArgs, jsonl: bool) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    cfg.mode = Mode::Synth;
    cfg.validate().map_err(validation)?;
    configure_rayon(&cfg);

    let specs = cfg.scenario_specs().map_err(validation)?;
    let scenario = build_synthetic(
        &specs,
        &cfg.demand_config(),
        cfg.fanout,
        cfg.grouping,
        cfg.master_seed,
    )
    .map_err(validation)?;
    let manifest = scenario.manifest("synth", cfg.master_seed, cfg.fanout);
    scenario
        .save(&cfg.output_dir, &manifest, jsonl || cfg.jsonl)
        .map_err(io_error)?;
    print_scenario_summary(&scenario);
    println!("wrote scenario to {}", cfg.output_dir.display());
    Ok(())
}

fn cmd_ingest(common: &CommonArgs, trace: Option<&Path>, jsonl: bool) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    cfg.mode = Mode::Ingest;
    if let Some(path) = trace {
        cfg.ingest.trace_path = path.to_path_buf();
    }
    cfg.validate().map_err(validation)?;
    configure_rayon(&cfg);

    let rules = match &cfg.ingest.rules_path {
        Some(path) => CategoryRules::load(path).map_err(io_error)?,
        None => CategoryRules::builtin(),
    };
    let options = IngestOptions {
        schema: cfg.ingest.schema.clone(),
        rules,
        thresholds: cfg.mobility_thresholds(),
        fanout: cfg.fanout,
        grouping: cfg.grouping,
    };
    let outcome = build_from_trace(
        &cfg.ingest.trace_path,
        &options,
        &cfg.demand_config(),
        cfg.master_seed,
    )
    .map_err(io_error)?;

    let manifest = outcome
        .scenario
        .manifest("ingest", cfg.master_seed, cfg.fanout);
    outcome
        .scenario
        .save(&cfg.output_dir, &manifest, jsonl || cfg.jsonl)
        .map_err(io_error)?;

    // The vehicular-only trace, in the input schema.
    let filtered_path = cfg.output_dir.join("filtered.csv");
    let f = fs::File::create(&filtered_path).map_err(io_error)?;
    write_trace(
        BufWriter::new(f),
        &outcome.vehicular_records,
        &cfg.ingest.schema,
    )
    .map_err(io_error)?;

    println!(
        "rows: {} total, {} malformed (skipped), {} vehicular records",
        outcome.total_rows,
        outcome.malformed_rows,
        outcome.vehicular_records.len()
    );
    print_scenario_summary(&outcome.scenario);
    println!("wrote scenario to {}", cfg.output_dir.display());
    Ok(())
}

fn cmd_evaluate(common: &CommonArgs, strict: bool) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    cfg.validate().map_err(validation)?;
    configure_rayon(&cfg);

    let (scenario, _manifest) = Scenario::load(&cfg.output_dir).map_err(io_error)?;
    let opts = cfg.eval_options();

    // Per-category popularity pools over the baseline stream, for audit.
    let pools = fogsim::demand::popularity_pools(&scenario.requests, cfg.demand.rec_top_fraction);
    let pools_path = cfg.output_dir.join("popularity-pools.json");
    let f = fs::File::create(&pools_path).map_err(io_error)?;
    serde_json::to_writer_pretty(BufWriter::new(f), &pools).map_err(io_error)?;

    let mut evaluations = Vec::new();
    let mut any_infeasible = false;
    for (op, topology) in &scenario.topologies {
        let requests = scenario.operator_requests(op);
        let (eval, plans) =
            fogsim::metrics::evaluate_operator(&requests, topology, &opts).map_err(io_error)?;
        any_infeasible |= eval.infeasible;

        let summaries: Vec<_> = plans.iter().map(|p| p.summary(topology)).collect();
        let path = cfg.output_dir.join(format!("plan-summary-{op}.csv"));
        let f = fs::File::create(&path).map_err(io_error)?;
        write_plan_summaries(BufWriter::new(f), &summaries).map_err(io_error)?;
        for plan in &plans {
            let path = cfg
                .output_dir
                .join(format!("plan-{}-{op}.json", plan.architecture.as_str()));
            let f = fs::File::create(&path).map_err(io_error)?;
            serde_json::to_writer_pretty(BufWriter::new(f), plan).map_err(io_error)?;
        }

        if eval.non_cacheable_marked {
            eprintln!("warning: {op}: non-cacheable pairs were marked to reach the target");
        }
        if eval.infeasible {
            eprintln!(
                "warning: {op}: target {} infeasible, best achievable {:.4}",
                eval.target_hit_ratio, eval.achieved_hit_ratio
            );
        }
        println!(
            "{op}: achieved {:.4} (target {}), {} marked pairs",
            eval.achieved_hit_ratio, eval.target_hit_ratio, eval.marked_pair_count
        );
        for report in &eval.reports {
            println!(
                "  {}: total_size={} items={} price_of_fog={} mean_distance_km={}",
                report.architecture,
                report.summary.total_size,
                report.summary.total_items,
                report
                    .price_of_fog
                    .value
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "undefined".into()),
                report
                    .distance
                    .mean_km
                    .map(|v| format!("{v:.4}"))
                    .unwrap_or_else(|| "undefined".into()),
            );
        }
        evaluations.push(eval);
    }

    let metrics_path = cfg.output_dir.join("metrics.json");
    let f = fs::File::create(&metrics_path).map_err(io_error)?;
    serde_json::to_writer_pretty(BufWriter::new(f), &evaluations).map_err(io_error)?;
    println!("wrote metrics to {}", metrics_path.display());

    if strict && any_infeasible {
        return Err(CliError::InfeasibleTarget);
    }
    Ok(())
}

fn cmd_sweep(
    common: &CommonArgs,
    axis: Option<&str>,
    grid: Option<&str>,
    seeds: Option<u32>,
) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    if let Some(axis) = axis {
        cfg.sweep.axis = axis.to_string();
    }
    if let Some(grid) = grid {
        cfg.sweep.grid = grid
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| validation(format!("sweep.grid: {e}")))?;
    }
    if let Some(seeds) = seeds {
        cfg.sweep.seeds = seeds;
    }
    cfg.validate().map_err(validation)?;
    configure_rayon(&cfg);

    let (scenario, _manifest) = Scenario::load(&cfg.output_dir).map_err(io_error)?;
    let result = run_sweep(
        &scenario.requests,
        &scenario.topologies,
        cfg.sweep_axis().map_err(validation)?,
        &cfg.sweep.grid,
        &cfg.sweep_seeds(),
        &cfg.sweep_options(),
    )
    .map_err(io_error)?;

    let csv_path = cfg.output_dir.join("sweep.csv");
    let json_path = cfg.output_dir.join("sweep.json");
    emit_report(&result, ReportFormat::Csv, &csv_path).map_err(io_error)?;
    emit_report(&result, ReportFormat::Json, &json_path).map_err(io_error)?;
    println!(
        "swept {} over {} grid points x {} seeds ({} rows)",
        result.axis.as_str(),
        result.grid.len(),
        result.seed_count,
        result.rows.len()
    );
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn run() -> Result<(), CliError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Synth { common, jsonl } => cmd_synth(common, *jsonl),
        Command::Ingest {
            common,
            trace,
            jsonl,
        } => cmd_ingest(common, trace.as_deref(), *jsonl),
        Command::Evaluate { common, strict } => cmd_evaluate(common, *strict),
        Command::Sweep {
            common,
            axis,
            grid,
            seeds,
        } => cmd_sweep(common, axis.as_deref(), grid.as_deref(), *seeds),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Validation(msg) => eprintln!("error: {msg}"),
                CliError::Io(msg) => eprintln!("error: {msg}"),
                CliError::InfeasibleTarget => eprintln!("error: target hit ratio is infeasible"),
            }
            ExitCode::from(e.code())
        }
    }
}
