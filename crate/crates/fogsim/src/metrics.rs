//! Performance metrics and the p/q sweep harness: price-of-fog, distance
//! travelled by data, per-architecture evaluation, and figure-ready tables.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cache::{
    achieved_hit_ratio, mark_cache_worthy, place_caches, tally_popularity, CacheError, CachePlan,
    MarkOptions, PlanSummary,
};
use crate::demand::{
    apply_locality, apply_recommendation, size_map, DemandError, Request, SizeMode,
};
use crate::geo::great_circle_distance;
use crate::topology::{Architecture, Level, Topology, TopologyError};

/// Extra cache capacity a distributed architecture needs compared to caching
/// only at the core switches, as a size ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceOfFog {
    pub architecture: Architecture,
    pub total_size_arch: u64,
    pub total_size_core: u64,
    /// `None` when the core plan is empty (ratio undefined).
    pub value: Option<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error("plans must derive from the same cache-worthy set")]
    MismatchedPlans,
    #[error("price-of-fog needs the core-level plan, got {0}")]
    NotCorePlan(Architecture),
    #[error("report has no rows")]
    EmptyReport,
    #[error("sweep grid must be non-empty, strictly increasing, within [0, 1]")]
    BadGrid,
    #[error("sweep needs at least one seed")]
    NoSeeds,
    #[error("requests reference operator '{0}' with no topology")]
    UnknownOperator(String),
    #[error("report file {0}: {1}")]
    Io(String, String),
}

/// Ratio of a plan's total size to the core plan's total size.
pub fn price_of_fog(
    plan_arch: &CachePlan,
    plan_core: &CachePlan,
) -> Result<PriceOfFog, MetricsError> {
    if plan_core.architecture != Level::Core {
        return Err(MetricsError::NotCorePlan(plan_core.architecture));
    }
    if plan_arch.marked_pairs != plan_core.marked_pairs {
        return Err(MetricsError::MismatchedPlans);
    }
    let value = (plan_core.total_size > 0)
        .then(|| plan_arch.total_size as f64 / plan_core.total_size as f64);
    Ok(PriceOfFog {
        architecture: plan_arch.architecture,
        total_size_arch: plan_arch.total_size,
        total_size_core: plan_core.total_size,
        value,
    })
}

/// Physical distance between the caching node and the serving base station,
/// aggregated over hit requests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub architecture: Architecture,
    /// Request-weighted mean over hits; `None` when nothing hit.
    pub mean_km: Option<f64>,
    /// Mean over distinct marked pairs, each counted once.
    pub per_item_mean_km: Option<f64>,
    /// Tree hops between base station and cache (constant per architecture).
    pub mean_hops: f64,
    pub hit_count: u64,
    pub per_operator: BTreeMap<String, f64>,
}

/// Request-weighted mean cache-to-base-station distance over hit requests.
/// Misses are excluded; base-station plans yield exactly zero.
pub fn mean_hit_distance(
    plan: &CachePlan,
    requests: &[Request],
    topology: &Topology,
) -> Result<DistanceReport, MetricsError> {
    // Distance is a function of the serving cell only.
    let mut cell_distance: BTreeMap<&str, f64> = BTreeMap::new();
    for (cell, _) in &plan.marked_pairs {
        if !cell_distance.contains_key(cell.as_str()) {
            let bs = topology.base_station_of(cell)?;
            let node = topology.ancestor_at_level(bs, plan.architecture)?;
            let d =
                great_circle_distance(topology.node(node)?.position, topology.node(bs)?.position);
            cell_distance.insert(cell.as_str(), d);
        }
    }

    let marked: std::collections::HashSet<(&str, &str)> = plan
        .marked_pairs
        .iter()
        .map(|(c, i)| (c.as_str(), i.as_str()))
        .collect();
    let mut hit_count = 0u64;
    let mut weighted_sum = 0.0;
    for r in requests {
        if marked.contains(&(r.cell_id.as_str(), r.item.as_str())) {
            hit_count += 1;
            weighted_sum += cell_distance[r.cell_id.as_str()];
        }
    }
    let mean_km = (hit_count > 0).then(|| weighted_sum / hit_count as f64);

    let per_item_mean_km = (!plan.marked_pairs.is_empty()).then(|| {
        let sum: f64 = plan
            .marked_pairs
            .iter()
            .map(|(cell, _)| cell_distance[cell.as_str()])
            .sum();
        sum / plan.marked_pairs.len() as f64
    });

    let mut per_operator = BTreeMap::new();
    if let Some(mean) = mean_km {
        per_operator.insert(topology.operator.clone(), mean);
    }
    Ok(DistanceReport {
        architecture: plan.architecture,
        mean_km,
        per_item_mean_km,
        mean_hops: f64::from(plan.architecture.hops_from_base_station()),
        hit_count,
        per_operator,
    })
}

/// Evaluation knobs shared by `evaluate_operator` and the sweep harness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub target_hit_ratio: f64,
    pub mark: MarkOptions,
    pub size_mode: SizeMode,
    pub architectures: Vec<Architecture>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            target_hit_ratio: 0.5,
            mark: MarkOptions::default(),
            size_mode: SizeMode::default(),
            architectures: Level::ALL.to_vec(),
        }
    }
}

/// Metrics of one architecture within an operator evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureReport {
    pub architecture: Architecture,
    pub summary: PlanSummary,
    pub price_of_fog: PriceOfFog,
    pub distance: DistanceReport,
}

/// Full tally -> mark -> place -> measure pass for one operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorEvaluation {
    pub operator: String,
    pub request_count: u64,
    pub target_hit_ratio: f64,
    pub achieved_hit_ratio: f64,
    pub infeasible: bool,
    pub non_cacheable_marked: bool,
    pub marked_pair_count: u64,
    pub reports: Vec<ArchitectureReport>,
}

/// Runs the caching procedure end to end for one operator's requests and
/// topology, and measures every requested architecture. The core level is
/// always placed internally because price-of-fog is defined against it.
pub fn evaluate_operator(
    requests: &[Request],
    topology: &Topology,
    opts: &EvalOptions,
) -> Result<(OperatorEvaluation, Vec<CachePlan>), MetricsError> {
    let pairs = tally_popularity(requests);
    let worthy = mark_cache_worthy(&pairs, opts.target_hit_ratio, opts.mark)?;
    let sizes = size_map(requests, opts.size_mode);

    let core_plan = place_caches(&worthy, topology, Level::Core, &sizes)?;
    // Hits depend only on the marked pairs, so any architecture reports the
    // same ratio; measure the core plan once.
    let achieved = achieved_hit_ratio(&core_plan, requests, topology)?;
    let mut reports = Vec::new();
    let mut plans = Vec::new();
    for &arch in &opts.architectures {
        let plan = if arch == Level::Core {
            core_plan.clone()
        } else {
            place_caches(&worthy, topology, arch, &sizes)?
        };
        reports.push(ArchitectureReport {
            architecture: arch,
            summary: plan.summary(topology),
            price_of_fog: price_of_fog(&plan, &core_plan)?,
            distance: mean_hit_distance(&plan, requests, topology)?,
        });
        plans.push(plan);
    }
    Ok((
        OperatorEvaluation {
            operator: topology.operator.clone(),
            request_count: requests.len() as u64,
            target_hit_ratio: opts.target_hit_ratio,
            achieved_hit_ratio: achieved,
            infeasible: worthy.infeasible,
            non_cacheable_marked: worthy.non_cacheable_marked,
            marked_pair_count: worthy.pairs.len() as u64,
            reports,
        },
        plans,
    ))
}

/// Which demand perturbation a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    P,
    Q,
}

impl SweepAxis {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepAxis::P => "p",
            SweepAxis::Q => "q",
        }
    }

    pub fn parse(s: &str) -> Option<SweepAxis> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p" | "recommendation" => Some(SweepAxis::P),
            "q" | "locality" => Some(SweepAxis::Q),
            _ => None,
        }
    }
}

/// One averaged row of a sweep: a (operator, architecture, axis value)
/// triple with all metrics, averaged over seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub operator: String,
    pub architecture: Architecture,
    pub axis: String,
    pub axis_value: f64,
    pub seed_count: u64,
    pub total_size_bytes: f64,
    pub total_size_items: f64,
    pub price_of_fog: Option<f64>,
    pub mean_distance_km: Option<f64>,
    pub mean_hops: f64,
    pub achieved_hit_ratio: f64,
    pub infeasible_flag: bool,
    pub total_size_bytes_std: f64,
    pub price_of_fog_std: f64,
    pub mean_distance_km_std: f64,
}

/// Result of a p- or q-sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    pub seed_count: u64,
    pub rows: Vec<SweepRow>,
}

/// Perturbation settings the sweep holds fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub eval: EvalOptions,
    /// Recommendation probability used when the axis is q.
    pub base_rec_prob: f64,
    /// Locality probability used when the axis is p.
    pub base_loc_prob: f64,
    pub rec_top_fraction: f64,
    pub local_items_per_cell: u64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            eval: EvalOptions::default(),
            base_rec_prob: 0.0,
            base_loc_prob: 0.0,
            rec_top_fraction: 0.05,
            local_items_per_cell: 5,
        }
    }
}

/// Applies both demand perturbations with the axis value overriding the
/// swept probability. Recommendation pools are computed before locality
/// items exist. Passing the same seed across grid points couples the
/// per-request switch draws, so larger probabilities switch supersets.
pub fn perturb_requests(
    requests: &[Request],
    axis: SweepAxis,
    axis_value: f64,
    opts: &SweepOptions,
    seed: u64,
) -> Result<Vec<Request>, MetricsError> {
    let (p, q) = match axis {
        SweepAxis::P => (axis_value, opts.base_loc_prob),
        SweepAxis::Q => (opts.base_rec_prob, axis_value),
    };
    let after_rec = apply_recommendation(requests, p, opts.rec_top_fraction, seed)?;
    Ok(apply_locality(
        &after_rec,
        q,
        opts.local_items_per_cell,
        seed,
    )?)
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn mean_std_opt(values: &[Option<f64>]) -> (Option<f64>, f64) {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() != values.len() || present.is_empty() {
        return (None, 0.0);
    }
    let (mean, std) = mean_std(&present);
    (Some(mean), std)
}

/// Runs the sweep: for every grid value and seed, perturb demand, re-tally,
/// re-mark at the fixed target, place every architecture, and measure;
/// rows are averaged over seeds with the standard deviation retained.
/// Requests must already carry item IDs. Grid points run in parallel.
pub fn run_sweep(
    requests: &[Request],
    topologies: &BTreeMap<String, Topology>,
    axis: SweepAxis,
    grid: &[f64],
    seeds: &[u64],
    opts: &SweepOptions,
) -> Result<SweepResult, MetricsError> {
    if grid.is_empty()
        || grid.windows(2).any(|w| w[0] >= w[1])
        || grid.iter().any(|v| !(0.0..=1.0).contains(v))
    {
        return Err(MetricsError::BadGrid);
    }
    if seeds.is_empty() {
        return Err(MetricsError::NoSeeds);
    }
    for r in requests {
        if !topologies.contains_key(&r.operator) {
            return Err(MetricsError::UnknownOperator(r.operator.clone()));
        }
    }

    // One evaluation per (grid point, seed), embarrassingly parallel.
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..seeds.len()).map(move |s| (g, s)))
        .collect();
    let evaluations: Vec<Result<Vec<OperatorEvaluation>, MetricsError>> = tasks
        .par_iter()
        .map(|&(g, s)| {
            let perturbed = perturb_requests(requests, axis, grid[g], opts, seeds[s])?;
            let mut per_op = Vec::new();
            for (op, topology) in topologies {
                let op_requests: Vec<Request> = perturbed
                    .iter()
                    .filter(|r| &r.operator == op)
                    .cloned()
                    .collect();
                let (eval, _) = evaluate_operator(&op_requests, topology, &opts.eval)?;
                per_op.push(eval);
            }
            Ok(per_op)
        })
        .collect();

    let mut rows = Vec::new();
    for (gi, &axis_value) in grid.iter().enumerate() {
        // Evaluations for this grid point, one per seed.
        let mut per_seed: Vec<&Vec<OperatorEvaluation>> = Vec::with_capacity(seeds.len());
        for (ti, task) in tasks.iter().enumerate() {
            if task.0 == gi {
                per_seed.push(evaluations[ti].as_ref().map_err(clone_metrics_err)?);
            }
        }
        for (oi, op) in topologies.keys().enumerate() {
            for (ai, &arch) in opts.eval.architectures.iter().enumerate() {
                let reports: Vec<&ArchitectureReport> = per_seed
                    .iter()
                    .map(|evals| &evals[oi].reports[ai])
                    .collect();
                let (size_bytes, size_bytes_std) = mean_std(
                    &reports
                        .iter()
                        .map(|r| r.summary.total_size as f64)
                        .collect::<Vec<_>>(),
                );
                let (size_items, _) = mean_std(
                    &reports
                        .iter()
                        .map(|r| r.summary.total_items as f64)
                        .collect::<Vec<_>>(),
                );
                let (pof, pof_std) = mean_std_opt(
                    &reports
                        .iter()
                        .map(|r| r.price_of_fog.value)
                        .collect::<Vec<_>>(),
                );
                let (dist, dist_std) = mean_std_opt(
                    &reports
                        .iter()
                        .map(|r| r.distance.mean_km)
                        .collect::<Vec<_>>(),
                );
                let (achieved, _) = mean_std(
                    &per_seed
                        .iter()
                        .map(|evals| evals[oi].achieved_hit_ratio)
                        .collect::<Vec<_>>(),
                );
                rows.push(SweepRow {
                    operator: op.to_string(),
                    architecture: arch,
                    axis: axis.as_str().to_string(),
                    axis_value,
                    seed_count: seeds.len() as u64,
                    total_size_bytes: size_bytes,
                    total_size_items: size_items,
                    price_of_fog: pof,
                    mean_distance_km: dist,
                    mean_hops: f64::from(arch.hops_from_base_station()),
                    achieved_hit_ratio: achieved,
                    infeasible_flag: per_seed.iter().any(|evals| evals[oi].infeasible),
                    total_size_bytes_std: size_bytes_std,
                    price_of_fog_std: pof_std,
                    mean_distance_km_std: dist_std,
                });
            }
        }
    }
    Ok(SweepResult {
        axis,
        grid: grid.to_vec(),
        seed_count: seeds.len() as u64,
        rows,
    })
}

fn clone_metrics_err(e: &MetricsError) -> MetricsError {
    MetricsError::Io("sweep".into(), e.to_string())
}

/// Report serialization format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
}

pub const SWEEP_CSV_COLUMNS: [&str; 12] = [
    "operator",
    "architecture",
    "axis",
    "axis_value",
    "seed_count",
    "total_size_bytes",
    "total_size_items",
    "price_of_fog",
    "mean_distance_km",
    "mean_hops",
    "achieved_hit_ratio",
    "infeasible_flag",
];

fn fmt_f64(v: f64) -> String {
    // Display prints the shortest decimal that parses back to the same
    // float, so emitted reports re-parse exactly.
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes a sweep report. CSV carries the stable column set; JSON mirrors
/// the same fields and additionally retains the per-seed standard
/// deviations. Empty results are rejected.
pub fn emit_report(
    result: &SweepResult,
    format: ReportFormat,
    path: &Path,
) -> Result<(), MetricsError> {
    if result.rows.is_empty() {
        return Err(MetricsError::EmptyReport);
    }
    let io_err = |e: String| MetricsError::Io(path.display().to_string(), e);
    let file = std::fs::File::create(path).map_err(|e| io_err(e.to_string()))?;
    let mut out = io::BufWriter::new(file);
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, result).map_err(|e| io_err(e.to_string()))?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(SWEEP_CSV_COLUMNS)
                .map_err(|e| io_err(e.to_string()))?;
            for r in &result.rows {
                w.write_record([
                    r.operator.as_str(),
                    r.architecture.as_str(),
                    r.axis.as_str(),
                    fmt_f64(r.axis_value).as_str(),
                    r.seed_count.to_string().as_str(),
                    fmt_f64(r.total_size_bytes).as_str(),
                    fmt_f64(r.total_size_items).as_str(),
                    fmt_opt(r.price_of_fog).as_str(),
                    fmt_opt(r.mean_distance_km).as_str(),
                    fmt_f64(r.mean_hops).as_str(),
                    fmt_f64(r.achieved_hit_ratio).as_str(),
                    if r.infeasible_flag { "true" } else { "false" },
                ])
                .map_err(|e| io_err(e.to_string()))?;
            }
            w.flush().map_err(|e| io_err(e.to_string()))?;
        }
    }
    use io::Write;
    out.flush().map_err(|e| io_err(e.to_string()))?;
    Ok(())
}

/// Reads back a CSV report written by [`emit_report`] (standard deviations
/// are not part of the CSV schema and come back as zero).
pub fn read_sweep_csv(path: &Path) -> Result<Vec<SweepRow>, MetricsError> {
    let io_err = |e: String| MetricsError::Io(path.display().to_string(), e);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| io_err(e.to_string()))?;
    let mut rows = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| io_err(e.to_string()))?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let parse_f = |i: usize| -> Result<f64, MetricsError> {
            get(i)
                .parse()
                .map_err(|e| io_err(format!("column {i}: {e}")))
        };
        let parse_opt = |i: usize| -> Result<Option<f64>, MetricsError> {
            if get(i).is_empty() {
                Ok(None)
            } else {
                parse_f(i).map(Some)
            }
        };
        rows.push(SweepRow {
            operator: get(0).to_string(),
            architecture: Level::parse(get(1))
                .ok_or_else(|| io_err(format!("unknown architecture '{}'", get(1))))?,
            axis: get(2).to_string(),
            axis_value: parse_f(3)?,
            seed_count: get(4)
                .parse()
                .map_err(|e| io_err(format!("seed_count: {e}")))?,
            total_size_bytes: parse_f(5)?,
            total_size_items: parse_f(6)?,
            price_of_fog: parse_opt(7)?,
            mean_distance_km: parse_opt(8)?,
            mean_hops: parse_f(9)?,
            achieved_hit_ratio: parse_f(10)?,
            infeasible_flag: get(11) == "true",
            total_size_bytes_std: 0.0,
            price_of_fog_std: 0.0,
            mean_distance_km_std: 0.0,
        });
    }
    Ok(rows)
}
