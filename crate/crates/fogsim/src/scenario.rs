//! Scenario assembly and on-disk layout: builds a ready-to-evaluate scenario
//! from a trace or from synthetic specs, and persists it as a versioned
//! output directory that later stages (evaluate, sweep) reload.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::demand::{
    assign_content_ids, generate_synthetic_scenario, read_requests_csv, requests_from_records,
    write_requests_csv, write_requests_jsonl, DemandConfig, DemandError, RawRequest, Request,
    ScenarioSpec,
};
use crate::seed::derive_seed;
use crate::topology::{
    build_trees_per_operator, CellEstimate, GroupingRule, Topology, TopologyError,
};
use crate::trace::{
    filter_vehicular, parse_trace, CategoryRules, MobilityThresholds, TraceError, TraceRecord,
    TraceSchema,
};

/// Version of the output-directory layout.
pub const SCENARIO_SCHEMA_VERSION: u32 = 1;

/// A fully assembled scenario: cells, one topology per operator, and the
/// baseline (unperturbed) request stream with item IDs assigned.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cells: Vec<CellEstimate>,
    pub topologies: BTreeMap<String, Topology>,
    pub requests: Vec<Request>,
}

/// Summary written alongside scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioManifest {
    pub schema_version: u32,
    pub mode: String,
    pub master_seed: u64,
    pub fanout: usize,
    pub operators: Vec<OperatorSummary>,
    pub request_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSummary {
    pub operator: String,
    pub cell_count: usize,
    pub level_counts: BTreeMap<String, usize>,
    pub request_count: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error("{0}: {1}")]
    Io(PathBuf, String),
    #[error("scenario mixes no operators: no requests survived ingestion")]
    Empty,
    #[error("synthetic mode needs at least one operator spec")]
    NoSpecs,
    #[error("duplicate operator name '{0}' in synthetic specs")]
    DuplicateOperator(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |e| ScenarioError::Io(path.to_path_buf(), e.to_string())
}

/// Builds a scenario from synthetic operator specs. Cells, movement, and
/// demand all derive from the master seed.
pub fn build_synthetic(
    specs: &[ScenarioSpec],
    demand: &DemandConfig,
    fanout: usize,
    grouping: GroupingRule,
    master_seed: u64,
) -> Result<Scenario, ScenarioError> {
    if specs.is_empty() {
        return Err(ScenarioError::NoSpecs);
    }
    let mut seen = std::collections::HashSet::new();
    for spec in specs {
        if !seen.insert(spec.operator.as_str()) {
            return Err(ScenarioError::DuplicateOperator(spec.operator.clone()));
        }
    }

    let mut cells = Vec::new();
    let mut raw: Vec<RawRequest> = Vec::new();
    for spec in specs {
        let scenario_seed = derive_seed(master_seed, &format!("synth:{}", spec.operator));
        let (op_cells, op_raw) = generate_synthetic_scenario(spec, scenario_seed)?;
        cells.extend(op_cells);
        raw.extend(op_raw);
    }

    let topologies = build_trees_per_operator(
        &cells,
        fanout,
        derive_seed(master_seed, "grouping"),
        grouping,
    )?;
    let demand_cfg = DemandConfig {
        seed: derive_seed(master_seed, "demand"),
        ..demand.clone()
    };
    let (requests, _catalog) = assign_content_ids(&raw, &demand_cfg)?;
    Ok(Scenario {
        cells,
        topologies: topologies.into_iter().collect(),
        requests,
    })
}

/// Ingest outcome: the scenario plus the vehicular-only trace records and
/// parse accounting.
pub struct IngestOutcome {
    pub scenario: Scenario,
    pub vehicular_records: Vec<TraceRecord>,
    pub malformed_rows: u64,
    pub total_rows: u64,
}

/// Settings for trace ingestion.
#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub schema: TraceSchema,
    pub rules: CategoryRules,
    pub thresholds: MobilityThresholds,
    pub fanout: usize,
    pub grouping: GroupingRule,
}

/// Builds a scenario from a trace file: cell coverage is estimated from all
/// valid records, while demand keeps only vehicular-hour records.
pub fn build_from_trace(
    trace_path: &Path,
    options: &IngestOptions,
    demand: &DemandConfig,
    master_seed: u64,
) -> Result<IngestOutcome, ScenarioError> {
    let read = parse_trace(trace_path, &options.schema)?;
    let vehicular = filter_vehicular(&read.records, &options.thresholds)?;

    let cells = crate::topology::estimate_cells(&read.records);
    if cells.is_empty() {
        return Err(ScenarioError::Empty);
    }
    let topologies = build_trees_per_operator(
        &cells,
        options.fanout,
        derive_seed(master_seed, "grouping"),
        options.grouping,
    )?;

    let raw = requests_from_records(&vehicular, &options.rules);
    let demand_cfg = DemandConfig {
        seed: derive_seed(master_seed, "demand"),
        ..demand.clone()
    };
    let (requests, _catalog) = assign_content_ids(&raw, &demand_cfg)?;
    Ok(IngestOutcome {
        scenario: Scenario {
            cells,
            topologies: topologies.into_iter().collect(),
            requests,
        },
        vehicular_records: vehicular,
        malformed_rows: read.malformed,
        total_rows: read.total_rows,
    })
}

impl Scenario {
    pub fn manifest(&self, mode: &str, master_seed: u64, fanout: usize) -> ScenarioManifest {
        let operators = self
            .topologies
            .iter()
            .map(|(op, topo)| OperatorSummary {
                operator: op.clone(),
                cell_count: self.cells.iter().filter(|c| &c.operator == op).count(),
                level_counts: topo
                    .level_counts
                    .iter()
                    .map(|(level, count)| (level.as_str().to_string(), *count))
                    .collect(),
                request_count: self.requests.iter().filter(|r| &r.operator == op).count() as u64,
            })
            .collect();
        ScenarioManifest {
            schema_version: SCENARIO_SCHEMA_VERSION,
            mode: mode.to_string(),
            master_seed,
            fanout,
            operators,
            request_count: self.requests.len() as u64,
        }
    }

    /// Requests of one operator, in stream order.
    pub fn operator_requests(&self, operator: &str) -> Vec<Request> {
        self.requests
            .iter()
            .filter(|r| r.operator == operator)
            .cloned()
            .collect()
    }

    /// Writes the scenario files into `dir`:
    /// `manifest.json`, `cells.json`, `topology-<operator>.json`,
    /// `requests.csv`, and optionally `requests.jsonl`.
    pub fn save(
        &self,
        dir: &Path,
        manifest: &ScenarioManifest,
        jsonl: bool,
    ) -> Result<(), ScenarioError> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;

        let manifest_path = dir.join("manifest.json");
        let f = fs::File::create(&manifest_path).map_err(io_err(&manifest_path))?;
        serde_json::to_writer_pretty(BufWriter::new(f), manifest)
            .map_err(|e| ScenarioError::Io(manifest_path.clone(), e.to_string()))?;

        let cells_path = dir.join("cells.json");
        let f = fs::File::create(&cells_path).map_err(io_err(&cells_path))?;
        serde_json::to_writer_pretty(BufWriter::new(f), &self.cells)
            .map_err(|e| ScenarioError::Io(cells_path.clone(), e.to_string()))?;

        for (op, topo) in &self.topologies {
            let path = dir.join(format!("topology-{op}.json"));
            topo.save_json(&path)?;
        }

        let requests_path = dir.join("requests.csv");
        let f = fs::File::create(&requests_path).map_err(io_err(&requests_path))?;
        write_requests_csv(BufWriter::new(f), &self.requests)
            .map_err(|e| ScenarioError::Io(requests_path.clone(), e.to_string()))?;

        if jsonl {
            let path = dir.join("requests.jsonl");
            let f = fs::File::create(&path).map_err(io_err(&path))?;
            write_requests_jsonl(BufWriter::new(f), &self.requests)
                .map_err(|e| ScenarioError::Io(path.clone(), e.to_string()))?;
        }
        Ok(())
    }

    /// Reloads a scenario saved by [`Scenario::save`].
    pub fn load(dir: &Path) -> Result<(Scenario, ScenarioManifest), ScenarioError> {
        let manifest_path = dir.join("manifest.json");
        let f = fs::File::open(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: ScenarioManifest = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| ScenarioError::Io(manifest_path.clone(), e.to_string()))?;

        let cells_path = dir.join("cells.json");
        let f = fs::File::open(&cells_path).map_err(io_err(&cells_path))?;
        let cells: Vec<CellEstimate> = serde_json::from_reader(BufReader::new(f))
            .map_err(|e| ScenarioError::Io(cells_path.clone(), e.to_string()))?;

        let mut topologies = BTreeMap::new();
        for summary in &manifest.operators {
            let path = dir.join(format!("topology-{}.json", summary.operator));
            topologies.insert(summary.operator.clone(), Topology::load_json(&path)?);
        }

        let requests_path = dir.join("requests.csv");
        let f = fs::File::open(&requests_path).map_err(io_err(&requests_path))?;
        let requests = read_requests_csv(BufReader::new(f))
            .map_err(|e| ScenarioError::Io(requests_path.clone(), e))?;

        Ok((
            Scenario {
                cells,
                topologies,
                requests,
            },
            manifest,
        ))
    }
}
