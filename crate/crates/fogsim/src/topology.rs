//! Per-operator core-network topology: cell coverage estimation from
//! observed positions, and the four-level tree (base stations grouped into
//! rings, rings into aggregation pods, pods under core switches).

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geo::{
    convex_hull, hilbert_key, polygon_area_km2, polygon_centroid, GeoBounds, GeoPoint,
};
use crate::trace::TraceRecord;

/// Tree level, ordered from the network edge to the most centralized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    BaseStation,
    Ring,
    Pod,
    Core,
}

/// The caching architecture is identified by the level caches sit at.
pub type Architecture = Level;

impl Level {
    pub const ALL: [Level; 4] = [Level::BaseStation, Level::Ring, Level::Pod, Level::Core];

    pub fn as_str(&self) -> &'static str {
        match self {
            Level::BaseStation => "base_station",
            Level::Ring => "ring",
            Level::Pod => "pod",
            Level::Core => "core",
        }
    }

    pub fn parse(s: &str) -> Option<Level> {
        match s.trim().to_ascii_lowercase().as_str() {
            "base_station" | "bs" => Some(Level::BaseStation),
            "ring" => Some(Level::Ring),
            "pod" => Some(Level::Pod),
            "core" => Some(Level::Core),
            _ => None,
        }
    }

    /// Tree hops between a base station and a cache at this level.
    pub fn hops_from_base_station(&self) -> u32 {
        match self {
            Level::BaseStation => 0,
            Level::Ring => 1,
            Level::Pod => 2,
            Level::Core => 3,
        }
    }
}

impl std::fmt::Display for Level {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Estimated coverage of one (operator, cell) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEstimate {
    pub cell_id: String,
    pub operator: String,
    /// Convex hull of observed positions, counterclockwise; may be a point
    /// or segment when fewer than three distinct positions were seen.
    pub hull: Vec<GeoPoint>,
    /// Area centroid of the hull (vertex mean for degenerate hulls); the
    /// assumed base-station position.
    pub barycenter: GeoPoint,
    pub area_km2: f64,
    pub observation_count: u64,
}

/// Estimates one cell per distinct (operator, cell_id) from records carrying
/// a cell attachment and valid coordinates. Output is sorted by
/// (operator, cell_id).
pub fn estimate_cells(records: &[TraceRecord]) -> Vec<CellEstimate> {
    let mut grouped: BTreeMap<(String, String), Vec<GeoPoint>> = BTreeMap::new();
    for r in records {
        let Some(cell) = &r.cell_id else { continue };
        let p = r.position();
        if !p.is_valid() {
            continue;
        }
        grouped
            .entry((r.operator.clone(), cell.clone()))
            .or_default()
            .push(p);
    }
    grouped
        .into_iter()
        .map(|((operator, cell_id), points)| {
            let hull = convex_hull(&points);
            let barycenter = polygon_centroid(&hull).expect("non-empty hull");
            CellEstimate {
                cell_id,
                operator,
                area_km2: polygon_area_km2(&hull),
                hull,
                barycenter,
                observation_count: points.len() as u64,
            }
        })
        .collect()
}

pub type NodeId = usize;

/// One node of an operator tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyNode {
    pub id: NodeId,
    pub level: Level,
    pub position: GeoPoint,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    /// The covered cell, for base-station nodes only.
    pub cell_id: Option<String>,
}

/// How base stations are ordered before being chunked into groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GroupingRule {
    /// Hilbert-curve order on barycenters: groups are spatially coherent.
    #[default]
    SpaceFillingCurve,
    /// Seeded shuffle, for sensitivity analysis.
    Random,
}

/// A four-level operator tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub schema_version: u32,
    pub operator: String,
    pub fanout: usize,
    pub nodes: Vec<TopologyNode>,
    pub level_counts: BTreeMap<Level, usize>,
    /// Base-station node for each covered cell.
    pub bs_by_cell: BTreeMap<String, NodeId>,
}

#[derive(Debug, thiserror::Error)]
pub enum TopologyError {
    #[error("cannot build a topology from an empty cell list")]
    NoCells,
    #[error("fanout must be at least 1, got {0}")]
    BadFanout(usize),
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not a base station")]
    NotABaseStation(NodeId),
    #[error("no base station for cell '{0}'")]
    UnknownCell(String),
    #[error("topology file {0}: {1}")]
    Io(String, String),
}

pub const TOPOLOGY_SCHEMA_VERSION: u32 = 1;

/// Builds the operator tree: base stations ordered by the grouping rule are
/// chunked into consecutive groups of `fanout` to form rings, and the same
/// rule is applied recursively for pods and core switches. Non-leaf node
/// positions are the centroid of their children's positions.
pub fn build_tree(
    cells: &[CellEstimate],
    fanout: usize,
    seed: u64,
    grouping: GroupingRule,
) -> Result<Topology, TopologyError> {
    if cells.is_empty() {
        return Err(TopologyError::NoCells);
    }
    if fanout == 0 {
        return Err(TopologyError::BadFanout(fanout));
    }
    let operator = cells[0].operator.clone();

    let mut order: Vec<usize> = (0..cells.len()).collect();
    match grouping {
        GroupingRule::SpaceFillingCurve => {
            let bounds =
                GeoBounds::of(cells.iter().map(|c| c.barycenter)).expect("cells are non-empty");
            order.sort_by_cached_key(|&i| {
                (
                    hilbert_key(cells[i].barycenter, &bounds),
                    cells[i].cell_id.clone(),
                )
            });
        }
        GroupingRule::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            order.shuffle(&mut rng);
        }
    }

    let mut nodes: Vec<TopologyNode> = Vec::new();
    let mut bs_by_cell = BTreeMap::new();
    let mut current: Vec<NodeId> = Vec::with_capacity(cells.len());
    for &i in &order {
        let id = nodes.len();
        nodes.push(TopologyNode {
            id,
            level: Level::BaseStation,
            position: cells[i].barycenter,
            parent: None,
            children: Vec::new(),
            cell_id: Some(cells[i].cell_id.clone()),
        });
        bs_by_cell.insert(cells[i].cell_id.clone(), id);
        current.push(id);
    }

    for level in [Level::Ring, Level::Pod, Level::Core] {
        let mut next: Vec<NodeId> = Vec::new();
        for chunk in current.chunks(fanout) {
            let id = nodes.len();
            let n = chunk.len() as f64;
            let position = GeoPoint::new(
                chunk.iter().map(|&c| nodes[c].position.lat).sum::<f64>() / n,
                chunk.iter().map(|&c| nodes[c].position.lon).sum::<f64>() / n,
            );
            for &c in chunk {
                nodes[c].parent = Some(id);
            }
            nodes.push(TopologyNode {
                id,
                level,
                position,
                parent: None,
                children: chunk.to_vec(),
                cell_id: None,
            });
            next.push(id);
        }
        current = next;
    }

    let mut level_counts = BTreeMap::new();
    for node in &nodes {
        *level_counts.entry(node.level).or_insert(0) += 1;
    }

    Ok(Topology {
        schema_version: TOPOLOGY_SCHEMA_VERSION,
        operator,
        fanout,
        nodes,
        level_counts,
        bs_by_cell,
    })
}

impl Topology {
    pub fn node(&self, id: NodeId) -> Result<&TopologyNode, TopologyError> {
        self.nodes.get(id).ok_or(TopologyError::UnknownNode(id))
    }

    /// Base-station node serving a cell.
    pub fn base_station_of(&self, cell_id: &str) -> Result<NodeId, TopologyError> {
        self.bs_by_cell
            .get(cell_id)
            .copied()
            .ok_or_else(|| TopologyError::UnknownCell(cell_id.to_string()))
    }

    /// The unique ancestor of a base station at `level` (the base station
    /// itself for `Level::BaseStation`).
    pub fn ancestor_at_level(&self, bs: NodeId, level: Level) -> Result<NodeId, TopologyError> {
        let node = self.node(bs)?;
        if node.level != Level::BaseStation {
            return Err(TopologyError::NotABaseStation(bs));
        }
        let mut cursor = bs;
        loop {
            let node = self.node(cursor)?;
            if node.level == level {
                return Ok(cursor);
            }
            cursor = node.parent.ok_or(TopologyError::UnknownNode(cursor))?;
        }
    }

    /// Base-station nodes in tree order.
    pub fn base_stations(&self) -> impl Iterator<Item = &TopologyNode> {
        self.nodes.iter().filter(|n| n.level == Level::BaseStation)
    }

    pub fn level_count(&self, level: Level) -> usize {
        self.level_counts.get(&level).copied().unwrap_or(0)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), TopologyError> {
        let file = std::fs::File::create(path)
            .map_err(|e| TopologyError::Io(path.display().to_string(), e.to_string()))?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)
            .map_err(|e| TopologyError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn load_json(path: &Path) -> Result<Topology, TopologyError> {
        let file = std::fs::File::open(path)
            .map_err(|e| TopologyError::Io(path.display().to_string(), e.to_string()))?;
        serde_json::from_reader(std::io::BufReader::new(file))
            .map_err(|e| TopologyError::Io(path.display().to_string(), e.to_string()))
    }
}

/// Builds one tree per operator present in `cells`.
pub fn build_trees_per_operator(
    cells: &[CellEstimate],
    fanout: usize,
    seed: u64,
    grouping: GroupingRule,
) -> Result<HashMap<String, Topology>, TopologyError> {
    let mut by_operator: BTreeMap<&str, Vec<CellEstimate>> = BTreeMap::new();
    for c in cells {
        by_operator.entry(&c.operator).or_default().push(c.clone());
    }
    by_operator
        .into_iter()
        .map(|(op, cells)| Ok((op.to_string(), build_tree(&cells, fanout, seed, grouping)?)))
        .collect()
}
