//! Cache sizing: tally per-(item, cell) popularity, greedily mark
//! cache-worthy pairs until the target hit ratio is guaranteed, place one
//! copy per responsible node under each architecture, and size the result.
//!
//! The hit model is offline warm-cache: every request to a marked pair
//! counts as a hit, including the first. Hits are evaluated against the
//! marked pair set, so the achieved ratio is the same under every
//! architecture; moving caches up the tree changes where copies live, not
//! which requests hit.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};

use crate::demand::Request;
use crate::topology::{Architecture, NodeId, Topology, TopologyError};
use crate::trace::ContentCategory;

/// Demand observed for one (item, cell) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairPopularity {
    pub item: String,
    pub cell: String,
    pub request_count: u64,
    pub byte_count: u64,
    /// False when every request for the pair came from a category that
    /// cannot be cached (fresh ID per request).
    pub cacheable: bool,
}

/// What "popularity" weighs when sorting and accumulating toward the target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Number of requests, the default.
    #[default]
    Requests,
    /// Downloaded bytes, for byte-denominated sizing.
    Bytes,
}

impl Weighting {
    fn of(&self, pair: &PairPopularity) -> u64 {
        match self {
            Weighting::Requests => pair.request_count,
            Weighting::Bytes => pair.byte_count,
        }
    }
}

/// Marking options. By default non-cacheable pairs participate in marking
/// (flagged when marked); excluding them caps the achievable hit ratio at
/// the cacheable share of demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct MarkOptions {
    pub weighting: Weighting,
    pub exclude_non_cacheable: bool,
}

/// The greedily marked pair set guaranteeing the target hit ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheWorthySet {
    pub target_hit_ratio: f64,
    pub weighting: Weighting,
    /// Marked pairs in marking order (decreasing weight).
    pub pairs: Vec<PairPopularity>,
    pub achieved_hit_ratio: f64,
    /// Set when the target exceeds the reachable demand share.
    pub infeasible: bool,
    /// Set when a non-cacheable pair had to be marked to reach the target.
    pub non_cacheable_marked: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("target hit ratio {0} is not in [0, 1]")]
    BadTarget(f64),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

/// Counts requests and bytes per distinct (item, cell) pair. Output is
/// sorted by (cell, item) for deterministic downstream processing.
pub fn tally_popularity(requests: &[Request]) -> Vec<PairPopularity> {
    let mut tally: HashMap<(&str, &str), (u64, u64, bool)> = HashMap::new();
    for r in requests {
        let cacheable = !matches!(
            r.category,
            ContentCategory::RealTime | ContentCategory::Players
        );
        let e = tally
            .entry((r.cell_id.as_str(), r.item.as_str()))
            .or_insert((0, 0, false));
        e.0 += 1;
        e.1 += r.bytes;
        e.2 |= cacheable;
    }
    let mut pairs: Vec<PairPopularity> = tally
        .into_iter()
        .map(
            |((cell, item), (requests, bytes, cacheable))| PairPopularity {
                item: item.to_string(),
                cell: cell.to_string(),
                request_count: requests,
                byte_count: bytes,
                cacheable,
            },
        )
        .collect();
    pairs.sort_by(|a, b| (&a.cell, &a.item).cmp(&(&b.cell, &b.item)));
    pairs
}

/// Sorts pairs by decreasing weight (ties by ascending (cell, item)) and
/// marks greedily until the cumulative weight share reaches the target.
pub fn mark_cache_worthy(
    pairs: &[PairPopularity],
    target: f64,
    options: MarkOptions,
) -> Result<CacheWorthySet, CacheError> {
    if !(0.0..=1.0).contains(&target) {
        return Err(CacheError::BadTarget(target));
    }
    let total: u64 = pairs.iter().map(|p| options.weighting.of(p)).sum();

    let mut order: Vec<&PairPopularity> = pairs
        .iter()
        .filter(|p| !options.exclude_non_cacheable || p.cacheable)
        .collect();
    order.sort_by(|a, b| {
        options
            .weighting
            .of(b)
            .cmp(&options.weighting.of(a))
            .then_with(|| (&a.cell, &a.item).cmp(&(&b.cell, &b.item)))
    });

    // The stop rule uses the same ratio expression as the reported achieved
    // value, so attainment and minimality are consistent under rounding.
    let mut marked = Vec::new();
    let mut cumulative: u64 = 0;
    let mut non_cacheable_marked = false;
    if total > 0 && target > 0.0 {
        for pair in order {
            if cumulative as f64 / total as f64 >= target {
                break;
            }
            cumulative += options.weighting.of(pair);
            non_cacheable_marked |= !pair.cacheable;
            marked.push(pair.clone());
        }
    }
    let achieved = if total == 0 {
        0.0
    } else {
        cumulative as f64 / total as f64
    };
    Ok(CacheWorthySet {
        target_hit_ratio: target,
        weighting: options.weighting,
        pairs: marked,
        achieved_hit_ratio: achieved,
        infeasible: achieved + 1e-12 < target,
        non_cacheable_marked,
    })
}

impl CacheWorthySet {
    /// Marked pairs as a lookup set.
    pub fn pair_set(&self) -> HashSet<(&str, &str)> {
        self.pairs
            .iter()
            .map(|p| (p.cell.as_str(), p.item.as_str()))
            .collect()
    }
}

/// A placed deployment: which items each responsible node stores and what
/// that costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachePlan {
    pub architecture: Architecture,
    /// Items stored per node; at most one copy of an item per node.
    pub contents: BTreeMap<NodeId, BTreeSet<String>>,
    /// Byte size per node, from the supplied item sizes.
    pub node_sizes: BTreeMap<NodeId, u64>,
    pub total_size: u64,
    /// Total stored copies, counting each item once per node.
    pub total_items: u64,
    pub weighting: Weighting,
    /// The marked (cell, item) pairs this plan was derived from; hit
    /// accounting is evaluated against these.
    pub marked_pairs: BTreeSet<(String, String)>,
}

/// Places every marked pair at the node responsible for its cell under the
/// given architecture: the base station itself, or its ring / pod / core
/// ancestor. Items missing from `sizes` count one byte.
pub fn place_caches(
    worthy: &CacheWorthySet,
    topology: &Topology,
    architecture: Architecture,
    sizes: &HashMap<String, u64>,
) -> Result<CachePlan, CacheError> {
    let mut contents: BTreeMap<NodeId, BTreeSet<String>> = BTreeMap::new();
    let mut marked_pairs = BTreeSet::new();
    for pair in &worthy.pairs {
        let bs = topology.base_station_of(&pair.cell)?;
        let node = topology.ancestor_at_level(bs, architecture)?;
        contents.entry(node).or_default().insert(pair.item.clone());
        marked_pairs.insert((pair.cell.clone(), pair.item.clone()));
    }
    let node_sizes: BTreeMap<NodeId, u64> = contents
        .iter()
        .map(|(&node, items)| {
            let size = items
                .iter()
                .map(|item| sizes.get(item).copied().unwrap_or(1))
                .sum();
            (node, size)
        })
        .collect();
    let total_size = node_sizes.values().sum();
    let total_items = contents.values().map(|items| items.len() as u64).sum();
    Ok(CachePlan {
        architecture,
        contents,
        node_sizes,
        total_size,
        total_items,
        weighting: worthy.weighting,
        marked_pairs,
    })
}

/// Warm-cache hit ratio of a placed plan over a request stream: the demand
/// share of marked (cell, item) pairs, using the plan's weighting. Every
/// request cell must map into the topology.
pub fn achieved_hit_ratio(
    plan: &CachePlan,
    requests: &[Request],
    topology: &Topology,
) -> Result<f64, CacheError> {
    let marked: HashSet<(&str, &str)> = plan
        .marked_pairs
        .iter()
        .map(|(c, i)| (c.as_str(), i.as_str()))
        .collect();
    let mut hit: u64 = 0;
    let mut total: u64 = 0;
    for r in requests {
        topology.base_station_of(&r.cell_id)?;
        let weight = match plan.weighting {
            Weighting::Requests => 1,
            Weighting::Bytes => r.bytes,
        };
        total += weight;
        if marked.contains(&(r.cell_id.as_str(), r.item.as_str())) {
            hit += weight;
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(hit as f64 / total as f64)
}

/// Per-architecture sizing summary: totals plus the node-size distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanSummary {
    pub architecture: Architecture,
    pub total_size: u64,
    pub total_items: u64,
    /// All nodes at the architecture level, including nodes storing nothing.
    pub node_count: usize,
    pub min_node_size: u64,
    pub median_node_size: u64,
    pub max_node_size: u64,
}

impl CachePlan {
    /// Summarizes the node-size distribution over every node at the plan's
    /// level (nodes with no cache-worthy content count as zero).
    pub fn summary(&self, topology: &Topology) -> PlanSummary {
        let mut sizes: Vec<u64> = topology
            .nodes
            .iter()
            .filter(|n| n.level == self.architecture)
            .map(|n| self.node_sizes.get(&n.id).copied().unwrap_or(0))
            .collect();
        sizes.sort_unstable();
        let node_count = sizes.len();
        PlanSummary {
            architecture: self.architecture,
            total_size: self.total_size,
            total_items: self.total_items,
            node_count,
            min_node_size: sizes.first().copied().unwrap_or(0),
            median_node_size: sizes.get(node_count / 2).copied().unwrap_or(0),
            max_node_size: sizes.last().copied().unwrap_or(0),
        }
    }
}

/// Writes plan summaries as CSV, one row per architecture.
pub fn write_plan_summaries<W: io::Write>(
    out: W,
    summaries: &[PlanSummary],
) -> Result<(), CacheError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "architecture",
        "total_size",
        "node_count",
        "min_node_size",
        "median_node_size",
        "max_node_size",
    ])
    .map_err(io::Error::from)?;
    for s in summaries {
        w.write_record([
            s.architecture.as_str(),
            s.total_size.to_string().as_str(),
            s.node_count.to_string().as_str(),
            s.min_node_size.to_string().as_str(),
            s.median_node_size.to_string().as_str(),
            s.max_node_size.to_string().as_str(),
        ])
        .map_err(io::Error::from)?;
    }
    w.flush().map_err(CacheError::Io)?;
    Ok(())
}

/// Places one plan per requested architecture from the same worthy set.
pub fn place_all(
    worthy: &CacheWorthySet,
    topology: &Topology,
    architectures: &[Architecture],
    sizes: &HashMap<String, u64>,
) -> Result<Vec<CachePlan>, CacheError> {
    architectures
        .iter()
        .map(|&arch| place_caches(worthy, topology, arch, sizes))
        .collect()
}
