//! Per-content-item demand: assigns content IDs to requests according to
//! per-category rules, applies the recommendation (p) and locality (q)
//! demand perturbations, and generates fully synthetic scenarios.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::NaiveDate;
use rand::distributions::{Bernoulli, Distribution, Uniform, WeightedIndex};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Zipf};
use serde::{Deserialize, Serialize};

use crate::geo::{great_circle_distance, GeoBounds, GeoPoint};
use crate::seed::{derive_seed, indexed_seed};
use crate::topology::CellEstimate;
use crate::trace::{map_app_to_category, CategoryRules, ContentCategory, TraceRecord};

/// A content request before an item ID has been assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawRequest {
    pub user_id: String,
    pub day: NaiveDate,
    pub hour: u8,
    pub cell_id: String,
    pub operator: String,
    pub category: ContentCategory,
    /// Downloaded bytes; zero in synthetic streams until the item is drawn.
    pub bytes: u64,
}

/// One content request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub user_id: String,
    pub day: NaiveDate,
    pub hour: u8,
    pub cell_id: String,
    pub operator: String,
    pub category: ContentCategory,
    pub item: String,
    pub bytes: u64,
}

/// A distinct content item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContentItem {
    pub item_id: String,
    pub category: ContentCategory,
    pub size_bytes: u64,
    /// Set for location-specific items only.
    pub local_to: Option<String>,
}

/// Items seen while assigning IDs; an item's size is fixed the first time it
/// is drawn and never changes afterwards.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ItemCatalog {
    pub items: HashMap<String, ContentItem>,
}

impl ItemCatalog {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

/// Where request/item sizes come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SizeSource {
    /// Ingest mode: requests keep their trace bytes.
    TraceBytes,
    /// Synthetic mode: an item's size is drawn from its category's lognormal
    /// distribution when the item is first created, and every request for it
    /// downloads that size.
    CategoryLognormal,
}

/// Lognormal size parameters for one category.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeDist {
    pub median_bytes: f64,
    pub sigma: f64,
}

fn default_size_dists() -> BTreeMap<ContentCategory, SizeDist> {
    use ContentCategory::*;
    [
        (
            YouTube,
            SizeDist {
                median_bytes: 2.0e7,
                sigma: 1.0,
            },
        ),
        (
            OnDemand,
            SizeDist {
                median_bytes: 6.0e7,
                sigma: 1.0,
            },
        ),
        (
            RealTime,
            SizeDist {
                median_bytes: 3.0e7,
                sigma: 1.0,
            },
        ),
        (
            Players,
            SizeDist {
                median_bytes: 2.0e7,
                sigma: 1.0,
            },
        ),
        (
            Weather,
            SizeDist {
                median_bytes: 2.0e5,
                sigma: 0.7,
            },
        ),
        (
            Maps,
            SizeDist {
                median_bytes: 2.0e6,
                sigma: 0.7,
            },
        ),
        (
            News,
            SizeDist {
                median_bytes: 3.0e6,
                sigma: 0.8,
            },
        ),
        (
            Sports,
            SizeDist {
                median_bytes: 8.0e6,
                sigma: 0.8,
            },
        ),
        (
            Other,
            SizeDist {
                median_bytes: 1.0e6,
                sigma: 1.0,
            },
        ),
    ]
    .into_iter()
    .collect()
}

/// Knobs of the demand model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemandConfig {
    /// Zipf exponent of the video catalogs.
    pub zipf_exponent: f64,
    /// Items per video catalog (one catalog per video category).
    pub video_catalog_size: u64,
    /// Category-wide popular pool size for news/sports.
    pub popular_pool_size: u64,
    /// Probability a news/sports request draws from the popular pool.
    pub popular_hit_prob: f64,
    /// Per-cell pool size for weather/maps.
    pub local_pool_size: u64,
    /// Probability a weather/maps request draws from its cell's pool.
    pub local_hit_prob: f64,
    /// Fraction of each category's distinct items forming the
    /// recommendation pool.
    pub rec_top_fraction: f64,
    /// Recommendation switching probability p.
    pub rec_prob: f64,
    /// Location-specific items created per cell.
    pub local_items_per_cell: u64,
    /// Locality switching probability q.
    pub loc_prob: f64,
    pub size_source: SizeSource,
    pub size_dists: BTreeMap<ContentCategory, SizeDist>,
    pub seed: u64,
}

impl Default for DemandConfig {
    fn default() -> Self {
        DemandConfig {
            zipf_exponent: 0.8,
            video_catalog_size: 1_000_000,
            popular_pool_size: 50,
            popular_hit_prob: 0.9,
            local_pool_size: 10,
            local_hit_prob: 0.9,
            rec_top_fraction: 0.05,
            rec_prob: 0.0,
            local_items_per_cell: 5,
            loc_prob: 0.0,
            size_source: SizeSource::TraceBytes,
            size_dists: default_size_dists(),
            seed: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DemandError {
    #[error("config field '{0}': {1}")]
    BadConfig(&'static str, String),
    #[error("request {0} has no cell id")]
    MissingCell(usize),
}

fn check_prob(name: &'static str, v: f64) -> Result<(), DemandError> {
    if !(0.0..=1.0).contains(&v) {
        return Err(DemandError::BadConfig(
            name,
            format!("{v} is not in [0, 1]"),
        ));
    }
    Ok(())
}

impl DemandConfig {
    pub fn validate(&self) -> Result<(), DemandError> {
        if self.zipf_exponent <= 0.0 {
            return Err(DemandError::BadConfig(
                "zipf_exponent",
                format!("{} must be positive", self.zipf_exponent),
            ));
        }
        for (name, v) in [
            ("video_catalog_size", self.video_catalog_size),
            ("popular_pool_size", self.popular_pool_size),
            ("local_pool_size", self.local_pool_size),
            ("local_items_per_cell", self.local_items_per_cell),
        ] {
            if v == 0 {
                return Err(DemandError::BadConfig(name, "must be at least 1".into()));
            }
        }
        check_prob("popular_hit_prob", self.popular_hit_prob)?;
        check_prob("local_hit_prob", self.local_hit_prob)?;
        check_prob("rec_top_fraction", self.rec_top_fraction)?;
        check_prob("rec_prob", self.rec_prob)?;
        check_prob("loc_prob", self.loc_prob)?;
        Ok(())
    }
}

/// Converts trace records into raw requests: one request per record that has
/// a cell attachment and nonzero downloaded bytes.
pub fn requests_from_records(records: &[TraceRecord], rules: &CategoryRules) -> Vec<RawRequest> {
    records
        .iter()
        .filter_map(|r| {
            let cell_id = r.cell_id.clone()?;
            if r.bytes_down == 0 {
                return None;
            }
            Some(RawRequest {
                user_id: r.user_id.clone(),
                day: r.day,
                hour: r.hour,
                cell_id,
                operator: r.operator.clone(),
                category: map_app_to_category(&r.app_class, rules),
                bytes: r.bytes_down,
            })
        })
        .collect()
}

fn lognormal_size(dist: &SizeDist, rng: &mut impl Rng) -> u64 {
    let ln = LogNormal::new(dist.median_bytes.ln(), dist.sigma).expect("valid lognormal");
    (ln.sample(rng).round() as u64).max(1)
}

/// An item's size, fixed by a draw keyed on the item ID itself so it does
/// not depend on which request created the item first.
fn item_size(cfg: &DemandConfig, category: ContentCategory, item_id: &str, fallback: u64) -> u64 {
    match cfg.size_source {
        SizeSource::TraceBytes => fallback.max(1),
        SizeSource::CategoryLognormal => {
            let dist = cfg.size_dists.get(&category).copied().unwrap_or(SizeDist {
                median_bytes: 1.0e6,
                sigma: 1.0,
            });
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &format!("size:{item_id}")));
            lognormal_size(&dist, &mut rng)
        }
    }
}

/// Assigns a content item to every request:
///
/// * real-time and player traffic gets a globally fresh ID per request (no
///   caching is possible),
/// * video categories draw from a per-category Zipf catalog,
/// * news/sports draw from a small category-wide popular pool with
///   `popular_hit_prob`, otherwise a fresh ID,
/// * weather/maps draw from a small per-cell pool with `local_hit_prob`,
///   otherwise a fresh ID,
/// * unknown (`Other`) traffic gets fresh IDs, the conservative choice for
///   apps without a popularity model.
///
/// Randomness is keyed per request index, so the stream is reproducible and
/// independent of processing order.
pub fn assign_content_ids(
    raw: &[RawRequest],
    cfg: &DemandConfig,
) -> Result<(Vec<Request>, ItemCatalog), DemandError> {
    cfg.validate()?;
    let stage_seed = derive_seed(cfg.seed, "assign");
    let zipf = Zipf::new(cfg.video_catalog_size, cfg.zipf_exponent)
        .map_err(|e| DemandError::BadConfig("zipf_exponent", e.to_string()))?;

    let mut requests = Vec::with_capacity(raw.len());
    let mut catalog = ItemCatalog::default();
    for (idx, r) in raw.iter().enumerate() {
        if r.cell_id.is_empty() {
            return Err(DemandError::MissingCell(idx));
        }
        if cfg.size_source == SizeSource::TraceBytes && r.bytes == 0 {
            return Err(DemandError::BadConfig(
                "size_source",
                format!("request {idx} has zero bytes; trace_bytes sizing needs real byte counts"),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(indexed_seed(stage_seed, idx as u64));
        let fresh = || format!("new:{idx}");
        let item = match r.category {
            ContentCategory::RealTime | ContentCategory::Players | ContentCategory::Other => {
                fresh()
            }
            ContentCategory::YouTube | ContentCategory::OnDemand => {
                let rank = zipf.sample(&mut rng) as u64;
                let prefix = if r.category == ContentCategory::YouTube {
                    "yt"
                } else {
                    "od"
                };
                format!("{prefix}:{rank}")
            }
            ContentCategory::News | ContentCategory::Sports => {
                if rng.gen_bool(cfg.popular_hit_prob) {
                    let k = rng.gen_range(1..=cfg.popular_pool_size);
                    let prefix = if r.category == ContentCategory::News {
                        "news"
                    } else {
                        "sport"
                    };
                    format!("{prefix}:pop{k}")
                } else {
                    fresh()
                }
            }
            ContentCategory::Weather | ContentCategory::Maps => {
                if rng.gen_bool(cfg.local_hit_prob) {
                    let k = rng.gen_range(1..=cfg.local_pool_size);
                    let prefix = if r.category == ContentCategory::Weather {
                        "wx"
                    } else {
                        "map"
                    };
                    format!("{prefix}:{}:{k}", r.cell_id)
                } else {
                    fresh()
                }
            }
        };

        let entry = catalog.items.entry(item.clone()).or_insert_with(|| {
            let size = item_size(cfg, r.category, &item, r.bytes);
            let local_to = matches!(r.category, ContentCategory::Weather | ContentCategory::Maps)
                .then(|| r.cell_id.clone())
                .filter(|_| !item.starts_with("new:"));
            ContentItem {
                item_id: item.clone(),
                category: r.category,
                size_bytes: size,
                local_to,
            }
        });
        let bytes = match cfg.size_source {
            SizeSource::TraceBytes => r.bytes,
            SizeSource::CategoryLognormal => entry.size_bytes,
        };
        requests.push(Request {
            user_id: r.user_id.clone(),
            day: r.day,
            hour: r.hour,
            cell_id: r.cell_id.clone(),
            operator: r.operator.clone(),
            category: r.category,
            item,
            bytes,
        });
    }
    Ok((requests, catalog))
}

/// Categories whose requests are never switched toward popular items:
/// switching real-time or player traffic to a "popular" item would
/// contradict its fresh-per-request semantics.
pub fn recommendation_exempt(category: ContentCategory) -> bool {
    matches!(
        category,
        ContentCategory::RealTime | ContentCategory::Players
    )
}

/// Per-category pools of the most requested items. Pool size is
/// ceil(top_fraction * distinct items), ranked by request count with ties
/// broken by ascending item ID.
pub fn popularity_pools(
    requests: &[Request],
    top_fraction: f64,
) -> BTreeMap<ContentCategory, Vec<String>> {
    let mut counts: HashMap<(ContentCategory, &str), u64> = HashMap::new();
    for r in requests {
        *counts.entry((r.category, r.item.as_str())).or_insert(0) += 1;
    }
    let mut per_category: BTreeMap<ContentCategory, Vec<(&str, u64)>> = BTreeMap::new();
    for ((category, item), count) in counts {
        per_category
            .entry(category)
            .or_default()
            .push((item, count));
    }
    per_category
        .into_iter()
        .map(|(category, mut items)| {
            items.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
            let len = ((items.len() as f64 * top_fraction).ceil() as usize).min(items.len());
            let pool = items
                .into_iter()
                .take(len)
                .map(|(item, _)| item.to_string())
                .collect();
            (category, pool)
        })
        .collect()
}

/// Recommendation-system perturbation: each non-exempt request switches its
/// item, with probability `p`, to a uniform draw from the top-`top_fraction`
/// pool of its own category. Pools are computed once over the input stream.
/// Only the item field changes; empty pools pass requests through.
pub fn apply_recommendation(
    requests: &[Request],
    p: f64,
    top_fraction: f64,
    seed: u64,
) -> Result<Vec<Request>, DemandError> {
    check_prob("rec_prob", p)?;
    check_prob("rec_top_fraction", top_fraction)?;
    if p == 0.0 {
        return Ok(requests.to_vec());
    }
    let pools = popularity_pools(requests, top_fraction);
    let stage_seed = derive_seed(seed, "recommendation");
    let switch = Bernoulli::new(p).expect("validated probability");

    Ok(requests
        .iter()
        .enumerate()
        .map(|(idx, r)| {
            if recommendation_exempt(r.category) {
                return r.clone();
            }
            let pool = match pools.get(&r.category) {
                Some(pool) if !pool.is_empty() => pool,
                _ => return r.clone(),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(indexed_seed(stage_seed, idx as u64));
            if !switch.sample(&mut rng) {
                return r.clone();
            }
            let pick = Uniform::new(0, pool.len()).sample(&mut rng);
            Request {
                item: pool[pick].clone(),
                ..r.clone()
            }
        })
        .collect())
}

/// The ID of location-specific item `k` of a cell.
pub fn local_item_id(cell_id: &str, k: u64) -> String {
    format!("loc:{cell_id}:{k}")
}

/// Location-specific-content perturbation: `items_per_cell` fresh items are
/// created for every cell, and each request switches, with probability `q`,
/// to a uniform draw from its own cell's items. Only the item field changes.
pub fn apply_locality(
    requests: &[Request],
    q: f64,
    items_per_cell: u64,
    seed: u64,
) -> Result<Vec<Request>, DemandError> {
    check_prob("loc_prob", q)?;
    if items_per_cell == 0 {
        return Err(DemandError::BadConfig(
            "local_items_per_cell",
            "must be at least 1".into(),
        ));
    }
    if q == 0.0 {
        return Ok(requests.to_vec());
    }
    let stage_seed = derive_seed(seed, "locality");
    let switch = Bernoulli::new(q).expect("validated probability");

    Ok(requests
        .iter()
        .enumerate()
        .map(|(idx, r)| {
            let mut rng = ChaCha8Rng::seed_from_u64(indexed_seed(stage_seed, idx as u64));
            if !switch.sample(&mut rng) {
                return r.clone();
            }
            let k = rng.gen_range(1..=items_per_cell);
            Request {
                item: local_item_id(&r.cell_id, k),
                ..r.clone()
            }
        })
        .collect())
}

/// How placement-time item sizes are computed from a request stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SizeMode {
    /// Every item has size 1: totals count items.
    Unit,
    /// An item's size is the mean downloaded bytes over its requests.
    #[default]
    MeanRequestBytes,
}

/// Item sizes for cache sizing, computed over the (possibly perturbed)
/// request stream.
pub fn size_map(requests: &[Request], mode: SizeMode) -> HashMap<String, u64> {
    match mode {
        SizeMode::Unit => requests.iter().map(|r| (r.item.clone(), 1)).collect(),
        SizeMode::MeanRequestBytes => {
            let mut sums: HashMap<String, (u64, u64)> = HashMap::new();
            for r in requests {
                let e = sums.entry(r.item.clone()).or_insert((0, 0));
                e.0 += r.bytes;
                e.1 += 1;
            }
            sums.into_iter()
                .map(|(item, (sum, n))| (item, (sum as f64 / n as f64).round().max(1.0) as u64))
                .collect()
        }
    }
}

/// Coverage character of a synthetic deployment, from dense micro-cells to
/// sparse umbrella cells covering wide areas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeploymentStyle {
    MicroCells,
    SmallCells,
    LargeCells,
    UmbrellaCells,
}

impl DeploymentStyle {
    pub fn coverage_radius_km(&self) -> f64 {
        match self {
            DeploymentStyle::MicroCells => 0.4,
            DeploymentStyle::SmallCells => 0.8,
            DeploymentStyle::LargeCells => 2.5,
            DeploymentStyle::UmbrellaCells => 5.0,
        }
    }

    pub fn parse(s: &str) -> Option<DeploymentStyle> {
        match s.trim().to_ascii_lowercase().as_str() {
            "micro_cells" | "micro" => Some(DeploymentStyle::MicroCells),
            "small_cells" | "small" => Some(DeploymentStyle::SmallCells),
            "large_cells" | "large" => Some(DeploymentStyle::LargeCells),
            "umbrella_cells" | "umbrella" => Some(DeploymentStyle::UmbrellaCells),
            _ => None,
        }
    }
}

/// Parameters of one synthetic operator scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub operator: String,
    pub style: DeploymentStyle,
    pub n_cells: u32,
    pub n_users: u32,
    pub hours: u32,
    pub requests_per_user_hour: u32,
    pub bbox: GeoBounds,
    pub category_shares: BTreeMap<ContentCategory, f64>,
    /// First simulated day; hours beyond 24 roll into following days.
    pub start_day: NaiveDate,
}

pub fn default_category_shares() -> BTreeMap<ContentCategory, f64> {
    use ContentCategory::*;
    [
        (YouTube, 0.40),
        (OnDemand, 0.25),
        (RealTime, 0.15),
        (Players, 0.05),
        (News, 0.05),
        (Sports, 0.04),
        (Weather, 0.03),
        (Maps, 0.03),
    ]
    .into_iter()
    .collect()
}

/// A Los Angeles-sized bounding box.
pub fn default_bbox() -> GeoBounds {
    GeoBounds {
        lat_min: 33.70,
        lat_max: 34.30,
        lon_min: -118.70,
        lon_max: -117.90,
    }
}

impl ScenarioSpec {
    pub fn new(operator: &str, style: DeploymentStyle, n_cells: u32) -> ScenarioSpec {
        ScenarioSpec {
            operator: operator.to_string(),
            style,
            n_cells,
            n_users: 100,
            hours: 24,
            requests_per_user_hour: 2,
            bbox: default_bbox(),
            category_shares: default_category_shares(),
            start_day: NaiveDate::from_ymd_opt(2015, 10, 5).unwrap(),
        }
    }

    pub fn validate(&self) -> Result<(), DemandError> {
        for (name, v) in [
            ("n_cells", self.n_cells),
            ("n_users", self.n_users),
            ("hours", self.hours),
            ("requests_per_user_hour", self.requests_per_user_hour),
        ] {
            if v == 0 {
                return Err(DemandError::BadConfig(
                    match name {
                        "n_cells" => "n_cells",
                        "n_users" => "n_users",
                        "hours" => "hours",
                        _ => "requests_per_user_hour",
                    },
                    "must be at least 1".into(),
                ));
            }
        }
        if !self.bbox.is_valid() {
            return Err(DemandError::BadConfig(
                "bbox",
                "invalid bounding box".into(),
            ));
        }
        let total: f64 = self.category_shares.values().sum();
        if self.category_shares.is_empty() || (total - 1.0).abs() > 1e-6 {
            return Err(DemandError::BadConfig(
                "category_shares",
                format!("shares sum to {total}, expected 1"),
            ));
        }
        if self.category_shares.values().any(|&v| v < 0.0) {
            return Err(DemandError::BadConfig(
                "category_shares",
                "shares must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

fn uniform_point(bbox: &GeoBounds, rng: &mut impl Rng) -> GeoPoint {
    GeoPoint::new(
        rng.gen_range(bbox.lat_min..=bbox.lat_max),
        rng.gen_range(bbox.lon_min..=bbox.lon_max),
    )
}

/// Moves `km` kilometers from `p` along compass heading `heading_rad`,
/// clamped to the bounding box.
fn step_km(p: GeoPoint, heading_rad: f64, km: f64, bbox: &GeoBounds) -> GeoPoint {
    let dlat = km * heading_rad.cos() / crate::geo::KM_PER_DEGREE;
    let dlon =
        km * heading_rad.sin() / (crate::geo::KM_PER_DEGREE * p.lat.to_radians().cos().max(0.01));
    GeoPoint::new(
        (p.lat + dlat).clamp(bbox.lat_min, bbox.lat_max),
        (p.lon + dlon).clamp(bbox.lon_min, bbox.lon_max),
    )
}

/// Generates a synthetic scenario: cells placed uniformly over the bounding
/// box with style-dependent coverage, and vehicular users driving random
/// waypoint paths, each emitting requests with categories drawn from the
/// configured shares. Deterministic given the seed.
pub fn generate_synthetic_scenario(
    spec: &ScenarioSpec,
    seed: u64,
) -> Result<(Vec<CellEstimate>, Vec<RawRequest>), DemandError> {
    spec.validate()?;

    let mut cell_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "cells"));
    let radius = spec.style.coverage_radius_km();
    let cells: Vec<CellEstimate> = (0..spec.n_cells)
        .map(|i| {
            let center = uniform_point(&spec.bbox, &mut cell_rng);
            let r_km = radius * cell_rng.gen_range(0.7..1.3);
            // Hexagonal footprint approximating the coverage hull.
            let hull: Vec<GeoPoint> = (0..6)
                .map(|k| {
                    let angle = k as f64 * std::f64::consts::FRAC_PI_3;
                    step_km(center, angle, r_km, &spec.bbox)
                })
                .collect();
            let hull = crate::geo::convex_hull(&hull);
            CellEstimate {
                cell_id: format!("{}-c{i:05}", spec.operator),
                operator: spec.operator.clone(),
                barycenter: crate::geo::polygon_centroid(&hull).expect("hexagon"),
                area_km2: crate::geo::polygon_area_km2(&hull),
                hull,
                observation_count: 1,
            }
        })
        .collect();

    let nearest_cell = |p: GeoPoint| -> &CellEstimate {
        cells
            .iter()
            .min_by(|a, b| {
                great_circle_distance(a.barycenter, p)
                    .partial_cmp(&great_circle_distance(b.barycenter, p))
                    .unwrap()
            })
            .expect("n_cells >= 1")
    };

    let share_items: Vec<(&ContentCategory, &f64)> = spec.category_shares.iter().collect();
    let weights = WeightedIndex::new(share_items.iter().map(|(_, w)| **w))
        .map_err(|e| DemandError::BadConfig("category_shares", e.to_string()))?;

    let mut requests = Vec::new();
    for user in 0..spec.n_users {
        for hour_index in 0..spec.hours {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
                seed,
                &format!("user:{user}:hour:{hour_index}"),
            ));
            let day = spec.start_day + chrono::Days::new(u64::from(hour_index / 24));
            let hour = (hour_index % 24) as u8;

            // Random waypoint drive: a handful of legs at vehicular speed.
            let speed_kmh = rng.gen_range(10.0..70.0);
            let mut position = uniform_point(&spec.bbox, &mut rng);
            let mut heading = rng.gen_range(0.0..std::f64::consts::TAU);
            let legs = 4;
            let mut waypoints = vec![position];
            for _ in 0..legs {
                heading += rng.gen_range(-0.8..0.8);
                position = step_km(position, heading, speed_kmh / legs as f64, &spec.bbox);
                waypoints.push(position);
            }

            for _ in 0..spec.requests_per_user_hour {
                let at = waypoints[rng.gen_range(0..waypoints.len())];
                let cell = nearest_cell(at);
                let category = *share_items[weights.sample(&mut rng)].0;
                requests.push(RawRequest {
                    user_id: format!("{}-u{user:05}", spec.operator),
                    day,
                    hour,
                    cell_id: cell.cell_id.clone(),
                    operator: spec.operator.clone(),
                    category,
                    bytes: 0,
                });
            }
        }
    }
    Ok((cells, requests))
}

/// Serializes requests as CSV (one request per row).
pub fn write_requests_csv<W: std::io::Write>(
    out: W,
    requests: &[Request],
) -> Result<(), std::io::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "user_id", "day", "hour", "cell_id", "operator", "category", "item", "bytes",
    ])?;
    for r in requests {
        w.write_record([
            r.user_id.as_str(),
            r.day.to_string().as_str(),
            r.hour.to_string().as_str(),
            r.cell_id.as_str(),
            r.operator.as_str(),
            r.category.as_str(),
            r.item.as_str(),
            r.bytes.to_string().as_str(),
        ])?;
    }
    w.flush()
}

/// Reads requests written by [`write_requests_csv`].
pub fn read_requests_csv<R: std::io::Read>(input: R) -> Result<Vec<Request>, String> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| format!("row {}: {e}", i + 1))?;
        let field = |k: usize| row.get(k).unwrap_or("").to_string();
        out.push(Request {
            user_id: field(0),
            day: field(1)
                .parse()
                .map_err(|e| format!("row {}: day: {e}", i + 1))?,
            hour: field(2)
                .parse()
                .map_err(|e| format!("row {}: hour: {e}", i + 1))?,
            cell_id: field(3),
            operator: field(4),
            category: ContentCategory::parse(&field(5))
                .ok_or_else(|| format!("row {}: unknown category '{}'", i + 1, field(5)))?,
            item: field(6),
            bytes: field(7)
                .parse()
                .map_err(|e| format!("row {}: bytes: {e}", i + 1))?,
        });
    }
    Ok(out)
}

/// Serializes requests as JSON lines.
pub fn write_requests_jsonl<W: std::io::Write>(
    mut out: W,
    requests: &[Request],
) -> Result<(), std::io::Error> {
    for r in requests {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads requests written by [`write_requests_jsonl`].
pub fn read_requests_jsonl<R: std::io::BufRead>(input: R) -> Result<Vec<Request>, String> {
    input
        .lines()
        .enumerate()
        .filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.map_err(|e| format!("line {}: {e}", i + 1))?;
            serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))
        })
        .collect()
}

/// Distinct cell IDs observed in a request stream, sorted.
pub fn distinct_cells(requests: &[Request]) -> BTreeSet<String> {
    requests.iter().map(|r| r.cell_id.clone()).collect()
}
