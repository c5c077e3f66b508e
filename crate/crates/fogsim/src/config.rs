//! Declarative run configuration: a TOML file drives every subcommand, with
//! command-line flags overriding individual fields. Validation is total and
//! every rejection names the offending field.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cache::{MarkOptions, Weighting};
use crate::demand::{
    default_bbox, default_category_shares, DemandConfig, DeploymentStyle, ScenarioSpec, SizeMode,
    SizeSource,
};
use crate::geo::GeoBounds;
use crate::metrics::{EvalOptions, SweepAxis, SweepOptions};
use crate::topology::{GroupingRule, Level};
use crate::trace::{ContentCategory, MobilityThresholds, TraceSchema};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Synth,
    Ingest,
}

#[derive(Debug, thiserror::Error)]
#[error("config field '{field}': {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        message: message.into(),
    }
}

/// One synthetic operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub name: String,
    pub style: String,
    pub n_cells: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSection {
    pub operators: Vec<OperatorConfig>,
    pub n_users: u32,
    pub hours: u32,
    pub requests_per_user_hour: u32,
    pub bbox: Option<GeoBounds>,
    pub category_shares: Option<BTreeMap<String, f64>>,
    pub start_day: Option<chrono::NaiveDate>,
}

impl Default for SynthSection {
    fn default() -> Self {
        SynthSection {
            operators: vec![OperatorConfig {
                name: "synth".into(),
                style: "small_cells".into(),
                n_cells: 200,
            }],
            n_users: 100,
            hours: 24,
            requests_per_user_hour: 2,
            bbox: None,
            category_shares: None,
            start_day: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IngestSection {
    pub trace_path: PathBuf,
    pub rules_path: Option<PathBuf>,
    pub static_km: f64,
    pub vehicular_km: f64,
    pub schema: TraceSchema,
}

impl Default for IngestSection {
    fn default() -> Self {
        IngestSection {
            trace_path: PathBuf::new(),
            rules_path: None,
            static_km: 0.05,
            vehicular_km: 5.0,
            schema: TraceSchema::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub axis: String,
    pub grid: Vec<f64>,
    /// Number of seeds; actual seeds derive from the master seed.
    pub seeds: u32,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            axis: "p".into(),
            grid: vec![0.0, 0.1, 0.25, 0.5],
            seeds: 10,
        }
    }
}

/// The full run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub mode: Mode,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    pub fanout: usize,
    pub target_hit_ratio: f64,
    pub weighting: Weighting,
    pub architectures: Vec<Level>,
    /// All item sizes are 1 (totals count items instead of bytes).
    pub unit_sizes: bool,
    pub exclude_non_cacheable: bool,
    pub grouping: GroupingRule,
    /// Worker cap; 0 means one per core. Output does not depend on it.
    pub jobs: usize,
    /// Also write requests as JSON lines.
    pub jsonl: bool,
    pub synth: SynthSection,
    pub ingest: IngestSection,
    pub demand: DemandConfig,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            mode: Mode::Synth,
            master_seed: 0,
            output_dir: PathBuf::from("out"),
            fanout: 10,
            target_hit_ratio: 0.5,
            weighting: Weighting::Requests,
            architectures: Level::ALL.to_vec(),
            unit_sizes: false,
            exclude_non_cacheable: false,
            grouping: GroupingRule::SpaceFillingCurve,
            jobs: 0,
            jsonl: false,
            synth: SynthSection::default(),
            ingest: IngestSection::default(),
            demand: DemandConfig::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| field_err("config", format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| field_err("config", e.to_string()))
    }

    /// Validates every field, naming the first offender.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(field_err(
                "schema_version",
                format!(
                    "expected {CONFIG_SCHEMA_VERSION}, got {}",
                    self.schema_version
                ),
            ));
        }
        if self.fanout == 0 {
            return Err(field_err("fanout", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.target_hit_ratio) {
            return Err(field_err(
                "target_hit_ratio",
                format!("{} is not in [0, 1]", self.target_hit_ratio),
            ));
        }
        if self.architectures.is_empty() {
            return Err(field_err("architectures", "must name at least one level"));
        }
        self.demand
            .validate()
            .map_err(|e| field_err("demand", e.to_string()))?;

        match self.mode {
            Mode::Synth => {
                if self.synth.operators.is_empty() {
                    return Err(field_err(
                        "synth.operators",
                        "must name at least one operator",
                    ));
                }
                for spec in self.scenario_specs()? {
                    spec.validate()
                        .map_err(|e| field_err("synth", e.to_string()))?;
                }
            }
            Mode::Ingest => {
                if self.ingest.trace_path.as_os_str().is_empty() {
                    return Err(field_err("ingest.trace_path", "must be set in ingest mode"));
                }
                MobilityThresholds {
                    static_km: self.ingest.static_km,
                    vehicular_km: self.ingest.vehicular_km,
                }
                .validate()
                .map_err(|e| field_err("ingest", e.to_string()))?;
            }
        }

        let axis = self.sweep_axis()?;
        let grid = &self.sweep.grid;
        if grid.is_empty()
            || grid.windows(2).any(|w| w[0] >= w[1])
            || grid.iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(field_err(
                "sweep.grid",
                "must be non-empty, strictly increasing, within [0, 1]",
            ));
        }
        if self.sweep.seeds == 0 {
            return Err(field_err("sweep.seeds", "must be at least 1"));
        }
        let _ = axis;
        Ok(())
    }

    pub fn sweep_axis(&self) -> Result<SweepAxis, ConfigError> {
        SweepAxis::parse(&self.sweep.axis)
            .ok_or_else(|| field_err("sweep.axis", format!("unknown axis '{}'", self.sweep.axis)))
    }

    /// Seeds used by the sweep, derived from the master seed.
    pub fn sweep_seeds(&self) -> Vec<u64> {
        (0..self.sweep.seeds)
            .map(|i| crate::seed::derive_seed(self.master_seed, &format!("sweep-seed:{i}")))
            .collect()
    }

    /// The demand config with mode-appropriate size source.
    pub fn demand_config(&self) -> DemandConfig {
        let size_source = match self.mode {
            Mode::Synth => SizeSource::CategoryLognormal,
            Mode::Ingest => SizeSource::TraceBytes,
        };
        DemandConfig {
            size_source,
            ..self.demand.clone()
        }
    }

    pub fn size_mode(&self) -> SizeMode {
        if self.unit_sizes {
            SizeMode::Unit
        } else {
            SizeMode::MeanRequestBytes
        }
    }

    pub fn mark_options(&self) -> MarkOptions {
        MarkOptions {
            weighting: self.weighting,
            exclude_non_cacheable: self.exclude_non_cacheable,
        }
    }

    pub fn eval_options(&self) -> EvalOptions {
        EvalOptions {
            target_hit_ratio: self.target_hit_ratio,
            mark: self.mark_options(),
            size_mode: self.size_mode(),
            architectures: self.architectures.clone(),
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            eval: self.eval_options(),
            base_rec_prob: self.demand.rec_prob,
            base_loc_prob: self.demand.loc_prob,
            rec_top_fraction: self.demand.rec_top_fraction,
            local_items_per_cell: self.demand.local_items_per_cell,
        }
    }

    pub fn mobility_thresholds(&self) -> MobilityThresholds {
        MobilityThresholds {
            static_km: self.ingest.static_km,
            vehicular_km: self.ingest.vehicular_km,
        }
    }

    /// Synthetic operator specs assembled from the synth section.
    pub fn scenario_specs(&self) -> Result<Vec<ScenarioSpec>, ConfigError> {
        let shares = match &self.synth.category_shares {
            None => default_category_shares(),
            Some(raw) => {
                let mut shares = BTreeMap::new();
                for (key, value) in raw {
                    let category = ContentCategory::parse(key).ok_or_else(|| {
                        field_err("synth.category_shares", format!("unknown category '{key}'"))
                    })?;
                    shares.insert(category, *value);
                }
                shares
            }
        };
        self.synth
            .operators
            .iter()
            .map(|op| {
                let style = DeploymentStyle::parse(&op.style).ok_or_else(|| {
                    field_err(
                        "synth.operators.style",
                        format!(
                            "unknown style '{}' (expected micro_cells, small_cells, large_cells, or umbrella_cells)",
                            op.style
                        ),
                    )
                })?;
                let mut spec = ScenarioSpec::new(&op.name, style, op.n_cells);
                spec.n_users = self.synth.n_users;
                spec.hours = self.synth.hours;
                spec.requests_per_user_hour = self.synth.requests_per_user_hour;
                spec.bbox = self.synth.bbox.unwrap_or_else(default_bbox);
                spec.category_shares = shares.clone();
                if let Some(day) = self.synth.start_day {
                    spec.start_day = day;
                }
                Ok(spec)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.target_hit_ratio, 0.5);
        assert_eq!(cfg.fanout, 10);
    }

    #[test]
    fn toml_roundtrip() {
        let cfg = RunConfig::default();
        let text = toml::to_string_pretty(&cfg).unwrap();
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn minimal_toml_parses_with_defaults() {
        let cfg: RunConfig = toml::from_str(
            r#"
            mode = "synth"
            master_seed = 7

            [[synth.operators]]
            name = "alpha"
            style = "micro_cells"
            n_cells = 50
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.master_seed, 7);
        assert_eq!(cfg.synth.operators[0].n_cells, 50);
        let specs = cfg.scenario_specs().unwrap();
        assert_eq!(specs[0].style, DeploymentStyle::MicroCells);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = toml::from_str::<RunConfig>("mode = \"synth\"\nbogus_field = 1\n").unwrap_err();
        assert!(err.to_string().contains("bogus_field"));
    }

    #[test]
    fn invalid_fields_produce_named_diagnostics() {
        type Breaker = Box<dyn Fn(&mut RunConfig)>;
        let broken: Vec<(&str, Breaker)> = vec![
            ("target_hit_ratio", Box::new(|c| c.target_hit_ratio = 1.5)),
            ("fanout", Box::new(|c| c.fanout = 0)),
            ("sweep.grid", Box::new(|c| c.sweep.grid = vec![0.5, 0.2])),
            ("sweep.axis", Box::new(|c| c.sweep.axis = "z".into())),
            ("ingest.trace_path", Box::new(|c| c.mode = Mode::Ingest)),
            (
                "synth.operators.style",
                Box::new(|c| c.synth.operators[0].style = "gigantic".into()),
            ),
            ("demand", Box::new(|c| c.demand.rec_prob = 2.0)),
        ];
        for (field, break_it) in broken {
            let mut cfg = RunConfig::default();
            break_it(&mut cfg);
            assert_eq!(cfg.validate().unwrap_err().field, field);
        }
    }

    #[test]
    fn negative_cell_count_is_a_parse_error() {
        let err = toml::from_str::<RunConfig>(
            r#"
            mode = "synth"
            [[synth.operators]]
            name = "x"
            style = "small_cells"
            n_cells = -5
            "#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n_cells"));
    }

    #[test]
    fn sweep_seeds_derive_from_master() {
        let mut cfg = RunConfig {
            master_seed: 3,
            ..RunConfig::default()
        };
        cfg.sweep.seeds = 4;
        let seeds = cfg.sweep_seeds();
        assert_eq!(seeds.len(), 4);
        let again = cfg.sweep_seeds();
        assert_eq!(seeds, again);
        cfg.master_seed = 4;
        assert_ne!(cfg.sweep_seeds(), seeds);
    }

    #[test]
    fn category_share_keys_are_validated() {
        let mut cfg = RunConfig::default();
        let mut shares = BTreeMap::new();
        shares.insert("videos".to_string(), 1.0);
        cfg.synth.category_shares = Some(shares);
        assert_eq!(
            cfg.scenario_specs().unwrap_err().field,
            "synth.category_shares"
        );
    }
}
