//! Crowd-sourced trace ingestion: the record schema, CSV parsing with
//! malformed-row tolerance, app-class to content-category mapping, and
//! per-hour mobility classification.

use std::collections::BTreeMap;
use std::fmt;
use std::io;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::geo::{path_length_km, GeoPoint};

/// Radio technology serving a record, `None` when the field is empty or
/// unrecognized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technology {
    ThreeG,
    Lte,
    Wifi,
    None,
}

impl Technology {
    pub fn parse(s: &str) -> Technology {
        match s.trim().to_ascii_uppercase().as_str() {
            "3G" => Technology::ThreeG,
            "LTE" | "4G" => Technology::Lte,
            "WIFI" | "WI-FI" => Technology::Wifi,
            _ => Technology::None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Technology::ThreeG => "3G",
            Technology::Lte => "LTE",
            Technology::Wifi => "WIFI",
            Technology::None => "",
        }
    }
}

/// One crowd-sourced observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub day: NaiveDate,
    pub hour: u8,
    pub user_id: String,
    pub lat: f64,
    pub lon: f64,
    pub operator: String,
    /// Absent when the device was not attached to a cell.
    pub cell_id: Option<String>,
    pub technology: Technology,
    pub app_class: String,
    pub bytes_down: u64,
    pub bytes_up: u64,
}

impl TraceRecord {
    pub fn position(&self) -> GeoPoint {
        GeoPoint::new(self.lat, self.lon)
    }
}

/// Content categories the demand model distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentCategory {
    YouTube,
    OnDemand,
    RealTime,
    Players,
    Weather,
    Maps,
    News,
    Sports,
    Other,
}

impl ContentCategory {
    pub const ALL: [ContentCategory; 9] = [
        ContentCategory::YouTube,
        ContentCategory::OnDemand,
        ContentCategory::RealTime,
        ContentCategory::Players,
        ContentCategory::Weather,
        ContentCategory::Maps,
        ContentCategory::News,
        ContentCategory::Sports,
        ContentCategory::Other,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ContentCategory::YouTube => "youtube",
            ContentCategory::OnDemand => "on_demand",
            ContentCategory::RealTime => "real_time",
            ContentCategory::Players => "players",
            ContentCategory::Weather => "weather",
            ContentCategory::Maps => "maps",
            ContentCategory::News => "news",
            ContentCategory::Sports => "sports",
            ContentCategory::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<ContentCategory> {
        ContentCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s.trim().to_ascii_lowercase())
    }
}

impl fmt::Display for ContentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered case-insensitive substring rules mapping app class names to
/// categories. First match wins; no match maps to `Other`.
#[derive(Debug, Clone)]
pub struct CategoryRules {
    rules: Vec<(String, ContentCategory)>,
}

impl CategoryRules {
    pub fn new(rules: Vec<(String, ContentCategory)>) -> CategoryRules {
        let rules = rules
            .into_iter()
            .map(|(p, c)| (p.to_ascii_uppercase(), c))
            .collect();
        CategoryRules { rules }
    }

    /// Built-in rules covering the well-known apps of each category.
    pub fn builtin() -> CategoryRules {
        use ContentCategory::*;
        CategoryRules::new(
            [
                ("YOUTUBE", YouTube),
                ("NETFLIX", OnDemand),
                ("TIMEWARNER", OnDemand),
                ("TIME.WARNER", OnDemand),
                ("SHOWTIME", OnDemand),
                ("HULU", OnDemand),
                ("PERISCOPE", RealTime),
                ("DIRECTV", RealTime),
                ("USTREAM", RealTime),
                ("VLC", Players),
                ("VIDEOPLAYER", Players),
                ("HTC.VIDEO", Players),
                ("MXTECH", Players),
                ("WEATHER", Weather),
                ("MAPS", Maps),
                ("WAZE", Maps),
                ("NAVIGATION", Maps),
                ("CNN", News),
                ("NBC", News),
                ("NYTIMES", News),
                ("NEWS", News),
                ("NFL", Sports),
                ("FOXSPORTS", Sports),
                ("FOX.SPORTS", Sports),
                ("ESPN", Sports),
                ("MLB", Sports),
            ]
            .into_iter()
            .map(|(p, c)| (p.to_string(), c))
            .collect(),
        )
    }

    /// Loads rules from a two-column CSV file: `pattern,category`.
    pub fn load(path: &Path) -> Result<CategoryRules, TraceError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| TraceError::Io(path.display().to_string(), e.to_string()))?;
        let mut rules = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| TraceError::Io(path.display().to_string(), e.to_string()))?;
            let pattern = row.get(0).unwrap_or("").trim();
            let category = row.get(1).unwrap_or("").trim();
            if pattern.is_empty() {
                continue;
            }
            let category = ContentCategory::parse(category)
                .ok_or_else(|| TraceError::BadRule(pattern.to_string(), category.to_string()))?;
            rules.push((pattern.to_string(), category));
        }
        if rules.is_empty() {
            return Err(TraceError::EmptyRules(path.display().to_string()));
        }
        Ok(CategoryRules::new(rules))
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

impl Default for CategoryRules {
    fn default() -> Self {
        CategoryRules::builtin()
    }
}

/// Maps an app class name to its content category. Total: unmatched class
/// names map to `Other`.
pub fn map_app_to_category(app_class: &str, rules: &CategoryRules) -> ContentCategory {
    let upper = app_class.to_ascii_uppercase();
    rules
        .rules
        .iter()
        .find(|(pattern, _)| upper.contains(pattern.as_str()))
        .map(|(_, category)| *category)
        .unwrap_or(ContentCategory::Other)
}

/// Mobility class of a user within one one-hour period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityClass {
    Static,
    Pedestrian,
    Vehicular,
}

/// Distance cutoffs in km separating the three mobility classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobilityThresholds {
    /// At or below this path length the user is static (GPS jitter floor).
    pub static_km: f64,
    /// Above this path length the user is vehicular.
    pub vehicular_km: f64,
}

impl Default for MobilityThresholds {
    fn default() -> Self {
        MobilityThresholds {
            static_km: 0.05,
            vehicular_km: 5.0,
        }
    }
}

impl MobilityThresholds {
    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.static_km >= 0.0 && self.static_km < self.vehicular_km) {
            return Err(TraceError::BadThresholds(self.static_km, self.vehicular_km));
        }
        Ok(())
    }
}

/// Movement summary of one (user, day, hour) bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct UserHourProfile {
    pub user_id: String,
    pub day: NaiveDate,
    pub hour: u8,
    /// Positions in record order; file order is assumed temporal.
    pub positions: Vec<GeoPoint>,
    /// Path length: sum of great-circle legs between consecutive positions.
    pub distance_km: f64,
    pub mobility: MobilityClass,
}

/// Classifies a profile's path length against the thresholds.
pub fn classify_mobility(distance_km: f64, thresholds: &MobilityThresholds) -> MobilityClass {
    if distance_km > thresholds.vehicular_km {
        MobilityClass::Vehicular
    } else if distance_km <= thresholds.static_km {
        MobilityClass::Static
    } else {
        MobilityClass::Pedestrian
    }
}

/// Groups records into (user, day, hour) buckets and computes each bucket's
/// path length and mobility class. Buckets are returned in key order.
pub fn build_profiles(
    records: &[TraceRecord],
    thresholds: &MobilityThresholds,
) -> Result<Vec<UserHourProfile>, TraceError> {
    thresholds.validate()?;
    let mut buckets: BTreeMap<(String, NaiveDate, u8), Vec<GeoPoint>> = BTreeMap::new();
    for r in records {
        buckets
            .entry((r.user_id.clone(), r.day, r.hour))
            .or_default()
            .push(r.position());
    }
    Ok(buckets
        .into_iter()
        .map(|((user_id, day, hour), positions)| {
            let distance_km = path_length_km(&positions);
            UserHourProfile {
                user_id,
                day,
                hour,
                positions,
                distance_km,
                mobility: classify_mobility(distance_km, thresholds),
            }
        })
        .collect())
}

/// Keeps exactly the records whose (user, day, hour) bucket is vehicular.
/// A user can be vehicular in some hours and not in others.
pub fn filter_vehicular(
    records: &[TraceRecord],
    thresholds: &MobilityThresholds,
) -> Result<Vec<TraceRecord>, TraceError> {
    let profiles = build_profiles(records, thresholds)?;
    let vehicular: std::collections::HashSet<(&str, NaiveDate, u8)> = profiles
        .iter()
        .filter(|p| p.mobility == MobilityClass::Vehicular)
        .map(|p| (p.user_id.as_str(), p.day, p.hour))
        .collect();
    Ok(records
        .iter()
        .filter(|r| vehicular.contains(&(r.user_id.as_str(), r.day, r.hour)))
        .cloned()
        .collect())
}

/// Column names of the trace CSV. Every field is looked up by header name so
/// column order and extra columns (SSID, BSSID, ...) do not matter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceSchema {
    pub day: String,
    pub hour: String,
    pub user_id: String,
    pub lat: String,
    pub lon: String,
    pub operator: String,
    pub cell_id: String,
    pub technology: String,
    pub app_class: String,
    pub bytes_down: String,
    pub bytes_up: String,
}

impl Default for TraceSchema {
    fn default() -> Self {
        TraceSchema {
            day: "day".into(),
            hour: "hour".into(),
            user_id: "user_id".into(),
            lat: "lat".into(),
            lon: "lon".into(),
            operator: "operator".into(),
            cell_id: "cell_id".into(),
            technology: "technology".into(),
            app_class: "app_class".into(),
            bytes_down: "bytes_down".into(),
            bytes_up: "bytes_up".into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace file {0}: {1}")]
    Io(String, String),
    #[error("header is missing required column '{0}'")]
    MissingColumn(String),
    #[error("{malformed} of {total} rows malformed (>50%): {example}")]
    TooManyMalformed {
        malformed: u64,
        total: u64,
        example: String,
    },
    #[error("category rule '{0}': unknown category '{1}'")]
    BadRule(String, String),
    #[error("category rule file {0} has no rules")]
    EmptyRules(String),
    #[error("mobility thresholds must satisfy 0 <= static ({0}) < vehicular ({1})")]
    BadThresholds(f64, f64),
    #[error("mobility profile has no positions")]
    EmptyProfile,
}

/// Outcome of reading a trace file: parsed records plus skip accounting.
#[derive(Debug)]
pub struct TraceReadResult {
    pub records: Vec<TraceRecord>,
    pub malformed: u64,
    pub total_rows: u64,
}

struct ColumnIndices {
    day: usize,
    hour: usize,
    user_id: usize,
    lat: usize,
    lon: usize,
    operator: usize,
    cell_id: usize,
    technology: usize,
    app_class: usize,
    bytes_down: usize,
    bytes_up: usize,
}

fn resolve_columns(
    headers: &csv::StringRecord,
    schema: &TraceSchema,
) -> Result<ColumnIndices, TraceError> {
    let find = |name: &String| -> Result<usize, TraceError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| TraceError::MissingColumn(name.clone()))
    };
    Ok(ColumnIndices {
        day: find(&schema.day)?,
        hour: find(&schema.hour)?,
        user_id: find(&schema.user_id)?,
        lat: find(&schema.lat)?,
        lon: find(&schema.lon)?,
        operator: find(&schema.operator)?,
        cell_id: find(&schema.cell_id)?,
        technology: find(&schema.technology)?,
        app_class: find(&schema.app_class)?,
        bytes_down: find(&schema.bytes_down)?,
        bytes_up: find(&schema.bytes_up)?,
    })
}

fn parse_row(row: &csv::StringRecord, cols: &ColumnIndices) -> Option<TraceRecord> {
    let get = |i: usize| row.get(i).map(str::trim);
    let day = NaiveDate::parse_from_str(get(cols.day)?, "%Y-%m-%d").ok()?;
    let hour: u8 = get(cols.hour)?.parse().ok()?;
    if hour > 23 {
        return None;
    }
    let lat: f64 = get(cols.lat)?.parse().ok()?;
    let lon: f64 = get(cols.lon)?.parse().ok()?;
    if !GeoPoint::new(lat, lon).is_valid() {
        return None;
    }
    let user_id = get(cols.user_id)?.to_string();
    if user_id.is_empty() {
        return None;
    }
    let cell_id = match get(cols.cell_id)? {
        "" => None,
        id => Some(id.to_string()),
    };
    let bytes_down: u64 = get(cols.bytes_down)?.parse().ok()?;
    let bytes_up: u64 = get(cols.bytes_up)?.parse().ok()?;
    Some(TraceRecord {
        day,
        hour,
        user_id,
        lat,
        lon,
        operator: get(cols.operator)?.to_string(),
        cell_id,
        technology: Technology::parse(get(cols.technology)?),
        app_class: get(cols.app_class)?.to_string(),
        bytes_down,
        bytes_up,
    })
}

/// Reads a trace CSV, skipping and counting malformed rows. Fails when the
/// file or a required header column is missing, or when more than half of
/// the data rows are malformed.
pub fn parse_trace(path: &Path, schema: &TraceSchema) -> Result<TraceReadResult, TraceError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| TraceError::Io(path.display().to_string(), e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| TraceError::Io(path.display().to_string(), e.to_string()))?
        .clone();
    let cols = resolve_columns(&headers, schema)?;

    let mut records = Vec::new();
    let mut malformed = 0u64;
    let mut total = 0u64;
    let mut first_bad: Option<String> = None;
    for row in reader.records() {
        total += 1;
        match row {
            Ok(row) => match parse_row(&row, &cols) {
                Some(rec) => records.push(rec),
                None => {
                    malformed += 1;
                    if first_bad.is_none() {
                        first_bad = Some(format!("row {total}: {:?}", row));
                    }
                }
            },
            Err(e) => {
                malformed += 1;
                if first_bad.is_none() {
                    first_bad = Some(format!("row {total}: {e}"));
                }
            }
        }
    }
    if total > 0 && malformed * 2 > total {
        return Err(TraceError::TooManyMalformed {
            malformed,
            total,
            example: first_bad.unwrap_or_default(),
        });
    }
    Ok(TraceReadResult {
        records,
        malformed,
        total_rows: total,
    })
}

/// Writes records in the trace CSV schema (same shape `parse_trace` reads).
pub fn write_trace<W: io::Write>(
    out: W,
    records: &[TraceRecord],
    schema: &TraceSchema,
) -> Result<(), TraceError> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| TraceError::Io("<output>".into(), e.to_string());
    w.write_record([
        schema.day.as_str(),
        schema.hour.as_str(),
        schema.user_id.as_str(),
        schema.lat.as_str(),
        schema.lon.as_str(),
        schema.operator.as_str(),
        schema.cell_id.as_str(),
        schema.technology.as_str(),
        schema.app_class.as_str(),
        schema.bytes_down.as_str(),
        schema.bytes_up.as_str(),
    ])
    .map_err(io_err)?;
    for r in records {
        w.write_record([
            r.day.to_string().as_str(),
            r.hour.to_string().as_str(),
            r.user_id.as_str(),
            r.lat.to_string().as_str(),
            r.lon.to_string().as_str(),
            r.operator.as_str(),
            r.cell_id.as_deref().unwrap_or(""),
            r.technology.as_str(),
            r.app_class.as_str(),
            r.bytes_down.to_string().as_str(),
            r.bytes_up.to_string().as_str(),
        ])
        .map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| TraceError::Io("<output>".into(), e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn fixture_csv(rows: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "day,hour,user_id,lat,lon,operator,cell_id,technology,app_class,bytes_down,bytes_up"
        )
        .unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    fn record(user: &str, day: &str, hour: u8, lat: f64, lon: f64) -> TraceRecord {
        TraceRecord {
            day: day.parse().unwrap(),
            hour,
            user_id: user.into(),
            lat,
            lon,
            operator: "op".into(),
            cell_id: Some("c1".into()),
            technology: Technology::Lte,
            app_class: "COM.GOOGLE.ANDROID.YOUTUBE".into(),
            bytes_down: 100,
            bytes_up: 10,
        }
    }

    #[test]
    fn parses_wellformed_fixture_field_by_field() {
        let f = fixture_csv(&[
            "2015-10-01,8,u1,34.05,-118.25,verizon,c100,LTE,COM.GOOGLE.ANDROID.YOUTUBE,1234,56",
            "2015-10-01,9,u2,34.10,-118.30,verizon,,3G,COM.WEATHER.APP,2048,0",
            "2015-10-02,23,u3,33.95,-118.20,att,c200,WIFI,COM.UNKNOWN.FOO,0,0",
        ]);
        let out = parse_trace(f.path(), &TraceSchema::default()).unwrap();
        assert_eq!(out.records.len(), 3);
        assert_eq!(out.malformed, 0);

        let r = &out.records[0];
        assert_eq!(r.day, "2015-10-01".parse::<NaiveDate>().unwrap());
        assert_eq!(r.hour, 8);
        assert_eq!(r.user_id, "u1");
        assert_abs_diff_eq!(r.lat, 34.05);
        assert_abs_diff_eq!(r.lon, -118.25);
        assert_eq!(r.operator, "verizon");
        assert_eq!(r.cell_id.as_deref(), Some("c100"));
        assert_eq!(r.technology, Technology::Lte);
        assert_eq!(r.app_class, "COM.GOOGLE.ANDROID.YOUTUBE");
        assert_eq!(r.bytes_down, 1234);
        assert_eq!(r.bytes_up, 56);

        assert_eq!(out.records[1].cell_id, None);
        assert_eq!(out.records[1].technology, Technology::ThreeG);
        assert_eq!(out.records[2].hour, 23);
    }

    #[test]
    fn latitude_out_of_bounds_is_skipped_and_counted() {
        let f = fixture_csv(&[
            "2015-10-01,8,u1,91.0,-118.25,verizon,c100,LTE,APP,10,0",
            "2015-10-01,8,u1,34.05,-118.25,verizon,c100,LTE,APP,10,0",
        ]);
        let out = parse_trace(f.path(), &TraceSchema::default()).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.malformed, 1);
        assert_eq!(out.total_rows, 2);
    }

    #[test]
    fn empty_file_with_header_yields_empty_stream() {
        let f = fixture_csv(&[]);
        let out = parse_trace(f.path(), &TraceSchema::default()).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.total_rows, 0);
    }

    #[test]
    fn missing_required_column_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "day,hour,user_id").unwrap();
        f.flush().unwrap();
        let err = parse_trace(f.path(), &TraceSchema::default()).unwrap_err();
        assert!(matches!(err, TraceError::MissingColumn(_)));
    }

    #[test]
    fn mostly_malformed_file_aborts() {
        let f = fixture_csv(&[
            "bad,row,entirely,,,,,,,,",
            "2015-10-01,99,u1,34.0,-118.0,v,c,LTE,APP,1,0",
            "2015-10-01,8,u1,34.05,-118.25,v,c,LTE,APP,10,0",
        ]);
        let err = parse_trace(f.path(), &TraceSchema::default()).unwrap_err();
        assert!(matches!(
            err,
            TraceError::TooManyMalformed {
                malformed: 2,
                total: 3,
                ..
            }
        ));
    }

    #[test]
    fn custom_column_names_resolve() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "d,h,uid,latitude,longitude,carrier,cid,tech,app,down,up").unwrap();
        writeln!(f, "2015-10-01,8,u1,34.05,-118.25,verizon,c1,LTE,APP,10,2").unwrap();
        f.flush().unwrap();
        let schema = TraceSchema {
            day: "d".into(),
            hour: "h".into(),
            user_id: "uid".into(),
            lat: "latitude".into(),
            lon: "longitude".into(),
            operator: "carrier".into(),
            cell_id: "cid".into(),
            technology: "tech".into(),
            app_class: "app".into(),
            bytes_down: "down".into(),
            bytes_up: "up".into(),
        };
        let out = parse_trace(f.path(), &schema).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].operator, "verizon");
    }

    #[test]
    fn youtube_class_names_map_to_youtube() {
        let rules = CategoryRules::builtin();
        assert_eq!(
            map_app_to_category("COM.GOOGLE.ANDROID.APPS.YOUTUBE.KIDS", &rules),
            ContentCategory::YouTube
        );
        assert_eq!(
            map_app_to_category("COM.GOOGLE.ANDROID.YOUTUBE", &rules),
            ContentCategory::YouTube
        );
        assert_eq!(
            map_app_to_category("COM.UNKNOWN.FOO", &rules),
            ContentCategory::Other
        );
    }

    #[test]
    fn category_mapping_is_deterministic_and_first_match_wins() {
        let rules = CategoryRules::new(vec![
            ("SPORTS.NEWS".into(), ContentCategory::Sports),
            ("NEWS".into(), ContentCategory::News),
        ]);
        assert_eq!(
            map_app_to_category("com.sports.news.app", &rules),
            ContentCategory::Sports
        );
        for _ in 0..3 {
            assert_eq!(
                map_app_to_category("com.acme.news", &rules),
                ContentCategory::News
            );
        }
    }

    #[test]
    fn mobility_thresholds_split_three_ways() {
        let t = MobilityThresholds::default();
        // The vehicular cutoff is strict: more than 5 km.
        assert_eq!(classify_mobility(5.1, &t), MobilityClass::Vehicular);
        assert_eq!(classify_mobility(5.0, &t), MobilityClass::Pedestrian);
        assert_eq!(classify_mobility(0.0, &t), MobilityClass::Static);
        assert_eq!(classify_mobility(1.2, &t), MobilityClass::Pedestrian);
    }

    #[test]
    fn mobility_is_monotone_in_distance() {
        let t = MobilityThresholds::default();
        let rank = |m: MobilityClass| match m {
            MobilityClass::Static => 0,
            MobilityClass::Pedestrian => 1,
            MobilityClass::Vehicular => 2,
        };
        let mut prev = 0;
        for step in 0..200 {
            let d = step as f64 * 0.05;
            let r = rank(classify_mobility(d, &t));
            assert!(r >= prev, "class regressed at distance {d}");
            prev = r;
        }
    }

    #[test]
    fn distance_is_reversal_invariant() {
        let positions = vec![
            GeoPoint::new(34.0, -118.0),
            GeoPoint::new(34.02, -118.03),
            GeoPoint::new(34.05, -118.01),
        ];
        let forward = path_length_km(&positions);
        let mut rev = positions.clone();
        rev.reverse();
        assert_abs_diff_eq!(forward, path_length_km(&rev), epsilon = 1e-12);
    }

    #[test]
    fn filter_keeps_only_vehicular_hours() {
        // u1 hour 8: stationary. u1 hour 9: ~6.7 km of travel.
        let records = vec![
            record("u1", "2015-10-01", 8, 34.05, -118.25),
            record("u1", "2015-10-01", 8, 34.0501, -118.2501),
            record("u1", "2015-10-01", 9, 34.05, -118.25),
            record("u1", "2015-10-01", 9, 34.11, -118.25),
        ];
        let kept = filter_vehicular(&records, &MobilityThresholds::default()).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|r| r.hour == 9));
    }

    #[test]
    fn filter_on_all_static_trace_is_empty() {
        let records = vec![
            record("u1", "2015-10-01", 8, 34.05, -118.25),
            record("u2", "2015-10-01", 9, 34.06, -118.26),
        ];
        let kept = filter_vehicular(&records, &MobilityThresholds::default()).unwrap();
        assert!(kept.is_empty());
    }

    #[test]
    fn filter_matches_hand_classification_and_is_idempotent() {
        // Hand-enumerated per-hour path lengths:
        //   u1 h8: one point -> 0 km (static)
        //   u2 h8: 0.09 deg lat -> ~10 km (vehicular)
        //   u3 h8: ~1.1 km (pedestrian)
        let records = vec![
            record("u1", "2015-10-01", 8, 34.0, -118.0),
            record("u2", "2015-10-01", 8, 34.0, -118.0),
            record("u2", "2015-10-01", 8, 34.09, -118.0),
            record("u3", "2015-10-01", 8, 34.0, -118.0),
            record("u3", "2015-10-01", 8, 34.01, -118.0),
        ];
        let kept = filter_vehicular(&records, &MobilityThresholds::default()).unwrap();
        assert_eq!(kept.len(), 2);
        assert!(kept.iter().all(|r| r.user_id == "u2"));

        let again = filter_vehicular(&kept, &MobilityThresholds::default()).unwrap();
        assert_eq!(again, kept);
    }

    #[test]
    fn trace_roundtrip_preserves_records() {
        let records = vec![
            record("u1", "2015-10-01", 8, 34.05, -118.25),
            TraceRecord {
                cell_id: None,
                technology: Technology::None,
                ..record("u2", "2015-10-02", 0, 33.9, -118.1)
            },
        ];
        let schema = TraceSchema::default();
        let mut buf = Vec::new();
        write_trace(&mut buf, &records, &schema).unwrap();

        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(&buf).unwrap();
        f.flush().unwrap();
        let back = parse_trace(f.path(), &schema).unwrap();
        assert_eq!(back.records, records);
    }
}
