//! C ABI for the fogsim simulator.
//!
//! Scenarios are opaque handles created by `fogsim_scenario_synth` or
//! `fogsim_scenario_load` and released with `fogsim_scenario_free`. Every
//! fallible call returns a `FogsimStatus`; on failure a human-readable
//! message is available from `fogsim_last_error_message` (free it with
//! `fogsim_string_free`). The generated header lives in `include/fogsim.h`.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use fogsim::cache::MarkOptions;
use fogsim::demand::{DemandConfig, DeploymentStyle, ScenarioSpec, SizeMode, SizeSource};
use fogsim::metrics::{evaluate_operator, perturb_requests, EvalOptions, SweepAxis, SweepOptions};
use fogsim::scenario::{build_synthetic, Scenario};
use fogsim::topology::{GroupingRule, Level};

/// Status code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FogsimStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Utf8Error = 3,
    IoError = 4,
    InternalError = 5,
}

/// Synthetic deployment style.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FogsimStyle {
    MicroCells = 0,
    SmallCells = 1,
    LargeCells = 2,
    UmbrellaCells = 3,
}

impl From<FogsimStyle> for DeploymentStyle {
    fn from(style: FogsimStyle) -> DeploymentStyle {
        match style {
            FogsimStyle::MicroCells => DeploymentStyle::MicroCells,
            FogsimStyle::SmallCells => DeploymentStyle::SmallCells,
            FogsimStyle::LargeCells => DeploymentStyle::LargeCells,
            FogsimStyle::UmbrellaCells => DeploymentStyle::UmbrellaCells,
        }
    }
}

/// Opaque scenario handle.
pub struct FogsimScenario {
    inner: Scenario,
}

/// Per-architecture evaluation results. Arrays are indexed by level:
/// 0 = base stations, 1 = rings, 2 = pods, 3 = core switches. Ratios and
/// distances are NaN when undefined (empty plans or zero hits).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FogsimEvaluation {
    pub total_size_bytes: [u64; 4],
    pub total_size_items: [u64; 4],
    pub price_of_fog: [f64; 4],
    pub mean_distance_km: [f64; 4],
    pub achieved_hit_ratio: f64,
    pub marked_pairs: u64,
    pub infeasible: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let message = message.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(message).ok();
    });
}

fn guard<F: FnOnce() -> FogsimStatus>(f: F) -> FogsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            FogsimStatus::InternalError
        }
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string or NULL.
unsafe fn read_str<'a>(ptr: *const c_char) -> Result<Option<&'a str>, FogsimStatus> {
    if ptr.is_null() {
        return Ok(None);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Some(s)),
        Err(e) => {
            set_error(format!("invalid UTF-8 argument: {e}"));
            Err(FogsimStatus::Utf8Error)
        }
    }
}

/// Library version as a static NUL-terminated string; never free it.
#[no_mangle]
pub extern "C" fn fogsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the most recent failure on this thread, or NULL. The caller
/// owns the returned string and must release it with `fogsim_string_free`.
#[no_mangle]
pub extern "C" fn fogsim_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        Some(message) => message.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by `fogsim_last_error_message`
/// or `fogsim_scenario_operators` (or NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fogsim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a synthetic single-operator scenario. On success stores a new
/// handle in `out`; release it with `fogsim_scenario_free`.
///
/// # Safety
/// `operator` must be a valid NUL-terminated string or NULL (defaults to
/// "synth"); `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fogsim_scenario_synth(
    operator: *const c_char,
    style: FogsimStyle,
    n_cells: u32,
    n_users: u32,
    hours: u32,
    requests_per_user_hour: u32,
    fanout: u32,
    seed: u64,
    out: *mut *mut FogsimScenario,
) -> FogsimStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is NULL");
            return FogsimStatus::NullArgument;
        }
        let name = match read_str(operator) {
            Ok(s) => s.unwrap_or("synth").to_string(),
            Err(status) => return status,
        };
        let mut spec = ScenarioSpec::new(&name, style.into(), n_cells);
        spec.n_users = n_users;
        spec.hours = hours;
        spec.requests_per_user_hour = requests_per_user_hour;
        let demand = DemandConfig {
            size_source: SizeSource::CategoryLognormal,
            ..DemandConfig::default()
        };
        match build_synthetic(
            &[spec],
            &demand,
            fanout as usize,
            GroupingRule::SpaceFillingCurve,
            seed,
        ) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(FogsimScenario { inner }));
                FogsimStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                FogsimStatus::InvalidArgument
            }
        }
    })
}

/// Loads a scenario directory written by the CLI (`synth` or `ingest`).
///
/// # Safety
/// `dir` must be a valid NUL-terminated path; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fogsim_scenario_load(
    dir: *const c_char,
    out: *mut *mut FogsimScenario,
) -> FogsimStatus {
    guard(|| {
        if out.is_null() {
            set_error("out pointer is NULL");
            return FogsimStatus::NullArgument;
        }
        let dir = match read_str(dir) {
            Ok(Some(s)) => s,
            Ok(None) => {
                set_error("dir is NULL");
                return FogsimStatus::NullArgument;
            }
            Err(status) => return status,
        };
        match Scenario::load(Path::new(dir)) {
            Ok((inner, _manifest)) => {
                *out = Box::into_raw(Box::new(FogsimScenario { inner }));
                FogsimStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                FogsimStatus::IoError
            }
        }
    })
}

/// Releases a scenario handle.
///
/// # Safety
/// `scenario` must be a handle from this library (or NULL), not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fogsim_scenario_free(scenario: *mut FogsimScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of requests in the scenario.
///
/// # Safety
/// `scenario` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fogsim_scenario_request_count(
    scenario: *const FogsimScenario,
    out: *mut u64,
) -> FogsimStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            set_error("NULL argument");
            return FogsimStatus::NullArgument;
        }
        *out = (*scenario).inner.requests.len() as u64;
        FogsimStatus::Ok
    })
}

/// Node counts per level for one operator, into `out[4]` indexed
/// base stations / rings / pods / cores. A NULL operator sums over all
/// operators.
///
/// # Safety
/// `scenario` must be valid; `out` must point to at least 4 u64 slots;
/// `operator` must be a valid string or NULL.
#[no_mangle]
pub unsafe extern "C" fn fogsim_scenario_level_counts(
    scenario: *const FogsimScenario,
    operator: *const c_char,
    out: *mut u64,
) -> FogsimStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            set_error("NULL argument");
            return FogsimStatus::NullArgument;
        }
        let wanted = match read_str(operator) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let scenario = &(*scenario).inner;
        let counts = std::slice::from_raw_parts_mut(out, 4);
        counts.fill(0);
        let mut matched = false;
        for (op, topology) in &scenario.topologies {
            if wanted.is_some_and(|w| w != op) {
                continue;
            }
            matched = true;
            for (i, level) in Level::ALL.iter().enumerate() {
                counts[i] += topology.level_count(*level) as u64;
            }
        }
        if !matched {
            set_error(format!("unknown operator '{}'", wanted.unwrap_or("")));
            return FogsimStatus::InvalidArgument;
        }
        FogsimStatus::Ok
    })
}

fn nan_or(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

/// Evaluates the caching procedure for one operator at the given target hit
/// ratio, after applying the recommendation (p) and locality (q)
/// perturbations with the given seed. A NULL operator is accepted when the
/// scenario holds exactly one. With `unit_sizes`, byte totals equal item
/// counts.
///
/// # Safety
/// `scenario` and `out` must be valid pointers; `operator` must be a valid
/// string or NULL.
#[no_mangle]
pub unsafe extern "C" fn fogsim_evaluate(
    scenario: *const FogsimScenario,
    operator: *const c_char,
    target_hit_ratio: f64,
    p: f64,
    q: f64,
    unit_sizes: bool,
    seed: u64,
    out: *mut FogsimEvaluation,
) -> FogsimStatus {
    guard(|| {
        if scenario.is_null() || out.is_null() {
            set_error("NULL argument");
            return FogsimStatus::NullArgument;
        }
        let scenario = &(*scenario).inner;
        let wanted = match read_str(operator) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let operator = match wanted {
            Some(op) => op.to_string(),
            None => {
                if scenario.topologies.len() != 1 {
                    set_error("operator is NULL but the scenario has several operators");
                    return FogsimStatus::InvalidArgument;
                }
                scenario.topologies.keys().next().unwrap().clone()
            }
        };
        let Some(topology) = scenario.topologies.get(&operator) else {
            set_error(format!("unknown operator '{operator}'"));
            return FogsimStatus::InvalidArgument;
        };
        if !(0.0..=1.0).contains(&target_hit_ratio) {
            set_error(format!(
                "target_hit_ratio {target_hit_ratio} is not in [0, 1]"
            ));
            return FogsimStatus::InvalidArgument;
        }

        let sweep_opts = SweepOptions {
            eval: EvalOptions {
                target_hit_ratio,
                mark: MarkOptions::default(),
                size_mode: if unit_sizes {
                    SizeMode::Unit
                } else {
                    SizeMode::MeanRequestBytes
                },
                architectures: Level::ALL.to_vec(),
            },
            base_rec_prob: p,
            base_loc_prob: 0.0,
            rec_top_fraction: 0.05,
            local_items_per_cell: 5,
        };
        // Axis Q with value q keeps p at base_rec_prob, covering both knobs.
        let perturbed =
            match perturb_requests(&scenario.requests, SweepAxis::Q, q, &sweep_opts, seed) {
                Ok(requests) => requests,
                Err(e) => {
                    set_error(e.to_string());
                    return FogsimStatus::InvalidArgument;
                }
            };
        let op_requests: Vec<_> = perturbed
            .into_iter()
            .filter(|r| r.operator == operator)
            .collect();
        match evaluate_operator(&op_requests, topology, &sweep_opts.eval) {
            Ok((eval, plans)) => {
                let mut result = FogsimEvaluation {
                    total_size_bytes: [0; 4],
                    total_size_items: [0; 4],
                    price_of_fog: [f64::NAN; 4],
                    mean_distance_km: [f64::NAN; 4],
                    achieved_hit_ratio: eval.achieved_hit_ratio,
                    marked_pairs: eval.marked_pair_count,
                    infeasible: eval.infeasible,
                };
                for (i, (report, plan)) in eval.reports.iter().zip(&plans).enumerate() {
                    result.total_size_bytes[i] = plan.total_size;
                    result.total_size_items[i] = plan.total_items;
                    result.price_of_fog[i] = nan_or(report.price_of_fog.value);
                    result.mean_distance_km[i] = nan_or(report.distance.mean_km);
                }
                *out = result;
                FogsimStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                FogsimStatus::InternalError
            }
        }
    })
}

/// Operator names joined by newlines, as a newly allocated string the
/// caller frees with `fogsim_string_free`. Returns NULL on error.
///
/// # Safety
/// `scenario` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn fogsim_scenario_operators(scenario: *const FogsimScenario) -> *mut c_char {
    if scenario.is_null() {
        set_error("NULL argument");
        return std::ptr::null_mut();
    }
    let names: Vec<&str> = (*scenario)
        .inner
        .topologies
        .keys()
        .map(String::as_str)
        .collect();
    CString::new(names.join("\n")).map_or(std::ptr::null_mut(), CString::into_raw)
}
