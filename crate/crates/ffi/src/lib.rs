//! C ABI over the pgplan planner.
//!
//! Every fallible function returns a [`PgStatus`]; on failure the message is
//! retrievable with [`pg_last_error`] on the same thread. Handles are opaque
//! and must be released with the matching `*_free` function. Strings
//! returned by the library are released with [`pg_string_free`]. Panics are
//! caught at the boundary and reported as [`PgStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pgplan::bench::{run_trial, BenchConfig, SamplerKind, Scenario, TrialRecord};
use pgplan::fgmm::em_fit;
use pgplan::{Dataset, Error, JointConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// Scenario file unreadable or malformed.
    Scenario = 4,
    /// The planner exhausted its budget; the trial handle is still valid.
    NoPath = 5,
    /// The buffer passed in is too small; the required length was written.
    BufferTooSmall = 6,
    /// Collision, model or numeric failure inside the library.
    Failed = 7,
    /// A panic was caught at the boundary.
    Internal = 8,
}

/// Sampling strategy for [`pg_plan`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgSampler {
    Uniform = 0,
    GoalBias = 1,
    Prior = 2,
}

impl From<PgSampler> for SamplerKind {
    fn from(s: PgSampler) -> Self {
        match s {
            PgSampler::Uniform => SamplerKind::Uniform,
            PgSampler::GoalBias => SamplerKind::GoalBias,
            PgSampler::Prior => SamplerKind::Prior,
        }
    }
}

/// Per-stage path metrics of an optimized trial. Fields are zero when the
/// optimizer did not run.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PgStageMetrics {
    pub raw_nodes: usize,
    pub raw_len_rad: f64,
    pub shortcut_nodes: usize,
    pub shortcut_len_rad: f64,
    pub dp_nodes: usize,
    pub refined_joints: usize,
}

/// Loaded scenario: robot, obstacles, queries and parameters.
pub struct PgScenario(Scenario);

/// Outcome of one planning trial.
pub struct PgTrial(TrialRecord);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    // interior NULs would truncate the message; replace them
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Scenario(_) | Error::Io(_) | Error::Json(_) => PgStatus::Scenario,
            Error::DimensionMismatch { .. } | Error::NonFinite { .. } | Error::InvalidParameter(_) => {
                PgStatus::InvalidArgument
            }
            _ => PgStatus::Failed,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: PgStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<PgStatus, Failure>) -> PgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal error: {msg}"));
            PgStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller guarantees p is null or points to a live T
    unsafe { p.as_ref() }.ok_or_else(|| fail(PgStatus::NullPointer, format!("{name} is null")))
}

unsafe fn as_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PgStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: caller guarantees a NUL-terminated string
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| fail(PgStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PgStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: caller guarantees len readable doubles
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

fn write_out<T>(out: *mut T, value: T, name: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(PgStatus::NullPointer, format!("{name} is null")));
    }
    // SAFETY: non-null, caller guarantees it is writable
    unsafe { out.write(value) };
    Ok(())
}

fn into_c_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(PgStatus::Failed, "output contains a NUL byte"))
}

fn config(scn: &Scenario, q: &[f64], name: &str) -> Result<JointConfig, Failure> {
    let dim = scn.scene.dim();
    if q.len() != dim {
        return Err(fail(
            PgStatus::InvalidArgument,
            format!("{name} has {} values, robot has {dim} joints", q.len()),
        ));
    }
    Ok(JointConfig::new(q.to_vec())?)
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread; do not free.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Loads a scenario from a file path or a builtin name.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_scenario_load(source: *const c_char, out: *mut *mut PgScenario) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PgStatus::NullPointer, "out is null"));
        }
        let source = unsafe { as_str(source, "source") }?;
        let scn = Scenario::load(source)?;
        write_out(out, Box::into_raw(Box::new(PgScenario(scn))), "out")?;
        Ok(PgStatus::Ok)
    })
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_scenario_from_json(json: *const c_char, out: *mut *mut PgScenario) -> PgStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(PgStatus::NullPointer, "out is null"));
        }
        let json = unsafe { as_str(json, "json") }?;
        let scn = Scenario::from_json(json)?;
        write_out(out, Box::into_raw(Box::new(PgScenario(scn))), "out")?;
        Ok(PgStatus::Ok)
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `scn` must come from a `pg_scenario_*` constructor and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pg_scenario_free(scn: *mut PgScenario) {
    if !scn.is_null() {
        // SAFETY: produced by Box::into_raw
        drop(unsafe { Box::from_raw(scn) });
    }
}

/// Number of joints across all chains; 0 for null.
///
/// # Safety
/// `scn` must be null or a live scenario.
#[no_mangle]
pub unsafe extern "C" fn pg_scenario_dim(scn: *const PgScenario) -> usize {
    unsafe { scn.as_ref() }.map_or(0, |s| s.0.scene.dim())
}

/// Number of planning queries; 0 for null.
///
/// # Safety
/// `scn` must be null or a live scenario.
#[no_mangle]
pub unsafe extern "C" fn pg_scenario_query_count(scn: *const PgScenario) -> usize {
    unsafe { scn.as_ref() }.map_or(0, |s| s.0.queries.len())
}

/// Writes whether configuration `q` (length `dim`) is collision-free.
///
/// # Safety
/// `scn` must be a live scenario, `q` must hold `dim` doubles and `out_free`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_config_is_free(
    scn: *const PgScenario,
    q: *const f64,
    dim: usize,
    out_free: *mut bool,
) -> PgStatus {
    guard(|| {
        let scn = &unsafe { as_ref(scn, "scenario") }?.0;
        let q = config(scn, unsafe { as_slice(q, dim, "q") }?, "q")?;
        write_out(out_free, scn.scene.config_is_free(&q)?, "out_free")?;
        Ok(PgStatus::Ok)
    })
}

/// Writes whether the straight joint-space motion from `a` to `b` is
/// collision-free when checked every `resolution` radians.
///
/// # Safety
/// `scn` must be a live scenario, `a` and `b` must hold `dim` doubles and
/// `out_free` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_segment_is_free(
    scn: *const PgScenario,
    a: *const f64,
    b: *const f64,
    dim: usize,
    resolution: f64,
    out_free: *mut bool,
) -> PgStatus {
    guard(|| {
        let scn = &unsafe { as_ref(scn, "scenario") }?.0;
        let a = config(scn, unsafe { as_slice(a, dim, "a") }?, "a")?;
        let b = config(scn, unsafe { as_slice(b, dim, "b") }?, "b")?;
        write_out(out_free, scn.scene.segment_is_free(&a, &b, resolution)?, "out_free")?;
        Ok(PgStatus::Ok)
    })
}

/// Plans query `query_index` with the given sampler and seed, then runs the
/// optimizer on success. Writes a trial handle even when no path was found,
/// in which case [`PgStatus::NoPath`] is returned.
///
/// # Safety
/// `scn` must be a live scenario and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_plan(
    scn: *const PgScenario,
    query_index: usize,
    sampler: PgSampler,
    seed: u64,
    optimize: bool,
    out: *mut *mut PgTrial,
) -> PgStatus {
    guard(|| {
        let scn = &unsafe { as_ref(scn, "scenario") }?.0;
        if out.is_null() {
            return Err(fail(PgStatus::NullPointer, "out is null"));
        }
        let query = scn.queries.get(query_index).ok_or_else(|| {
            fail(
                PgStatus::InvalidArgument,
                format!("query index {query_index} out of range ({} queries)", scn.queries.len()),
            )
        })?;
        let config = BenchConfig {
            plan_only: !optimize,
            ..BenchConfig::default()
        };
        let record = run_trial(scn, query, sampler.into(), seed, &config);
        if let Some(err) = &record.error {
            return Err(fail(PgStatus::Failed, err.clone()));
        }
        let success = record.success;
        write_out(out, Box::into_raw(Box::new(PgTrial(record))), "out")?;
        if success {
            Ok(PgStatus::Ok)
        } else {
            set_error("no path found within the iteration budget");
            Ok(PgStatus::NoPath)
        }
    })
}

/// Releases a trial. Null is ignored.
///
/// # Safety
/// `trial` must come from [`pg_plan`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pg_trial_free(trial: *mut PgTrial) {
    if !trial.is_null() {
        // SAFETY: produced by Box::into_raw
        drop(unsafe { Box::from_raw(trial) });
    }
}

/// True when the trial found a path; false for null.
///
/// # Safety
/// `trial` must be null or a live trial.
#[no_mangle]
pub unsafe extern "C" fn pg_trial_success(trial: *const PgTrial) -> bool {
    unsafe { trial.as_ref() }.is_some_and(|t| t.0.success)
}

/// Nodes added to both trees, roots excluded; 0 for null.
///
/// # Safety
/// `trial` must be null or a live trial.
#[no_mangle]
pub unsafe extern "C" fn pg_trial_extended_nodes(trial: *const PgTrial) -> usize {
    unsafe { trial.as_ref() }.map_or(0, |t| t.0.extended_nodes)
}

/// Writes the stage metrics; all zero when the optimizer did not run.
///
/// # Safety
/// `trial` must be a live trial and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_trial_metrics(trial: *const PgTrial, out: *mut PgStageMetrics) -> PgStatus {
    guard(|| {
        let t = &unsafe { as_ref(trial, "trial") }?.0;
        let m = t
            .metrics
            .as_ref()
            .map_or(PgStageMetrics::default(), |m| PgStageMetrics {
                raw_nodes: m.raw_nodes,
                raw_len_rad: m.raw_len_rad,
                shortcut_nodes: m.shortcut_nodes,
                shortcut_len_rad: m.shortcut_len_rad,
                dp_nodes: m.dp_nodes,
                refined_joints: m.refined_joints,
            });
        write_out(out, m, "out")?;
        Ok(PgStatus::Ok)
    })
}

/// Copies the planner path (`optimized` false) or the optimized control
/// polygon (`optimized` true) into `buf` as row-major waypoints. Writes the
/// number of doubles required to `out_len`; when `buf_len` is smaller,
/// nothing is copied and [`PgStatus::BufferTooSmall`] is returned. Pass a
/// null `buf` with `buf_len` 0 to query the size.
///
/// # Safety
/// `trial` must be a live trial, `buf` must hold `buf_len` writable doubles
/// and `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_trial_waypoints(
    trial: *const PgTrial,
    optimized: bool,
    buf: *mut f64,
    buf_len: usize,
    out_len: *mut usize,
) -> PgStatus {
    guard(|| {
        let t = &unsafe { as_ref(trial, "trial") }?.0;
        let path = if optimized { &t.optimized } else { &t.path };
        let values: Vec<f64> = path
            .as_ref()
            .map(|p| {
                p.waypoints()
                    .iter()
                    .flat_map(|q| q.as_slice().iter().copied())
                    .collect()
            })
            .unwrap_or_default();
        write_out(out_len, values.len(), "out_len")?;
        if buf_len < values.len() {
            return Ok(PgStatus::BufferTooSmall);
        }
        if !values.is_empty() {
            if buf.is_null() {
                return Err(fail(PgStatus::NullPointer, "buf is null"));
            }
            // SAFETY: buf holds at least buf_len >= values.len() doubles
            unsafe { ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len()) };
        }
        Ok(PgStatus::Ok)
    })
}

/// Serializes the full trial record as JSON into a new string owned by the
/// caller.
///
/// # Safety
/// `trial` must be a live trial and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_trial_to_json(trial: *const PgTrial, out: *mut *mut c_char) -> PgStatus {
    guard(|| {
        let t = &unsafe { as_ref(trial, "trial") }?.0;
        let json = serde_json::to_string(t).map_err(|e| fail(PgStatus::Failed, e.to_string()))?;
        write_out(out, into_c_string(json)?, "out")?;
        Ok(PgStatus::Ok)
    })
}

/// Fits a `k`-component mixture to `count` points of dimension `dim` stored
/// row-major in `data`, and returns the model as JSON.
///
/// # Safety
/// `data` must hold `count * dim` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_fit_gmm(
    data: *const f64,
    count: usize,
    dim: usize,
    k: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        if dim == 0 {
            return Err(fail(PgStatus::InvalidArgument, "dim must be >= 1"));
        }
        let len = count
            .checked_mul(dim)
            .ok_or_else(|| fail(PgStatus::InvalidArgument, "count * dim overflows"))?;
        let values = unsafe { as_slice(data, len, "data") }?;
        let points = values
            .chunks_exact(dim)
            .map(|c| JointConfig::new(c.to_vec()))
            .collect::<pgplan::Result<Vec<_>>>()?;
        let dataset = Dataset::new(points)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fit = em_fit(
            &dataset,
            k,
            pgplan::fgmm::DEFAULT_EM_TOL,
            pgplan::fgmm::DEFAULT_EM_MAX_ITER,
            &mut rng,
        )?;
        let json = serde_json::to_string(&fit.model).map_err(|e| fail(PgStatus::Failed, e.to_string()))?;
        write_out(out, into_c_string(json)?, "out")?;
        Ok(PgStatus::Ok)
    })
}
