//! C ABI for the `molrelay` simulator.
//!
//! Every fallible function returns an [`MrStatus`]; on failure a message is
//! available from [`mr_last_error`] on the same thread. Specs and results are
//! opaque heap handles released with their `*_free` function. Panics never
//! cross the boundary; they surface as `MR_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use molrelay::channel::{self, LinkParams, ReceiverGeometry};
use molrelay::detectors::{q_function, DetectorKind};
use molrelay::experiment::{
    emit_csv, load_config, parse_config, run_experiment, to_config_string, ExperimentKind, ExperimentOutput,
    ExperimentSpec, SweepHold,
};
use molrelay::montecarlo::Node;
use molrelay::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrStatus {
    Ok = 0,
    NullPointer = 1,
    /// Enum value, index, string encoding or similar argument is invalid.
    InvalidArgument = 2,
    /// A model parameter was rejected by validation.
    InvalidParameter = 3,
    UnusableLink = 4,
    Parse = 5,
    Io = 6,
    /// Accessor does not match the kind of experiment output.
    WrongResultKind = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrExperiment {
    BerVsSnr = 0,
    BerVsSymbolDuration = 1,
    SinglePoint = 2,
    ChannelProfile = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrDetector {
    Fixed = 0,
    DfeThreshold = 1,
    ProposedMl = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrNode {
    A = 0,
    B = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MrSweepHold {
    Q = 0,
    Snr = 1,
}

/// One BER estimate.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrBerRow {
    pub detector: MrDetector,
    pub node: MrNode,
    pub x_value: f64,
    pub ber: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub symbols: u64,
    pub errors: u64,
    pub seed: u64,
}

/// One sample of a continuous channel response.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MrProfileSample {
    pub diffusion: f64,
    pub distance: f64,
    pub t: f64,
    pub h: f64,
}

/// Opaque experiment specification.
pub struct MrSpec(ExperimentSpec);

/// Opaque experiment output.
pub struct MrResults(ExperimentOutput);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(MrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidParameter { .. } | Error::LengthMismatch { .. } => MrStatus::InvalidParameter,
            Error::UnusableLink { .. } | Error::ZeroTaps => MrStatus::UnusableLink,
            Error::Parse { .. } => MrStatus::Parse,
            Error::Io { .. } => MrStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: MrStatus, msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure(status, msg.into()))
}

/// Runs `f`, translating errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MrStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {msg}"));
            MrStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    // SAFETY: caller guarantees `p` is null or a live handle of type T.
    match unsafe { p.as_ref() } {
        Some(r) => Ok(r),
        None => fail(MrStatus::NullPointer, format!("{what} is NULL")),
    }
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    // SAFETY: as for `as_ref`, plus exclusive access for the call.
    match unsafe { p.as_mut() } {
        Some(r) => Ok(r),
        None => fail(MrStatus::NullPointer, format!("{what} is NULL")),
    }
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(MrStatus::NullPointer, format!("{what} is NULL"));
    }
    // SAFETY: caller guarantees a NUL-terminated string.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .or_else(|_| fail(MrStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn experiment_kind(kind: i32) -> Result<ExperimentKind, Failure> {
    Ok(match kind {
        0 => ExperimentKind::BerVsSnr,
        1 => ExperimentKind::BerVsSymbolDuration,
        2 => ExperimentKind::SinglePoint,
        3 => ExperimentKind::ChannelProfile,
        other => return fail(MrStatus::InvalidArgument, format!("unknown experiment kind {other}")),
    })
}

fn detector_kind(d: i32) -> Result<DetectorKind, Failure> {
    Ok(match d {
        0 => DetectorKind::Fixed,
        1 => DetectorKind::DfeThreshold,
        2 => DetectorKind::ProposedMl,
        other => return fail(MrStatus::InvalidArgument, format!("unknown detector {other}")),
    })
}

fn detector_code(d: DetectorKind) -> MrDetector {
    match d {
        DetectorKind::Fixed => MrDetector::Fixed,
        DetectorKind::DfeThreshold => MrDetector::DfeThreshold,
        DetectorKind::ProposedMl => MrDetector::ProposedMl,
    }
}

fn boxed_spec(spec: ExperimentSpec, out: *mut *mut MrSpec) {
    // SAFETY: `out` was checked non-null by the caller.
    unsafe { *out = Box::into_raw(Box::new(MrSpec(spec))) };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn mr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a spec for `kind` (an `MrExperiment` value) with every default set.
///
/// # Safety
/// `out` must be a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_new(kind: i32, out: *mut *mut MrSpec) -> MrStatus {
    guard(|| {
        if out.is_null() {
            return fail(MrStatus::NullPointer, "out is NULL");
        }
        boxed_spec(ExperimentSpec::new(experiment_kind(kind)?), out);
        Ok(())
    })
}

/// Loads a spec from a configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_load(path: *const c_char, out: *mut *mut MrSpec) -> MrStatus {
    guard(|| {
        let path = unsafe { as_str(path, "path") }?;
        if out.is_null() {
            return fail(MrStatus::NullPointer, "out is NULL");
        }
        boxed_spec(load_config(Path::new(path))?, out);
        Ok(())
    })
}

/// Parses a spec from configuration text.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_parse(text: *const c_char, out: *mut *mut MrSpec) -> MrStatus {
    guard(|| {
        let text = unsafe { as_str(text, "text") }?;
        if out.is_null() {
            return fail(MrStatus::NullPointer, "out is NULL");
        }
        boxed_spec(parse_config(text, "<text>")?, out);
        Ok(())
    })
}

/// Releases a spec. NULL is ignored.
///
/// # Safety
/// `spec` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_free(spec: *mut MrSpec) {
    if !spec.is_null() {
        // SAFETY: produced by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(spec) });
    }
}

/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_seed(spec: *mut MrSpec, seed: u64) -> MrStatus {
    guard(|| {
        unsafe { as_mut(spec, "spec") }?.0.system.seed = seed;
        Ok(())
    })
}

/// Symbols simulated per point.
///
/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_symbols(spec: *mut MrSpec, symbols: usize) -> MrStatus {
    guard(|| {
        unsafe { as_mut(spec, "spec") }?.0.system.num_symbols = symbols;
        Ok(())
    })
}

/// Sweep range and point count (dB for SNR sweeps, seconds for Ts sweeps).
///
/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_sweep(spec: *mut MrSpec, start: f64, stop: f64, points: usize) -> MrStatus {
    guard(|| {
        let s = &mut unsafe { as_mut(spec, "spec") }?.0.sweep;
        s.start = start;
        s.stop = stop;
        s.points = points;
        Ok(())
    })
}

/// What a symbol-duration sweep holds fixed (an `MrSweepHold` value).
///
/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_sweep_hold(spec: *mut MrSpec, hold: i32) -> MrStatus {
    guard(|| {
        let spec = unsafe { as_mut(spec, "spec") }?;
        spec.0.sweep.hold = match hold {
            0 => SweepHold::Q,
            1 => SweepHold::Snr,
            other => return fail(MrStatus::InvalidArgument, format!("unknown sweep hold {other}")),
        };
        Ok(())
    })
}

/// Operating SNR in dB; NaN clears it.
///
/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_snr_db(spec: *mut MrSpec, snr_db: f64) -> MrStatus {
    guard(|| {
        unsafe { as_mut(spec, "spec") }?.0.snr_db = (!snr_db.is_nan()).then_some(snr_db);
        Ok(())
    })
}

/// Symbol duration in seconds and number of taps.
///
/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_channel(spec: *mut MrSpec, symbol_duration: f64, taps: usize) -> MrStatus {
    guard(|| {
        let sys = &mut unsafe { as_mut(spec, "spec") }?.0.system;
        sys.symbol_duration = symbol_duration;
        sys.taps = taps;
        Ok(())
    })
}

/// Detectors to evaluate, as `MrDetector` values in output order.
///
/// # Safety
/// `spec` must be NULL or a live handle; `detectors` must point to `len` values.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_set_detectors(spec: *mut MrSpec, detectors: *const i32, len: usize) -> MrStatus {
    guard(|| {
        let spec = unsafe { as_mut(spec, "spec") }?;
        if detectors.is_null() && len > 0 {
            return fail(MrStatus::NullPointer, "detectors is NULL");
        }
        let raw = if len == 0 {
            &[][..]
        } else {
            // SAFETY: caller guarantees `len` readable values.
            unsafe { std::slice::from_raw_parts(detectors, len) }
        };
        spec.0.detectors = raw.iter().map(|d| detector_kind(*d)).collect::<Result<_, _>>()?;
        Ok(())
    })
}

/// Checks every parameter without running anything.
///
/// # Safety
/// `spec` must be NULL or a live spec handle.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_validate(spec: *const MrSpec) -> MrStatus {
    guard(|| Ok(unsafe { as_ref(spec, "spec") }?.0.validate()?))
}

/// Normalized configuration text; release with `mr_string_free`.
///
/// # Safety
/// `spec` must be NULL or a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_spec_to_string(spec: *const MrSpec, out: *mut *mut c_char) -> MrStatus {
    guard(|| {
        let spec = unsafe { as_ref(spec, "spec") }?;
        if out.is_null() {
            return fail(MrStatus::NullPointer, "out is NULL");
        }
        let text = CString::new(to_config_string(&spec.0)).expect("config text has no NULs");
        // SAFETY: checked non-null above.
        unsafe { *out = text.into_raw() };
        Ok(())
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must be NULL or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by CString::into_raw in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Runs the experiment. `threads == 0` uses every core.
///
/// # Safety
/// `spec` must be NULL or a live handle and `out` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_run(spec: *const MrSpec, threads: usize, out: *mut *mut MrResults) -> MrStatus {
    guard(|| {
        let spec = unsafe { as_ref(spec, "spec") }?;
        if out.is_null() {
            return fail(MrStatus::NullPointer, "out is NULL");
        }
        let results = run_experiment(&spec.0, threads)?;
        // SAFETY: checked non-null above.
        unsafe { *out = Box::into_raw(Box::new(MrResults(results))) };
        Ok(())
    })
}

/// Releases results. NULL is ignored.
///
/// # Safety
/// `results` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn mr_results_free(results: *mut MrResults) {
    if !results.is_null() {
        // SAFETY: produced by Box::into_raw in this crate.
        drop(unsafe { Box::from_raw(results) });
    }
}

/// Number of rows (BER rows or profile samples); 0 for NULL.
///
/// # Safety
/// `results` must be NULL or a live results handle.
#[no_mangle]
pub unsafe extern "C" fn mr_results_len(results: *const MrResults) -> usize {
    // SAFETY: caller contract.
    match unsafe { results.as_ref() } {
        Some(MrResults(ExperimentOutput::Ber { rows, .. })) => rows.len(),
        Some(MrResults(ExperimentOutput::Profile(samples))) => samples.len(),
        None => 0,
    }
}

/// Copies BER row `index` into `row`.
///
/// # Safety
/// `results` must be NULL or a live handle and `row` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_results_ber_row(results: *const MrResults, index: usize, row: *mut MrBerRow) -> MrStatus {
    guard(|| {
        let results = unsafe { as_ref(results, "results") }?;
        let row = unsafe { as_mut(row, "row") }?;
        let ExperimentOutput::Ber { rows, .. } = &results.0 else {
            return fail(
                MrStatus::WrongResultKind,
                "results hold a channel profile, not BER rows",
            );
        };
        let Some(r) = rows.get(index) else {
            return fail(
                MrStatus::InvalidArgument,
                format!("row {index} out of range ({})", rows.len()),
            );
        };
        *row = MrBerRow {
            detector: detector_code(r.detector),
            node: match r.node {
                Node::A => MrNode::A,
                Node::B => MrNode::B,
            },
            x_value: r.x_value,
            ber: r.estimate.ber,
            ci_low: r.estimate.ci_low,
            ci_high: r.estimate.ci_high,
            symbols: r.estimate.symbols,
            errors: r.estimate.errors,
            seed: r.seed,
        };
        Ok(())
    })
}

/// Copies profile sample `index` into `sample`.
///
/// # Safety
/// `results` must be NULL or a live handle and `sample` valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_results_profile_sample(
    results: *const MrResults,
    index: usize,
    sample: *mut MrProfileSample,
) -> MrStatus {
    guard(|| {
        let results = unsafe { as_ref(results, "results") }?;
        let sample = unsafe { as_mut(sample, "sample") }?;
        let ExperimentOutput::Profile(samples) = &results.0 else {
            return fail(
                MrStatus::WrongResultKind,
                "results hold BER rows, not a channel profile",
            );
        };
        let Some(s) = samples.get(index) else {
            return fail(
                MrStatus::InvalidArgument,
                format!("sample {index} out of range ({})", samples.len()),
            );
        };
        *sample = MrProfileSample {
            diffusion: s.diffusion,
            distance: s.distance,
            t: s.t,
            h: s.h,
        };
        Ok(())
    })
}

/// Writes results as CSV, identical to the command-line output.
///
/// # Safety
/// `results` must be NULL or a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mr_results_write_csv(results: *const MrResults, path: *const c_char) -> MrStatus {
    guard(|| {
        let results = unsafe { as_ref(results, "results") }?;
        let path = unsafe { as_str(path, "path") }?;
        Ok(emit_csv(&results.0, Path::new(path))?)
    })
}

/// Standard normal upper-tail probability.
#[no_mangle]
pub extern "C" fn mr_q_function(x: f64) -> f64 {
    q_function(x)
}

/// Expected concentration at distance `d` and time `t` after releasing `q`
/// molecules with diffusion coefficient `diffusion`.
///
/// # Safety
/// `out` must be valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_fick_response(q: f64, diffusion: f64, d: f64, t: f64, out: *mut f64) -> MrStatus {
    guard(|| {
        let out = unsafe { as_mut(out, "out") }?;
        if !(t.is_finite() && t > 0.0) {
            return fail(
                MrStatus::InvalidParameter,
                "invalid parameter `t`: must be finite and > 0",
            );
        }
        let p = LinkParams::new(q, diffusion, d, t, 1)?;
        *out = channel::fick_response(&p, t);
        Ok(())
    })
}

/// SNR (linear) of one link sampled with `taps` taps at symbol duration `ts`,
/// seen by a receiver of radius `radius`.
///
/// # Safety
/// `out` must be valid writable storage.
#[no_mangle]
pub unsafe extern "C" fn mr_link_snr(
    q: f64,
    diffusion: f64,
    d: f64,
    ts: f64,
    taps: usize,
    radius: f64,
    out: *mut f64,
) -> MrStatus {
    guard(|| {
        let out = unsafe { as_mut(out, "out") }?;
        let p = LinkParams::new(q, diffusion, d, ts, taps)?;
        let geom = ReceiverGeometry::new(radius)?;
        *out = channel::link_snr(&channel::sample_taps(&p)?, &geom)?;
        Ok(())
    })
}
