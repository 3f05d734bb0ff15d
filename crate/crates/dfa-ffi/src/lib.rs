//! C ABI over the estimation laboratory: opaque simulation handles,
//! status-code error reporting, and a handful of direct analytic entry
//! points.
//!
//! Conventions, in the order a binding author needs them:
//!
//! - Every fallible function returns a [`DfaStatus`]; `DFA_STATUS_OK` is 0.
//! - On any non-OK status a human-readable message is stored in
//!   thread-local storage; fetch it with [`dfa_last_error_message`].
//! - Out-parameters are written only when the call returns OK.
//! - Handles from `dfa_simulation_new` are freed exclusively by
//!   `dfa_simulation_free`; all other pointers are borrowed for the call.
//! - No call keeps internal references to caller memory after returning.
//!
//! The companion header `include/dfa.h` is generated from this file at
//! build time; `examples/demo.c` shows the full round trip from C.

// Pointer contracts are spelled out once in the module docs above and on
// each function's own doc text (which also lands in the generated header);
// repeating a `# Safety` section on all of them would only bloat dfa.h.
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dfa_core::analytic::{
    exact_expected_length, phase_efficiency, posterior_traffic, schoute_traffic_recursion,
    MemorylessRule,
};
use dfa_core::estimators::EstimatorSpec;
use dfa_core::sim::{batch_efficiency, run_identification, SimConfig};
use dfa_core::Error;

/// Ramp exponent assumed when an estimator spec string says `ae2` without
/// an argument; mirrors the command-line default.
const DEFAULT_RAMP_EXPONENT: f64 = 2.0;

/// Convergence threshold used by the analytic traffic recursion.
const RECURSION_EPS: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Status codes and error text
// ---------------------------------------------------------------------------

/// Result of every fallible call. Zero is success; anything else leaves a
/// message readable through `dfa_last_error_message`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfaStatus {
    /// The call succeeded and out-parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// An argument failed validation (range, grammar, consistency).
    InvalidArgument = 2,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 3,
    /// The computation itself failed (no convergence, overflow).
    RunFailed = 4,
    /// An internal invariant was violated; the library state is still
    /// consistent, but the call did nothing.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> DfaStatus {
    match err {
        Error::NoConvergence { .. } | Error::NumericOverflow(_) => DfaStatus::RunFailed,
        _ => DfaStatus::InvalidArgument,
    }
}

/// Record `err` and return its status code.
fn fail(err: &Error) -> DfaStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

/// Run an FFI body, converting panics into `DFA_STATUS_PANIC` instead of
/// unwinding across the ABI boundary.
fn guarded(body: impl FnOnce() -> DfaStatus) -> DfaStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => {
            set_last_error("internal panic");
            DfaStatus::Panic
        }
    }
}

/// Copy the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncated to `cap` bytes) and return the byte length
/// of the full message including its NUL terminator. Call with a null
/// `buf` or zero `cap` to query the required capacity. An empty message
/// (length 1) means the last call on this thread succeeded.
#[no_mangle]
pub unsafe extern "C" fn dfa_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes_with_nul();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap);
            // SAFETY: caller promises `buf` points to at least `cap`
            // writable bytes; `n <= cap` by construction.
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// Version of the library as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dfa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Simulation handle
// ---------------------------------------------------------------------------

/// Opaque Monte Carlo experiment description. Create with
/// `dfa_simulation_new`, configure with the setters, run with
/// `dfa_simulation_run_batch` or `dfa_simulation_run_single`, release with
/// `dfa_simulation_free`. Handles are cheap; they hold no OS resources.
pub struct DfaSimulation {
    config: SimConfig,
}

/// Aggregate result of a batch of independent runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfaBatchSummary {
    /// Mean of per-run efficiency (population / slots used).
    pub mean_efficiency: f64,
    /// Half-width of the 95% confidence interval on the efficiency mean.
    pub efficiency_ci_half_width: f64,
    /// Mean number of slots to resolve the whole population.
    pub mean_slots: f64,
    /// Half-width of the 95% confidence interval on the slot mean.
    pub slots_ci_half_width: f64,
    /// Runs that resolved every station within the frame cap.
    pub completed_runs: u64,
    /// Runs cut off by the frame cap (excluded from the means).
    pub non_terminating_runs: u64,
}

/// Result of one simulated identification round.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DfaRunSummary {
    /// Slots executed until the backlog reached zero.
    pub total_slots: u64,
    /// Frames executed.
    pub frames: u64,
    /// Population / total_slots.
    pub efficiency: f64,
    /// False when the run hit the frame cap before resolving everyone.
    pub terminated: bool,
}

/// Allocate a simulation handle with library defaults (population 0,
/// full-frame estimator, initial frame 1, seed 0, 2000 runs). Returns null
/// only on allocation failure. Free with `dfa_simulation_free`.
#[no_mangle]
pub extern "C" fn dfa_simulation_new() -> *mut DfaSimulation {
    Box::into_raw(Box::new(DfaSimulation { config: SimConfig::default() }))
}

/// Release a handle created by `dfa_simulation_new`. Null is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_free(sim: *mut DfaSimulation) {
    if !sim.is_null() {
        // SAFETY: the handle came from Box::into_raw in dfa_simulation_new
        // and is dropped exactly once (caller contract).
        drop(unsafe { Box::from_raw(sim) });
    }
}

/// Set the number of stations to resolve.
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_set_population(
    sim: *mut DfaSimulation,
    population: u64,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_mut() }) else { return DfaStatus::NullPointer };
        sim.config.n = population;
        DfaStatus::Ok
    })
}

/// Select the backlog estimator from its textual spec: `schoute`,
/// `lower_bound`, `ae2`, `ae2(b)`, `ae2_opt`, `ae2_opt(m1,m2,...)`,
/// `ae2_pow2` or `perfect`.
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_set_estimator(
    sim: *mut DfaSimulation,
    spec: *const c_char,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_mut() }) else { return DfaStatus::NullPointer };
        if spec.is_null() {
            return DfaStatus::NullPointer;
        }
        // SAFETY: caller promises `spec` is a NUL-terminated string.
        let text = match unsafe { CStr::from_ptr(spec) }.to_str() {
            Ok(text) => text,
            Err(_) => {
                set_last_error("estimator spec is not valid UTF-8");
                return DfaStatus::InvalidUtf8;
            }
        };
        match EstimatorSpec::parse(text, DEFAULT_RAMP_EXPONENT) {
            Ok(parsed) => {
                sim.config.estimator = parsed;
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Set the length of the first announced frame (must be >= 1).
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_set_initial_frame(
    sim: *mut DfaSimulation,
    r0: u64,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_mut() }) else { return DfaStatus::NullPointer };
        if r0 == 0 {
            return fail(&Error::InvalidConfig("initial frame length r0 must be >= 1".into()));
        }
        sim.config.r0 = r0;
        DfaStatus::Ok
    })
}

/// Set the master seed. Runs are decorrelated streams of this seed, so a
/// batch is reproducible bit for bit given (population, estimator, r0,
/// seed, runs).
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_set_seed(
    sim: *mut DfaSimulation,
    seed: u64,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_mut() }) else { return DfaStatus::NullPointer };
        sim.config.seed = seed;
        DfaStatus::Ok
    })
}

/// Set the number of independent runs per batch (must be >= 2).
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_set_runs(
    sim: *mut DfaSimulation,
    runs: u64,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_mut() }) else { return DfaStatus::NullPointer };
        sim.config.runs = runs;
        DfaStatus::Ok
    })
}

/// Run the configured batch and write its summary into `out`.
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_run_batch(
    sim: *const DfaSimulation,
    out: *mut DfaBatchSummary,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_ref() }) else { return DfaStatus::NullPointer };
        if out.is_null() {
            return DfaStatus::NullPointer;
        }
        match batch_efficiency(&sim.config) {
            Ok(point) => {
                // SAFETY: `out` was null-checked and points to caller
                // storage for one DfaBatchSummary.
                unsafe {
                    *out = DfaBatchSummary {
                        mean_efficiency: point.mean_efficiency,
                        efficiency_ci_half_width: point.ci_half_width,
                        mean_slots: point.mean_slots,
                        slots_ci_half_width: point.slots_ci_half_width,
                        completed_runs: point.runs,
                        non_terminating_runs: point.non_terminating,
                    };
                }
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Run a single identification round (stream 0 of the seed) and write its
/// summary into `out`.
#[no_mangle]
pub unsafe extern "C" fn dfa_simulation_run_single(
    sim: *const DfaSimulation,
    out: *mut DfaRunSummary,
) -> DfaStatus {
    guarded(|| {
        // SAFETY: caller passes a live handle or null; null is rejected.
        let Some(sim) = (unsafe { sim.as_ref() }) else { return DfaStatus::NullPointer };
        if out.is_null() {
            return DfaStatus::NullPointer;
        }
        match run_identification(&sim.config) {
            Ok(run) => {
                // SAFETY: `out` was null-checked and points to caller
                // storage for one DfaRunSummary.
                unsafe {
                    *out = DfaRunSummary {
                        total_slots: run.total_slots,
                        frames: run.frames,
                        efficiency: run.efficiency,
                        terminated: run.terminated,
                    };
                }
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

// ---------------------------------------------------------------------------
// Direct analytic entry points
// ---------------------------------------------------------------------------

/// Exact expected number of slots to resolve `population` stations from an
/// initial frame of `r0` slots under a memoryless estimator (`schoute`,
/// `lower_bound` or `perfect`). Stateful estimators are rejected.
#[no_mangle]
pub unsafe extern "C" fn dfa_exact_expected_slots(
    population: u64,
    estimator: *const c_char,
    r0: u64,
    out: *mut f64,
) -> DfaStatus {
    guarded(|| {
        if estimator.is_null() || out.is_null() {
            return DfaStatus::NullPointer;
        }
        // SAFETY: caller promises `estimator` is a NUL-terminated string.
        let text = match unsafe { CStr::from_ptr(estimator) }.to_str() {
            Ok(text) => text,
            Err(_) => {
                set_last_error("estimator spec is not valid UTF-8");
                return DfaStatus::InvalidUtf8;
            }
        };
        let result = EstimatorSpec::parse(text, DEFAULT_RAMP_EXPONENT)
            .and_then(|spec| MemorylessRule::try_from(&spec))
            .and_then(|rule| exact_expected_length(population, rule, r0));
        match result {
            Ok(slots) => {
                // SAFETY: `out` was null-checked above.
                unsafe { *out = slots };
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Asymptotic efficiency of the full-frame policy started at traffic
/// `k_u` (stations per slot), from the three-phase decomposition.
/// Requires `k_u >= 10`.
#[no_mangle]
pub unsafe extern "C" fn dfa_phase_efficiency(k_u: f64, out: *mut f64) -> DfaStatus {
    guarded(|| {
        if out.is_null() {
            return DfaStatus::NullPointer;
        }
        match phase_efficiency(k_u) {
            Ok(breakdown) => {
                // SAFETY: `out` was null-checked above.
                unsafe { *out = breakdown.efficiency };
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Efficiency of the deterministic mean-value traffic recursion started
/// at traffic `k0 >= 1`.
#[no_mangle]
pub unsafe extern "C" fn dfa_traffic_recursion_efficiency(
    k0: f64,
    out: *mut f64,
) -> DfaStatus {
    guarded(|| {
        if out.is_null() {
            return DfaStatus::NullPointer;
        }
        match schoute_traffic_recursion(k0, RECURSION_EPS) {
            Ok(outcome) => {
                // SAFETY: `out` was null-checked above.
                unsafe { *out = outcome.efficiency };
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

/// Most likely per-slot traffic at the end of a doubling approach phase
/// whose probes each executed `frame_width` slots (1 or 2) and all
/// collided until the last.
#[no_mangle]
pub unsafe extern "C" fn dfa_posterior_traffic(
    frame_width: u32,
    out: *mut f64,
) -> DfaStatus {
    guarded(|| {
        if out.is_null() {
            return DfaStatus::NullPointer;
        }
        match posterior_traffic(frame_width) {
            Ok(traffic) => {
                // SAFETY: `out` was null-checked above.
                unsafe { *out = traffic };
                DfaStatus::Ok
            }
            Err(err) => fail(&err),
        }
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
