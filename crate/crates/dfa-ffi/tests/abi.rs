//! Exercises the exported C ABI exactly as a foreign caller would: through
//! raw pointers, status codes, and the thread-local error message, never
//! through the crate's internal helpers.

use std::ffi::{c_char, CStr, CString};
use std::ptr;

use dfa_ffi::{
    dfa_exact_expected_slots, dfa_last_error_message, dfa_phase_efficiency,
    dfa_posterior_traffic, dfa_simulation_free, dfa_simulation_new, dfa_simulation_run_batch,
    dfa_simulation_run_single, dfa_simulation_set_estimator, dfa_simulation_set_initial_frame,
    dfa_simulation_set_population, dfa_simulation_set_runs, dfa_simulation_set_seed,
    dfa_simulation_run_batch as run_batch, dfa_traffic_recursion_efficiency, dfa_version,
    DfaBatchSummary, DfaRunSummary, DfaSimulation, DfaStatus,
};

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

/// Fetch the thread-local error message through the public entry point.
fn last_error() -> String {
    let needed = unsafe { dfa_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; needed];
    let len = unsafe { dfa_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    assert_eq!(len, needed);
    String::from_utf8_lossy(&buf[..len - 1]).into_owned()
}

/// A configured handle the tests share; freed by each test.
unsafe fn handle(n: u64, estimator: &str, r0: u64, seed: u64, runs: u64) -> *mut DfaSimulation {
    let sim = dfa_simulation_new();
    assert!(!sim.is_null());
    let spec = CString::new(estimator).unwrap();
    unsafe {
        assert_eq!(dfa_simulation_set_population(sim, n), DfaStatus::Ok);
        assert_eq!(dfa_simulation_set_estimator(sim, spec.as_ptr()), DfaStatus::Ok);
        assert_eq!(dfa_simulation_set_initial_frame(sim, r0), DfaStatus::Ok);
        assert_eq!(dfa_simulation_set_seed(sim, seed), DfaStatus::Ok);
        assert_eq!(dfa_simulation_set_runs(sim, runs), DfaStatus::Ok);
    }
    sim
}

// ---------------------------------------------------------------------------
// Lifecycle and null handling
// ---------------------------------------------------------------------------

#[test]
fn test_null_handles_are_rejected_not_dereferenced() {
    let mut batch = DfaBatchSummary {
        mean_efficiency: 0.0,
        efficiency_ci_half_width: 0.0,
        mean_slots: 0.0,
        slots_ci_half_width: 0.0,
        completed_runs: 0,
        non_terminating_runs: 0,
    };
    unsafe {
        assert_eq!(
            dfa_simulation_set_population(ptr::null_mut(), 5),
            DfaStatus::NullPointer
        );
        assert_eq!(run_batch(ptr::null(), &mut batch), DfaStatus::NullPointer);
        let sim = handle(10, "schoute", 1, 1, 10);
        assert_eq!(dfa_simulation_run_batch(sim, ptr::null_mut()), DfaStatus::NullPointer);
        assert_eq!(
            dfa_simulation_set_estimator(sim, ptr::null()),
            DfaStatus::NullPointer
        );
        dfa_simulation_free(sim);
        // Freeing null must be a harmless no-op.
        dfa_simulation_free(ptr::null_mut());
    }
}

#[test]
fn test_version_matches_package() {
    let version = unsafe { CStr::from_ptr(dfa_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

// ---------------------------------------------------------------------------
// Error reporting
// ---------------------------------------------------------------------------

#[test]
fn test_bad_estimator_sets_status_and_message() {
    let sim = unsafe { handle(10, "schoute", 1, 1, 10) };
    let bogus = CString::new("frobnicate").unwrap();
    unsafe {
        assert_eq!(
            dfa_simulation_set_estimator(sim, bogus.as_ptr()),
            DfaStatus::InvalidArgument
        );
    }
    let message = last_error();
    assert!(message.contains("frobnicate"), "message was {message:?}");

    // The next successful call clears the message.
    unsafe {
        assert_eq!(dfa_simulation_set_seed(sim, 2), DfaStatus::Ok);
        dfa_simulation_free(sim);
    }
    assert!(last_error().is_empty());
}

#[test]
fn test_non_utf8_estimator_reports_invalid_utf8() {
    let sim = unsafe { handle(10, "schoute", 1, 1, 10) };
    let bytes = CString::new(vec![0xffu8, 0xfe]).unwrap();
    unsafe {
        assert_eq!(
            dfa_simulation_set_estimator(sim, bytes.as_ptr()),
            DfaStatus::InvalidUtf8
        );
        dfa_simulation_free(sim);
    }
    assert!(last_error().contains("UTF-8"));
}

#[test]
fn test_zero_initial_frame_is_invalid() {
    let sim = unsafe { handle(10, "schoute", 1, 1, 10) };
    unsafe {
        assert_eq!(dfa_simulation_set_initial_frame(sim, 0), DfaStatus::InvalidArgument);
        dfa_simulation_free(sim);
    }
    assert!(last_error().contains("r0"));
}

#[test]
fn test_single_run_batch_is_rejected_with_message() {
    let sim = unsafe { handle(10, "schoute", 1, 1, 1) };
    let mut out = DfaBatchSummary {
        mean_efficiency: 0.0,
        efficiency_ci_half_width: 0.0,
        mean_slots: 0.0,
        slots_ci_half_width: 0.0,
        completed_runs: 0,
        non_terminating_runs: 0,
    };
    unsafe {
        assert_eq!(dfa_simulation_run_batch(sim, &mut out), DfaStatus::InvalidArgument);
        dfa_simulation_free(sim);
    }
    assert!(!last_error().is_empty());
}

// ---------------------------------------------------------------------------
// Numeric agreement with the core library
// ---------------------------------------------------------------------------

#[test]
fn test_batch_matches_core_library_bit_for_bit() {
    let sim = unsafe { handle(200, "ae2(2)", 1, 42, 500) };
    let mut out = DfaBatchSummary {
        mean_efficiency: 0.0,
        efficiency_ci_half_width: 0.0,
        mean_slots: 0.0,
        slots_ci_half_width: 0.0,
        completed_runs: 0,
        non_terminating_runs: 0,
    };
    unsafe {
        assert_eq!(dfa_simulation_run_batch(sim, &mut out), DfaStatus::Ok);
        dfa_simulation_free(sim);
    }

    let core = dfa_core::sim::batch_efficiency(&dfa_core::sim::SimConfig {
        n: 200,
        estimator: dfa_core::estimators::EstimatorSpec::Ae2 { b: 2.0 },
        r0: 1,
        seed: 42,
        runs: 500,
        ..dfa_core::sim::SimConfig::default()
    })
    .expect("core batch");

    assert_eq!(out.mean_efficiency.to_bits(), core.mean_efficiency.to_bits());
    assert_eq!(out.mean_slots.to_bits(), core.mean_slots.to_bits());
    assert_eq!(out.completed_runs, core.runs);
    assert_eq!(out.non_terminating_runs, core.non_terminating);
}

#[test]
fn test_single_run_terminates_and_accounts_slots() {
    let sim = unsafe { handle(50, "schoute", 1, 7, 10) };
    let mut out = DfaRunSummary { total_slots: 0, frames: 0, efficiency: 0.0, terminated: false };
    unsafe {
        assert_eq!(dfa_simulation_run_single(sim, &mut out), DfaStatus::Ok);
        dfa_simulation_free(sim);
    }
    assert!(out.terminated);
    assert!(out.total_slots >= 50);
    assert!(out.frames >= 1);
    assert!((out.efficiency - 50.0 / out.total_slots as f64).abs() < 1e-12);
}

#[test]
fn test_exact_expected_slots_round_trip() {
    let spec = CString::new("schoute").unwrap();
    let mut slots = 0.0f64;
    unsafe {
        assert_eq!(
            dfa_exact_expected_slots(2, spec.as_ptr(), 1, &mut slots),
            DfaStatus::Ok
        );
    }
    assert!((slots - 5.0).abs() < 1e-9, "two stations from one slot take 5 slots, got {slots}");

    // Stateful estimators have no exact recursion and must be rejected.
    let stateful = CString::new("ae2(2)").unwrap();
    unsafe {
        assert_eq!(
            dfa_exact_expected_slots(2, stateful.as_ptr(), 1, &mut slots),
            DfaStatus::InvalidArgument
        );
    }
    assert!(last_error().contains("memoryless"));
}

#[test]
fn test_analytic_entry_points_hit_reference_values() {
    let mut value = 0.0f64;
    unsafe {
        assert_eq!(dfa_phase_efficiency(40.0, &mut value), DfaStatus::Ok);
        assert!((value - 0.31122).abs() < 2e-4);

        assert_eq!(dfa_traffic_recursion_efficiency(1.0, &mut value), DfaStatus::Ok);
        assert!((value - (-1.0f64).exp()).abs() < 1e-6);

        assert_eq!(dfa_posterior_traffic(1, &mut value), DfaStatus::Ok);
        assert!((value - 1.4).abs() < 0.05);

        // Out-of-range arguments surface as argument errors, not crashes.
        assert_eq!(dfa_phase_efficiency(2.0, &mut value), DfaStatus::InvalidArgument);
        assert_eq!(dfa_posterior_traffic(3, &mut value), DfaStatus::InvalidArgument);
    }
}
