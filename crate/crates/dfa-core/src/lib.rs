//! Dynamic Frame Aloha backlog-estimation laboratory.
//!
//! Dynamic Frame Aloha (DFA) resolves contention among `n` stations (RFID
//! tags, for instance) by running successive frames of time slots. Every
//! backlogged station picks one slot of the announced frame uniformly at
//! random; slots then come back empty, successful (exactly one station) or
//! collided (two or more). After each frame the reader re-estimates the
//! backlog and sizes the next frame accordingly. Throughput is governed by
//! that estimate: with a frame equal to the true backlog the frame traffic
//! is one station per slot and the per-slot success probability approaches
//! `1/e`, the ceiling for any slotted-Aloha discipline.
//!
//! The crate bundles the three toolkits needed to study such estimators:
//!
//! * [`occupancy`] — exact frame-outcome combinatorics: the joint law of
//!   (successes, collisions) for `n` stations in `r` slots, plus Poisson
//!   slot probabilities for the large-frame regime.
//! * [`estimators`] — the backlog estimators themselves: Schoute's
//!   collision multiplier, the collision lower bound, the frame-restart
//!   family (`ae2`, its optimized multiplier-sequence variant, and a
//!   power-of-two-constrained variant), and a perfect-knowledge benchmark.
//! * [`analytic`] — expected-length recursions and asymptotics: exact
//!   expected identification length for memoryless rules, traffic
//!   recursions in expected-value space, a three-phase efficiency
//!   decomposition, posterior-traffic maximization, and a deterministic
//!   search over estimate-multiplier sequences.
//! * [`sim`] — reproducible Monte Carlo: seeded, parallel batch runs with
//!   per-run substreams, efficiency aggregation and frame-by-frame mean
//!   trajectories.
//! * [`cli`] — the `dfa` command-line front end (`table1`, `sweep`,
//!   `trajectory`, `ktrace`, `search`) emitting deterministic CSV/JSON.
//!
//! # Example
//!
//! ```
//! use dfa_core::analytic::{exact_expected_length, MemorylessRule};
//! use dfa_core::sim::{batch_efficiency, SimConfig};
//! use dfa_core::estimators::EstimatorSpec;
//!
//! // Two stations, first frame of two slots: the exact expected number of
//! // slots until both are identified is 4.
//! let exact = exact_expected_length(2, MemorylessRule::Schoute, 2).unwrap();
//! assert!((exact - 4.0).abs() < 1e-9);
//!
//! // The seeded simulation agrees.
//! let cfg = SimConfig {
//!     n: 2,
//!     r0: 2,
//!     estimator: EstimatorSpec::Schoute,
//!     seed: 7,
//!     runs: 4000,
//!     ..SimConfig::default()
//! };
//! let point = batch_efficiency(&cfg).unwrap();
//! assert!((point.mean_slots - exact).abs() < 0.1);
//! ```

pub mod analytic;
pub mod cli;
pub mod estimators;
pub mod occupancy;
pub mod sim;

use thiserror::Error;

/// `1/e`, the per-slot success probability at unit traffic and the
/// asymptotic efficiency ceiling of the protocol family.
pub const INV_E: f64 = 1.0 / std::f64::consts::E;

/// Schoute's collision multiplier `H = (1 - 1/e) / (1 - 2/e) ≈ 2.3922`:
/// the expected number of stations per collided slot at unit traffic.
pub const SCHOUTE_H: f64 = (1.0 - INV_E) / (1.0 - 2.0 * INV_E);

/// Growth factor of the backlog estimate during an all-collision phase,
/// `H' = H / (1 - 1/e) = 1 / (1 - 2/e) ≈ 3.7854`.
pub const SCHOUTE_H_PRIME: f64 = 1.0 / (1.0 - 2.0 * INV_E);

/// Errors reported by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A frame must contain at least one slot.
    #[error("frame must contain at least one slot")]
    EmptyFrame,

    /// Exhaustive enumeration was asked for a state space that is too
    /// large to walk (`r^n` assignments).
    #[error("brute-force enumeration of {r}^{n} slot assignments exceeds the {max} cap")]
    EnumerationTooLarge { n: u64, r: u64, max: u64 },

    /// Traffic (stations per slot) must be finite and non-negative.
    #[error("traffic must be finite and non-negative, got {0}")]
    InvalidTraffic(f64),

    /// The exact expected-length recursion is only tabulated up to a
    /// backlog cap (cost grows quickly with the backlog).
    #[error("backlog {n} exceeds the exact-recursion cap {max}")]
    BacklogTooLarge { n: u64, max: u64 },

    /// Only memoryless frame-sizing rules admit the exact expected-length
    /// recursion; stateful estimators must be simulated.
    #[error("estimator `{0}` keeps state across frames; the exact recursion requires a memoryless rule")]
    StatefulRule(String),

    /// The three-phase decomposition assumes the first frames are
    /// collision-dominated, which needs a large starting traffic.
    #[error("starting traffic {0} is below the collision-dominated threshold 10")]
    TrafficTooLow(f64),

    /// An iterative solver did not settle within its iteration cap.
    #[error("{what} did not converge within {cap} iterations")]
    NoConvergence { what: &'static str, cap: u64 },

    /// A numeric quantity left the representable range.
    #[error("{0} overflowed the floating-point range")]
    NumericOverflow(&'static str),

    /// A configuration field failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An estimator specification string could not be parsed.
    #[error("unknown estimator spec `{0}` (expected schoute | lower_bound | ae2(b) | ae2_opt(m1,m2,...) | ae2_pow2 | perfect)")]
    UnknownEstimator(String),

    /// The counts of a frame observation are inconsistent.
    #[error("inconsistent frame observation: {0}")]
    InvalidObservation(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_constants_tie_out() {
        // H and H' are two parametrizations of the same slot algebra:
        // H' = H / (1 - 1/e) and H = 1 + H' / e.
        assert!((SCHOUTE_H - 2.392).abs() < 1e-3);
        assert!((SCHOUTE_H_PRIME - 3.785).abs() < 1e-3);
        assert!((SCHOUTE_H_PRIME * (1.0 - INV_E) - SCHOUTE_H).abs() < 1e-12);
        assert!((1.0 + SCHOUTE_H_PRIME * INV_E - SCHOUTE_H).abs() < 1e-12);
    }
}
