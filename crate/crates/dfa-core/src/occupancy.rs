//! Exact frame-outcome combinatorics.
//!
//! A frame of `r` slots is offered to `n` stations and every station picks
//! one slot independently and uniformly. The reader only learns, per slot,
//! whether it was empty, a success (exactly one station) or a collision
//! (two or more). Everything downstream — estimator updates, expected
//! identification length, efficiency — is a functional of the joint law of
//!
//! * `s` — number of successful slots, and
//! * `c` — number of collided slots.
//!
//! [`joint_outcome_distribution`] computes that law exactly by dynamic
//! programming over stations; [`brute_force_distribution`] recomputes it by
//! walking all `r^n` assignments with integer counts and is kept as a slow,
//! independent oracle. [`slot_probabilities`] gives the Poisson per-slot
//! limit used by the large-frame recursions, where only the traffic
//! `K = n/r` (stations per slot) matters.
//!
//! # Dynamic program
//!
//! Stations are placed one at a time. With `s` singleton and `c` collided
//! slots already present in a frame of `r` slots, the next station lands in
//!
//! * an empty slot with probability `(r - s - c)/r`, giving `(s+1, c)`;
//! * a singleton slot with probability `s/r`, giving `(s-1, c+1)`;
//! * a collided slot with probability `c/r`, leaving `(s, c)`.
//!
//! After `n` placements the state probabilities form the desired law. Only
//! reachable states ever receive mass, so impossible outcomes (such as
//! `s = n - 1`, which would leave a lone station in a "collided" slot) stay
//! at exactly zero.

use std::collections::BTreeMap;

use crate::{Error, Result};

/// Largest number of assignments [`brute_force_distribution`] will walk.
pub const BRUTE_FORCE_CAP: u64 = 17_000_000;

/// Probability masses below this threshold are dropped from the support.
const MASS_FLOOR: f64 = 1e-300;

// ---------------------------------------------------------------------------
// Joint (successes, collisions) law
// ---------------------------------------------------------------------------

/// Joint probability law of (successful slots, collided slots) for one
/// frame: `n` stations, `r` slots, uniform independent slot choices.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyDistribution {
    /// Number of stations placed in the frame.
    pub n: u64,
    /// Number of slots in the frame.
    pub r: u64,
    /// Probability mass by `(s, c)`, sorted by key; zero-mass outcomes are
    /// omitted.
    pub mass: BTreeMap<(u64, u64), f64>,
}

impl OccupancyDistribution {
    /// Probability of observing exactly `s` successes and `c` collisions.
    pub fn mass_at(&self, s: u64, c: u64) -> f64 {
        self.mass.get(&(s, c)).copied().unwrap_or(0.0)
    }

    /// Total probability mass (should be 1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Expected number of successful slots, `E[s]`.
    pub fn expected_successes(&self) -> f64 {
        self.mass.iter().map(|(&(s, _), &p)| s as f64 * p).sum()
    }

    /// Expected number of collided slots, `E[c]`.
    pub fn expected_collisions(&self) -> f64 {
        self.mass.iter().map(|(&(_, c), &p)| c as f64 * p).sum()
    }
}

/// Exact joint law of (successes, collisions) after placing `n` stations
/// uniformly into `r` slots.
///
/// Runs the station-by-station dynamic program described in the module
/// docs; cost is `O(n · min(n, r) · min(n/2, r))` time and one state table
/// of that footprint, so it is comfortable for the backlog sizes the exact
/// recursions use and grows quickly beyond them.
pub fn joint_outcome_distribution(n: u64, r: u64) -> Result<OccupancyDistribution> {
    if r == 0 {
        return Err(Error::EmptyFrame);
    }
    let s_dim = (n.min(r) + 1) as usize;
    let c_dim = (n / 2).min(r) as usize + 1;
    let idx = |s: usize, c: usize| s * c_dim + c;

    let mut cur = vec![0.0f64; s_dim * c_dim];
    let mut next = vec![0.0f64; s_dim * c_dim];
    cur[idx(0, 0)] = 1.0;

    let rf = r as f64;
    for _ in 0..n {
        next.iter_mut().for_each(|p| *p = 0.0);
        for s in 0..s_dim {
            for c in 0..c_dim {
                let p = cur[idx(s, c)];
                if p == 0.0 {
                    continue;
                }
                let empty_slots = r - (s as u64) - (c as u64);
                if empty_slots > 0 {
                    next[idx(s + 1, c)] += p * (empty_slots as f64 / rf);
                }
                if s > 0 {
                    next[idx(s - 1, c + 1)] += p * (s as f64 / rf);
                }
                if c > 0 {
                    next[idx(s, c)] += p * (c as f64 / rf);
                }
            }
        }
        std::mem::swap(&mut cur, &mut next);
    }

    let mut mass = BTreeMap::new();
    for s in 0..s_dim {
        for c in 0..c_dim {
            let p = cur[idx(s, c)];
            if p >= MASS_FLOOR {
                mass.insert((s as u64, c as u64), p);
            }
        }
    }
    Ok(OccupancyDistribution { n, r, mass })
}

/// Joint law of (successes, collisions) by exhaustive enumeration.
///
/// Walks all `r^n` slot assignments with an odometer, tallying exact
/// integer counts per `(s, c)` outcome and dividing once at the end, so the
/// result carries no accumulated floating-point error. Refuses state
/// spaces above [`BRUTE_FORCE_CAP`] assignments. This is the oracle the
/// dynamic program is validated against.
pub fn brute_force_distribution(n: u64, r: u64) -> Result<OccupancyDistribution> {
    if r == 0 {
        return Err(Error::EmptyFrame);
    }
    let too_large = Error::EnumerationTooLarge { n, r, max: BRUTE_FORCE_CAP };
    let total = r
        .checked_pow(u32::try_from(n).map_err(|_| Error::EnumerationTooLarge {
            n,
            r,
            max: BRUTE_FORCE_CAP,
        })?)
        .ok_or(too_large)?;
    if total > BRUTE_FORCE_CAP {
        return Err(Error::EnumerationTooLarge { n, r, max: BRUTE_FORCE_CAP });
    }

    let n_us = n as usize;
    let r_us = r as usize;
    let mut digits = vec![0usize; n_us];
    let mut counts = vec![0u64; r_us];
    if n_us > 0 {
        counts[0] = n;
    }
    let mut tally: BTreeMap<(u64, u64), u64> = BTreeMap::new();

    'assignments: loop {
        let mut s = 0u64;
        let mut c = 0u64;
        for &k in &counts {
            match k {
                0 => {}
                1 => s += 1,
                _ => c += 1,
            }
        }
        *tally.entry((s, c)).or_insert(0) += 1;

        // Advance the mixed-radix odometer, keeping slot counts in step.
        let mut i = 0;
        loop {
            if i == n_us {
                break 'assignments;
            }
            let d = digits[i];
            counts[d] -= 1;
            if d + 1 < r_us {
                digits[i] = d + 1;
                counts[d + 1] += 1;
                break;
            }
            digits[i] = 0;
            counts[0] += 1;
            i += 1;
        }
    }

    let total_f = total as f64;
    let mass = tally
        .into_iter()
        .map(|(k, count)| (k, count as f64 / total_f))
        .collect();
    Ok(OccupancyDistribution { n, r, mass })
}

// ---------------------------------------------------------------------------
// Poisson slot probabilities
// ---------------------------------------------------------------------------

/// Per-slot outcome probabilities in the large-frame (Poisson) regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotProbabilities {
    /// `P(empty) = e^-K`.
    pub empty: f64,
    /// `P(success) = K e^-K`.
    pub success: f64,
    /// `P(collision) = 1 - e^-K - K e^-K`.
    pub collision: f64,
}

/// Per-slot outcome probabilities when each slot of a large frame carries
/// Poisson traffic `k` (stations per slot).
pub fn slot_probabilities(k: f64) -> Result<SlotProbabilities> {
    if !k.is_finite() || k < 0.0 {
        return Err(Error::InvalidTraffic(k));
    }
    let empty = (-k).exp();
    let success = k * empty;
    let collision = (1.0 - empty - success).max(0.0);
    Ok(SlotProbabilities { empty, success, collision })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn test_two_stations_two_slots() {
        let d = joint_outcome_distribution(2, 2).unwrap();
        assert_eq!(d.mass.len(), 2);
        assert_close(d.mass_at(0, 1), 0.5, 1e-15);
        assert_close(d.mass_at(2, 0), 0.5, 1e-15);
    }

    #[test]
    fn test_three_stations_two_slots() {
        let d = joint_outcome_distribution(3, 2).unwrap();
        assert_eq!(d.mass.len(), 2);
        assert_close(d.mass_at(0, 1), 0.25, 1e-15);
        assert_close(d.mass_at(1, 1), 0.75, 1e-15);
    }

    #[test]
    fn test_three_stations_three_slots() {
        let d = joint_outcome_distribution(3, 3).unwrap();
        assert_close(d.mass_at(3, 0), 6.0 / 27.0, 1e-15);
        assert_close(d.mass_at(1, 1), 18.0 / 27.0, 1e-15);
        assert_close(d.mass_at(0, 1), 3.0 / 27.0, 1e-15);
    }

    #[test]
    fn test_single_slot_always_collides() {
        let d = joint_outcome_distribution(4, 1).unwrap();
        assert_eq!(d.mass.len(), 1);
        assert_close(d.mass_at(0, 1), 1.0, 0.0);
    }

    #[test]
    fn test_degenerate_station_counts() {
        let d0 = joint_outcome_distribution(0, 5).unwrap();
        assert_eq!(d0.mass.len(), 1);
        assert_close(d0.mass_at(0, 0), 1.0, 0.0);

        let d1 = joint_outcome_distribution(1, 5).unwrap();
        assert_eq!(d1.mass.len(), 1);
        assert_close(d1.mass_at(1, 0), 1.0, 0.0);
    }

    #[test]
    fn test_empty_frame_rejected() {
        assert!(matches!(joint_outcome_distribution(3, 0), Err(Error::EmptyFrame)));
        assert!(matches!(brute_force_distribution(3, 0), Err(Error::EmptyFrame)));
    }

    #[test]
    fn test_lone_station_in_collision_slot_impossible() {
        // s = n - 1 would require exactly one station in some collided
        // slot; the law must give it strictly zero mass, not merely small.
        for n in 2..=9u64 {
            for r in 1..=9u64 {
                let d = joint_outcome_distribution(n, r).unwrap();
                for (&(s, c), &p) in &d.mass {
                    assert!(s != n - 1, "mass {p} at impossible (s={s}, c={c}) for n={n}, r={r}");
                }
            }
        }
    }

    #[test]
    fn test_support_bounds_and_normalization() {
        for n in 0..=12u64 {
            for r in 1..=12u64 {
                let d = joint_outcome_distribution(n, r).unwrap();
                assert_close(d.total_mass(), 1.0, 1e-12);
                for &(s, c) in d.mass.keys() {
                    assert!(s + c <= r, "s + c > r at n={n}, r={r}");
                    assert!(s <= n);
                    assert!(2 * c <= n - s, "collided slots must hold two stations each");
                }
            }
        }
    }

    #[test]
    fn test_expected_successes_closed_form() {
        // E[s] = n (1 - 1/r)^(n-1): each station is alone in its slot with
        // probability (1 - 1/r)^(n-1).
        for n in 1..=14u64 {
            for r in 1..=14u64 {
                let d = joint_outcome_distribution(n, r).unwrap();
                let expect = n as f64 * (1.0 - 1.0 / r as f64).powi(n as i32 - 1);
                assert_close(d.expected_successes(), expect, 1e-10);
            }
        }
    }

    #[test]
    fn test_dynamic_program_matches_enumeration() {
        // The full (n <= 8, r <= 6) sweep lives in the acceptance suite;
        // this keeps a fast cross-check close to the implementation.
        for n in 0..=6u64 {
            for r in 1..=5u64 {
                let dp = joint_outcome_distribution(n, r).unwrap();
                let bf = brute_force_distribution(n, r).unwrap();
                assert_eq!(dp.mass.len(), bf.mass.len(), "support mismatch at n={n}, r={r}");
                for (&k, &p) in &bf.mass {
                    assert_close(dp.mass_at(k.0, k.1), p, 1e-12);
                }
            }
        }
    }

    #[test]
    fn test_enumeration_cap_enforced() {
        assert!(matches!(
            brute_force_distribution(9, 9),
            Err(Error::EnumerationTooLarge { .. })
        ));
        assert!(matches!(
            brute_force_distribution(80, 2),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn test_slot_probabilities_unit_traffic() {
        let p = slot_probabilities(1.0).unwrap();
        assert_close(p.empty, 0.367879441, 1e-9);
        assert_close(p.success, 0.367879441, 1e-9);
        assert_close(p.collision, 0.264241117, 1e-9);
        assert_close(p.empty + p.success + p.collision, 1.0, 1e-15);
    }

    #[test]
    fn test_slot_probabilities_heavy_traffic() {
        let p = slot_probabilities(10.0).unwrap();
        assert_close(p.collision, 0.9995006, 1e-7);
    }

    #[test]
    fn test_slot_probabilities_zero_and_invalid() {
        let p = slot_probabilities(0.0).unwrap();
        assert_eq!(p.empty, 1.0);
        assert_eq!(p.success, 0.0);
        assert_eq!(p.collision, 0.0);
        assert!(slot_probabilities(-0.5).is_err());
        assert!(slot_probabilities(f64::NAN).is_err());
        assert!(slot_probabilities(f64::INFINITY).is_err());
    }

    #[test]
    fn test_slot_probability_sum_over_traffic_grid() {
        let mut k = 0.0;
        while k <= 50.0 {
            let p = slot_probabilities(k).unwrap();
            assert_close(p.empty + p.success + p.collision, 1.0, 1e-15);
            assert!(p.collision >= 0.0 && p.empty >= 0.0 && p.success >= 0.0);
            k += 0.37;
        }
    }
}
