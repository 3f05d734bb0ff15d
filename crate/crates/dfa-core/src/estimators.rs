//! Backlog estimators: from a frame observation to the next frame sizes.
//!
//! All estimators here share one contract. After a frame closes, the reader
//! holds a [`FrameObservation`] — how many of the executed slots came back
//! empty, successful or collided, plus the announced (virtual) and executed
//! (real) frame lengths. The estimator consumes the observation and yields
//! an [`EstimatorDecision`]: the virtual and real lengths of the next frame
//! and whether it believes the backlog is exhausted. Estimator state is a
//! value that is threaded through the updates (state in, state out), which
//! keeps every update replayable and the simulator trivially reproducible.
//!
//! Two families are covered:
//!
//! * **Classic full-frame estimators** run every announced slot
//!   (`real == virtual`). Schoute's rule multiplies the observed collision
//!   count by `H ≈ 2.392`, the expected number of stations per collided
//!   slot at unit traffic; the lower-bound rule uses `2c`, the least
//!   backlog consistent with `c` collisions.
//! * **Frame-restart estimators** announce a virtual frame `z` but may
//!   abort it after a real prefix of `r <= z` slots, re-announcing earlier.
//!   The `ae2` update rescales the collision count of the observed prefix
//!   by `z/r` and corrects `H` for the prefix traffic; its real-frame ramp
//!   `r_i = min(round((i+1)^b), z_i)` keeps early frames short while the
//!   estimate is still poor. The optimized variant replaces the ramp by an
//!   explicit two-phase scheme: single-slot frames whose estimate grows
//!   through a fixed multiplier sequence until the first non-collided slot
//!   is seen (the approach), then full frames under the `ae2` update (the
//!   tracking). A power-of-two variant additionally restricts every
//!   announced frame to `2^Q`, `Q` in `[1, 16]`, as air standards require,
//!   doubling the estimate during the approach.
//!
//! A perfect-knowledge benchmark ([`perfect_estimate`]) closes the list: it
//! always sizes the next frame to the true backlog, which is the efficiency
//! ceiling the practical estimators are measured against.

use std::fmt;

use crate::{Error, Result, INV_E, SCHOUTE_H};

/// Largest representable estimate (`2^53`, exact in an `f64`). Update laws
/// saturate here instead of overflowing.
pub const MAX_ESTIMATE: u64 = 1 << 53;

// ---------------------------------------------------------------------------
// Observation, decision and state types
// ---------------------------------------------------------------------------

/// What the reader learned from one executed frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameObservation {
    /// Executed slots that came back empty.
    pub empties: u64,
    /// Executed slots holding exactly one station.
    pub successes: u64,
    /// Executed slots holding two or more stations.
    pub collisions: u64,
    /// Number of slots actually executed before the restart.
    pub real_len: u64,
    /// Announced frame length the stations drew their slots from.
    pub virtual_len: u64,
}

impl FrameObservation {
    /// Build a validated observation: at least one executed slot, real
    /// length within the virtual frame, and counts covering every executed
    /// slot exactly once.
    pub fn new(
        empties: u64,
        successes: u64,
        collisions: u64,
        real_len: u64,
        virtual_len: u64,
    ) -> Result<Self> {
        if real_len == 0 {
            return Err(Error::EmptyFrame);
        }
        if virtual_len < real_len {
            return Err(Error::InvalidObservation(format!(
                "virtual length {virtual_len} shorter than real length {real_len}"
            )));
        }
        if empties + successes + collisions != real_len {
            return Err(Error::InvalidObservation(format!(
                "slot counts {empties}+{successes}+{collisions} do not cover {real_len} executed slots"
            )));
        }
        Ok(Self { empties, successes, collisions, real_len, virtual_len })
    }

    /// True when every executed slot collided (the only outcome that keeps
    /// the optimized variant in its approach phase).
    pub fn all_collided(&self) -> bool {
        self.collisions == self.real_len
    }
}

/// The estimator's verdict after a frame: how to size the next one.
///
/// `next_real >= 1` and `next_real <= next_virtual` always hold, even when
/// `done` is set — a caller that keeps polling despite `done` (because
/// stations are in fact still unresolved) therefore always makes progress
/// and the estimator re-synchronizes from the resulting observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorDecision {
    /// Announced length of the next frame.
    pub next_virtual: u64,
    /// Number of slots of the next frame to execute before restarting.
    pub next_real: u64,
    /// The estimator believes no stations remain.
    pub done: bool,
}

/// Which phase a two-phase estimator is in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Growing the estimate through single-slot frames until the first
    /// non-collided slot.
    Approach,
    /// Following the backlog down with full frames.
    Tracking,
}

/// A finite list of estimate multipliers prolonged by a tail value:
/// position `i` yields `leading[i]` while it exists and `tail` afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSequence {
    /// Leading, explicitly specified multipliers.
    pub leading: Vec<f64>,
    /// Value used for every position beyond the leading ones.
    pub tail: f64,
}

impl MultiplierSequence {
    /// Multiplier applied at frame index `i`.
    pub fn at(&self, i: u64) -> f64 {
        usize::try_from(i)
            .ok()
            .and_then(|i| self.leading.get(i).copied())
            .unwrap_or(self.tail)
    }

    /// The sequence as one flat list (leading values then the tail).
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = self.leading.clone();
        v.push(self.tail);
        v
    }

    /// Build from a flat list: the last value doubles as the tail.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let (&tail, leading) = values
            .split_last()
            .ok_or_else(|| Error::InvalidConfig("multiplier sequence must not be empty".into()))?;
        for &v in values {
            if !v.is_finite() || v < 1.0 {
                return Err(Error::InvalidConfig(format!(
                    "estimate multipliers must be finite and >= 1, got {v}"
                )));
            }
        }
        Ok(Self { leading: leading.to_vec(), tail })
    }
}

/// Multiplier sequence of the optimized two-phase estimator: four
/// doublings, one 1.8 step, then 1.7 forever.
pub fn default_optimized_multipliers() -> MultiplierSequence {
    MultiplierSequence { leading: vec![2.0, 2.0, 2.0, 2.0, 1.8], tail: 1.7 }
}

/// Real-frame ramp exponent the two-phase estimators fall back to once
/// tracking begins. The frame index keeps counting through the approach
/// phase, so at the switch the ramp allows prefixes of roughly
/// `log(n)^2` slots: long enough to observe a meaningful outcome mix,
/// short enough that a residual misestimate is corrected after a few
/// slots instead of a full misjudged frame.
pub const TRACKING_RAMP_EXPONENT: f64 = 2.0;

/// Threaded estimator state. Fields irrelevant to a given estimator kind
/// (for instance the multiplier sequence for Schoute) sit at neutral
/// defaults and are ignored by its update.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorState {
    /// Index of the next frame to be observed (increments on every update).
    pub frame_index: u64,
    /// Current backlog estimate; equals the virtual length of the frame the
    /// estimator asked for.
    pub estimate: u64,
    /// Phase flag for the two-phase variants.
    pub phase: Phase,
    /// Real-frame ramp exponent `b` of the `ae2` rule.
    pub exponent_b: f64,
    /// Approach-phase estimate multipliers of the optimized variants.
    pub multipliers: MultiplierSequence,
}

// ---------------------------------------------------------------------------
// Estimator selection
// ---------------------------------------------------------------------------

/// Which estimator to run, together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum EstimatorSpec {
    /// Full frames sized to `round(H * c)`.
    Schoute,
    /// Full frames sized to `2c`, the least backlog consistent with `c`
    /// collisions.
    LowerBound,
    /// Frame-restart update with real-frame ramp `min(round((i+1)^b), z)`.
    Ae2 {
        /// Ramp exponent; larger values reach full frames sooner.
        b: f64,
    },
    /// Two-phase variant: single-slot approach frames with an explicit
    /// estimate-multiplier sequence, then full tracking frames.
    Ae2Opt {
        /// Approach-phase estimate multipliers.
        multipliers: MultiplierSequence,
    },
    /// Two-phase variant with every announced frame constrained to `2^Q`,
    /// `Q` in `[1, 16]`, and a doubling approach sequence.
    Ae2Pow2,
    /// Ground-truth benchmark: next frame equals the true backlog.
    Perfect,
}

impl EstimatorSpec {
    /// Parse a textual estimator spec.
    ///
    /// Grammar: `schoute | lower_bound | ae2 | ae2(b) | ae2_opt |
    /// ae2_opt(m1,m2,...) | ae2_pow2 | perfect`. A bare `ae2` uses
    /// `default_b`; a bare `ae2_opt` uses the default multiplier sequence.
    /// In the parenthesized `ae2_opt` form the last multiplier doubles as
    /// the tail value.
    pub fn parse(spec: &str, default_b: f64) -> Result<Self> {
        let s = spec.trim();
        match s {
            "schoute" => return Ok(Self::Schoute),
            "lower_bound" => return Ok(Self::LowerBound),
            "ae2_pow2" => return Ok(Self::Ae2Pow2),
            "perfect" => return Ok(Self::Perfect),
            "ae2" => return Self::validated_ae2(default_b),
            "ae2_opt" => {
                return Ok(Self::Ae2Opt { multipliers: default_optimized_multipliers() })
            }
            _ => {}
        }
        let args = |name: &str| -> Option<&str> {
            s.strip_prefix(name)
                .and_then(|rest| rest.trim().strip_prefix('('))
                .and_then(|rest| rest.trim_end().strip_suffix(')'))
        };
        if let Some(inner) = args("ae2_opt") {
            let values = inner
                .split(',')
                .map(|tok| tok.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| Error::UnknownEstimator(spec.to_string()))?;
            return Ok(Self::Ae2Opt { multipliers: MultiplierSequence::from_values(&values)? });
        }
        if let Some(inner) = args("ae2") {
            let b = inner
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::UnknownEstimator(spec.to_string()))?;
            return Self::validated_ae2(b);
        }
        Err(Error::UnknownEstimator(spec.to_string()))
    }

    fn validated_ae2(b: f64) -> Result<Self> {
        if !b.is_finite() || b <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "ae2 ramp exponent must be finite and positive, got {b}"
            )));
        }
        Ok(Self::Ae2 { b })
    }

    /// True for estimators whose decision depends only on the last
    /// observation (no phase, no ramp index) — exactly the ones the exact
    /// expected-length recursion can evaluate.
    pub fn is_memoryless(&self) -> bool {
        matches!(self, Self::Schoute | Self::LowerBound | Self::Perfect)
    }
}

impl fmt::Display for EstimatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Schoute => write!(f, "schoute"),
            Self::LowerBound => write!(f, "lower_bound"),
            Self::Ae2 { b } => write!(f, "ae2({b})"),
            Self::Ae2Opt { multipliers } => {
                let vals: Vec<String> =
                    multipliers.to_values().iter().map(|v| v.to_string()).collect();
                write!(f, "ae2_opt({})", vals.join(","))
            }
            Self::Ae2Pow2 => write!(f, "ae2_pow2"),
            Self::Perfect => write!(f, "perfect"),
        }
    }
}

// ---------------------------------------------------------------------------
// Update laws (pure functions, state in / state out)
// ---------------------------------------------------------------------------

fn round_to_estimate(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else if x >= MAX_ESTIMATE as f64 {
        MAX_ESTIMATE
    } else {
        x.round() as u64
    }
}

fn advance(mut state: EstimatorState, estimate: u64) -> EstimatorState {
    state.frame_index += 1;
    state.estimate = estimate;
    state
}

/// Schoute's update: `n̂ = round(H * c)` full frames while collisions
/// persist; a collision-free frame means every station was identified.
pub fn schoute_update(
    state: EstimatorState,
    obs: &FrameObservation,
) -> (EstimatorState, EstimatorDecision) {
    let c = obs.collisions;
    if c == 0 {
        return (advance(state, 0), EstimatorDecision { next_virtual: 1, next_real: 1, done: true });
    }
    let estimate = round_to_estimate(SCHOUTE_H * c as f64).max(1);
    (
        advance(state, estimate),
        EstimatorDecision { next_virtual: estimate, next_real: estimate, done: false },
    )
}

/// Lower-bound update: `n̂ = 2c`, the smallest backlog consistent with the
/// observed collisions.
pub fn lower_bound_update(
    state: EstimatorState,
    obs: &FrameObservation,
) -> (EstimatorState, EstimatorDecision) {
    let c = obs.collisions;
    if c == 0 {
        return (advance(state, 0), EstimatorDecision { next_virtual: 1, next_real: 1, done: true });
    }
    let estimate = (2 * c).clamp(1, MAX_ESTIMATE);
    (
        advance(state, estimate),
        EstimatorDecision { next_virtual: estimate, next_real: estimate, done: false },
    )
}

/// Core of the frame-restart update: next virtual length from one observed
/// prefix, or `None` when a collision-free prefix covered the whole
/// remaining estimate (the estimator's view of "finished").
///
/// With collisions present the estimate is
/// `round(H_i * (z/r) * c)` where `H_i = (1 - (r/z)/e) / (1 - 2/e)`:
/// the prefix sees `r/z` of the stations, so its collision count is scaled
/// back up and the stations-per-collision multiplier is corrected for the
/// prefix traffic. Without collisions the `s` identified stations are
/// simply removed from the announced estimate.
fn restart_next_virtual(obs: &FrameObservation) -> Option<u64> {
    if obs.collisions > 0 {
        let z = obs.virtual_len as f64;
        let r = obs.real_len as f64;
        let h_i = (1.0 - (r / z) * INV_E) / (1.0 - 2.0 * INV_E);
        Some(round_to_estimate(h_i * (z / r) * obs.collisions as f64).max(1))
    } else if obs.virtual_len > obs.successes {
        Some(obs.virtual_len - obs.successes)
    } else {
        None
    }
}

/// Frame-restart update with the polynomial real-frame ramp
/// `r_{i+1} = min(round((i+2)^b), z_{i+1})` (the observed frame carries
/// index `i`).
pub fn ae2_update(
    state: EstimatorState,
    obs: &FrameObservation,
) -> (EstimatorState, EstimatorDecision) {
    let b = state.exponent_b;
    let i = state.frame_index;
    match restart_next_virtual(obs) {
        Some(z_next) => {
            let ramp = ((i + 2) as f64).powf(b).round();
            let r_next = if ramp >= z_next as f64 { z_next } else { (ramp as u64).max(1) };
            (
                advance(state, z_next),
                EstimatorDecision { next_virtual: z_next, next_real: r_next, done: false },
            )
        }
        None => {
            (advance(state, 0), EstimatorDecision { next_virtual: 1, next_real: 1, done: true })
        }
    }
}

fn optimized_update_inner(
    state: EstimatorState,
    obs: &FrameObservation,
    quantized: bool,
) -> (EstimatorState, EstimatorDecision) {
    let floor = if quantized { 2 } else { 1 };
    let constrain = |z: u64| if quantized { pow2_quantize(z.max(1)) } else { z.max(1) };

    if state.phase == Phase::Approach && obs.all_collided() {
        // Still blind: every executed slot collided. Grow the estimate and
        // keep probing with single-slot frames.
        let mult = state.multipliers.at(state.frame_index);
        let estimate = constrain(round_to_estimate(mult * state.estimate as f64));
        let decision = EstimatorDecision { next_virtual: estimate, next_real: 1, done: false };
        return (advance(state, estimate), decision);
    }

    // First non-collided slot seen (or already tracking): frame-restart
    // updates with the polynomial real-frame ramp, the frame index having
    // counted through the approach. Short prefixes right after the switch
    // cap the cost of any leftover misestimate; once the ramp overtakes
    // the shrinking estimate the frames run in full, classic style.
    let mut state = state;
    state.phase = Phase::Tracking;
    match restart_next_virtual(obs) {
        Some(z_next) => {
            let z_next = constrain(z_next);
            let ramp = ((state.frame_index + 2) as f64).powf(state.exponent_b).round();
            let r_next = if ramp >= z_next as f64 { z_next } else { (ramp as u64).max(1) };
            (
                advance(state, z_next),
                EstimatorDecision { next_virtual: z_next, next_real: r_next, done: false },
            )
        }
        None => (
            advance(state, 0),
            EstimatorDecision { next_virtual: floor, next_real: floor, done: true },
        ),
    }
}

/// Two-phase update of the optimized estimator: multiplier-driven growth
/// through single-slot frames while everything collides, then, from the
/// first non-collided slot onwards, frame-restart updates with real
/// frames on the polynomial ramp (the frame index counts globally, so the
/// ramp resumes where the approach left it).
pub fn optimized_ae2_update(
    state: EstimatorState,
    obs: &FrameObservation,
) -> (EstimatorState, EstimatorDecision) {
    optimized_update_inner(state, obs, false)
}

/// Ground-truth benchmark: the next frame equals the true backlog.
pub fn perfect_estimate(true_backlog: u64) -> EstimatorDecision {
    EstimatorDecision {
        next_virtual: true_backlog.max(1),
        next_real: true_backlog.max(1),
        done: true_backlog == 0,
    }
}

/// Closest power of two `2^Q` with `Q` in `[1, 16]`, ties resolved upward.
pub fn pow2_quantize(estimate: u64) -> u64 {
    let mut best = 2u64;
    let mut best_err = (2i128 - estimate as i128).unsigned_abs();
    for q in 2..=16u32 {
        let candidate = 1u64 << q;
        let err = (candidate as i128 - estimate as i128).unsigned_abs();
        if err <= best_err {
            best = candidate;
            best_err = err;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Uniform front end
// ---------------------------------------------------------------------------

/// An estimator instance: a spec plus its threaded state, behind the one
/// interface the simulator drives.
#[derive(Debug, Clone)]
pub struct Estimator {
    spec: EstimatorSpec,
    state: EstimatorState,
}

impl Estimator {
    /// Instantiate an estimator with initial frame plan `r0` (must be
    /// positive). Classic estimators announce and execute `r0` slots in
    /// frame 0; the two-phase variants announce `r0` (power-of-two
    /// quantized for the constrained one) but execute a single slot; the
    /// perfect benchmark ignores `r0` and reads the true backlog from the
    /// start.
    pub fn new(spec: EstimatorSpec, r0: u64) -> Result<Self> {
        if r0 == 0 {
            return Err(Error::InvalidConfig("initial frame length r0 must be >= 1".into()));
        }
        let (estimate, phase, exponent_b, multipliers) = match &spec {
            EstimatorSpec::Schoute | EstimatorSpec::LowerBound | EstimatorSpec::Perfect => {
                (r0, Phase::Tracking, 0.0, MultiplierSequence { leading: vec![], tail: 1.0 })
            }
            EstimatorSpec::Ae2 { b } => {
                (r0, Phase::Tracking, *b, MultiplierSequence { leading: vec![], tail: 1.0 })
            }
            EstimatorSpec::Ae2Opt { multipliers } => {
                (r0, Phase::Approach, TRACKING_RAMP_EXPONENT, multipliers.clone())
            }
            EstimatorSpec::Ae2Pow2 => (
                pow2_quantize(r0),
                Phase::Approach,
                TRACKING_RAMP_EXPONENT,
                MultiplierSequence { leading: vec![], tail: 2.0 },
            ),
        };
        let state =
            EstimatorState { frame_index: 0, estimate, phase, exponent_b, multipliers };
        Ok(Self { spec, state })
    }

    /// Sizes of frame 0. `true_backlog` is read by the perfect benchmark
    /// only.
    pub fn initial_decision(&self, true_backlog: u64) -> EstimatorDecision {
        match &self.spec {
            EstimatorSpec::Perfect => perfect_estimate(true_backlog),
            EstimatorSpec::Ae2Opt { .. } | EstimatorSpec::Ae2Pow2 => EstimatorDecision {
                next_virtual: self.state.estimate,
                next_real: 1,
                done: false,
            },
            _ => EstimatorDecision {
                next_virtual: self.state.estimate,
                next_real: self.state.estimate,
                done: false,
            },
        }
    }

    /// Consume one observation, producing the sizes of the next frame.
    /// `true_backlog` is read by the perfect benchmark only; every other
    /// estimator works from the observation alone.
    pub fn update(&mut self, obs: &FrameObservation, true_backlog: u64) -> EstimatorDecision {
        let state = self.state.clone();
        let (next_state, decision) = match &self.spec {
            EstimatorSpec::Schoute => schoute_update(state, obs),
            EstimatorSpec::LowerBound => lower_bound_update(state, obs),
            EstimatorSpec::Ae2 { .. } => ae2_update(state, obs),
            EstimatorSpec::Ae2Opt { .. } => optimized_ae2_update(state, obs),
            EstimatorSpec::Ae2Pow2 => optimized_update_inner(state, obs, true),
            EstimatorSpec::Perfect => {
                let decision = perfect_estimate(true_backlog);
                (advance(state, true_backlog), decision)
            }
        };
        self.state = next_state;
        decision
    }

    /// Current backlog estimate (0 once the estimator believes it is done).
    pub fn estimate(&self) -> u64 {
        self.state.estimate
    }

    /// The spec this instance was built from.
    pub fn spec(&self) -> &EstimatorSpec {
        &self.spec
    }

    /// Current phase (meaningful for the two-phase variants).
    pub fn phase(&self) -> Phase {
        self.state.phase
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
