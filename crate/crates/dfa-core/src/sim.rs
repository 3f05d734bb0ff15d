//! Seeded Monte Carlo engine for DFA identification with frame restarts.
//!
//! Each run plays the protocol against ground truth: backlogged stations
//! draw a slot uniformly in the announced (virtual) frame, only the slots
//! of the executed (real) prefix are observed, stations alone in an
//! executed slot are identified and leave, and the per-prefix outcome
//! counts feed the estimator that sizes the next frame. A run ends when
//! the true backlog is empty; a safety cap flags (never hides) runs that
//! fail to finish.
//!
//! Determinism is part of the contract: the run with index `j` of a batch
//! draws from stream `j` of a counter-based generator seeded by the master
//! seed, so batches are reproducible bit for bit regardless of how the
//! runs are scheduled across threads, and aggregation is done sequentially
//! in run order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::estimators::{Estimator, EstimatorSpec, FrameObservation};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Configuration and result types
// ---------------------------------------------------------------------------

/// Configuration of one simulation experiment (a single run or a batch).
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Station population to identify.
    pub n: u64,
    /// Estimator driving the frame sizes.
    pub estimator: EstimatorSpec,
    /// Initial frame plan handed to the estimator (must be >= 1).
    pub r0: u64,
    /// Master seed; run `j` of a batch uses stream `j` derived from it.
    pub seed: u64,
    /// Number of independent runs in a batch.
    pub runs: u64,
    /// Frames after which a run is declared non-terminating.
    pub max_frames: u64,
    /// Record the per-frame trajectory of each run.
    pub record_trajectory: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 0,
            estimator: EstimatorSpec::Schoute,
            r0: 1,
            seed: 0,
            runs: 2000,
            max_frames: 1_000_000,
            record_trajectory: false,
        }
    }
}

/// Per-frame record of one simulated run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrajectoryPoint {
    /// Frame number, starting at 0.
    pub frame_index: u64,
    /// Announced frame length the stations drew from.
    pub virtual_len: u64,
    /// Executed prefix length.
    pub real_len: u64,
    /// Executed slots that stayed empty.
    pub empties: u64,
    /// Executed slots with exactly one station (identifications).
    pub successes: u64,
    /// Executed slots with two or more stations.
    pub collisions: u64,
    /// True backlog when the frame started.
    pub backlog_before: u64,
    /// Estimator's backlog estimate after consuming this frame.
    pub estimate_after: u64,
}

/// Outcome of a single simulated identification run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    /// Executed slots, summed over all frames (announced tails that were
    /// never executed do not count).
    pub total_slots: u64,
    /// Frames executed.
    pub frames: u64,
    /// Stations per executed slot, `n / total_slots`; 1 by convention for
    /// an empty population. For a non-terminated run this is the ratio at
    /// the point the run was cut off.
    pub efficiency: f64,
    /// False when the run hit the frame cap with stations left.
    pub terminated: bool,
    /// Per-frame records; empty unless requested in the config.
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Aggregated batch statistics for one backlog size.
///
/// Means and half-widths cover the terminated runs only; `runs` counts
/// them, and `non_terminating` reports how many runs hit the frame cap.
/// If no run terminated the means are NaN and `runs` is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyPoint {
    /// Station population the batch ran with.
    pub n: u64,
    /// Mean of per-run efficiency `n / total_slots`.
    pub mean_efficiency: f64,
    /// 95% normal-approximation half-width for the efficiency mean.
    pub ci_half_width: f64,
    /// Mean of per-run executed slot totals.
    pub mean_slots: f64,
    /// 95% normal-approximation half-width for the slots mean.
    pub slots_ci_half_width: f64,
    /// Terminated runs behind the means.
    pub runs: u64,
    /// Runs cut off at the frame cap.
    pub non_terminating: u64,
}

/// Frame-indexed ensemble averages across the runs of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanTrajectory {
    /// One entry per frame index, covering runs still active there.
    pub points: Vec<MeanTrajectoryPoint>,
    /// Terminated runs the averages are taken over.
    pub runs: u64,
    /// Runs excluded because they hit the frame cap.
    pub non_terminating: u64,
}

/// Ensemble averages at one frame index, over the runs still active there.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanTrajectoryPoint {
    /// Frame number, starting at 0.
    pub frame: u64,
    /// Runs that executed this frame.
    pub active_runs: u64,
    /// Mean executed slots before this frame (the time coordinate).
    pub mean_slot_offset: f64,
    /// Mean true backlog at frame start.
    pub mean_backlog: f64,
    /// Mean announced frame length (the live backlog estimate).
    pub mean_estimate: f64,
    /// Mean executed prefix length.
    pub mean_real: f64,
    /// Traffic per announced slot, `mean_backlog / mean_estimate`.
    pub mean_k: f64,
    /// Executed fraction of the announcement, `mean_real / mean_estimate`.
    pub mean_executed_ratio: f64,
}

// ---------------------------------------------------------------------------
// Single-run engine
// ---------------------------------------------------------------------------

fn validated(cfg: &SimConfig) -> Result<()> {
    if cfg.max_frames == 0 {
        return Err(Error::InvalidConfig("max_frames must be >= 1".into()));
    }
    if cfg.r0 == 0 {
        return Err(Error::InvalidConfig("initial frame length r0 must be >= 1".into()));
    }
    Ok(())
}

fn run_stream(cfg: &SimConfig, run_index: u64) -> Result<RunResult> {
    validated(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(run_index);

    let mut estimator = Estimator::new(cfg.estimator.clone(), cfg.r0)?;
    let mut decision = estimator.initial_decision(cfg.n);
    let mut backlog = cfg.n;
    let mut total_slots = 0u64;
    let mut frames = 0u64;
    let mut trajectory = Vec::new();
    let mut slots: Vec<u8> = Vec::new();

    while backlog > 0 {
        if frames >= cfg.max_frames {
            return Ok(RunResult {
                total_slots,
                frames,
                efficiency: cfg.n as f64 / total_slots.max(1) as f64,
                terminated: false,
                trajectory,
            });
        }
        let z = decision.next_virtual.max(1);
        let r = decision.next_real.clamp(1, z);

        slots.clear();
        slots.resize(usize::try_from(r).map_err(|_| Error::NumericOverflow("frame length"))?, 0);
        for _ in 0..backlog {
            let slot = rng.random_range(0..z);
            if slot < r {
                let tally = &mut slots[slot as usize];
                *tally = tally.saturating_add(1);
            }
        }
        let mut empties = 0u64;
        let mut successes = 0u64;
        let mut collisions = 0u64;
        for &occupancy in &slots {
            match occupancy {
                0 => empties += 1,
                1 => successes += 1,
                _ => collisions += 1,
            }
        }

        total_slots += r;
        frames += 1;
        let backlog_before = backlog;
        backlog -= successes;

        let obs = FrameObservation::new(empties, successes, collisions, r, z)?;
        decision = estimator.update(&obs, backlog);
        if cfg.record_trajectory {
            trajectory.push(TrajectoryPoint {
                frame_index: frames - 1,
                virtual_len: z,
                real_len: r,
                empties,
                successes,
                collisions,
                backlog_before,
                estimate_after: estimator.estimate(),
            });
        }
    }

    let efficiency = if cfg.n == 0 { 1.0 } else { cfg.n as f64 / total_slots as f64 };
    Ok(RunResult { total_slots, frames, efficiency, terminated: true, trajectory })
}

/// Play a single identification run (stream 0 of the seed) to completion.
pub fn run_identification(cfg: &SimConfig) -> Result<RunResult> {
    run_stream(cfg, 0)
}

// ---------------------------------------------------------------------------
// Batches
// ---------------------------------------------------------------------------

/// Run the configured batch and return every run's result, in run order.
/// Runs execute in parallel; the output order and content depend only on
/// the config.
pub fn batch_runs(cfg: &SimConfig) -> Result<Vec<RunResult>> {
    validated(cfg)?;
    if cfg.runs == 0 {
        return Err(Error::InvalidConfig("batch needs runs >= 1".into()));
    }
    (0..cfg.runs)
        .into_par_iter()
        .map(|run_index| run_stream(cfg, run_index))
        .collect()
}

fn mean_and_ci(values: &[f64]) -> (f64, f64) {
    let m = values.len();
    if m == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / m as f64;
    if m < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m as f64 - 1.0);
    (mean, 1.96 * (var / m as f64).sqrt())
}

/// Run the batch and reduce it to its efficiency statistics.
pub fn batch_efficiency(cfg: &SimConfig) -> Result<EfficiencyPoint> {
    if cfg.runs < 2 {
        return Err(Error::InvalidConfig("efficiency statistics need runs >= 2".into()));
    }
    let lean = SimConfig { record_trajectory: false, ..cfg.clone() };
    let results = batch_runs(&lean)?;

    let mut efficiencies = Vec::with_capacity(results.len());
    let mut slots = Vec::with_capacity(results.len());
    let mut non_terminating = 0u64;
    for run in &results {
        if run.terminated {
            efficiencies.push(run.efficiency);
            slots.push(run.total_slots as f64);
        } else {
            non_terminating += 1;
        }
    }
    let (mean_efficiency, ci_half_width) = mean_and_ci(&efficiencies);
    let (mean_slots, slots_ci_half_width) = mean_and_ci(&slots);
    Ok(EfficiencyPoint {
        n: cfg.n,
        mean_efficiency,
        ci_half_width,
        mean_slots,
        slots_ci_half_width,
        runs: efficiencies.len() as u64,
        non_terminating,
    })
}

/// Frame-indexed ensemble averages over a batch, taken at each frame over
/// the runs still active there (shorter runs simply stop contributing).
/// Needs at least 100 runs for the averages to mean anything.
pub fn mean_trajectory(cfg: &SimConfig) -> Result<MeanTrajectory> {
    if cfg.runs < 100 {
        return Err(Error::InvalidConfig("trajectory averaging needs runs >= 100".into()));
    }
    let recording = SimConfig { record_trajectory: true, ..cfg.clone() };
    let results = batch_runs(&recording)?;

    let kept: Vec<&RunResult> = results.iter().filter(|r| r.terminated).collect();
    let non_terminating = (results.len() - kept.len()) as u64;
    let longest = kept.iter().map(|r| r.trajectory.len()).max().unwrap_or(0);

    let mut points = Vec::with_capacity(longest);
    for frame in 0..longest {
        let mut active = 0u64;
        let mut sum_offset = 0.0;
        let mut sum_backlog = 0.0;
        let mut sum_virtual = 0.0;
        let mut sum_real = 0.0;
        for run in &kept {
            if let Some(point) = run.trajectory.get(frame) {
                active += 1;
                let offset: u64 =
                    run.trajectory[..frame].iter().map(|p| p.real_len).sum();
                sum_offset += offset as f64;
                sum_backlog += point.backlog_before as f64;
                sum_virtual += point.virtual_len as f64;
                sum_real += point.real_len as f64;
            }
        }
        let active_f = active as f64;
        let mean_backlog = sum_backlog / active_f;
        let mean_estimate = sum_virtual / active_f;
        let mean_real = sum_real / active_f;
        points.push(MeanTrajectoryPoint {
            frame: frame as u64,
            active_runs: active,
            mean_slot_offset: sum_offset / active_f,
            mean_backlog,
            mean_estimate,
            mean_real,
            mean_k: mean_backlog / mean_estimate,
            mean_executed_ratio: mean_real / mean_estimate,
        });
    }
    Ok(MeanTrajectory { points, runs: kept.len() as u64, non_terminating })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
