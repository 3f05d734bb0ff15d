//! Command-line front end: deterministic experiment commands over the
//! library, emitting CSV (tables, sweeps, trajectories) and JSON (search
//! reports).
//!
//! Five subcommands cover the laboratory: `table1` (three-phase asymptotic
//! efficiency table), `sweep` (efficiency versus population for one
//! estimator), `trajectory` (frame-by-frame ensemble averages against the
//! mean-value recursion), `ktrace` (deterministic recursion efficiency
//! along a traffic grid) and `search` (multiplier-sequence optimization).
//!
//! Every experiment parameter can come from a JSON config file
//! ([`ExperimentSpec`]), from command-line flags, or from defaults, in
//! that order of increasing precedence. Outputs are deterministic: the
//! same config and seed produce byte-identical files, and anything
//! nondeterministic (wall time) goes to stderr.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analytic::{
    ae2_traffic_recursion, exact_expected_length, h_sequence_search, phase_efficiency,
    schoute_traffic_recursion, MemorylessRule, SequenceScore, SequenceSearchConfig,
    EXACT_BACKLOG_CAP,
};
use crate::estimators::EstimatorSpec;
use crate::sim::{batch_efficiency, mean_trajectory, SimConfig};
use crate::{Error, Result, SCHOUTE_H};

// ---------------------------------------------------------------------------
// Defaults and grids
// ---------------------------------------------------------------------------

/// Default population grid for `sweep`: log-spaced desk-scale coverage.
pub const DEFAULT_N_GRID: [u64; 13] =
    [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000];

/// Traffic values of the asymptotic efficiency table.
pub const TABLE1_TRAFFIC: [f64; 7] = [20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 47.8];

/// Populations small enough for the exact expected-length recursion to
/// replace simulation in sweeps.
pub const EXACT_SWEEP_LIMIT: u64 = 30;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_RUNS: u64 = 2000;
const DEFAULT_RAMP_EXPONENT: f64 = 2.0;
const DEFAULT_TRAJECTORY_N: u64 = 1000;
const KTRACE_POINTS: usize = 64;
const RECURSION_EPS: f64 = 1e-9;

/// Default traffic grid for `ktrace`: one period of the large-`K`
/// efficiency oscillation, log-spaced over `[500, 500·H]`.
pub fn default_ktrace_grid() -> Vec<f64> {
    (0..KTRACE_POINTS)
        .map(|j| 500.0 * SCHOUTE_H.powf(j as f64 / (KTRACE_POINTS - 1) as f64))
        .collect()
}

// ---------------------------------------------------------------------------
// Experiment specification
// ---------------------------------------------------------------------------

/// JSON experiment description. Every field is optional; command-line
/// flags override whatever the file provides, and built-in defaults fill
/// the rest. The optional `command` field, when present, must match the
/// subcommand being run (it documents what the file was written for).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Subcommand the file is meant for: `table1`, `sweep`, `trajectory`,
    /// `ktrace` or `search`.
    pub command: Option<String>,
    /// Estimator spec, e.g. `schoute` or `ae2(2)`.
    pub estimator: Option<String>,
    /// Population grid (sweeps), single population (trajectory), or
    /// backlog grid (search).
    pub n_list: Option<Vec<u64>>,
    /// Traffic grid for `ktrace`.
    pub k_list: Option<Vec<f64>>,
    /// Initial frame length; 0 means "equal to the population".
    pub r0: Option<u64>,
    /// Ramp exponent for the `ae2` family.
    pub b: Option<f64>,
    /// Monte Carlo runs per grid point.
    pub runs: Option<u64>,
    /// Master seed.
    pub seed: Option<u64>,
    /// Output path; stdout when absent.
    pub out: Option<PathBuf>,
    /// Smallest admissible multiplier (search).
    pub lo: Option<f64>,
    /// Largest admissible multiplier (search).
    pub hi: Option<f64>,
    /// Multiplier grid step (search).
    pub step: Option<f64>,
    /// Maximum multiplier-sequence length (search).
    pub max_len: Option<usize>,
    /// Candidate-evaluation budget (search).
    pub budget: Option<u64>,
}

// ---------------------------------------------------------------------------
// Command-line surface
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "dfa",
    version,
    about = "Dynamic Frame Aloha backlog-estimation laboratory",
    propagate_version = true
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct CommonArgs {
    /// JSON config file; flags given here override its fields
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Master seed for reproducible runs
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo runs per grid point
    #[arg(long, global = true, value_name = "INT")]
    runs: Option<u64>,
    /// Output file (stdout when omitted)
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Estimator: schoute | lower_bound | ae2(b) | ae2_opt(seq, tail) | ae2_pow2 | perfect
    #[arg(long, global = true, value_name = "SPEC")]
    estimator: Option<String>,
    /// Comma-separated populations (sweep/search grid, trajectory point)
    #[arg(long, global = true, value_name = "CSV", value_delimiter = ',')]
    n_list: Option<Vec<u64>>,
    /// Initial frame length; 0 means r0 = N at every grid point
    #[arg(long, global = true, value_name = "INT")]
    r0: Option<u64>,
    /// Ramp exponent for the ae2 family
    #[arg(long, global = true, value_name = "REAL")]
    b: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Three-phase asymptotic efficiency table over the stock traffic grid
    Table1,
    /// Efficiency versus population for one estimator (exact recursion for
    /// small populations with memoryless estimators, simulation otherwise)
    Sweep,
    /// Frame-by-frame ensemble averages for one population, side by side
    /// with the mean-value traffic recursion where one exists
    Trajectory,
    /// Deterministic traffic-recursion efficiency along a traffic grid
    Ktrace,
    /// Coordinate-ascent search over estimate-multiplier sequences
    Search,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Table1 => "table1",
            Command::Sweep => "sweep",
            Command::Trajectory => "trajectory",
            Command::Ktrace => "ktrace",
            Command::Search => "search",
        }
    }
}

// ---------------------------------------------------------------------------
// Resolution: defaults <- config <- flags
// ---------------------------------------------------------------------------

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
struct Resolved {
    estimator: EstimatorSpec,
    n_list: Option<Vec<u64>>,
    k_list: Option<Vec<f64>>,
    r0: u64,
    runs: u64,
    seed: u64,
    out: Option<PathBuf>,
    lo: f64,
    hi: f64,
    step: f64,
    max_len: usize,
    budget: u64,
}

fn load_config(path: Option<&Path>) -> Result<ExperimentSpec> {
    let Some(path) = path else {
        return Ok(ExperimentSpec::default());
    };
    let text = fs::read_to_string(path).map_err(|err| {
        Error::InvalidConfig(format!("cannot read config {}: {err}", path.display()))
    })?;
    serde_json::from_str(&text)
        .map_err(|err| Error::InvalidConfig(format!("config {}: {err}", path.display())))
}

fn resolve(args: &CommonArgs, config: &ExperimentSpec) -> Result<Resolved> {
    let b = args.b.or(config.b).unwrap_or(DEFAULT_RAMP_EXPONENT);
    let estimator_text = args
        .estimator
        .clone()
        .or_else(|| config.estimator.clone())
        .unwrap_or_else(|| "schoute".to_string());
    let estimator = EstimatorSpec::parse(&estimator_text, b)?;

    let n_list = args.n_list.clone().or_else(|| config.n_list.clone());
    if let Some(list) = &n_list {
        if list.is_empty() {
            return Err(Error::InvalidConfig("n_list must not be empty".into()));
        }
    }
    if let Some(list) = &config.k_list {
        if list.is_empty() {
            return Err(Error::InvalidConfig("k_list must not be empty".into()));
        }
    }

    let search_defaults = SequenceSearchConfig::default();
    Ok(Resolved {
        estimator,
        n_list,
        k_list: config.k_list.clone(),
        r0: args.r0.or(config.r0).unwrap_or(1),
        runs: args.runs.or(config.runs).unwrap_or(DEFAULT_RUNS),
        seed: args.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
        out: args.out.clone().or_else(|| config.out.clone()),
        lo: config.lo.unwrap_or(search_defaults.lo),
        hi: config.hi.unwrap_or(search_defaults.hi),
        step: config.step.unwrap_or(search_defaults.step),
        max_len: config.max_len.unwrap_or(search_defaults.max_len),
        budget: config.budget.unwrap_or(search_defaults.max_evaluations),
    })
}

impl Resolved {
    /// Effective initial frame length at population `n` (0 is the
    /// "r0 = N" sentinel; an empty population still needs one slot).
    fn r0_at(&self, n: u64) -> u64 {
        if self.r0 == 0 {
            n.max(1)
        } else {
            self.r0
        }
    }
}

// ---------------------------------------------------------------------------
// Formatting helpers
// ---------------------------------------------------------------------------

/// Full-precision cell: 10 significant digits in scientific notation.
fn cell(v: f64) -> String {
    format!("{v:.9e}")
}

/// CSV-quote a field when it contains structural characters.
fn text_cell(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

struct CommandOutput {
    body: String,
    all_terminated: bool,
}

impl CommandOutput {
    fn clean(body: String) -> Self {
        Self { body, all_terminated: true }
    }
}

// ---------------------------------------------------------------------------
// table1
// ---------------------------------------------------------------------------

fn cmd_table1() -> Result<CommandOutput> {
    let mut csv = String::from(
        "k_u,approach_overhead,convergence_overhead,surviving_fraction,frames_to_unity,efficiency\n",
    );
    for k_u in TABLE1_TRAFFIC {
        let phase = phase_efficiency(k_u)?;
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            cell(k_u),
            cell(phase.approach_overhead),
            cell(phase.convergence_overhead),
            cell(phase.surviving_fraction),
            phase.frames_to_unity,
            cell(phase.efficiency),
        )
        .expect("writing to a String cannot fail");
    }
    Ok(CommandOutput::clean(csv))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

fn cmd_sweep(spec: &Resolved) -> Result<CommandOutput> {
    let grid: Vec<u64> =
        spec.n_list.clone().unwrap_or_else(|| DEFAULT_N_GRID.to_vec());
    let estimator_label = text_cell(&spec.estimator.to_string());

    let mut csv = String::from(
        "n,estimator,r0,method,efficiency,ci_half_width,mean_slots,slots_ci_half_width,runs,seed\n",
    );
    let mut all_terminated = true;
    for &n in &grid {
        let r0 = spec.r0_at(n);
        let exact_rule = MemorylessRule::try_from(&spec.estimator).ok();
        let row = match exact_rule {
            Some(rule) if (1..=EXACT_SWEEP_LIMIT.min(EXACT_BACKLOG_CAP)).contains(&n) => {
                let slots = exact_expected_length(n, rule, r0)?;
                SweepRow {
                    method: "exact",
                    efficiency: n as f64 / slots,
                    ci_half_width: 0.0,
                    mean_slots: slots,
                    slots_ci_half_width: 0.0,
                    runs: 0,
                }
            }
            _ => {
                let point = batch_efficiency(&SimConfig {
                    n,
                    estimator: spec.estimator.clone(),
                    r0,
                    seed: spec.seed,
                    runs: spec.runs,
                    ..SimConfig::default()
                })?;
                all_terminated &= point.non_terminating == 0;
                SweepRow {
                    method: "sim",
                    efficiency: point.mean_efficiency,
                    ci_half_width: point.ci_half_width,
                    mean_slots: point.mean_slots,
                    slots_ci_half_width: point.slots_ci_half_width,
                    runs: point.runs,
                }
            }
        };
        writeln!(
            csv,
            "{n},{estimator_label},{r0},{},{},{},{},{},{},{}",
            row.method,
            cell(row.efficiency),
            cell(row.ci_half_width),
            cell(row.mean_slots),
            cell(row.slots_ci_half_width),
            row.runs,
            spec.seed,
        )
        .expect("writing to a String cannot fail");
    }
    Ok(CommandOutput { body: csv, all_terminated })
}

struct SweepRow {
    method: &'static str,
    efficiency: f64,
    ci_half_width: f64,
    mean_slots: f64,
    slots_ci_half_width: f64,
    runs: u64,
}

// ---------------------------------------------------------------------------
// trajectory
// ---------------------------------------------------------------------------

/// Analytic frame-by-frame counterpart of a simulated trajectory, in
/// absolute units (stations, slots).
struct AnalyticTrack {
    backlog: Vec<f64>,
    estimate: Vec<f64>,
    k: Vec<f64>,
    executed_ratio: Vec<f64>,
}

fn analytic_track(spec: &Resolved, n: u64, r0: u64) -> Result<Option<AnalyticTrack>> {
    let k0 = n as f64 / r0 as f64;
    match spec.estimator {
        EstimatorSpec::Schoute => {
            let outcome = schoute_traffic_recursion(k0, RECURSION_EPS)?;
            let t = outcome.trajectory;
            let scale = r0 as f64;
            Ok(Some(AnalyticTrack {
                backlog: t.backlog.iter().map(|v| v * scale).collect(),
                estimate: t.frame_len.iter().map(|v| v * scale).collect(),
                k: t.k,
                executed_ratio: t.executed_ratio,
            }))
        }
        EstimatorSpec::Ae2 { b } => {
            let t = ae2_traffic_recursion(k0, r0 as f64, b, RECURSION_EPS)?;
            Ok(Some(AnalyticTrack {
                backlog: t.backlog,
                estimate: t.frame_len,
                k: t.k,
                executed_ratio: t.executed_ratio,
            }))
        }
        _ => Ok(None),
    }
}

fn cmd_trajectory(spec: &Resolved) -> Result<CommandOutput> {
    let grid = spec.n_list.clone().unwrap_or_else(|| vec![DEFAULT_TRAJECTORY_N]);
    let [n] = grid[..] else {
        return Err(Error::InvalidConfig(format!(
            "trajectory takes exactly one population, got {} of them",
            grid.len()
        )));
    };
    if n == 0 {
        return Err(Error::InvalidConfig("trajectory needs a population >= 1".into()));
    }
    let r0 = spec.r0_at(n);

    let ensemble = mean_trajectory(&SimConfig {
        n,
        estimator: spec.estimator.clone(),
        r0,
        seed: spec.seed,
        runs: spec.runs,
        ..SimConfig::default()
    })?;
    let track = analytic_track(spec, n, r0)?;

    let mut csv = String::from(
        "frame,slot_offset,active_runs,mean_backlog,mean_estimate,mean_real,mean_k,mean_b,\
         analytic_backlog,analytic_estimate,analytic_k,analytic_b,rel_error_x1000\n",
    );
    for point in &ensemble.points {
        let idx = point.frame as usize;
        let analytic_cells = match &track {
            Some(t) if idx < t.backlog.len() => {
                let rel = 1000.0 * (point.mean_estimate / t.estimate[idx] - 1.0);
                format!(
                    "{},{},{},{},{}",
                    cell(t.backlog[idx]),
                    cell(t.estimate[idx]),
                    cell(t.k[idx]),
                    cell(t.executed_ratio[idx]),
                    cell(rel),
                )
            }
            _ => ",,,,".to_string(),
        };
        writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{analytic_cells}",
            point.frame,
            cell(point.mean_slot_offset),
            point.active_runs,
            cell(point.mean_backlog),
            cell(point.mean_estimate),
            cell(point.mean_real),
            cell(point.mean_k),
            cell(point.mean_executed_ratio),
        )
        .expect("writing to a String cannot fail");
    }
    Ok(CommandOutput { body: csv, all_terminated: ensemble.non_terminating == 0 })
}

// ---------------------------------------------------------------------------
// ktrace
// ---------------------------------------------------------------------------

fn cmd_ktrace(spec: &Resolved) -> Result<CommandOutput> {
    let grid = spec.k_list.clone().unwrap_or_else(default_ktrace_grid);
    let mut csv = String::from("k,efficiency,frames\n");
    for &k in &grid {
        let outcome = schoute_traffic_recursion(k, RECURSION_EPS)?;
        writeln!(csv, "{},{},{}", cell(k), cell(outcome.efficiency), outcome.trajectory.len())
            .expect("writing to a String cannot fail");
    }
    Ok(CommandOutput::clean(csv))
}

// ---------------------------------------------------------------------------
// search
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct SequenceReport {
    multipliers: Vec<f64>,
    min_efficiency: f64,
    per_n: Vec<PerBacklog>,
}

#[derive(Serialize)]
struct PerBacklog {
    n: u64,
    efficiency: f64,
}

impl From<&SequenceScore> for SequenceReport {
    fn from(score: &SequenceScore) -> Self {
        Self {
            multipliers: score.multipliers.to_values(),
            min_efficiency: score.min_efficiency,
            per_n: score
                .per_n
                .iter()
                .map(|&(n, efficiency)| PerBacklog { n, efficiency })
                .collect(),
        }
    }
}

#[derive(Serialize)]
struct SearchReport {
    seed: u64,
    lo: f64,
    hi: f64,
    step: f64,
    max_len: usize,
    n_grid: Vec<u64>,
    runs_per_point: u64,
    baseline: SequenceReport,
    best: SequenceReport,
    evaluations: u64,
    budget_exhausted: bool,
    improved: bool,
}

fn cmd_search(spec: &Resolved) -> Result<CommandOutput> {
    let defaults = SequenceSearchConfig::default();
    let config = SequenceSearchConfig {
        n_grid: spec.n_list.clone().unwrap_or(defaults.n_grid),
        runs_per_point: spec.runs,
        seed: spec.seed,
        lo: spec.lo,
        hi: spec.hi,
        step: spec.step,
        max_len: spec.max_len,
        max_evaluations: spec.budget,
    };

    let started = Instant::now();
    let outcome = h_sequence_search(&config)?;
    // Wall time is observational, not part of the deterministic report.
    eprintln!("search wall time: {:.3} s", started.elapsed().as_secs_f64());

    let report = SearchReport {
        seed: config.seed,
        lo: config.lo,
        hi: config.hi,
        step: config.step,
        max_len: config.max_len,
        n_grid: config.n_grid.clone(),
        runs_per_point: config.runs_per_point,
        baseline: SequenceReport::from(&outcome.baseline),
        best: SequenceReport::from(&outcome.best),
        evaluations: outcome.evaluations,
        budget_exhausted: outcome.budget_exhausted,
        improved: outcome.improved,
    };
    let mut body = serde_json::to_string_pretty(&report)
        .map_err(|err| Error::InvalidConfig(format!("cannot serialize report: {err}")))?;
    body.push('\n');
    Ok(CommandOutput::clean(body))
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

fn write_output(path: Option<&Path>, body: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, body).map_err(|err| {
            Error::InvalidConfig(format!("cannot write {}: {err}", path.display()))
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn execute(cli: Cli) -> Result<bool> {
    let config = load_config(cli.common.config.as_deref())?;
    if let Some(declared) = config.command.as_deref() {
        if declared != cli.command.name() {
            return Err(Error::InvalidConfig(format!(
                "config is for `{declared}` but the `{}` subcommand was invoked",
                cli.command.name()
            )));
        }
    }
    let resolved = resolve(&cli.common, &config)?;
    let output = match cli.command {
        Command::Table1 => cmd_table1()?,
        Command::Sweep => cmd_sweep(&resolved)?,
        Command::Trajectory => cmd_trajectory(&resolved)?,
        Command::Ktrace => cmd_ktrace(&resolved)?,
        Command::Search => cmd_search(&resolved)?,
    };
    write_output(resolved.out.as_deref(), &output.body)?;
    Ok(output.all_terminated)
}

/// Parse `std::env::args`, run the requested command, and return the
/// process exit code: 0 when every requested run terminated, 1 when some
/// run hit the frame cap, 2 on usage or configuration errors.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
