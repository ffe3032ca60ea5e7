//! Scenarios, batch runs, metrics and log files.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::{closed_loop_run, ControllerTiming, RunOptions, SimLog};
use crate::dynamics::{ModelParams, VehicleState};
use crate::geometry::{GeometryError, Superellipsoid};
use crate::ocp::{HcWeights, LcWeights, OcpError, ReferenceTarget};
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: field `{field}`: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("invalid scenario `{name}`: {message}")]
    Invalid { name: String, message: String },
    #[error(transparent)]
    Ocp(#[from] OcpError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Vehicle outline; its pose follows the vehicle state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleShape {
    pub semi_axes: [f64; 2],
    pub exponent: f64,
}

impl VehicleShape {
    pub fn new(semi_axes: [f64; 2], exponent: f64) -> Result<Self, GeometryError> {
        Superellipsoid::new([0.0, 0.0], 0.0, semi_axes, exponent)?;
        Ok(Self { semi_axes, exponent })
    }

    /// The outline placed at `state`.
    ///
    /// # Panics
    ///
    /// Panics if the shape is invalid or the state is not finite.
    pub fn at(&self, state: &VehicleState) -> Superellipsoid {
        Superellipsoid::new(state.position, state.heading, self.semi_axes, self.exponent)
            .expect("vehicle shape validated on construction")
    }
}

fn default_hc_solver() -> SolverConfig {
    SolverConfig::default()
}

fn default_lc_solver() -> SolverConfig {
    SolverConfig {
        time_budget_ms: 90,
        ..SolverConfig::default()
    }
}

fn default_clearance() -> f64 {
    DEFAULT_CLEARANCE
}

fn default_duration() -> f64 {
    120.0
}

fn default_goal_radius() -> f64 {
    1.0
}

/// Safety offset added to the planner separation constraints of every
/// stage after the first (m).
pub const DEFAULT_CLEARANCE: f64 = 0.05;

/// A closed-loop experiment. Angles in radians, distances in meters,
/// positions ordered (North, East).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub vehicle: VehicleShape,
    pub initial_state: VehicleState,
    pub target: ReferenceTarget,
    pub obstacles: Vec<Superellipsoid>,
    /// Controller model; `dt` is the tracker period `t_L`.
    pub model: ModelParams,
    pub hc: HcWeights,
    pub lc: LcWeights,
    #[serde(default = "default_hc_solver")]
    pub hc_solver: SolverConfig,
    #[serde(default = "default_lc_solver")]
    pub lc_solver: SolverConfig,
    #[serde(default = "default_clearance")]
    pub clearance: f64,
    #[serde(default = "default_duration")]
    pub duration_s: f64,
    #[serde(default = "default_goal_radius")]
    pub goal_radius: f64,
    /// Ticks between the start of a replan and its plan swap.
    #[serde(default)]
    pub hc_latency_ticks: usize,
}

/// The three static obstacles: East, West and South.
pub fn table_obstacles() -> Vec<Superellipsoid> {
    [
        ([0.0, 10.0], 0.0, [8.0, 8.0]),
        ([0.0, -10.0], 0.0, [8.0, 9.5]),
        ([-11.0, 3.0], -0.79, [2.0, 1.0]),
    ]
    .into_iter()
    .map(|(c, th, s)| Superellipsoid::new(c, th, s, 3.0).expect("valid obstacle"))
    .collect()
}

/// Initial `(c1, c2, θ)` of the seven simulated runs.
#[allow(clippy::approx_constant)]
pub const TABLE_STARTS: [[f64; 3]; 7] = [
    [15.0, 0.8, 3.14],
    [20.0, 5.0, 3.14],
    [20.0, -10.0, 3.14],
    [11.0, -10.0, 0.0],
    [11.0, -12.0, 0.0],
    [11.0, -15.0, 0.0],
    [11.0, -20.0, 0.0],
];

impl Scenario {
    /// Simulated run `index` (1-based) with the simulation parameter set.
    pub fn table_scenario(index: usize) -> Option<Self> {
        let start = TABLE_STARTS.get(index.checked_sub(1)?)?;
        Some(Self {
            name: format!("sim{index}"),
            vehicle: VehicleShape::new([2.0, 1.1], 3.0).expect("valid vehicle"),
            initial_state: VehicleState::new([start[0], start[1]], start[2], 0.0),
            target: ReferenceTarget {
                position: [-20.0, 6.0],
                heading: 0.0,
            },
            obstacles: table_obstacles(),
            model: ModelParams {
                alpha: 1.0,
                beta: 0.2,
                v_max: 1.0,
                dt: 0.1,
            },
            hc: HcWeights::simulation(),
            lc: LcWeights::simulation(),
            hc_solver: default_hc_solver(),
            lc_solver: default_lc_solver(),
            clearance: DEFAULT_CLEARANCE,
            duration_s: default_duration(),
            goal_radius: default_goal_radius(),
            hc_latency_ticks: 0,
        })
    }

    pub fn timing(&self) -> ControllerTiming {
        ControllerTiming {
            lc_period: self.model.dt,
            ratio: self.hc.substeps,
            carrot_stage: self.lc.carrot_stage,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |message: String| HarnessError::Invalid {
            name: self.name.clone(),
            message,
        };
        VehicleShape::new(self.vehicle.semi_axes, self.vehicle.exponent)
            .map_err(|e| invalid(format!("vehicle: {e}")))?;
        for (j, e) in self.obstacles.iter().enumerate() {
            if e.exponent() != self.vehicle.exponent {
                return Err(invalid(format!(
                    "obstacle {j} exponent {} differs from vehicle exponent {}",
                    e.exponent(),
                    self.vehicle.exponent
                )));
            }
        }
        if !self.initial_state.is_finite() {
            return Err(invalid("initial_state must be finite".into()));
        }
        self.model.validate().map_err(|m| invalid(format!("model: {m}")))?;
        self.hc.validate().map_err(|e| invalid(format!("hc: {e}")))?;
        self.lc.validate().map_err(|e| invalid(format!("lc: {e}")))?;
        self.hc_solver.validate().map_err(|m| invalid(format!("hc_solver: {m}")))?;
        self.lc_solver.validate().map_err(|m| invalid(format!("lc_solver: {m}")))?;
        self.timing()
            .validate(self.lc.horizon, self.hc.horizon)
            .map_err(invalid)?;
        if self.hc_latency_ticks >= self.hc.substeps {
            return Err(invalid("hc_latency_ticks must be smaller than hc.substeps".into()));
        }
        for (name, v) in [
            ("clearance", self.clearance),
            ("duration_s", self.duration_s),
            ("goal_radius", self.goal_radius),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    let scenario: Scenario = serde_path_to_error::deserialize(&mut de).map_err(|e| HarnessError::Schema {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    scenario.validate()?;
    Ok(scenario)
}

pub fn save_scenario(scenario: &Scenario, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, scenario)?;
    writeln!(w).map_err(io_err(path))?;
    Ok(())
}

/// Reads a JSON list of obstacles.
pub fn load_obstacles(path: &Path) -> Result<Vec<Superellipsoid>, HarnessError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut de = serde_json::Deserializer::from_reader(BufReader::new(file));
    serde_path_to_error::deserialize(&mut de).map_err(|e| HarnessError::Schema {
        path: path.to_path_buf(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

/// Percentile with linear interpolation between closest ranks
/// (`q ∈ [0, 100]`). Returns NaN for an empty slice.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 100.0) / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

impl Stats {
    pub fn of(values: &[f64]) -> Self {
        Self {
            median: percentile(values, 50.0),
            p95: percentile(values, 95.0),
            max: percentile(values, 100.0),
            count: values.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// `(time, error)` per tick.
    pub tracking_error: Vec<(f64, f64)>,
    pub tracking: Stats,
    pub hc_ms: Stats,
    pub lc_ms: Stats,
    /// Smallest logged obstacle distance over the run.
    pub min_margin: f64,
}

/// Tracking error against the interpolated reference of each tick's active
/// plan, plus runtime statistics.
pub fn compute_metrics(log: &SimLog) -> Metrics {
    let plans: HashMap<u64, _> = log.plans.iter().map(|p| (p.id, p)).collect();
    let tracking_error: Vec<(f64, f64)> = log
        .ticks
        .iter()
        .map(|t| {
            let err = plans
                .get(&t.plan_id)
                .map_or(t.tracking_error, |p| t.state.distance_to(p.position_at(t.time - p.created_at)));
            (t.time, err)
        })
        .collect();
    let errors: Vec<f64> = tracking_error.iter().map(|e| e.1).collect();
    let hc: Vec<f64> = log.replans.iter().map(|r| r.hc_ms).collect();
    let lc: Vec<f64> = log.ticks.iter().filter_map(|t| t.lc_ms).collect();
    let min_margin = log
        .ticks
        .iter()
        .flat_map(|t| t.margins.iter().copied())
        .fold(f64::INFINITY, f64::min);
    Metrics {
        tracking: Stats::of(&errors),
        tracking_error,
        hc_ms: Stats::of(&hc),
        lc_ms: Stats::of(&lc),
        min_margin,
    }
}

/// Column names of the per-tick log for `obstacles` obstacles.
pub fn log_header(obstacles: usize) -> Vec<String> {
    let mut h: Vec<String> = ["time_s", "c1_m", "c2_m", "theta_rad", "v_mps", "r", "s", "plan_id", "lc_ms", "hc_ms"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((0..obstacles).map(|j| format!("margin_obs_{j}")));
    h
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the per-tick CSV log.
pub fn write_log_csv(log: &SimLog, obstacles: usize, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(log_header(obstacles))?;
    for t in &log.ticks {
        let mut row = vec![
            t.time.to_string(),
            t.state.position[0].to_string(),
            t.state.position[1].to_string(),
            t.state.heading.to_string(),
            t.state.speed.to_string(),
            t.input.throttle.to_string(),
            t.input.spin.to_string(),
            t.plan_id.to_string(),
            opt(t.lc_ms),
            opt(t.hc_ms),
        ];
        row.extend(t.margins.iter().map(|m| m.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes every issued plan's substate path:
/// `plan_id,created_s,horizon_s,index,c1_m,c2_m,theta_rad,v_mps`.
/// Substates are evenly spaced over `horizon_s`.
pub fn write_plans_csv(log: &SimLog, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["plan_id", "created_s", "horizon_s", "index", "c1_m", "c2_m", "theta_rad", "v_mps"])?;
    for p in &log.plans {
        let pts = if p.path.len() > 1 { &p.path } else { &p.states };
        let span = p.stage_duration * p.horizon() as f64;
        for (i, z) in pts.iter().enumerate() {
            w.write_record([
                p.id.to_string(),
                p.created_at.to_string(),
                span.to_string(),
                i.to_string(),
                z.position[0].to_string(),
                z.position[1].to_string(),
                z.heading.to_string(),
                z.speed.to_string(),
            ])?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Writes the per-replan CSV:
/// `time_s,plan_id,hc_ms,accepted,emergency,warm_start,cost,infeasibility`.
pub fn write_replans_csv(log: &SimLog, path: &Path) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time_s", "plan_id", "hc_ms", "accepted", "emergency", "warm_start", "cost", "infeasibility"])?;
    for r in &log.replans {
        let ws = match r.warm_start {
            Some(crate::controller::WarmStart::CenterDirection) => "center_direction",
            Some(crate::controller::WarmStart::Shifted) => "shifted",
            None => "",
        };
        w.write_record([
            r.time.to_string(),
            r.plan_id.to_string(),
            r.hc_ms.to_string(),
            r.accepted.to_string(),
            r.emergency.to_string(),
            ws.to_string(),
            r.cost.to_string(),
            r.infeasibility.to_string(),
        ])?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Outcome of one scenario in a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    /// Output stem (the name, suffixed when duplicated).
    pub output: String,
    pub reached: bool,
    pub time_to_target_s: Option<f64>,
    pub min_margin_m: Option<f64>,
    pub collision_ticks: usize,
    pub accepted_plans: usize,
    pub rejected_plans: usize,
    pub lc_timeouts: usize,
    pub tracking_m: Option<Stats>,
    pub hc_ms: Option<Stats>,
    pub lc_ms: Option<Stats>,
    pub seed: Option<u64>,
    pub error: Option<String>,
}

impl RunSummary {
    /// Reached the target without any sampled collision.
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && self.reached
            && self.collision_ticks == 0
            && self.min_margin_m.is_some_and(|m| m > 0.0)
    }

    fn failed(name: &str, output: &str, seed: Option<u64>, error: String) -> Self {
        Self {
            name: name.into(),
            output: output.into(),
            reached: false,
            time_to_target_s: None,
            min_margin_m: None,
            collision_ticks: 0,
            accepted_plans: 0,
            rejected_plans: 0,
            lc_timeouts: 0,
            tracking_m: None,
            hc_ms: None,
            lc_ms: None,
            seed,
            error: Some(error),
        }
    }

    pub fn from_log(output: &str, log: &SimLog) -> Self {
        let m = compute_metrics(log);
        Self {
            name: log.scenario.clone(),
            output: output.into(),
            reached: log.reached,
            time_to_target_s: log.time_to_target,
            min_margin_m: m.min_margin.is_finite().then_some(m.min_margin),
            collision_ticks: log.ticks.iter().filter(|t| t.collision).count(),
            accepted_plans: log.replans.iter().filter(|r| r.accepted).count(),
            rejected_plans: log.replans.iter().filter(|r| !r.accepted).count(),
            lc_timeouts: log.lc_timeouts,
            tracking_m: (m.tracking.count > 0).then_some(m.tracking),
            hc_ms: (m.hc_ms.count > 0).then_some(m.hc_ms),
            lc_ms: (m.lc_ms.count > 0).then_some(m.lc_ms),
            seed: log.seed,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    pub reached: usize,
    pub runs: Vec<RunSummary>,
}

/// Unique output stems: repeated names get `_2`, `_3`, … suffixes.
pub fn output_stems<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    names
        .into_iter()
        .map(|n| {
            let count = seen.entry(n).or_insert(0);
            *count += 1;
            if *count == 1 {
                n.to_string()
            } else {
                format!("{n}_{count}")
            }
        })
        .collect()
}

/// Writes `<stem>.csv`, `<stem>_plans.csv`, `<stem>_replans.csv` and
/// `<stem>_summary.json` into `out_dir`.
pub fn write_run_outputs(
    scenario: &Scenario,
    log: &SimLog,
    stem: &str,
    out_dir: &Path,
) -> Result<RunSummary, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    write_log_csv(log, scenario.obstacles.len(), &out_dir.join(format!("{stem}.csv")))?;
    write_plans_csv(log, &out_dir.join(format!("{stem}_plans.csv")))?;
    write_replans_csv(log, &out_dir.join(format!("{stem}_replans.csv")))?;
    let summary = RunSummary::from_log(stem, log);
    write_json(&summary, &out_dir.join(format!("{stem}_summary.json")))?;
    Ok(summary)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w).map_err(io_err(path))?;
    Ok(())
}

/// Runs every scenario (each for its own `duration_s`), writing one set of
/// log files per run plus `summary.json`. A failing scenario is recorded
/// and the batch continues.
pub fn run_batch(scenarios: &[Scenario], out_dir: &Path, seed: Option<u64>) -> Result<BatchSummary, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let stems = output_stems(scenarios.iter().map(|s| s.name.as_str()));
    let mut runs = Vec::with_capacity(scenarios.len());
    for (scenario, stem) in scenarios.iter().zip(&stems) {
        let result = scenario.validate().and_then(|_| {
            let mut opts = RunOptions::new(scenario.duration_s);
            opts.seed = seed;
            let log = closed_loop_run(scenario, &opts)?;
            write_run_outputs(scenario, &log, stem, out_dir)
        });
        runs.push(result.unwrap_or_else(|e| RunSummary::failed(&scenario.name, stem, seed, e.to_string())));
    }
    let summary = BatchSummary {
        total: runs.len(),
        reached: runs.iter().filter(|r| r.reached).count(),
        runs,
    };
    write_json(&summary, &out_dir.join("summary.json"))?;
    Ok(summary)
}

/// Loads every `*.json` scenario in `dir`, sorted by file name.
pub fn load_scenario_dir(dir: &Path) -> Result<Vec<Scenario>, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_scenario(p)).collect()
}
