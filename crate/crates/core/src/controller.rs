//! Two-layer receding-horizon controller.
//!
//! The planner (HC) solves the collision-avoiding problem every `τ` ticks
//! with two warm starts; the tracker (LC) follows the newest accepted plan
//! every tick. Safety rules: LC outputs zero input when it runs out of
//! time, and a rejected HC solve leaves the active plan untouched.


use serde::{Deserialize, Serialize};

use crate::dynamics::{euler_step, ControlInput, ModelParams, VehicleState};
use crate::geometry::{clearance, wrap_angle, intersects_oracle, separation_margin, SeparatingAxis};
use crate::harness::Scenario;
use crate::ocp::{transcribe_hc, transcribe_lc, OcpError, OcpProblem};
use crate::solver::{alm_solve, SmoothProblem, SolveClock, SolverRun};

/// Largest stage-wise separation margin tolerated in an accepted plan.
pub const PLAN_MARGIN_TOL: f64 = 1e-6;

/// Planned states `z*_0 … z*_H`, spaced `stage_duration` seconds apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub id: u64,
    pub states: Vec<VehicleState>,
    /// Every Euler substate between the stages (empty if unknown).
    pub path: Vec<VehicleState>,
    pub inputs: Vec<ControlInput>,
    /// Axes per obstacle, `H + 1` each.
    pub axes: Vec<Vec<[f64; 2]>>,
    pub stage_duration: f64,
    /// Simulation time at which the plan was issued (s).
    pub created_at: f64,
    pub cost: f64,
    pub infeasibility: f64,
}

impl Trajectory {
    pub fn from_states(states: Vec<VehicleState>, stage_duration: f64) -> Self {
        Self {
            id: 0,
            states,
            path: Vec::new(),
            inputs: Vec::new(),
            axes: Vec::new(),
            stage_duration,
            created_at: 0.0,
            cost: 0.0,
            infeasibility: 0.0,
        }
    }

    pub fn horizon(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    /// Planned state `elapsed` seconds after issue, interpolated along the
    /// substep path when available and saturated at the final state.
    pub fn state_at(&self, elapsed: f64) -> VehicleState {
        let (pts, spacing) = if self.path.len() > 1 {
            (
                &self.path,
                self.stage_duration * self.horizon() as f64 / (self.path.len() - 1) as f64,
            )
        } else {
            (&self.states, self.stage_duration)
        };
        let s = (elapsed.max(0.0) / spacing).min((pts.len() - 1) as f64);
        let i = (s.floor() as usize).min(pts.len() - 1);
        let frac = s - i as f64;
        if i + 1 >= pts.len() || frac < 1e-9 {
            return pts[i];
        }
        let (a, b) = (&pts[i], &pts[i + 1]);
        let lerp = |x: f64, y: f64| x + frac * (y - x);
        VehicleState::new(
            [lerp(a.position[0], b.position[0]), lerp(a.position[1], b.position[1])],
            a.heading + frac * wrap_angle(b.heading - a.heading),
            lerp(a.speed, b.speed),
        )
    }

    pub fn position_at(&self, elapsed: f64) -> [f64; 2] {
        self.state_at(elapsed).position
    }
}

/// Derived timing of the two layers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerTiming {
    /// LC period `t_L = T` (s).
    pub lc_period: f64,
    /// `τ`, LC ticks per HC period.
    pub ratio: usize,
    /// LC emphasized stage `ω`.
    pub carrot_stage: usize,
}

impl ControllerTiming {
    pub fn hc_period(&self) -> f64 {
        self.ratio as f64 * self.lc_period
    }

    /// Checks `ω mod τ = 0` and `L t_L < H t_H`.
    pub fn validate(&self, lc_horizon: usize, hc_horizon: usize) -> Result<(), String> {
        if self.ratio == 0 {
            return Err("ratio must be >= 1".into());
        }
        if !self.carrot_stage.is_multiple_of(self.ratio) {
            return Err(format!(
                "carrot stage {} must be a multiple of the ratio {}",
                self.carrot_stage, self.ratio
            ));
        }
        let lc_span = lc_horizon as f64 * self.lc_period;
        let hc_span = hc_horizon as f64 * self.hc_period();
        if !(lc_span < hc_span) {
            return Err(format!("tracking horizon {lc_span} s must be shorter than planning horizon {hc_span} s"));
        }
        Ok(())
    }
}

/// Which warm start produced a planner solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WarmStart {
    /// Zero inputs, axes towards obstacle centers.
    CenterDirection,
    /// Previous converged solution shifted by one stage.
    Shifted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverAttempt {
    pub warm_start: WarmStart,
    pub cost: f64,
    pub infeasibility: f64,
    pub penalty: f64,
    pub max_margin: f64,
    pub elapsed_ms: f64,
    pub passed_gate: bool,
    pub timed_out: bool,
}

/// Result of one planner invocation.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    /// New plan when accepted, or an emergency plan when nothing was
    /// accepted and no previous plan exists.
    pub plan: Option<Trajectory>,
    pub accepted: bool,
    pub emergency: bool,
    pub chosen: Option<WarmStart>,
    /// Winning run, kept for the next shifted warm start.
    pub run: Option<SolverRun>,
    pub attempts: Vec<SolverAttempt>,
    pub elapsed_ms: f64,
}

/// Shifts a planner solution by one stage: inputs and axes drop their first
/// entry and repeat their last one; axes are re-normalized.
pub fn shift_solution(x: &[f64], horizon: usize, obstacles: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let inputs = &x[..2 * horizon];
    out.extend_from_slice(&inputs[2..]);
    out.extend_from_slice(&inputs[2 * (horizon - 1)..]);
    let per = 2 * (horizon + 1);
    for j in 0..obstacles {
        let block = &x[2 * horizon + j * per..2 * horizon + (j + 1) * per];
        let mut shifted: Vec<f64> = block[2..].to_vec();
        shifted.extend_from_slice(&block[per - 2..]);
        for a in shifted.chunks_mut(2) {
            let p = crate::solver::project_sphere_block([a[0], a[1]], [1.0, 0.0]);
            a[0] = p[0];
            a[1] = p[1];
        }
        out.extend(shifted);
    }
    out
}

/// Shifts multipliers (obstacle-major, `H + 1` rows each) by one stage.
pub fn shift_multipliers(y: &[f64], horizon: usize) -> Vec<f64> {
    let rows = horizon + 1;
    y.chunks(rows)
        .flat_map(|block| {
            let mut b = block[1..].to_vec();
            b.push(block[rows - 1]);
            b
        })
        .collect()
}

/// Worst stage-wise separation margin of a planner solution (without the
/// clearance offset).
pub fn worst_plan_margin(scenario: &Scenario, problem: &OcpProblem, x: &[f64]) -> f64 {
    let states = problem.stage_states(x);
    let mut worst = f64::NEG_INFINITY;
    for (j, e) in scenario.obstacles.iter().enumerate() {
        for (z, a) in states.iter().zip(problem.axes(x, j)) {
            let v = scenario.vehicle.at(z);
            let axis = match SeparatingAxis::new(a) {
                Ok(axis) => axis,
                Err(_) => return f64::INFINITY,
            };
            worst = worst.max(separation_margin(&v, e, &axis));
        }
    }
    worst
}

fn hold_position_plan(state: &VehicleState, scenario: &Scenario, now: f64, id: u64) -> Trajectory {
    let tau = scenario.hc.substeps;
    let mut path = vec![*state];
    let mut z = *state;
    for _ in 0..scenario.hc.horizon * tau {
        z = euler_step(&z, &ControlInput::ZERO, &scenario.model);
        path.push(z);
    }
    Trajectory {
        id,
        states: path.iter().step_by(tau).copied().collect(),
        path,
        inputs: vec![ControlInput::ZERO; scenario.hc.horizon],
        axes: Vec::new(),
        stage_duration: scenario.timing().hc_period(),
        created_at: now,
        cost: f64::NAN,
        infeasibility: f64::NAN,
    }
}

/// Plans from `state`.
///
/// Solver A always runs from the center-direction warm start. Solver B runs
/// in parallel when `prev` (the last accepted run) is available, from its
/// shifted solution. Among runs that finished in time and pass the
/// infeasibility gate with a certified plan, the lowest cost wins.
pub fn hc_plan(
    state: &VehicleState,
    scenario: &Scenario,
    previous_input: ControlInput,
    prev: Option<&SolverRun>,
    last_plan: Option<&Trajectory>,
    now: f64,
    plan_id: u64,
) -> Result<PlanOutcome, OcpError> {
    // Solver time is thread CPU time; the two runs are concurrent, so the
    // planner latency counts only the slower one.
    let start = SolveClock::start();
    let vehicle = scenario.vehicle.at(state);
    let problem = transcribe_hc(
        state,
        &scenario.target,
        &scenario.obstacles,
        &vehicle,
        &scenario.hc,
        &scenario.model,
        previous_input,
        scenario.clearance,
    )?;
    let cfg = &scenario.hc_solver;
    let h = scenario.hc.horizon;
    let x_a = problem.center_direction_guess();
    let y_a = vec![0.0; problem.num_constraints()];
    let warm_b = prev.map(|run| {
        (
            shift_solution(&run.solution, h, scenario.obstacles.len()),
            shift_multipliers(&run.multipliers, h),
        )
    });

    let (run_a, run_b) = std::thread::scope(|s| {
        let handle = warm_b
            .as_ref()
            .map(|(x, y)| s.spawn(|| alm_solve(&problem, x, y, cfg)));
        let a = alm_solve(&problem, &x_a, &y_a, cfg);
        (a, handle.map(|h| h.join().expect("planner thread panicked")))
    });
    let slowest_ms = run_b.as_ref().map_or(run_a.elapsed_ms, |b| b.elapsed_ms.max(run_a.elapsed_ms));
    let solve_a_ms = run_a.elapsed_ms;

    let kappa = cfg.infeasibility_tolerance;
    let mut attempts = Vec::new();
    let mut best: Option<(WarmStart, SolverRun)> = None;
    for (ws, run) in [(WarmStart::CenterDirection, Some(run_a)), (WarmStart::Shifted, run_b)] {
        let Some(run) = run else { continue };
        let max_margin = worst_plan_margin(scenario, &problem, &run.solution);
        let gate = run.passes_gate(kappa);
        attempts.push(SolverAttempt {
            warm_start: ws,
            cost: run.cost,
            infeasibility: run.infeasibility,
            penalty: run.penalty,
            max_margin,
            elapsed_ms: run.elapsed_ms,
            passed_gate: gate,
            timed_out: run.timed_out,
        });
        let usable = gate && !run.timed_out && max_margin <= PLAN_MARGIN_TOL && run.cost.is_finite();
        if usable && best.as_ref().is_none_or(|(_, b)| run.cost < b.cost) {
            best = Some((ws, run));
        }
    }

    let elapsed_ms = start.elapsed_ms() - solve_a_ms + slowest_ms;
    let Some((ws, run)) = best else {
        let emergency = last_plan.is_none();
        return Ok(PlanOutcome {
            plan: emergency.then(|| hold_position_plan(state, scenario, now, plan_id)),
            accepted: false,
            emergency,
            chosen: None,
            run: None,
            attempts,
            elapsed_ms,
        });
    };
    let path = problem.substates(&run.solution);
    let plan = Trajectory {
        id: plan_id,
        states: path.iter().step_by(scenario.hc.substeps).copied().collect(),
        path,
        inputs: problem.inputs(&run.solution),
        axes: (0..scenario.obstacles.len()).map(|j| problem.axes(&run.solution, j)).collect(),
        stage_duration: scenario.timing().hc_period(),
        created_at: now,
        cost: run.cost,
        infeasibility: run.infeasibility,
    };
    Ok(PlanOutcome {
        plan: Some(plan),
        accepted: true,
        emergency: false,
        chosen: Some(ws),
        run: Some(run),
        attempts,
        elapsed_ms,
    })
}

/// Result of one tracker invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct LcOutcome {
    pub input: ControlInput,
    /// Full solution, reused (shifted) as the next warm start.
    pub solution: Vec<f64>,
    pub elapsed_ms: f64,
    pub timed_out: bool,
    pub converged: bool,
}

/// Tracks `plan` (issued `plan_age` ticks ago) from `state`.
///
/// Warm-started from the previous solution shifted by one stage. If the
/// solve exceeds its time budget the returned input is zero.
pub fn lc_control(
    state: &VehicleState,
    plan: &Trajectory,
    plan_age: usize,
    previous_input: ControlInput,
    warm: Option<&[f64]>,
    scenario: &Scenario,
) -> Result<LcOutcome, OcpError> {
    let start = SolveClock::start();
    let cfg = &scenario.lc_solver;
    let problem = transcribe_lc(
        state,
        plan,
        plan_age,
        scenario.hc.substeps,
        &scenario.lc,
        &scenario.model,
        previous_input,
    )?;
    let n = problem.dim();
    let x0 = match warm {
        Some(w) if w.len() == n && n >= 2 => {
            let mut x = w[2..].to_vec();
            x.extend_from_slice(&w[n - 2..]);
            x
        }
        _ => vec![0.0; n],
    };
    let run = alm_solve(&problem, &x0, &[], cfg);
    let elapsed = start.elapsed();
    let timed_out = run.timed_out || elapsed > cfg.time_budget();
    let input = if timed_out {
        ControlInput::ZERO
    } else {
        ControlInput {
            throttle: run.solution[0],
            spin: run.solution[1],
        }
    };
    Ok(LcOutcome {
        input,
        solution: run.solution,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
        timed_out,
        converged: run.converged,
    })
}

/// Plant used by the simulator: the controller model, optionally perturbed.
pub fn plant_model(scenario: &Scenario, perturbation: Option<[f64; 3]>) -> ModelParams {
    match perturbation {
        Some(f) => scenario.model.perturbed(f),
        None => scenario.model,
    }
}

/// One LC tick of a closed-loop run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub time: f64,
    /// State at `time`, before the input is applied.
    pub state: VehicleState,
    pub input: ControlInput,
    pub plan_id: u64,
    /// LC solver runtime; `None` on the final row.
    pub lc_ms: Option<f64>,
    /// HC solver runtime when a replan started at this tick.
    pub hc_ms: Option<f64>,
    /// Distance to each obstacle (negative when overlapping).
    pub margins: Vec<f64>,
    /// Sampled intersection test against any obstacle.
    pub collision: bool,
    /// Distance to the active plan's reference at the current plan age.
    pub tracking_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplanRecord {
    pub time: f64,
    pub hc_ms: f64,
    pub accepted: bool,
    pub emergency: bool,
    /// Plan id produced (accepted or emergency), else the active one.
    pub plan_id: u64,
    pub cost: f64,
    pub infeasibility: f64,
    pub warm_start: Option<WarmStart>,
    pub attempts: Vec<SolverAttempt>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub scenario: String,
    pub ticks: Vec<TickRecord>,
    pub replans: Vec<ReplanRecord>,
    pub plans: Vec<Trajectory>,
    pub reached: bool,
    pub time_to_target: Option<f64>,
    pub seed: Option<u64>,
    pub lc_timeouts: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Simulated duration cap (s).
    pub duration: f64,
    /// Plant parameter perturbation, see [`ModelParams::perturbed`].
    pub perturbation: Option<[f64; 3]>,
    pub seed: Option<u64>,
    /// Boundary samples for the per-tick intersection test.
    pub oracle_samples: usize,
}

impl RunOptions {
    pub fn new(duration: f64) -> Self {
        Self {
            duration,
            perturbation: None,
            seed: None,
            oracle_samples: 10_000,
        }
    }
}

struct PendingPlan {
    issued_tick: usize,
    handle: std::thread::JoinHandle<Result<PlanOutcome, OcpError>>,
}

/// Simulates the closed loop on a virtual clock.
///
/// Every tick: replan if due, track, then advance the plant one Euler step.
/// With `hc_latency_ticks = d > 0` a replan started at tick `k` runs on a
/// background thread and its plan is swapped in before tick `k + d`. The
/// run stops once the vehicle is within `goal_radius` of the target.
pub fn closed_loop_run(scenario: &Scenario, opts: &RunOptions) -> Result<SimLog, OcpError> {
    let timing = scenario.timing();
    let tau = timing.ratio;
    let dt = timing.lc_period;
    let ticks = if opts.duration > 0.0 {
        (opts.duration / dt).round() as usize
    } else {
        0
    };
    let plant = plant_model(scenario, opts.perturbation);
    let shared = std::sync::Arc::new(scenario.clone());
    let mut log = SimLog {
        scenario: scenario.name.clone(),
        ticks: Vec::new(),
        replans: Vec::new(),
        plans: Vec::new(),
        reached: false,
        time_to_target: None,
        seed: opts.seed,
        lc_timeouts: 0,
    };
    if ticks == 0 {
        return Ok(log);
    }

    let mut z = scenario.initial_state;
    let mut u_prev = ControlInput::ZERO;
    let mut active: Option<(Trajectory, usize)> = None;
    let mut last_run: Option<SolverRun> = None;
    let mut lc_warm: Option<Vec<f64>> = None;
    let mut pending: Option<PendingPlan> = None;
    let mut next_id = 1u64;
    let mut hc_row: Option<usize> = None;

    let install = |outcome: PlanOutcome,
                       issued_tick: usize,
                       active: &mut Option<(Trajectory, usize)>,
                       last_run: &mut Option<SolverRun>,
                       log: &mut SimLog| {
        let plan_id = outcome
            .plan
            .as_ref()
            .map(|p| p.id)
            .or_else(|| active.as_ref().map(|(p, _)| p.id))
            .unwrap_or(0);
        log.replans.push(ReplanRecord {
            time: issued_tick as f64 * dt,
            hc_ms: outcome.elapsed_ms,
            accepted: outcome.accepted,
            emergency: outcome.emergency,
            plan_id,
            cost: outcome.plan.as_ref().map_or(f64::NAN, |p| p.cost),
            infeasibility: outcome.plan.as_ref().map_or(f64::NAN, |p| p.infeasibility),
            warm_start: outcome.chosen,
            attempts: outcome.attempts,
        });
        if outcome.accepted {
            *last_run = outcome.run;
        }
        if let Some(plan) = outcome.plan {
            log.plans.push(plan.clone());
            *active = Some((plan, issued_tick));
        }
    };

    for tick in 0..ticks {
        let time = tick as f64 * dt;
        let mut hc_ms = None;
        if let Some(p) = pending.take_if(|p| tick >= p.issued_tick + scenario.hc_latency_ticks) {
            let outcome = p.handle.join().expect("planner thread panicked")?;
            if let Some(row) = hc_row.take() {
                log.ticks[row].hc_ms = Some(outcome.elapsed_ms);
            }
            install(outcome, p.issued_tick, &mut active, &mut last_run, &mut log);
        }
        if tick % tau == 0 && pending.is_none() {
            let id = next_id;
            next_id += 1;
            if scenario.hc_latency_ticks == 0 || active.is_none() {
                let outcome = hc_plan(
                    &z,
                    scenario,
                    u_prev,
                    last_run.as_ref(),
                    active.as_ref().map(|(p, _)| p),
                    time,
                    id,
                )?;
                hc_ms = Some(outcome.elapsed_ms);
                install(outcome, tick, &mut active, &mut last_run, &mut log);
            } else {
                let sc = shared.clone();
                let prev = last_run.clone();
                let last = active.as_ref().map(|(p, _)| p.clone());
                let state = z;
                let u = u_prev;
                pending = Some(PendingPlan {
                    issued_tick: tick,
                    handle: std::thread::spawn(move || {
                        hc_plan(&state, &sc, u, prev.as_ref(), last.as_ref(), time, id)
                    }),
                });
                hc_row = Some(log.ticks.len());
            }
        }
        let (plan, issued) = active.as_ref().expect("first replan always yields a plan");
        let age = tick - issued;
        let lc = lc_control(&z, plan, age, u_prev, lc_warm.as_deref(), scenario)?;
        if lc.timed_out {
            log.lc_timeouts += 1;
        }
        let reference = plan.position_at(age as f64 * dt);
        log.ticks.push(tick_record(
            scenario,
            opts,
            time,
            z,
            lc.input,
            plan.id,
            Some(lc.elapsed_ms),
            hc_ms,
            reference,
        ));
        lc_warm = Some(lc.solution);
        u_prev = lc.input;
        z = euler_step(&z, &lc.input, &plant);
        if z.distance_to(scenario.target.position) <= scenario.goal_radius {
            log.reached = true;
            log.time_to_target = Some((tick + 1) as f64 * dt);
            let age = tick + 1 - issued;
            let reference = plan.position_at(age as f64 * dt);
            let id = plan.id;
            log.ticks.push(tick_record(
                scenario,
                opts,
                (tick + 1) as f64 * dt,
                z,
                ControlInput::ZERO,
                id,
                None,
                None,
                reference,
            ));
            break;
        }
    }
    if let Some(p) = pending.take() {
        let outcome = p.handle.join().expect("planner thread panicked")?;
        if let Some(row) = hc_row.take() {
            log.ticks[row].hc_ms = Some(outcome.elapsed_ms);
        }
        install(outcome, p.issued_tick, &mut active, &mut last_run, &mut log);
    }
    if !log.reached {
        let (plan, issued) = active.as_ref().expect("at least one tick ran");
        let age = ticks - issued;
        let reference = plan.position_at(age as f64 * dt);
        log.ticks.push(tick_record(
            scenario,
            opts,
            ticks as f64 * dt,
            z,
            ControlInput::ZERO,
            plan.id,
            None,
            None,
            reference,
        ));
    }
    Ok(log)
}

#[allow(clippy::too_many_arguments)]
fn tick_record(
    scenario: &Scenario,
    opts: &RunOptions,
    time: f64,
    state: VehicleState,
    input: ControlInput,
    plan_id: u64,
    lc_ms: Option<f64>,
    hc_ms: Option<f64>,
    reference: [f64; 2],
) -> TickRecord {
    let vehicle = scenario.vehicle.at(&state);
    let margins = scenario
        .obstacles
        .iter()
        .map(|e| clearance(&vehicle, e))
        .collect();
    let collision = scenario
        .obstacles
        .iter()
        .any(|e| intersects_oracle(&vehicle, e, opts.oracle_samples));
    TickRecord {
        time,
        state,
        input,
        plan_id,
        lc_ms,
        hc_ms,
        margins,
        collision,
        tracking_error: state.distance_to(reference),
    }
}
