//! Single-shooting transcription of the planning (high-level) and tracking
//! (low-level) optimal control problems.
//!
//! States are eliminated by forward simulation, so the decision vector only
//! holds inputs and, for the planner, one separating axis per stage and
//! obstacle. Gradients are computed by reverse accumulation through the
//! rollout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::controller::Trajectory;
use crate::dynamics::{euler_step, euler_step_vjp, ControlInput, ModelParams, VehicleState};
use crate::geometry::{dot, lp_norm_grad, rotate, rotate_transpose, wrap_angle, Superellipsoid};
use crate::solver::{FeasibleSet, SmoothProblem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OcpError {
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("plan has {available} states but stage {needed} is required")]
    PlanTooShort { needed: usize, available: usize },
    #[error("all shapes must share one exponent (vehicle {vehicle}, obstacle {obstacle})")]
    MixedExponent { vehicle: f64, obstacle: f64 },
}

/// Planner weights, horizon and input bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HcWeights {
    pub q_position: f64,
    pub q_heading: f64,
    pub q_throttle: f64,
    pub q_throttle_rate: f64,
    pub q_spin: f64,
    pub q_spin_rate: f64,
    pub q_terminal_position: f64,
    pub q_terminal_heading: f64,
    /// Number of planner stages `H`.
    pub horizon: usize,
    /// Euler substeps per planner stage `τ`.
    pub substeps: usize,
    pub throttle_max: f64,
    pub spin_max: f64,
}

impl HcWeights {
    /// Simulation column of the parameter table.
    pub fn simulation() -> Self {
        Self {
            q_position: 1.0,
            q_heading: 0.0,
            q_throttle: 0.01,
            q_throttle_rate: 0.0,
            q_spin: 0.5,
            q_spin_rate: 0.0,
            q_terminal_position: 20.0,
            q_terminal_heading: 0.0,
            horizon: 40,
            substeps: 10,
            throttle_max: 1.0,
            spin_max: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        check_weights(&[
            ("q_position", self.q_position),
            ("q_heading", self.q_heading),
            ("q_throttle", self.q_throttle),
            ("q_throttle_rate", self.q_throttle_rate),
            ("q_spin", self.q_spin),
            ("q_spin_rate", self.q_spin_rate),
            ("q_terminal_position", self.q_terminal_position),
            ("q_terminal_heading", self.q_terminal_heading),
        ])?;
        if self.horizon < 2 {
            return Err(OcpError::InvalidWeights("horizon must be >= 2".into()));
        }
        if self.substeps < 1 {
            return Err(OcpError::InvalidWeights("substeps must be >= 1".into()));
        }
        check_bounds(self.throttle_max, self.spin_max)
    }
}

/// Tracking weights, horizon, emphasized stage `ω` and input bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcWeights {
    pub q_position: f64,
    pub q_heading: f64,
    pub q_throttle: f64,
    pub q_throttle_rate: f64,
    pub q_spin: f64,
    pub q_spin_rate: f64,
    pub q_carrot_position: f64,
    pub q_carrot_heading: f64,
    pub q_terminal_position: f64,
    pub q_terminal_heading: f64,
    /// Number of tracking stages `L`.
    pub horizon: usize,
    /// Heavily weighted stage `ω`.
    pub carrot_stage: usize,
    pub throttle_max: f64,
    pub spin_max: f64,
    #[serde(default)]
    pub reference: ReferenceTiming,
}

impl LcWeights {
    pub fn simulation() -> Self {
        Self {
            q_position: 100.0,
            q_heading: 0.0,
            q_throttle: 0.01,
            q_throttle_rate: 0.0,
            q_spin: 0.1,
            q_spin_rate: 0.0,
            q_carrot_position: 1000.0,
            q_carrot_heading: 0.0,
            q_terminal_position: 100.0,
            q_terminal_heading: 0.0,
            horizon: 100,
            carrot_stage: 20,
            throttle_max: 1.0,
            spin_max: 1.0,
            reference: ReferenceTiming::TimeAligned,
        }
    }

    pub fn validate(&self) -> Result<(), OcpError> {
        check_weights(&[
            ("q_position", self.q_position),
            ("q_heading", self.q_heading),
            ("q_throttle", self.q_throttle),
            ("q_throttle_rate", self.q_throttle_rate),
            ("q_spin", self.q_spin),
            ("q_spin_rate", self.q_spin_rate),
            ("q_carrot_position", self.q_carrot_position),
            ("q_carrot_heading", self.q_carrot_heading),
            ("q_terminal_position", self.q_terminal_position),
            ("q_terminal_heading", self.q_terminal_heading),
        ])?;
        if self.horizon < 1 {
            return Err(OcpError::InvalidWeights("horizon must be >= 1".into()));
        }
        if self.carrot_stage >= self.horizon {
            return Err(OcpError::InvalidWeights("carrot_stage must be < horizon".into()));
        }
        check_bounds(self.throttle_max, self.spin_max)
    }
}

fn check_weights(list: &[(&str, f64)]) -> Result<(), OcpError> {
    for (name, v) in list {
        if !(*v >= 0.0) || !v.is_finite() {
            return Err(OcpError::InvalidWeights(format!("{name} must be finite and >= 0")));
        }
    }
    Ok(())
}

fn check_bounds(r: f64, s: f64) -> Result<(), OcpError> {
    if !(r > 0.0 && r <= 1.0) || !(s > 0.0 && s <= 1.0) {
        return Err(OcpError::InvalidWeights("input bounds must lie in (0, 1]".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTarget {
    pub position: [f64; 2],
    pub heading: f64,
}

/// Position, heading and input weights for one quadratic tracking term.
#[derive(Clone, Copy)]
struct StageWeights {
    position: f64,
    heading: f64,
    throttle: f64,
    throttle_rate: f64,
    spin: f64,
    spin_rate: f64,
}

impl StageWeights {
    fn state_cost(&self, z: &VehicleState, pos: [f64; 2], heading: f64) -> f64 {
        let dc = [z.position[0] - pos[0], z.position[1] - pos[1]];
        let dth = wrap_angle(z.heading - heading);
        self.position * dot(dc, dc) + self.heading * dth * dth
    }

    /// Gradient of [`Self::state_cost`] with respect to `(c1, c2, θ, v)`.
    fn state_grad(&self, z: &VehicleState, pos: [f64; 2], heading: f64) -> [f64; 4] {
        let dth = wrap_angle(z.heading - heading);
        [
            2.0 * self.position * (z.position[0] - pos[0]),
            2.0 * self.position * (z.position[1] - pos[1]),
            2.0 * self.heading * dth,
            0.0,
        ]
    }

    fn input_cost(&self, u: [f64; 2], prev: [f64; 2]) -> f64 {
        self.throttle * u[0] * u[0]
            + self.throttle_rate * (u[0] - prev[0]).powi(2)
            + self.spin * u[1] * u[1]
            + self.spin_rate * (u[1] - prev[1]).powi(2)
    }

    /// Gradients with respect to `u` and to `prev`.
    fn input_grad(&self, u: [f64; 2], prev: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        let dr = 2.0 * self.throttle_rate * (u[0] - prev[0]);
        let ds = 2.0 * self.spin_rate * (u[1] - prev[1]);
        (
            [2.0 * self.throttle * u[0] + dr, 2.0 * self.spin * u[1] + ds],
            [-dr, -ds],
        )
    }
}

impl HcWeights {
    fn stage(&self) -> StageWeights {
        StageWeights {
            position: self.q_position,
            heading: self.q_heading,
            throttle: self.q_throttle,
            throttle_rate: self.q_throttle_rate,
            spin: self.q_spin,
            spin_rate: self.q_spin_rate,
        }
    }

    fn terminal(&self) -> StageWeights {
        StageWeights {
            position: self.q_terminal_position,
            heading: self.q_terminal_heading,
            throttle: 0.0,
            throttle_rate: 0.0,
            spin: 0.0,
            spin_rate: 0.0,
        }
    }
}

impl LcWeights {
    fn stage(&self, k: usize) -> StageWeights {
        let (position, heading) = if k == self.carrot_stage {
            (self.q_carrot_position, self.q_carrot_heading)
        } else {
            (self.q_position, self.q_heading)
        };
        StageWeights {
            position,
            heading,
            throttle: self.q_throttle,
            throttle_rate: self.q_throttle_rate,
            spin: self.q_spin,
            spin_rate: self.q_spin_rate,
        }
    }

    fn terminal(&self) -> StageWeights {
        StageWeights {
            position: self.q_terminal_position,
            heading: self.q_terminal_heading,
            throttle: 0.0,
            throttle_rate: 0.0,
            spin: 0.0,
            spin_rate: 0.0,
        }
    }
}

fn pair(u: &ControlInput) -> [f64; 2] {
    [u.throttle, u.spin]
}

/// Planner stage cost; zero on odd stages.
pub fn hc_stage_cost(
    t: usize,
    z: &VehicleState,
    u: &ControlInput,
    u_prev: &ControlInput,
    w: &HcWeights,
    target: &ReferenceTarget,
) -> f64 {
    if t % 2 == 1 {
        return 0.0;
    }
    let sw = w.stage();
    sw.state_cost(z, target.position, target.heading) + sw.input_cost(pair(u), pair(u_prev))
}

pub fn hc_terminal_cost(z: &VehicleState, w: &HcWeights, target: &ReferenceTarget) -> f64 {
    w.terminal().state_cost(z, target.position, target.heading)
}

/// Plan stage tracked by tracking stage `k`: `max(1, ⌈k / τ⌉)`.
pub fn carrot_index(k: usize, tau: usize) -> usize {
    assert!(tau >= 1);
    k.div_ceil(tau).max(1)
}

/// How tracking stages pick their point on the plan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceTiming {
    /// Stage `k` tracks the plan point `k` ticks after the plan's current
    /// point.
    #[default]
    TimeAligned,
    /// Stage `k` tracks the plan state `t_k` stages after the plan's
    /// current point, i.e. up to one planning stage ahead of itself.
    Carrot,
}

/// Reference of tracking stage `k` for a plan issued `plan_age` ticks ago,
/// read off the plan path and saturated at its end.
pub fn lc_reference(k: usize, plan_age: usize, tau: usize, plan: &Trajectory, timing: ReferenceTiming) -> VehicleState {
    let tick = plan.stage_duration / tau as f64;
    let ahead = match timing {
        ReferenceTiming::TimeAligned => k,
        ReferenceTiming::Carrot => tau * carrot_index(k, tau),
    };
    plan.state_at((plan_age + ahead) as f64 * tick)
}

/// Tracking cost of stage `k`. For `k == L` this is the terminal cost and
/// the inputs are ignored.
#[allow(clippy::too_many_arguments)]
pub fn lc_costs(
    k: usize,
    z: &VehicleState,
    u: &ControlInput,
    u_prev: &ControlInput,
    plan: &Trajectory,
    plan_age: usize,
    tau: usize,
    w: &LcWeights,
) -> f64 {
    let reference = lc_reference(k, plan_age, tau, plan, w.reference);
    if k == w.horizon {
        return w.terminal().state_cost(z, reference.position, reference.heading);
    }
    let sw = w.stage(k);
    sw.state_cost(z, reference.position, reference.heading) + sw.input_cost(pair(u), pair(u_prev))
}

/// Parameters of the planning problem.
#[derive(Debug, Clone, PartialEq)]
pub struct HighLevel {
    pub initial: VehicleState,
    pub target: ReferenceTarget,
    pub vehicle: Superellipsoid,
    pub obstacles: Vec<Superellipsoid>,
    pub weights: HcWeights,
    pub model: ModelParams,
    pub previous_input: ControlInput,
    /// Required gap between vehicle and obstacles, added to every margin except
    /// the initial stage, which is fixed by the current state.
    pub clearance: f64,
}

/// Parameters of the tracking problem.
#[derive(Debug, Clone, PartialEq)]
pub struct LowLevel {
    pub initial: VehicleState,
    /// Reference `(position, heading)` for stages `0..=L`.
    pub references: Vec<([f64; 2], f64)>,
    pub weights: LcWeights,
    pub model: ModelParams,
    pub previous_input: ControlInput,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemKind {
    High(HighLevel),
    Low(LowLevel),
}

/// A transcribed problem in the form accepted by [`crate::solver::alm_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct OcpProblem {
    pub kind: ProblemKind,
    set: FeasibleSet,
    dim: usize,
    constraints: usize,
}

/// Builds the planning problem.
///
/// Decision layout: `[u_0 … u_{H−1}]` followed, per obstacle, by the axes
/// `[a_0 … a_H]`. Constraint rows are obstacle-major, one per stage.
pub fn transcribe_hc(
    state: &VehicleState,
    target: &ReferenceTarget,
    obstacles: &[Superellipsoid],
    vehicle: &Superellipsoid,
    w: &HcWeights,
    m: &ModelParams,
    previous_input: ControlInput,
    clearance: f64,
) -> Result<OcpProblem, OcpError> {
    w.validate()?;
    m.validate().map_err(OcpError::InvalidWeights)?;
    for e in obstacles {
        if e.exponent() != vehicle.exponent() {
            return Err(OcpError::MixedExponent {
                vehicle: vehicle.exponent(),
                obstacle: e.exponent(),
            });
        }
    }
    let h = w.horizon;
    let n_inputs = 2 * h;
    let per_obstacle = 2 * (h + 1);
    let dim = n_inputs + per_obstacle * obstacles.len();
    let mut lower = Vec::with_capacity(n_inputs);
    let mut upper = Vec::with_capacity(n_inputs);
    for _ in 0..h {
        lower.extend([-w.throttle_max, -w.spin_max]);
        upper.extend([w.throttle_max, w.spin_max]);
    }
    let mut set = FeasibleSet::unconstrained().with_box(0, lower, upper);
    for (j, e) in obstacles.iter().enumerate() {
        let c = e.center();
        let fallback = crate::solver::project_sphere_block(
            [c[0] - state.position[0], c[1] - state.position[1]],
            [1.0, 0.0],
        );
        for t in 0..=h {
            set = set.with_sphere(n_inputs + j * per_obstacle + 2 * t, fallback);
        }
    }
    Ok(OcpProblem {
        kind: ProblemKind::High(HighLevel {
            initial: *state,
            target: *target,
            vehicle: *vehicle,
            obstacles: obstacles.to_vec(),
            weights: *w,
            model: *m,
            previous_input,
            clearance,
        }),
        set,
        dim,
        constraints: obstacles.len() * (h + 1),
    })
}

/// Builds the tracking problem for a plan that is `plan_age` ticks old.
pub fn transcribe_lc(
    state: &VehicleState,
    plan: &Trajectory,
    plan_age: usize,
    tau: usize,
    w: &LcWeights,
    m: &ModelParams,
    previous_input: ControlInput,
) -> Result<OcpProblem, OcpError> {
    w.validate()?;
    m.validate().map_err(OcpError::InvalidWeights)?;
    if tau == 0 {
        return Err(OcpError::InvalidWeights("substeps must be >= 1".into()));
    }
    let needed = carrot_index(w.horizon, tau);
    if plan.states.len() <= needed {
        return Err(OcpError::PlanTooShort {
            needed,
            available: plan.states.len(),
        });
    }
    let references = (0..=w.horizon)
        .map(|k| {
            let z = lc_reference(k, plan_age, tau, plan, w.reference);
            (z.position, z.heading)
        })
        .collect();
    let l = w.horizon;
    let mut lower = Vec::with_capacity(2 * l);
    let mut upper = Vec::with_capacity(2 * l);
    for _ in 0..l {
        lower.extend([-w.throttle_max, -w.spin_max]);
        upper.extend([w.throttle_max, w.spin_max]);
    }
    Ok(OcpProblem {
        kind: ProblemKind::Low(LowLevel {
            initial: *state,
            references,
            weights: *w,
            model: *m,
            previous_input,
        }),
        set: FeasibleSet::unconstrained().with_box(0, lower, upper),
        dim: 2 * l,
        constraints: 0,
    })
}

fn input_at(x: &[f64], t: usize) -> ControlInput {
    ControlInput {
        throttle: x[2 * t],
        spin: x[2 * t + 1],
    }
}

/// Separation margin for a vehicle at `(c, θ)` and its gradients with
/// respect to `(c1, c2, θ)` and to the axis.
fn margin_and_grads(
    vehicle: &Superellipsoid,
    obstacle: &Superellipsoid,
    z: &VehicleState,
    a: [f64; 2],
) -> (f64, [f64; 3], [f64; 2]) {
    let q = vehicle.dual_exponent();
    let sv = vehicle.semi_axes();
    let wv = rotate_transpose(z.heading, a);
    let (nv, gv) = lp_norm_grad([sv[0] * wv[0], sv[1] * wv[1]], q);
    let se = obstacle.semi_axes();
    let we = rotate_transpose(obstacle.heading(), a);
    let (ne, ge) = lp_norm_grad([se[0] * we[0], se[1] * we[1]], obstacle.dual_exponent());
    let ce = obstacle.center();
    let dc = [z.position[0] - ce[0], z.position[1] - ce[1]];
    let value = nv + ne + dot(a, dc);
    let dtheta = gv[0] * sv[0] * wv[1] - gv[1] * sv[1] * wv[0];
    let av = rotate(z.heading, [sv[0] * gv[0], sv[1] * gv[1]]);
    let ae = rotate(obstacle.heading(), [se[0] * ge[0], se[1] * ge[1]]);
    let da = [av[0] + ae[0] + dc[0], av[1] + ae[1] + dc[1]];
    (value, [a[0], a[1], dtheta], da)
}

impl HighLevel {
    fn inputs_len(&self) -> usize {
        2 * self.weights.horizon
    }

    fn axis(&self, x: &[f64], j: usize, t: usize) -> [f64; 2] {
        let k = self.inputs_len() + j * 2 * (self.weights.horizon + 1) + 2 * t;
        [x[k], x[k + 1]]
    }

    /// All Euler substates, `H τ + 1` of them.
    fn simulate(&self, x: &[f64]) -> Vec<VehicleState> {
        let tau = self.weights.substeps;
        let mut states = Vec::with_capacity(self.weights.horizon * tau + 1);
        let mut z = self.initial;
        states.push(z);
        for t in 0..self.weights.horizon {
            let u = input_at(x, t);
            for _ in 0..tau {
                z = euler_step(&z, &u, &self.model);
                states.push(z);
            }
        }
        states
    }

    fn cost_and_constraints(&self, x: &[f64], states: &[VehicleState], c: &mut [f64]) -> f64 {
        let h = self.weights.horizon;
        let tau = self.weights.substeps;
        let mut cost = 0.0;
        let mut prev = self.previous_input;
        for t in 0..h {
            let u = input_at(x, t);
            cost += hc_stage_cost(t, &states[t * tau], &u, &prev, &self.weights, &self.target);
            prev = u;
        }
        cost += hc_terminal_cost(&states[h * tau], &self.weights, &self.target);
        for (j, e) in self.obstacles.iter().enumerate() {
            for t in 0..=h {
                let z = &states[t * tau];
                let v = self.vehicle.with_pose(z.position, z.heading);
                let a = self.axis(x, j, t);
                let offset = if t == 0 { 0.0 } else { self.clearance };
                c[j * (h + 1) + t] = crate::geometry::separation_margin_raw(&v, e, a) + offset;
            }
        }
        cost
    }

    fn gradient(&self, x: &[f64], weight: &dyn Fn(usize, f64) -> f64, grad: &mut [f64], c: &mut [f64]) -> f64 {
        let h = self.weights.horizon;
        let tau = self.weights.substeps;
        let states = self.simulate(x);
        let cost = self.cost_and_constraints(x, &states, c);
        grad.iter_mut().for_each(|g| *g = 0.0);

        // Adjoint of each stage state coming from the margins, plus axis gradients.
        let mut stage_adj = vec![[0.0; 4]; h + 1];
        for (j, e) in self.obstacles.iter().enumerate() {
            for t in 0..=h {
                let row = j * (h + 1) + t;
                let wgt = weight(row, c[row]);
                if wgt == 0.0 {
                    continue;
                }
                let (_, dz, da) = margin_and_grads(&self.vehicle, e, &states[t * tau], self.axis(x, j, t));
                for i in 0..3 {
                    stage_adj[t][i] += wgt * dz[i];
                }
                let k = self.inputs_len() + j * 2 * (h + 1) + 2 * t;
                grad[k] += wgt * da[0];
                grad[k + 1] += wgt * da[1];
            }
        }

        let tw = self.weights.terminal();
        let zt = states[h * tau];
        let g_term = tw.state_grad(&zt, self.target.position, self.target.heading);
        let mut adj = [0.0; 4];
        for i in 0..4 {
            adj[i] = g_term[i] + stage_adj[h][i];
        }
        let sw = self.weights.stage();
        for t in (0..h).rev() {
            let u = input_at(x, t);
            for s in (0..tau).rev() {
                let (dz, du) = euler_step_vjp(&states[t * tau + s], &self.model, adj);
                adj = dz;
                grad[2 * t] += du[0];
                grad[2 * t + 1] += du[1];
            }
            if t % 2 == 0 {
                let zs = &states[t * tau];
                let gs = sw.state_grad(zs, self.target.position, self.target.heading);
                for i in 0..4 {
                    adj[i] += gs[i];
                }
                let prev = if t == 0 { self.previous_input } else { input_at(x, t - 1) };
                let (gu, gp) = sw.input_grad(pair(&u), pair(&prev));
                grad[2 * t] += gu[0];
                grad[2 * t + 1] += gu[1];
                if t > 0 {
                    grad[2 * (t - 1)] += gp[0];
                    grad[2 * (t - 1) + 1] += gp[1];
                }
            }
            for i in 0..4 {
                adj[i] += stage_adj[t][i];
            }
        }
        cost
    }
}

impl LowLevel {
    fn simulate(&self, x: &[f64]) -> Vec<VehicleState> {
        let mut states = Vec::with_capacity(self.weights.horizon + 1);
        let mut z = self.initial;
        states.push(z);
        for k in 0..self.weights.horizon {
            z = euler_step(&z, &input_at(x, k), &self.model);
            states.push(z);
        }
        states
    }

    fn cost(&self, x: &[f64], states: &[VehicleState]) -> f64 {
        let l = self.weights.horizon;
        let mut cost = 0.0;
        let mut prev = self.previous_input;
        for k in 0..l {
            let u = input_at(x, k);
            let (pos, th) = self.references[k];
            let sw = self.weights.stage(k);
            cost += sw.state_cost(&states[k], pos, th) + sw.input_cost(pair(&u), pair(&prev));
            prev = u;
        }
        let (pos, th) = self.references[l];
        cost + self.weights.terminal().state_cost(&states[l], pos, th)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let l = self.weights.horizon;
        let states = self.simulate(x);
        let cost = self.cost(x, &states);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (pos, th) = self.references[l];
        let mut adj = self.weights.terminal().state_grad(&states[l], pos, th);
        for k in (0..l).rev() {
            let (dz, du) = euler_step_vjp(&states[k], &self.model, adj);
            adj = dz;
            grad[2 * k] += du[0];
            grad[2 * k + 1] += du[1];
            let sw = self.weights.stage(k);
            let (pos, th) = self.references[k];
            let gs = sw.state_grad(&states[k], pos, th);
            for i in 0..4 {
                adj[i] += gs[i];
            }
            let u = input_at(x, k);
            let prev = if k == 0 { self.previous_input } else { input_at(x, k - 1) };
            let (gu, gp) = sw.input_grad(pair(&u), pair(&prev));
            grad[2 * k] += gu[0];
            grad[2 * k + 1] += gu[1];
            if k > 0 {
                grad[2 * (k - 1)] += gp[0];
                grad[2 * (k - 1) + 1] += gp[1];
            }
        }
        cost
    }
}

impl OcpProblem {
    pub fn horizon(&self) -> usize {
        match &self.kind {
            ProblemKind::High(p) => p.weights.horizon,
            ProblemKind::Low(p) => p.weights.horizon,
        }
    }

    /// Number of input stages times two.
    pub fn inputs_len(&self) -> usize {
        2 * self.horizon()
    }

    /// Decoded input sequence.
    pub fn inputs(&self, x: &[f64]) -> Vec<ControlInput> {
        (0..self.horizon()).map(|t| input_at(x, t)).collect()
    }

    /// Axes `a_0 … a_H` of obstacle `j` (planner only).
    pub fn axes(&self, x: &[f64], j: usize) -> Vec<[f64; 2]> {
        match &self.kind {
            ProblemKind::High(p) => (0..=p.weights.horizon).map(|t| p.axis(x, j, t)).collect(),
            ProblemKind::Low(_) => Vec::new(),
        }
    }

    /// Every Euler substate of the rollout.
    pub fn substates(&self, x: &[f64]) -> Vec<VehicleState> {
        match &self.kind {
            ProblemKind::High(p) => p.simulate(x),
            ProblemKind::Low(p) => p.simulate(x),
        }
    }

    /// States at the problem's stages (`z_0 … z_H` or `z̄_0 … z̄_L`).
    pub fn stage_states(&self, x: &[f64]) -> Vec<VehicleState> {
        match &self.kind {
            ProblemKind::High(p) => p
                .simulate(x)
                .into_iter()
                .step_by(p.weights.substeps)
                .collect(),
            ProblemKind::Low(p) => p.simulate(x),
        }
    }

    /// Zero inputs and, per obstacle, the normalized direction from the
    /// vehicle's current center to the obstacle's center at every stage.
    pub fn center_direction_guess(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        if let ProblemKind::High(p) = &self.kind {
            let n = self.inputs_len();
            let per = 2 * (p.weights.horizon + 1);
            for (j, e) in p.obstacles.iter().enumerate() {
                let c = e.center();
                let a = crate::solver::project_sphere_block(
                    [c[0] - p.initial.position[0], c[1] - p.initial.position[1]],
                    [1.0, 0.0],
                );
                for t in 0..=p.weights.horizon {
                    x[n + j * per + 2 * t] = a[0];
                    x[n + j * per + 2 * t + 1] = a[1];
                }
            }
        }
        x
    }
}

impl SmoothProblem for OcpProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_constraints(&self) -> usize {
        self.constraints
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn evaluate(&self, x: &[f64], constraints: &mut [f64]) -> f64 {
        match &self.kind {
            ProblemKind::High(p) => {
                let states = p.simulate(x);
                p.cost_and_constraints(x, &states, constraints)
            }
            ProblemKind::Low(p) => p.cost(x, &p.simulate(x)),
        }
    }

    fn gradient(
        &self,
        x: &[f64],
        weight: &dyn Fn(usize, f64) -> f64,
        grad: &mut [f64],
        constraints: &mut [f64],
    ) -> f64 {
        match &self.kind {
            ProblemKind::High(p) => p.gradient(x, weight, grad, constraints),
            ProblemKind::Low(p) => p.gradient(x, grad),
        }
    }
}
