//! Projected-gradient inner solver and augmented Lagrangian outer loop.
//!
//! Problems have the form
//!
//! ```text
//! minimize    g(x)
//! subject to  x ∈ U          (boxes × unit circles, handled by projection)
//!             G1(x) ∈ C      (C = nonpositive orthant, handled by the ALM)
//! ```
//!
//! The inner solver is a monotone projected gradient method with a
//! backtracking Lipschitz estimate. It can optionally try a limited-memory
//! quasi-Newton step first, which is accepted only when it decreases the
//! objective at least as much as an Armijo condition requires.

use std::collections::VecDeque;
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Elementwise clamp of `x` into `[lo, hi]`.
pub fn project_box(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| v.max(*l).min(*h))
        .collect()
}

/// Normalizes `a`, or returns `fallback` when `a` is (numerically) zero.
pub fn project_sphere_block(a: [f64; 2], fallback: [f64; 2]) -> [f64; 2] {
    let n = a[0].hypot(a[1]);
    if n > 1e-12 {
        [a[0] / n, a[1] / n]
    } else {
        fallback
    }
}

/// One factor of the projectable set `U`.
#[derive(Debug, Clone, PartialEq)]
pub enum SetBlock {
    /// Coordinates `offset..offset + lower.len()` are boxed.
    Box {
        offset: usize,
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Coordinates `offset, offset + 1` lie on the unit circle.
    Sphere { offset: usize, fallback: [f64; 2] },
}

/// Cartesian product of boxes and unit circles. Coordinates not covered by
/// any block are free.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeasibleSet {
    pub blocks: Vec<SetBlock>,
}

impl FeasibleSet {
    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn with_box(mut self, offset: usize, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        self.blocks.push(SetBlock::Box {
            offset,
            lower,
            upper,
        });
        self
    }

    pub fn with_sphere(mut self, offset: usize, fallback: [f64; 2]) -> Self {
        self.blocks.push(SetBlock::Sphere { offset, fallback });
        self
    }

    pub fn project(&self, x: &mut [f64]) {
        for block in &self.blocks {
            match block {
                SetBlock::Box {
                    offset,
                    lower,
                    upper,
                } => {
                    for (i, (l, h)) in lower.iter().zip(upper).enumerate() {
                        let v = &mut x[offset + i];
                        *v = v.max(*l).min(*h);
                    }
                }
                SetBlock::Sphere { offset, fallback } => {
                    let p = project_sphere_block([x[*offset], x[offset + 1]], *fallback);
                    x[*offset] = p[0];
                    x[offset + 1] = p[1];
                }
            }
        }
    }

    /// Restricts `d` to the free subspace at `x`: zeroes box coordinates
    /// where the projected-gradient point `xbar` sits on a bound, and
    /// removes the radial component on circles.
    fn restrict_direction(&self, x: &[f64], xbar: &[f64], d: &mut [f64]) {
        for block in &self.blocks {
            match block {
                SetBlock::Box {
                    offset,
                    lower,
                    upper,
                } => {
                    for (i, (l, h)) in lower.iter().zip(upper).enumerate() {
                        let k = offset + i;
                        if xbar[k] <= *l || xbar[k] >= *h {
                            d[k] = 0.0;
                        }
                    }
                }
                SetBlock::Sphere { offset, .. } => {
                    let k = *offset;
                    let radial = x[k] * d[k] + x[k + 1] * d[k + 1];
                    d[k] -= radial * x[k];
                    d[k + 1] -= radial * x[k + 1];
                }
            }
        }
    }

    /// Uniform sample on the set, using `[-1, 1]` for free coordinates.
    pub fn sample<R: Rng>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        let mut x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for block in &self.blocks {
            match block {
                SetBlock::Box {
                    offset,
                    lower,
                    upper,
                } => {
                    for (i, (l, h)) in lower.iter().zip(upper).enumerate() {
                        x[offset + i] = if h > l { rng.gen_range(*l..*h) } else { *l };
                    }
                }
                SetBlock::Sphere { offset, .. } => {
                    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    x[*offset] = phi.cos();
                    x[offset + 1] = phi.sin();
                }
            }
        }
        x
    }
}

/// A smooth cost with an optional smooth constraint map `G1`.
pub trait SmoothProblem: Sync {
    fn dim(&self) -> usize;

    fn num_constraints(&self) -> usize {
        0
    }

    fn feasible_set(&self) -> &FeasibleSet;

    /// Returns `g(x)` and writes `G1(x)` into `constraints`.
    fn evaluate(&self, x: &[f64], constraints: &mut [f64]) -> f64;

    /// Writes the gradient of `g(x) + Σ w_i G1_i(x)` into `grad`, where
    /// `w_i = weight(i, G1_i(x))`. Returns `g(x)` and writes `G1(x)` into
    /// `constraints`.
    fn gradient(
        &self,
        x: &[f64],
        weight: &dyn Fn(usize, f64) -> f64,
        grad: &mut [f64],
        constraints: &mut [f64],
    ) -> f64;
}

/// Scalar objective seen by the inner solver.
pub trait Objective {
    fn dim(&self) -> usize;
    /// Value, and the gradient when `grad` is provided.
    fn value(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64;
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64], Option<&mut [f64]>) -> f64> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64], Option<&mut [f64]>) -> f64> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        (self.f)(x, grad)
    }
}

/// Inner solver variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMethod {
    ProjectedGradient,
    /// Projected gradient with L-BFGS trial steps of the given memory.
    QuasiNewton { memory: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Gradient-mapping tolerance of the inner solver.
    pub inner_tolerance: f64,
    /// Inner tolerance of the first outer iteration; it shrinks tenfold per
    /// outer iteration down to `inner_tolerance`.
    pub initial_inner_tolerance: f64,
    /// Acceptance gate `‖y⁺ − y‖_∞ ≤ infeasibility_tolerance · ρ`.
    pub infeasibility_tolerance: f64,
    pub initial_penalty: f64,
    pub penalty_growth: f64,
    pub max_inner_iterations: usize,
    pub max_outer_iterations: usize,
    /// Budget per solve in milliseconds of solver-thread CPU time.
    pub time_budget_ms: u64,
    pub inner_method: InnerMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tolerance: 1e-4,
            initial_inner_tolerance: 1e-1,
            infeasibility_tolerance: 1e-3,
            initial_penalty: 10.0,
            penalty_growth: 5.0,
            max_inner_iterations: 5000,
            max_outer_iterations: 20,
            time_budget_ms: 900,
            inner_method: InnerMethod::QuasiNewton { memory: 100 },
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.inner_tolerance > 0.0) {
            return Err("inner_tolerance must be > 0".into());
        }
        if !(self.initial_inner_tolerance >= self.inner_tolerance) {
            return Err("initial_inner_tolerance must be >= inner_tolerance".into());
        }
        if !(self.infeasibility_tolerance > 0.0) {
            return Err("infeasibility_tolerance must be > 0".into());
        }
        if !(self.initial_penalty > 0.0) {
            return Err("initial_penalty must be > 0".into());
        }
        if !(self.penalty_growth > 1.0) {
            return Err("penalty_growth must be > 1".into());
        }
        if self.max_inner_iterations == 0 || self.max_outer_iterations == 0 {
            return Err("iteration budgets must be > 0".into());
        }
        if let InnerMethod::QuasiNewton { memory: 0 } = self.inner_method {
            return Err("quasi-Newton memory must be > 0".into());
        }
        Ok(())
    }

    pub fn time_budget(&self) -> Duration {
        Duration::from_millis(self.time_budget_ms)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub solution: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Gradient-mapping norm at the returned point's predecessor.
    pub residual: f64,
    pub converged: bool,
    /// `true` if every accepted iterate had a value no larger than the previous one.
    pub monotone: bool,
}

struct Lbfgs {
    memory: usize,
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
}

impl Lbfgs {
    fn new(memory: usize) -> Self {
        Self {
            memory,
            pairs: VecDeque::with_capacity(memory),
        }
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if sy <= 1e-12 * norm(&s) * norm(&y) || !sy.is_finite() {
            return;
        }
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// `-H g` by the two-loop recursion.
    fn direction(&self, g: &[f64]) -> Option<Vec<f64>> {
        let (s_last, y_last, _) = self.pairs.back()?;
        let mut q = g.to_vec();
        let mut alphas = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(-a, y, &mut q);
            alphas.push(a);
        }
        let scale = dot(s_last, y_last) / dot(y_last, y_last);
        q.iter_mut().for_each(|v| *v *= scale);
        for ((s, y, rho), a) in self.pairs.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            axpy(a - b, s, &mut q);
        }
        q.iter_mut().for_each(|v| *v = -*v);
        Some(q)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Local Lipschitz estimate of the gradient from a small perturbation.
fn estimate_lipschitz<O: Objective + ?Sized>(obj: &O, x: &[f64], g: &[f64]) -> f64 {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut delta = vec![0.0; n];
    for i in 0..n {
        let d = (1e-6 * x[i].abs()).max(1e-6);
        xp[i] += d;
        delta[i] = d;
    }
    let mut gp = vec![0.0; n];
    obj.value(&xp, Some(&mut gp));
    let l = norm(&diff(&gp, g)) / norm(&delta);
    if l.is_finite() && l > 1e-8 {
        l
    } else {
        1.0
    }
}

/// Clock for solver budgets. On Unix it reads the CPU time of the calling
/// thread, so concurrent solves sharing a core each get their full budget.
#[derive(Debug, Clone, Copy)]
pub struct SolveClock {
    origin: Duration,
}

impl SolveClock {
    pub fn start() -> Self {
        Self { origin: clock_now() }
    }

    pub fn elapsed(&self) -> Duration {
        clock_now().saturating_sub(self.origin)
    }

    pub fn elapsed_ms(&self) -> f64 {
        self.elapsed().as_secs_f64() * 1e3
    }
}

#[cfg(unix)]
fn clock_now() -> Duration {
    let mut ts = libc::timespec { tv_sec: 0, tv_nsec: 0 };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    if rc != 0 {
        return wall_now();
    }
    Duration::new(ts.tv_sec as u64, ts.tv_nsec as u32)
}

#[cfg(not(unix))]
fn clock_now() -> Duration {
    wall_now()
}

fn wall_now() -> Duration {
    static ORIGIN: std::sync::OnceLock<std::time::Instant> = std::sync::OnceLock::new();
    ORIGIN.get_or_init(std::time::Instant::now).elapsed()
}

/// A time budget measured on a [`SolveClock`].
#[derive(Debug, Clone, Copy)]
pub struct Deadline {
    clock: SolveClock,
    budget: Duration,
}

impl Deadline {
    pub fn after(budget: Duration) -> Self {
        Self { clock: SolveClock::start(), budget }
    }

    pub fn expired(&self) -> bool {
        self.clock.elapsed() >= self.budget
    }
}

/// Minimizes a smooth objective over `set`.
///
/// Stops when `‖x − P(x − γ∇f(x))‖_∞ / γ ≤ tolerance` for a step `γ` that
/// passed the backtracking test, or when the iteration cap or `deadline`
/// is hit. Every accepted iterate has a value no larger than its
/// predecessor.
pub fn inner_solve<O: Objective + ?Sized>(
    obj: &O,
    set: &FeasibleSet,
    x0: &[f64],
    method: InnerMethod,
    tolerance: f64,
    max_iterations: usize,
    deadline: Option<Deadline>,
) -> InnerOutcome {
    let n = obj.dim();
    let mut x = x0.to_vec();
    set.project(&mut x);
    let mut g = vec![0.0; n];
    let mut f = obj.value(&x, Some(&mut g));
    let mut gamma = 0.95 / estimate_lipschitz(obj, &x, &g);
    let mut lbfgs = match method {
        InnerMethod::QuasiNewton { memory } => Some(Lbfgs::new(memory)),
        InnerMethod::ProjectedGradient => None,
    };
    let mut residual = f64::INFINITY;
    let mut monotone = true;
    let mut xbar = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let pg_point = |x: &[f64], g: &[f64], gamma: f64, out: &mut [f64]| {
        out.iter_mut()
            .zip(x.iter().zip(g))
            .for_each(|(o, (xi, gi))| *o = xi - gamma * gi);
        set.project(out);
        x.iter()
            .zip(out.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / gamma
    };
    // Shrinks γ until the quadratic upper model holds at the projected
    // gradient point; returns its value.
    let backtrack = |x: &[f64], g: &[f64], f: f64, gamma: &mut f64, xbar: &mut [f64], residual: &mut f64| loop {
        let fbar = obj.value(xbar, None);
        let d = diff(xbar, x);
        let model = f + dot(g, &d) + dot(&d, &d) / (2.0 * *gamma);
        if fbar <= model + 1e-12 * f.abs().max(1.0) || *gamma < 1e-20 {
            return fbar;
        }
        *gamma *= 0.5;
        *residual = pg_point(x, g, *gamma, xbar);
    };

    for it in 0..max_iterations {
        if deadline.is_some_and(|d| d.expired()) {
            return InnerOutcome {
                solution: x,
                value: f,
                iterations: it,
                residual,
                converged: false,
                monotone,
            };
        }

        residual = pg_point(&x, &g, gamma, &mut xbar);
        let mut fbar = None;
        if residual <= tolerance {
            let v = backtrack(&x, &g, f, &mut gamma, &mut xbar, &mut residual);
            if residual <= tolerance {
                let (solution, value) = if v <= f { (xbar, v) } else { (x, f) };
                return InnerOutcome {
                    solution,
                    value,
                    iterations: it + 1,
                    residual,
                    converged: true,
                    monotone,
                };
            }
            fbar = Some(v);
        }

        // Quasi-Newton trial on the free subspace, accepted under Armijo.
        let mut next = None;
        if let Some(mem) = lbfgs.as_ref() {
            let mut g_free = g.clone();
            set.restrict_direction(&x, &xbar, &mut g_free);
            let mut d = mem
                .direction(&g_free)
                .unwrap_or_else(|| g_free.iter().map(|v| -gamma * v).collect());
            set.restrict_direction(&x, &xbar, &mut d);
            if dot(&g_free, &d) < 0.0 {
                let mut t = 1.0;
                for _ in 0..10 {
                    trial
                        .iter_mut()
                        .zip(x.iter().zip(&d))
                        .for_each(|(ti, (xi, di))| *ti = xi + t * di);
                    set.project(&mut trial);
                    let ft = obj.value(&trial, None);
                    let decrease = dot(&g, &diff(&trial, &x));
                    if decrease < 0.0 && ft <= f + 1e-4 * decrease {
                        next = Some((trial.clone(), ft));
                        break;
                    }
                    t *= 0.5;
                }
            }
        }
        let (x_new, f_candidate) = match next {
            Some(step) => step,
            None => {
                let v = match fbar {
                    Some(v) => v,
                    None => backtrack(&x, &g, f, &mut gamma, &mut xbar, &mut residual),
                };
                (xbar.clone(), v)
            }
        };
        let f_new = obj.value(&x_new, Some(&mut g_new));
        debug_assert!((f_new - f_candidate).abs() <= 1e-9 * f_new.abs().max(1.0));
        if f_new > f {
            monotone = false;
        }
        if let Some(mem) = lbfgs.as_mut() {
            let mut y_old = g.clone();
            set.restrict_direction(&x, &xbar, &mut y_old);
            let mut y_new = g_new.clone();
            set.restrict_direction(&x_new, &xbar, &mut y_new);
            mem.push(diff(&x_new, &x), diff(&y_new, &y_old));
        }
        x = x_new;
        f = f_new;
        std::mem::swap(&mut g, &mut g_new);
    }
    InnerOutcome {
        solution: x,
        value: f,
        iterations: max_iterations,
        residual,
        converged: false,
        monotone,
    }
}

/// Outcome of an augmented Lagrangian solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverRun {
    pub solution: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub penalty: f64,
    pub inner_iterations: usize,
    pub outer_iterations: usize,
    /// Inner criterion met on the last outer iteration and the
    /// infeasibility gate passed.
    pub converged: bool,
    /// `‖y⁺ − y‖_∞` of the last multiplier update.
    pub infeasibility: f64,
    /// `g(x)` at the solution.
    pub cost: f64,
    /// Maximum of `G1(x)` (0 when there are no constraints).
    pub max_constraint: f64,
    pub elapsed_ms: f64,
    pub monotone: bool,
    /// Stopped because the time budget ran out.
    pub timed_out: bool,
}

impl SolverRun {
    /// Acceptance gate: `‖y⁺ − y‖_∞ ≤ κ ρ`.
    pub fn passes_gate(&self, kappa: f64) -> bool {
        self.infeasibility <= kappa * self.penalty
    }
}

struct Augmented<'a, P: ?Sized> {
    problem: &'a P,
    multipliers: &'a [f64],
    penalty: f64,
}

impl<P: SmoothProblem + ?Sized> Objective for Augmented<'_, P> {
    fn dim(&self) -> usize {
        self.problem.dim()
    }

    fn value(&self, x: &[f64], grad: Option<&mut [f64]>) -> f64 {
        let m = self.problem.num_constraints();
        let mut c = vec![0.0; m];
        let rho = self.penalty;
        let y = self.multipliers;
        let cost = match grad {
            Some(grad) => {
                let weight = |i: usize, gi: f64| rho * (gi + y[i] / rho).max(0.0);
                self.problem.gradient(x, &weight, grad, &mut c)
            }
            None => self.problem.evaluate(x, &mut c),
        };
        let penalty: f64 = c
            .iter()
            .zip(y)
            .map(|(gi, yi)| (gi + yi / rho).max(0.0).powi(2))
            .sum();
        cost + 0.5 * rho * penalty
    }
}

/// Augmented Lagrangian method over `problem`, warm-started at `(x0, y0)`.
///
/// Each outer iteration minimizes `g + (ρ/2) dist²(G1 + y/ρ, C)` over `U`
/// and updates `y ← ρ · max(0, G1(x) + y/ρ)`. When the infeasibility gate
/// is not met the penalty grows by `penalty_growth`.
pub fn alm_solve<P: SmoothProblem + ?Sized>(
    problem: &P,
    x0: &[f64],
    y0: &[f64],
    cfg: &SolverConfig,
) -> SolverRun {
    let start = SolveClock::start();
    let deadline = Deadline::after(cfg.time_budget());
    let m = problem.num_constraints();
    let mut x = x0.to_vec();
    problem.feasible_set().project(&mut x);
    let mut y: Vec<f64> = if y0.len() == m {
        y0.iter().map(|v| v.max(0.0)).collect()
    } else {
        vec![0.0; m]
    };
    let mut rho = cfg.initial_penalty;
    let mut inner_iterations = 0;
    let mut monotone = true;
    let mut c = vec![0.0; m];
    let run = |x: Vec<f64>,
                   y: Vec<f64>,
                   rho: f64,
                   outer: usize,
                   inner: usize,
                   converged: bool,
                   infeasibility: f64,
                   monotone: bool,
                   timed_out: bool,
                   c: &mut Vec<f64>| {
        let cost = problem.evaluate(&x, c);
        SolverRun {
            max_constraint: c.iter().cloned().fold(if m == 0 { 0.0 } else { f64::NEG_INFINITY }, f64::max),
            solution: x,
            multipliers: y,
            penalty: rho,
            inner_iterations: inner,
            outer_iterations: outer,
            converged,
            infeasibility,
            cost,
            elapsed_ms: start.elapsed_ms(),
            monotone,
            timed_out,
        }
    };

    let mut infeasibility = f64::INFINITY;
    let mut tolerance = cfg.initial_inner_tolerance.max(cfg.inner_tolerance);
    for outer in 0..cfg.max_outer_iterations {
        let aug = Augmented {
            problem,
            multipliers: &y,
            penalty: rho,
        };
        let inner = inner_solve(
            &aug,
            problem.feasible_set(),
            &x,
            cfg.inner_method,
            tolerance,
            cfg.max_inner_iterations,
            Some(deadline),
        );
        inner_iterations += inner.iterations;
        monotone &= inner.monotone;
        x = inner.solution;
        problem.evaluate(&x, &mut c);
        let y_next: Vec<f64> = c
            .iter()
            .zip(&y)
            .map(|(gi, yi)| rho * (gi + yi / rho).max(0.0))
            .collect();
        infeasibility = y_next
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        y = y_next;
        let gate = infeasibility <= cfg.infeasibility_tolerance * rho;
        let final_stage = tolerance <= cfg.inner_tolerance || inner.residual <= cfg.inner_tolerance;
        if inner.converged && final_stage && gate {
            return run(x, y, rho, outer + 1, inner_iterations, true, infeasibility, monotone, false, &mut c);
        }
        if deadline.expired() {
            return run(x, y, rho, outer + 1, inner_iterations, false, infeasibility, monotone, true, &mut c);
        }
        if outer + 1 == cfg.max_outer_iterations {
            return run(x, y, rho, outer + 1, inner_iterations, false, infeasibility, monotone, false, &mut c);
        }
        if !gate {
            rho *= cfg.penalty_growth;
        }
        tolerance = (tolerance * 0.1).max(cfg.inner_tolerance);
    }
    run(x, y, rho, 0, inner_iterations, false, infeasibility, monotone, false, &mut c)
}

/// Largest relative discrepancy between the exact gradient of
/// `g + ⟨w, G1⟩` (random `w ∈ [0, 1]^m`) and central differences with step
/// `1e-6`, over `points` random feasible points.
pub fn check_gradient<P: SmoothProblem + ?Sized, R: Rng>(problem: &P, points: usize, rng: &mut R) -> f64 {
    let n = problem.dim();
    let m = problem.num_constraints();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut c = vec![0.0; m];
    for _ in 0..points {
        let x = problem.feasible_set().sample(n, rng);
        let w: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
        let mut grad = vec![0.0; n];
        problem.gradient(&x, &|i, _| w[i], &mut grad, &mut c);
        let phi = |x: &[f64], c: &mut [f64]| {
            let g = problem.evaluate(x, c);
            g + dot(&w, c)
        };
        let mut fd = vec![0.0; n];
        let mut xp = x.clone();
        for i in 0..n {
            xp[i] = x[i] + h;
            let up = phi(&xp, &mut c);
            xp[i] = x[i] - h;
            let down = phi(&xp, &mut c);
            xp[i] = x[i];
            fd[i] = (up - down) / (2.0 * h);
        }
        let err = norm(&diff(&grad, &fd)) / norm(&grad).max(norm(&fd)).max(1.0);
        worst = worst.max(err);
    }
    worst
}
