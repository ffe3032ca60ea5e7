//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nmpc_core::controller::{closed_loop_run, hc_plan, lc_control, RunOptions, SimLog, Trajectory};
use nmpc_core::dynamics::{ControlInput, VehicleState};
use nmpc_core::geometry::{best_axis, intersects_oracle, separation_margin, SeparatingAxis, Superellipsoid};
use nmpc_core::harness::{compute_metrics, load_scenario_dir, percentile, table_obstacles, Scenario};
use nmpc_core::ocp::{transcribe_hc, transcribe_lc, HcWeights, LcWeights, ReferenceTarget};
use nmpc_core::solver::{alm_solve, check_gradient, FeasibleSet, SmoothProblem, SolverConfig};

struct Outcome {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(name: &'static str, passed: bool, detail: String) -> Outcome {
    Outcome { name, passed, detail }
}

fn random_set(rng: &mut ChaCha8Rng, spread: f64) -> Superellipsoid {
    let p = [2.0, 3.0, 4.0][rng.gen_range(0..3)];
    Superellipsoid::new(
        [rng.gen_range(-spread..spread), rng.gen_range(-spread..spread)],
        rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI),
        [rng.gen_range(0.2..3.0), rng.gen_range(0.2..3.0)],
        p,
    )
    .unwrap()
}

fn separation_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut certified, mut violations) = (0, 0);
    for _ in 0..1000 {
        let a = random_set(&mut rng, 5.0);
        let b = random_set(&mut rng, 5.0);
        let mut axes: Vec<SeparatingAxis> = (0..8)
            .map(|_| SeparatingAxis::from_angle(rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        axes.push(best_axis(&a, &b, 1e-3).0);
        let reported: Vec<_> = axes.iter().filter(|ax| separation_margin(&a, &b, ax) < 0.0).collect();
        if reported.is_empty() {
            continue;
        }
        certified += 1;
        if intersects_oracle(&a, &b, 20_000) {
            violations += 1;
        }
    }
    report(
        "separation soundness",
        violations == 0 && certified > 0,
        format!("{certified} of 1000 pairs certified disjoint, {violations} oracle violations"),
    )
}

fn support_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_rel: f64 = 0.0;
    let mut below = 0;
    for _ in 0..1000 {
        let x = random_set(&mut rng, 10.0);
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let a = [phi.cos(), phi.sin()];
        let sampled = x
            .boundary_points(100_000)
            .into_iter()
            .map(|p| a[0] * p[0] + a[1] * p[1])
            .fold(f64::NEG_INFINITY, f64::max);
        let support = x.support(a);
        if support < sampled - 1e-12 {
            below += 1;
        }
        let scale = support.abs().max(x.centered_support(a));
        worst_rel = worst_rel.max((support - sampled) / scale);
    }
    report(
        "support-function correctness",
        below == 0 && worst_rel <= 1e-3,
        format!("{below} under-estimates, worst relative excess {worst_rel:.2e}"),
    )
}

fn gradient_fidelity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scenario = Scenario::table_scenario(1).unwrap();
    let z = VehicleState::new([3.0, 1.0], 3.0, 0.7);
    let hc_w = HcWeights { horizon: 5, ..HcWeights::simulation() };
    let hc = transcribe_hc(
        &z,
        &scenario.target,
        &table_obstacles()[..1],
        &scenario.vehicle.at(&z),
        &hc_w,
        &scenario.model,
        ControlInput::new(0.2, -0.1),
        scenario.clearance,
    )
    .unwrap();
    let hc_err = check_gradient(&hc, 100, &mut rng);
    let lc_w = LcWeights { horizon: 10, carrot_stage: 5, ..LcWeights::simulation() };
    let plan = Trajectory::from_states(
        (0..=5).map(|t| VehicleState::new([3.0 - t as f64, 1.0 + 0.2 * t as f64], 3.0, 0.9)).collect(),
        1.0,
    );
    let lc = transcribe_lc(&z, &plan, 2, 10, &lc_w, &scenario.model, ControlInput::new(0.2, -0.1)).unwrap();
    let lc_err = check_gradient(&lc, 100, &mut rng);
    report(
        "gradient fidelity",
        hc_err <= 1e-5 && lc_err <= 1e-5,
        format!("planner {hc_err:.2e}, tracker {lc_err:.2e}"),
    )
}

/// `min ‖x‖²` subject to `x₁ ≥ 1`, written as `1 − x₁ ≤ 0`.
struct HalfPlane {
    set: FeasibleSet,
}

impl SmoothProblem for HalfPlane {
    fn dim(&self) -> usize {
        2
    }

    fn num_constraints(&self) -> usize {
        1
    }

    fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    fn evaluate(&self, x: &[f64], c: &mut [f64]) -> f64 {
        c[0] = 1.0 - x[0];
        x[0] * x[0] + x[1] * x[1]
    }

    fn gradient(&self, x: &[f64], weight: &dyn Fn(usize, f64) -> f64, g: &mut [f64], c: &mut [f64]) -> f64 {
        let f = self.evaluate(x, c);
        let w = weight(0, c[0]);
        g[0] = 2.0 * x[0] - w;
        g[1] = 2.0 * x[1];
        f
    }
}

fn solver_sanity() -> Outcome {
    let p = HalfPlane { set: FeasibleSet::unconstrained() };
    let cfg = SolverConfig { time_budget_ms: 10_000, ..SolverConfig::default() };
    let run = alm_solve(&p, &[0.0, 0.0], &[], &cfg);
    let err = (run.solution[0] - 1.0).hypot(run.solution[1]);
    let y = run.multipliers[0];
    report(
        "solver sanity",
        run.converged && err <= 1e-3 && (y - 2.0).abs() <= 1e-2,
        format!("‖x − (1,0)‖ = {err:.2e}, y = {y:.5}, converged = {}", run.converged),
    )
}

fn safety_semantics() -> Outcome {
    let mut s = Scenario::table_scenario(1).unwrap();
    let z = s.initial_state;

    let plan = Trajectory::from_states(
        (0..=s.hc.horizon).map(|t| VehicleState::new([15.0 - t as f64, 0.8], z.heading, 1.0)).collect(),
        1.0,
    );
    s.lc_solver.time_budget_ms = 0;
    let lc = lc_control(&z, &plan, 0, ControlInput::ZERO, None, &s).unwrap();
    let zero_input = lc.input == ControlInput::ZERO && lc.timed_out;

    let mut s = Scenario::table_scenario(1).unwrap();
    s.hc_solver.time_budget_ms = 0;
    let out = hc_plan(&z, &s, ControlInput::ZERO, None, Some(&plan), 0.0, 7).unwrap();
    let keeps_plan = !out.accepted && out.plan.is_none() && !out.emergency;

    // In closed loop every replan is rejected, so the first (hold) plan
    // stays active throughout.
    let log = closed_loop_run(&s, &RunOptions::new(3.0)).unwrap();
    let first = log.ticks.first().map(|t| t.plan_id);
    let identity = log.replans.len() >= 3
        && log.replans.iter().all(|r| !r.accepted)
        && log.ticks.iter().all(|t| Some(t.plan_id) == first);

    report(
        "safety semantics",
        zero_input && keeps_plan && identity,
        format!("zero input on timeout: {zero_input}, rejection keeps plan: {keeps_plan}, plan identity in closed loop: {identity}"),
    )
}

fn scenario_runs() -> Vec<(Scenario, SimLog)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let scenarios = load_scenario_dir(&dir).expect("scenario directory");
    scenarios
        .into_iter()
        .map(|s| {
            let t = Instant::now();
            let log = closed_loop_run(&s, &RunOptions::new(s.duration_s)).expect("closed loop");
            eprintln!("  ran {} in {:.0} s", s.name, t.elapsed().as_secs_f64());
            (s, log)
        })
        .collect()
}

fn scenario_suite(runs: &[(Scenario, SimLog)]) -> Outcome {
    let target_ok = |s: &Scenario| s.target == ReferenceTarget { position: [-20.0, 6.0], heading: 0.0 };
    let mut lines = Vec::new();
    let mut ok = runs.len() == 7;
    for (s, log) in runs {
        let m = compute_metrics(log);
        let collisions = log.ticks.iter().filter(|t| t.collision).count();
        let pass = target_ok(s) && log.reached && collisions == 0 && m.min_margin > 0.0;
        ok &= pass;
        lines.push(format!(
            "{}: reached {} at {}, {collisions} collision ticks, min margin {:.3} m",
            s.name,
            log.reached,
            log.time_to_target.map_or("-".into(), |t| format!("{t:.1} s")),
            m.min_margin
        ));
    }
    report("scenario suite", ok, lines.join("; "))
}

fn runtime(runs: &[(Scenario, SimLog)]) -> Outcome {
    let hc: Vec<f64> = runs.iter().flat_map(|(_, l)| l.replans.iter().map(|r| r.hc_ms)).collect();
    let lc: Vec<f64> = runs.iter().flat_map(|(_, l)| l.ticks.iter().filter_map(|t| t.lc_ms)).collect();
    let (hc_med, lc_med) = (percentile(&hc, 50.0), percentile(&lc, 50.0));
    report(
        "runtime",
        hc_med <= 1000.0 && lc_med <= 100.0,
        format!("planner median {hc_med:.1} ms over {} solves, tracker median {lc_med:.2} ms over {} solves", hc.len(), lc.len()),
    )
}

fn tracking(runs: &[(Scenario, SimLog)]) -> Outcome {
    let mut ok = !runs.is_empty();
    let mut parts = Vec::new();
    for (s, log) in runs {
        let p95 = compute_metrics(log).tracking.p95;
        ok &= p95 <= 0.25;
        parts.push(format!("{} {:.4} m", s.name, p95));
    }
    report("tracking p95", ok, parts.join(", "))
}

fn main() -> ExitCode {
    let mut outcomes = vec![
        separation_soundness(),
        support_correctness(),
        gradient_fidelity(),
        solver_sanity(),
        safety_semantics(),
    ];
    let runs = scenario_runs();
    outcomes.push(scenario_suite(&runs));
    outcomes.push(runtime(&runs));
    outcomes.push(tracking(&runs));

    for o in &outcomes {
        println!("{} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
