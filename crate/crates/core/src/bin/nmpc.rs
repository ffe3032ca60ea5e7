use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nmpc_core::controller::{closed_loop_run, hc_plan, RunOptions, Trajectory};
use nmpc_core::dynamics::{ControlInput, VehicleState};
use nmpc_core::geometry::{best_axis, clearance, intersects_oracle, Superellipsoid};
use nmpc_core::harness::{
    load_scenario, load_scenario_dir, run_batch, save_scenario, table_obstacles, write_json, write_run_outputs,
    HarnessError, Scenario, Stats,
};
use nmpc_core::ocp::{transcribe_hc, transcribe_lc};
use nmpc_core::solver::check_gradient;

#[derive(Parser)]
#[command(name = "nmpc", about = "Hierarchical NMPC with superellipsoid collision avoidance")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its logs.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Simulated time cap (s); defaults to the scenario's value.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every scenario in a directory.
    Batch {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write the seven built-in table scenarios and the obstacle set as JSON files.
    Export {
        #[arg(long)]
        out: PathBuf,
    },
    /// Separation test of two superellipsoids, each given as inline JSON or
    /// a JSON file path.
    Check {
        #[arg(long)]
        vehicle: String,
        #[arg(long)]
        obstacle: String,
    },
    /// Finite-difference gradient check of the scenario's transcriptions.
    Gradcheck {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 100)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Time cold planner solves from the scenario's initial state.
    Bench {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
}

fn set_from(arg: &str) -> Result<Superellipsoid, Box<dyn std::error::Error>> {
    let path = Path::new(arg);
    let text = if path.is_file() { std::fs::read_to_string(path)? } else { arg.to_string() };
    Ok(serde_json::from_str(&text)?)
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Simulate { scenario, out, duration, seed } => {
            let s = load_scenario(&scenario)?;
            let mut opts = RunOptions::new(duration.unwrap_or(s.duration_s));
            opts.seed = seed;
            let log = closed_loop_run(&s, &opts).map_err(HarnessError::from)?;
            let summary = write_run_outputs(&s, &log, &s.name, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(summary.passed())
        }
        Command::Batch { dir, out, seed } => {
            let scenarios = load_scenario_dir(&dir)?;
            let summary = run_batch(&scenarios, &out, seed)?;
            for r in &summary.runs {
                println!(
                    "{:<24} {} reached={} collisions={} time={}",
                    r.output,
                    if r.passed() { "PASS" } else { "FAIL" },
                    r.reached,
                    r.collision_ticks,
                    r.time_to_target_s.map_or("-".into(), |t| format!("{t:.1}s")),
                );
            }
            println!("{}/{} reached", summary.reached, summary.total);
            Ok(summary.runs.iter().all(|r| r.passed()))
        }
        Command::Export { out } => {
            std::fs::create_dir_all(&out)?;
            for i in 1..=7 {
                let s = Scenario::table_scenario(i).expect("seven table scenarios");
                let path = out.join(format!("{}.json", s.name));
                save_scenario(&s, &path)?;
                println!("{}", path.display());
            }
            let dir = out.join("obstacles");
            std::fs::create_dir_all(&dir)?;
            let path = dir.join("table.json");
            write_json(&table_obstacles(), &path)?;
            println!("{}", path.display());
            Ok(true)
        }
        Command::Check { vehicle, obstacle } => {
            let v = set_from(&vehicle)?;
            let e = set_from(&obstacle)?;
            let (axis, margin) = best_axis(&v, &e, 1e-4);
            let [a1, a2] = axis.vector();
            println!("best axis      ({a1:.6}, {a2:.6})");
            println!("margin         {margin:.6}");
            println!("separated      {}", margin < 0.0);
            println!("clearance      {:.6}", clearance(&v, &e));
            println!("oracle overlap {}", intersects_oracle(&v, &e, 100_000));
            Ok(true)
        }
        Command::Gradcheck { scenario, points, seed } => {
            let s = load_scenario(&scenario)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let z = s.initial_state;
            let hc = transcribe_hc(
                &z,
                &s.target,
                &s.obstacles,
                &s.vehicle.at(&z),
                &s.hc,
                &s.model,
                ControlInput::ZERO,
                s.clearance,
            )?;
            let hc_err = check_gradient(&hc, points, &mut rng);
            let plan = Trajectory::from_states(
                (0..=s.hc.horizon)
                    .map(|t| VehicleState::new([z.position[0] + t as f64, z.position[1]], z.heading, z.speed))
                    .collect(),
                s.timing().hc_period(),
            );
            let lc = transcribe_lc(&z, &plan, 0, s.hc.substeps, &s.lc, &s.model, ControlInput::ZERO)?;
            let lc_err = check_gradient(&lc, points, &mut rng);
            println!("planner gradient max relative error {hc_err:.3e}");
            println!("tracker gradient max relative error {lc_err:.3e}");
            Ok(hc_err <= 1e-5 && lc_err <= 1e-5)
        }
        Command::Bench { scenario, repeats } => {
            let s = load_scenario(&scenario)?;
            let mut times = Vec::with_capacity(repeats);
            for i in 0..repeats {
                let t = Instant::now();
                let out = hc_plan(&s.initial_state, &s, ControlInput::ZERO, None, None, 0.0, i as u64)?;
                println!(
                    "run {i}: accepted={} solver {:.1} ms, wall {:.1} ms",
                    out.accepted,
                    out.elapsed_ms,
                    t.elapsed().as_secs_f64() * 1e3
                );
                times.push(out.elapsed_ms);
            }
            let st = Stats::of(&times);
            println!("planner ms: median {:.1}, p95 {:.1}, max {:.1}", st.median, st.p95, st.max);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
