use nmpc_core::controller::{closed_loop_run, RunOptions};
use nmpc_core::dynamics::VehicleState;
use nmpc_core::harness::{run_batch, BatchSummary, Scenario};
use nmpc_core::ocp::ReferenceTarget;

fn open_field(name: &str) -> Scenario {
    let mut s = Scenario::table_scenario(1).unwrap();
    s.name = name.into();
    s.obstacles.clear();
    s.initial_state = VehicleState::new([0.0, 0.0], 0.0, 0.0);
    s.target = ReferenceTarget { position: [5.0, 0.0], heading: 0.0 };
    s.duration_s = 30.0;
    s
}

#[test]
fn open_field_run_reaches_the_target() {
    let s = open_field("open");
    let log = closed_loop_run(&s, &RunOptions::new(s.duration_s)).unwrap();
    assert!(log.reached);
    let last = log.ticks.last().unwrap();
    assert!(last.state.distance_to(s.target.position) <= s.goal_radius);
    assert!(last.lc_ms.is_none());
    // After a one-second transient the distance never grows.
    let dist: Vec<f64> = log.ticks.iter().map(|t| t.state.distance_to(s.target.position)).collect();
    for w in dist[10..].windows(2) {
        assert!(w[1] <= w[0] + 1e-9, "{} -> {}", w[0], w[1]);
    }
    for w in log.ticks.windows(2) {
        assert!(w[1].time > w[0].time);
    }
    assert!(log.ticks.iter().all(|t| t.input.throttle.abs() <= 1.0 && t.input.spin.abs() <= 1.0));
    assert!(log.replans.iter().all(|r| r.accepted));
}

#[test]
fn zero_duration_run_is_empty() {
    let s = open_field("empty");
    let log = closed_loop_run(&s, &RunOptions::new(0.0)).unwrap();
    assert!(log.ticks.is_empty());
    assert!(log.replans.is_empty());
    assert!(!log.reached);
}

#[test]
fn batch_writes_logs_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut short = open_field("field");
    short.duration_s = 2.0;
    let mut bad = open_field("broken");
    bad.lc.horizon = 1000;
    let summary = run_batch(&[short.clone(), short, bad], dir.path(), Some(9)).unwrap();
    assert_eq!(summary.total, 3);
    assert_eq!(summary.reached, 0);
    let stems: Vec<&str> = summary.runs.iter().map(|r| r.output.as_str()).collect();
    assert_eq!(stems, ["field", "field_2", "broken"]);
    assert!(summary.runs[2].error.is_some());
    assert_eq!(summary.runs[0].seed, Some(9));

    for stem in ["field", "field_2"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("{stem}.csv"))).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "time_s,c1_m,c2_m,theta_rad,v_mps,r,s,plan_id,lc_ms,hc_ms");
        // Twenty tracked ticks plus the final state at t = 2 s.
        assert_eq!(lines.count(), 21);
        for suffix in ["_plans.csv", "_replans.csv", "_summary.json"] {
            assert!(dir.path().join(format!("{stem}{suffix}")).is_file());
        }
    }
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let reread: BatchSummary = serde_json::from_str(&text).unwrap();
    assert_eq!(reread, summary);
}
