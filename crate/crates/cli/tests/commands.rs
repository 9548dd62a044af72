use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use abmap::formats::{ObservationsFile, TrajectoryFile};
use abmap_core::milp::{parse_lp_text, solve_milp, MilpLimits};
use abmap_core::predprey::{build_model, PredPreyConfig};

fn abmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_abmap")).args(args).env_remove("ABMAP_NODE_LIMIT").output().unwrap()
}

fn ok(out: Output) -> Output {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    out
}

struct Run {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Run {
    fn new(config: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        std::fs::write(root.join("config.json"), config).unwrap();
        Run { _dir: dir, root }
    }

    fn p(&self, name: &str) -> String {
        self.root.join(name).display().to_string()
    }

    fn simulate(&self) {
        ok(abmap(&[
            "simulate",
            "--config",
            &self.p("config.json"),
            "--trajectory",
            &self.p("real.json"),
            "--observations",
            &self.p("obs.json"),
            "--boundary",
            &self.p("boundary.json"),
        ]));
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.root.join(name)).unwrap()
    }
}

const SMALL: &str = r#"{"grid_size": 6, "seed": 4, "timesteps": 4, "initial": {"predators": 2, "prey": 3}}"#;

fn load_traj(path: &Path) -> abmap_core::Trajectory {
    let model = build_model(&PredPreyConfig { grid_size: 6, ..Default::default() }).unwrap();
    TrajectoryFile::load(path, 72, model.events().len()).unwrap()
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let a = Run::new(r#"{"grid_size": 8, "seed": 11, "timesteps": 4, "initial": {"predators": 4, "prey": 6}}"#);
    let b = Run::new(&a.read("config.json"));
    let started = std::time::Instant::now();
    a.simulate();
    assert!(started.elapsed().as_secs_f64() < 1.0);
    b.simulate();
    for f in ["real.json", "obs.json", "boundary.json"] {
        assert_eq!(a.read(f), b.read(f), "{f}");
    }
    let (_, horizon) = ObservationsFile::load(&a.root.join("obs.json"), 128).unwrap();
    assert_eq!(horizon, 4);
}

#[test]
fn input_errors_exit_2() {
    let r = Run::new(SMALL);
    let out = abmap(&["simulate", "--config", &r.p("missing.json"), "--trajectory", "x", "--observations", "y"]);
    assert_eq!(out.status.code(), Some(2));
    let bad = Run::new(r#"{"grid_size": 6, "rates": {"prey_die": 0.5, "prey_reproduce": 0.5, "prey_move": 0.5, "prey_stay": 0.0, "predator_die": 0.05, "predator_move": 0.76, "predator_stay": 0.19}}"#);
    let out = abmap(&["simulate", "--config", &bad.p("config.json"), "--trajectory", "x", "--observations", "y"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("prey rates"));
    r.simulate();
    let out = abmap(&[
        "assimilate",
        "--config",
        &r.p("config.json"),
        "--observations",
        &r.p("nope.json"),
        "--boundary",
        &r.p("boundary.json"),
        "--out",
        &r.p("map.json"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn assimilate_dominates_and_window_beyond_horizon_is_one_window() {
    let r = Run::new(SMALL);
    r.simulate();
    let assimilate = |window: &str, out: &str| {
        ok(abmap(&[
            "assimilate",
            "--config",
            &r.p("config.json"),
            "--observations",
            &r.p("obs.json"),
            "--boundary",
            &r.p("real.json"),
            "--out",
            &r.p(out),
            "--window",
            window,
        ]))
    };
    assimilate("4", "map4.json");
    assimilate("50", "map50.json");
    assert_eq!(r.read("map4.json"), r.read("map50.json"));
    let model = build_model(&PredPreyConfig { grid_size: 6, ..Default::default() }).unwrap();
    let real = load_traj(&r.root.join("real.json"));
    let map = load_traj(&r.root.join("map4.json"));
    assert!(model.log_probability(&map) >= model.log_probability(&real) - 1e-6);
}

#[test]
fn infeasible_and_budget_exit_codes() {
    let r = Run::new(SMALL);
    r.simulate();
    // Ten prey seen at t = 1 cannot come from three.
    std::fs::write(
        r.root.join("bad.json"),
        r#"{"format": "abmap-observations", "version": 1, "domain_size": 72, "horizon": 2,
            "observations": [{"t": 1, "L": 10, "U": null, "states": [36, 37, 38]}]}"#,
    )
    .unwrap();
    let args = |obs: &str| {
        vec![
            "assimilate".to_string(),
            "--config".into(),
            r.p("config.json"),
            "--observations".into(),
            r.p(obs),
            "--boundary".into(),
            r.p("boundary.json"),
            "--out".into(),
            r.p("map.json"),
        ]
    };
    let a = args("bad.json");
    let out = abmap(&a.iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("window 1..=2"));
    let a = args("obs.json");
    let out = Command::new(env!("CARGO_BIN_EXE_abmap")).args(&a).env("ABMAP_NODE_LIMIT", "0").output().unwrap();
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn stream_resumes_from_state_file() {
    let r = Run::new(SMALL);
    r.simulate();
    let stream = |extra: &[&str], out: &str| {
        let mut a = vec![
            "stream".to_string(),
            "--config".into(),
            r.p("config.json"),
            "--boundary".into(),
            r.p("boundary.json"),
            "--observations".into(),
            r.p("obs.json"),
            "--out".into(),
            r.p(out),
            "--partial".into(),
            r.p(&format!("partial-{out}")),
            "--stats".into(),
            r.p(&format!("stats-{out}")),
        ];
        a.extend(extra.iter().map(|s| s.to_string()));
        ok(abmap(&a.iter().map(String::as_str).collect::<Vec<_>>()))
    };
    stream(&[], "whole.json");
    let state = r.p("state.json");
    stream(&["--state", &state, "--max-windows", "2"], "first.json");
    assert!(!r.root.join("first.json").exists());
    stream(&["--state", &state], "second.json");
    assert_eq!(r.read("whole.json"), r.read("second.json"));
    assert_eq!(r.read("partial-whole.json"), r.read("partial-second.json"));
    let stats: serde_json::Value = serde_json::from_str(&r.read("stats-whole.json")).unwrap();
    assert_eq!(stats["windows"].as_array().unwrap().len(), 4);
    assert_eq!(stats["rollback_count"], 0);

    let model = build_model(&PredPreyConfig { grid_size: 6, ..Default::default() }).unwrap();
    let (obs, _) = ObservationsFile::load(&r.root.join("obs.json"), 72).unwrap();
    let done = load_traj(&r.root.join("whole.json"));
    assert!(model.satisfies(&done, &obs).is_empty());
}

#[test]
fn stream_reads_json_lines_from_stdin() {
    let r = Run::new(SMALL);
    r.simulate();
    let (obs, _) = ObservationsFile::load(&r.root.join("obs.json"), 72).unwrap();
    let lines: String = obs
        .iter()
        .map(|o| serde_json::to_string(&abmap::formats::ObservationRecord::new(o)).unwrap() + "\n")
        .collect();
    let mut child = Command::new(env!("CARGO_BIN_EXE_abmap"))
        .args(["stream", "--config", &r.p("config.json"), "--boundary", &r.p("boundary.json")])
        .args(["--horizon", "4", "--out", &r.p("stdin.json")])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(lines.as_bytes()).unwrap();
    ok(child.wait_with_output().unwrap());
    ok(abmap(&[
        "stream",
        "--config",
        &r.p("config.json"),
        "--boundary",
        &r.p("boundary.json"),
        "--observations",
        &r.p("obs.json"),
        "--out",
        &r.p("file.json"),
    ]));
    assert_eq!(r.read("stdin.json"), r.read("file.json"));
}

#[test]
fn exported_program_matches_internal_solve() {
    let r = Run::new(SMALL);
    r.simulate();
    ok(abmap(&[
        "export-lp",
        "--config",
        &r.p("config.json"),
        "--observations",
        &r.p("obs.json"),
        "--boundary",
        &r.p("boundary.json"),
        "--out",
        &r.p("prog.lp"),
    ]));
    let program = parse_lp_text(&r.read("prog.lp")).unwrap();
    let solved = solve_milp(&program, MilpLimits::default()).unwrap();
    ok(abmap(&[
        "assimilate",
        "--config",
        &r.p("config.json"),
        "--observations",
        &r.p("obs.json"),
        "--boundary",
        &r.p("boundary.json"),
        "--out",
        &r.p("map.json"),
        "--window",
        "10",
    ]));
    let model = build_model(&PredPreyConfig { grid_size: 6, ..Default::default() }).unwrap();
    let map = load_traj(&r.root.join("map.json"));
    assert!((solved.objective - model.log_probability(&map)).abs() < 1e-6);

    std::fs::write(
        r.root.join("empty.json"),
        r#"{"format": "abmap-observations", "version": 1, "domain_size": 72, "horizon": 1, "observations": []}"#,
    )
    .unwrap();
    ok(abmap(&[
        "export-lp",
        "--config",
        &r.p("config.json"),
        "--observations",
        &r.p("empty.json"),
        "--boundary",
        &r.p("boundary.json"),
        "--out",
        &r.p("empty.lp"),
    ]));
    let program = parse_lp_text(&r.read("empty.lp")).unwrap();
    assert!(program.num_constraints() >= 5, "agency rows for every occupied state");
}

#[test]
fn metrics_of_identical_trajectories() {
    let r = Run::new(SMALL);
    r.simulate();
    let out = ok(abmap(&[
        "metrics",
        "--config",
        &r.p("config.json"),
        "--real",
        &r.p("real.json"),
        "--estimate",
        &r.p("real.json"),
        "--observations",
        &r.p("obs.json"),
        "--samples",
        "50",
    ]));
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,mean_distance,n_samples,baseline");
    assert_eq!(lines.len(), 6);
    for row in &lines[1..5] {
        assert_eq!(row.split(',').nth(1), Some("0.000000"));
    }
    assert_eq!(lines[5], "# log_ratio,0.000000000");
}
