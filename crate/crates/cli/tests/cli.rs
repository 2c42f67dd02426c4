//! End-to-end tests driving the `stlplan` binary.
//!
//! A shared dataset + graph pipeline is built once; each test then invokes
//! the binary against it and checks exit codes, stdout, and emitted files.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::OnceLock;

use stlplan::reachgraph::ReachGraph;
use tempfile::TempDir;

const CASE_STUDY_FORMULA: &str = "F[0,12] m1 & F[8,25] m2 & G[20,30] m3";

const CONFIG_TOML: &str = r#"
[[predicates]]
id = "m1"
center = [16.5, 4.5]
radius = 2.2

[[predicates]]
id = "m2"
center = [15.5, 15.5]
radius = 2.2

[[predicates]]
id = "m3"
center = [4.5, 15.5]
radius = 2.2
"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stlplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("process exited normally")
}

fn assert_ok(out: &Output, what: &str) {
    assert_eq!(code(out), 0, "{what} failed:\n{}", stderr(out));
}

fn read_csv(path: &std::path::Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Drops the columns at `skip` (e.g. wall-clock times) from every row.
fn drop_columns(rows: &[Vec<String>], skip: &[usize]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, c)| c.clone())
                .collect()
        })
        .collect()
}

/// Shared pipeline artifacts, built once for the whole test binary.
struct Pipeline {
    // Held so the directory outlives every test.
    _dir: TempDir,
    config: PathBuf,
    dataset: PathBuf,
    graph: PathBuf,
}

fn pipeline() -> &'static Pipeline {
    static PIPELINE: OnceLock<Pipeline> = OnceLock::new();
    PIPELINE.get_or_init(|| {
        let dir = TempDir::new().expect("tempdir");
        let config = dir.path().join("run.toml");
        fs::write(&config, CONFIG_TOML).expect("write config");
        let dataset = dir.path().join("dataset.jsonl");
        let graph = dir.path().join("graph.json");
        let out = run(&["gen-data", "--dataset", dataset.to_str().unwrap()]);
        assert_ok(&out, "gen-data");
        let out = run(&[
            "build-graph",
            "--dataset",
            dataset.to_str().unwrap(),
            "--graph",
            graph.to_str().unwrap(),
        ]);
        assert_ok(&out, "build-graph");
        Pipeline {
            _dir: dir,
            config,
            dataset,
            graph,
        }
    })
}

#[test]
fn gen_data_reports_high_coverage_and_writes_the_dataset() {
    let dir = TempDir::new().unwrap();
    let out = run(&["gen-data", "--out-dir", dir.path().to_str().unwrap()]);
    assert_ok(&out, "gen-data");
    let text = stdout(&out);
    let coverage: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("free-cell coverage = "))
        .and_then(|rest| rest.strip_suffix('%'))
        .expect("coverage line present")
        .parse()
        .expect("coverage parses");
    assert!(coverage >= 95.0, "coverage {coverage}% below 95%");
    let dataset = dir.path().join("dataset.jsonl");
    assert!(fs::metadata(&dataset).unwrap().len() > 0);
}

#[test]
fn gen_data_rejects_zero_trajectories() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "gen-data",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--n-traj",
        "0",
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("n_traj"), "got: {}", stderr(&out));
}

#[test]
fn gen_data_is_deterministic_for_a_fixed_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for path in [&a, &b] {
        let out = run(&[
            "gen-data",
            "--dataset",
            path.to_str().unwrap(),
            "--n-traj",
            "20",
            "--traj-len",
            "50",
            "--seed",
            "123",
        ]);
        assert_ok(&out, "gen-data");
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn build_graph_is_deterministic_and_strongly_connected() {
    let p = pipeline();
    let graph = ReachGraph::load(&p.graph).expect("graph loads");
    assert!(graph.len() > 1);
    assert!(graph.is_strongly_connected());

    // Same inputs again: identical file and the four summary stats printed.
    let dir = TempDir::new().unwrap();
    let again = dir.path().join("graph.json");
    let out = run(&[
        "build-graph",
        "--dataset",
        p.dataset.to_str().unwrap(),
        "--graph",
        again.to_str().unwrap(),
    ]);
    assert_ok(&out, "build-graph");
    let text = stdout(&out);
    for field in ["nodes = ", "edges = ", "mean degree = ", "mean edge length = "] {
        assert!(text.contains(field), "missing {field:?} in: {text}");
    }
    assert_eq!(fs::read(&p.graph).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn build_graph_rejects_an_empty_dataset() {
    let dir = TempDir::new().unwrap();
    let dataset = dir.path().join("empty.jsonl");
    fs::write(&dataset, "").unwrap();
    let out = run(&[
        "build-graph",
        "--dataset",
        dataset.to_str().unwrap(),
        "--graph",
        dir.path().join("graph.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("no states"), "got: {}", stderr(&out));
}

#[test]
fn plan_case_study_emits_plan_and_narrowing_traces() {
    let p = pipeline();
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "plan",
        "--config",
        p.config.to_str().unwrap(),
        "--graph",
        p.graph.to_str().unwrap(),
        "--formula",
        CASE_STUDY_FORMULA,
        "--x0",
        "12,3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_ok(&out, "plan");

    let plan: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("plan.json")).unwrap()).unwrap();
    let waypoints = plan["waypoints"].as_array().unwrap();
    assert_eq!(waypoints.len(), 31, "one waypoint per horizon step");
    let lo = plan["interval"][0].as_f64().unwrap();
    let hi = plan["interval"][1].as_f64().unwrap();
    assert!(lo > 0.0, "planned robustness lower bound must be positive");
    assert!((hi - lo).abs() <= 1e-9, "full plan pins the interval");

    // The executed-signal interval trace must narrow monotonically to an
    // exact positive terminal value.
    let rows = read_csv(&dir.path().join("interval_trace.csv"));
    assert_eq!(rows[0], ["step", "lower", "upper", "width"]);
    let data: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    assert_eq!(data.len(), 31);
    for w in data.windows(2) {
        assert!(w[1].0 >= w[0].0 - 1e-9, "lower bound decreased: {w:?}");
        assert!(w[1].1 <= w[0].1 + 1e-9, "upper bound increased: {w:?}");
    }
    let (final_lo, final_hi) = *data.last().unwrap();
    assert!(final_lo > 0.0, "terminal lower bound must be positive");
    assert!(final_hi - final_lo <= 1e-9, "terminal width must vanish");

    // One normalized robustness column per referenced predicate.
    let preds = read_csv(&dir.path().join("predicate_trace.csv"));
    assert_eq!(preds[0], ["step", "m1", "m2", "m3"]);
    assert_eq!(preds.len(), 32, "header plus one row per sample");

    // Pruning counters per expansion, consistent with the final stats.
    let stats = read_csv(&dir.path().join("search_stats.csv"));
    assert_eq!(
        stats[0],
        [
            "expansion",
            "expanded",
            "generated",
            "pruned_upper",
            "pruned_dominance",
            "frontier_len"
        ]
    );
    assert!(stats.len() >= 2, "at least one expansion recorded");
    let last_expanded: u64 = stats.last().unwrap()[1].parse().unwrap();
    assert_eq!(last_expanded, plan["stats"]["expanded"].as_u64().unwrap());
}

#[test]
fn plan_exits_with_2_when_no_plan_exists() {
    let p = pipeline();
    let dir = TempDir::new().unwrap();
    // m1 and m3 are disjoint regions, so requiring both at once is
    // unsatisfiable and the sound upper bound proves it.
    let out = run(&[
        "plan",
        "--config",
        p.config.to_str().unwrap(),
        "--graph",
        p.graph.to_str().unwrap(),
        "--formula",
        "G[0,5] (m1 & m3)",
        "--x0",
        "12,3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("no plan found"));
    assert!(dir.path().join("search_stats.csv").exists());
    assert!(!dir.path().join("plan.json").exists());
}

#[test]
fn plan_rejects_a_malformed_formula() {
    let p = pipeline();
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "plan",
        "--config",
        p.config.to_str().unwrap(),
        "--graph",
        p.graph.to_str().unwrap(),
        "--formula",
        "F[0,12 m1",
        "--x0",
        "12,3",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("parse error"), "got: {}", stderr(&out));
}

#[test]
fn plan_accepts_a_self_contained_task_file() {
    let p = pipeline();
    let dir = TempDir::new().unwrap();
    let task = dir.path().join("task.json");
    fs::write(
        &task,
        r#"{
            "formula": "F[0,8] goal",
            "predicates": [{"id": "goal", "center": [16.5, 4.5], "radius": 2.2}],
            "x0": [12.0, 3.0]
        }"#,
    )
    .unwrap();
    let out = run(&[
        "plan",
        "--graph",
        p.graph.to_str().unwrap(),
        "--task",
        task.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_ok(&out, "plan --task");
    assert!(dir.path().join("plan.json").exists());
}

#[test]
fn bench_is_deterministic_and_respects_template_restriction() {
    let p = pipeline();
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "bench",
            "--graph",
            p.graph.to_str().unwrap(),
            "--templates",
            "T2",
            "--configs-per-template",
            "3",
            "--seed",
            "42",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert_ok(&out, "bench");
        assert!(stdout(&out).contains("T2"));
    }
    for name in ["results.csv", "report.txt", "report.csv"] {
        assert!(dir_a.path().join(name).exists(), "missing {name}");
    }

    // --templates T2 restricts the run to that template.
    let results = read_csv(&dir_a.path().join("results.csv"));
    assert_eq!(results[0][0], "template");
    assert_eq!(results.len(), 4, "header plus three records");
    assert!(results[1..].iter().all(|r| r[0] == "T2"));

    // Identical seeds reproduce everything except wall-clock times
    // (results.csv column 4 is pt_s; report.csv columns 6, 7 are the
    // planning-time mean and standard deviation).
    let a = drop_columns(&read_csv(&dir_a.path().join("results.csv")), &[4]);
    let b = drop_columns(&read_csv(&dir_b.path().join("results.csv")), &[4]);
    assert_eq!(a, b);
    let a = drop_columns(&read_csv(&dir_a.path().join("report.csv")), &[6, 7]);
    let b = drop_columns(&read_csv(&dir_b.path().join("report.csv")), &[6, 7]);
    assert_eq!(a, b);
}

#[test]
fn monitor_converges_and_nests_on_a_full_horizon_signal() {
    let p = pipeline();
    let dir = TempDir::new().unwrap();
    let signal = dir.path().join("signal.csv");
    fs::write(&signal, "x,y\n12,3\n14,4\n16,4.5\n16.5,4.5\n").unwrap();
    let out = run(&[
        "monitor",
        "--config",
        p.config.to_str().unwrap(),
        "--formula",
        "F[0,3] m1",
        "--out-dir",
        dir.path().to_str().unwrap(),
        signal.to_str().unwrap(),
    ]);
    assert_ok(&out, "monitor");

    let rows = read_csv(&dir.path().join("monitor_trace.csv"));
    assert_eq!(rows[0], ["step", "lower", "upper", "width"]);
    let data: Vec<(f64, f64)> = rows[1..]
        .iter()
        .map(|r| (r[1].parse().unwrap(), r[2].parse().unwrap()))
        .collect();
    assert_eq!(data.len(), 4, "one row per sample");
    // Each interval is contained in the previous one.
    for w in data.windows(2) {
        assert!(w[1].0 >= w[0].0 - 1e-9 && w[1].1 <= w[0].1 + 1e-9, "{w:?}");
    }
    // The prefix covers the horizon, so the final interval is a point.
    let (lo, hi) = *data.last().unwrap();
    assert!((hi - lo).abs() <= 1e-9);
    assert!(lo > 0.0, "the signal ends inside m1");
}

#[test]
fn monitor_rejects_an_empty_signal() {
    let p = pipeline();
    let dir = TempDir::new().unwrap();
    let signal = dir.path().join("signal.csv");
    fs::write(&signal, "x,y\n").unwrap();
    let out = run(&[
        "monitor",
        "--config",
        p.config.to_str().unwrap(),
        "--formula",
        "F[0,3] m1",
        "--out-dir",
        dir.path().to_str().unwrap(),
        signal.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(
        stderr(&out).contains("no samples"),
        "got: {}",
        stderr(&out)
    );
}
