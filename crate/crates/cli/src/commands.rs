//! Subcommand implementations.
//!
//! Each command prints a short human-readable summary to stdout and writes
//! machine-readable artifacts (JSON, JSONL, CSV) under the output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use stlplan::bench::{aggregate, records_to_csv, run_bench, BenchConfig, BenchContext};
use stlplan::mazesim::{
    coverage, execute_plan, generate_dataset, subsample_signal, GridReachOracle, MazeWorld,
    OfflineDataset,
};
use stlplan::planner::{stl_graph_search, PlanStats, PlannerConfig};
use stlplan::reachgraph::{build_graph, GraphConfig, ReachGraph};
use stlplan::robustness::{agm_robustness, eval_predicate_normalized, IntervalMonitor, SemanticsMode};
use stlplan::stl::{parse_formula, PredicateTable, StlFormula};
use stlplan::Vec2;

use crate::config::{predicate_table, DatasetParams, PredicateSpec, TaskFile};

/// Loads the maze: a layout file of `#`/`.` rows, or the built-in desk maze.
/// Custom layouts use the same cell size and speed limit as the built-in one.
pub fn load_world(maze: Option<&Path>) -> Result<Arc<MazeWorld>> {
    match maze {
        None => Ok(Arc::new(MazeWorld::desk())),
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading maze {}", path.display()))?;
            let world = MazeWorld::parse(&text, 1.0, 0.5)
                .with_context(|| format!("parsing maze {}", path.display()))?;
            Ok(Arc::new(world))
        }
    }
}

fn ensure_parent_dir(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating directory {}", parent.display()))?;
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    ensure_parent_dir(path)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn cmd_gen_data(world: &MazeWorld, params: &DatasetParams, out_path: &Path) -> Result<()> {
    if params.n_traj == 0 || params.traj_len == 0 {
        bail!(
            "n_traj and traj_len must be >= 1 (got n_traj={}, traj_len={})",
            params.n_traj,
            params.traj_len
        );
    }
    let dataset = generate_dataset(world, params.n_traj, params.traj_len, params.seed);
    ensure_parent_dir(out_path)?;
    dataset.save_jsonl(out_path)?;
    let transitions: usize = dataset.trajectories.iter().map(|t| t.actions.len()).sum();
    println!(
        "wrote {} trajectories ({} transitions) to {}",
        dataset.trajectories.len(),
        transitions,
        out_path.display()
    );
    println!(
        "free-cell coverage = {:.1}%",
        100.0 * coverage(world, &dataset)
    );
    Ok(())
}

pub fn cmd_build_graph(
    world: Arc<MazeWorld>,
    dataset_path: &Path,
    config: &GraphConfig,
    out_path: &Path,
) -> Result<()> {
    let dataset = OfflineDataset::load_jsonl(dataset_path)
        .with_context(|| format!("loading dataset {}", dataset_path.display()))?;
    let states = dataset.all_states();
    if states.is_empty() {
        bail!("dataset {} contains no states", dataset_path.display());
    }
    let oracle = GridReachOracle::new(world.clone(), world.max_speed);
    let graph = build_graph(&states, &oracle, config)?;
    ensure_parent_dir(out_path)?;
    graph.save(out_path)?;
    let stats = &graph.stats;
    println!("nodes = {}", stats.nodes);
    println!("edges = {}", stats.edges);
    println!("mean degree = {:.2}", stats.mean_degree);
    println!("mean edge length = {:.2}", stats.mean_edge_len);
    println!("wrote graph to {}", out_path.display());
    Ok(())
}

/// Inputs of the `plan` subcommand after flag parsing.
pub struct PlanInputs {
    pub graph_path: PathBuf,
    pub formula: Option<String>,
    pub task_path: Option<PathBuf>,
    pub x0: Option<Vec2>,
}

/// Plans, executes, and writes `plan.json` plus the three trace CSVs.
/// Returns the process exit code: 0 when a plan was found, 2 when the search
/// exhausted its budget without one.
pub fn cmd_plan(
    world: Arc<MazeWorld>,
    inputs: &PlanInputs,
    config_preds: &[PredicateSpec],
    planner: &PlannerConfig,
    out_dir: &Path,
) -> Result<u8> {
    let graph = ReachGraph::load(&inputs.graph_path)
        .with_context(|| format!("loading graph {}", inputs.graph_path.display()))?;

    let (formula_text, specs, task_x0) = match (&inputs.task_path, &inputs.formula) {
        (Some(_), Some(_)) => bail!("--formula and --task are mutually exclusive"),
        (None, None) => bail!("one of --formula or --task is required"),
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading task {}", path.display()))?;
            let task: TaskFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing task {}", path.display()))?;
            let x0 = task.x0.map(|[x, y]| Vec2::new(x, y));
            (task.formula, task.predicates, x0)
        }
        (None, Some(text)) => (text.clone(), config_preds.to_vec(), None),
    };

    let phi = parse_formula(&formula_text)?;
    let preds = predicate_table(&specs)?;
    for id in phi.predicate_ids() {
        if preds.get(id).is_none() {
            bail!(
                "formula references undefined predicate {id:?}; \
                 define it under [[predicates]] in the config or in the task file"
            );
        }
    }
    let x0 = match inputs.x0.or(task_x0) {
        Some(p) => p,
        None => bail!("--x0 x,y is required (or provide \"x0\" in the task file)"),
    };
    if !world.is_free_pos(x0) {
        bail!("start position ({}, {}) lies inside a wall", x0.x, x0.y);
    }

    let outcome = stl_graph_search(x0, &graph, &phi, &preds, planner)?;
    write_search_stats(&out_dir.join("search_stats.csv"), outcome.stats())?;

    let Some(plan) = outcome.plan() else {
        let s = outcome.stats();
        println!(
            "no plan found: expanded={} generated={} pruned_upper={} pruned_dominance={} \
             elapsed={:.3}s",
            s.expanded, s.generated, s.pruned_upper, s.pruned_dominance, s.elapsed_s
        );
        println!("wrote search_stats.csv to {}", out_dir.display());
        return Ok(2);
    };

    let plan_json = serde_json::to_string_pretty(&plan.to_json())? + "\n";
    write_text(&out_dir.join("plan.json"), &plan_json)?;

    let oracle = GridReachOracle::new(world.clone(), world.max_speed);
    let trajectory = execute_plan(&world, &oracle, x0, &plan.waypoints, graph.k);
    let signal = subsample_signal(&trajectory, graph.k);
    write_interval_trace(&out_dir.join("interval_trace.csv"), &phi, &preds, &signal)?;
    write_predicate_trace(&out_dir.join("predicate_trace.csv"), &phi, &preds, &signal)?;
    let executed = agm_robustness(&phi, &preds, &signal, 0)?;

    let s = &plan.stats;
    println!(
        "plan found: {} waypoints, robustness interval [{:.6}, {:.6}]",
        plan.waypoints.len(),
        plan.final_interval.lo,
        plan.final_interval.hi
    );
    println!("executed robustness = {:.6}", executed);
    println!(
        "stats: expanded={} generated={} pruned_upper={} pruned_dominance={} elapsed={:.3}s",
        s.expanded, s.generated, s.pruned_upper, s.pruned_dominance, s.elapsed_s
    );
    println!(
        "wrote plan.json, interval_trace.csv, predicate_trace.csv, search_stats.csv to {}",
        out_dir.display()
    );
    Ok(0)
}

/// Per-step robustness interval of a signal prefix, one row per sample.
fn interval_rows(
    phi: &StlFormula,
    preds: &PredicateTable,
    signal: &[Vec2],
) -> Result<Vec<(usize, f64, f64)>> {
    let mut monitor = IntervalMonitor::new(phi, preds, SemanticsMode::Sound, signal[0])?;
    let mut rows = Vec::with_capacity(signal.len());
    rows.push((0, monitor.interval().lo, monitor.interval().hi));
    for (i, &p) in signal.iter().enumerate().skip(1) {
        monitor = monitor.extend(p);
        rows.push((i, monitor.interval().lo, monitor.interval().hi));
    }
    Ok(rows)
}

fn interval_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("step,lower,upper,width\n");
    for &(step, lo, hi) in rows {
        out.push_str(&format!("{step},{lo:.9},{hi:.9},{:.9}\n", hi - lo));
    }
    out
}

fn write_interval_trace(
    path: &Path,
    phi: &StlFormula,
    preds: &PredicateTable,
    signal: &[Vec2],
) -> Result<()> {
    let rows = interval_rows(phi, preds, signal)?;
    write_text(path, &interval_csv(&rows))
}

/// Normalized robustness of every referenced predicate at every sample.
fn write_predicate_trace(
    path: &Path,
    phi: &StlFormula,
    preds: &PredicateTable,
    signal: &[Vec2],
) -> Result<()> {
    let ids = phi.predicate_ids();
    let mut out = String::from("step");
    for id in &ids {
        out.push(',');
        out.push_str(id);
    }
    out.push('\n');
    for (step, &p) in signal.iter().enumerate() {
        out.push_str(&step.to_string());
        for id in &ids {
            let def = preds.get(id).expect("checked above");
            out.push_str(&format!(",{:.9}", eval_predicate_normalized(def, p)));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Pruning counters and frontier size after each expansion.
fn write_search_stats(path: &Path, stats: &PlanStats) -> Result<()> {
    let mut out = String::from("expansion,expanded,generated,pruned_upper,pruned_dominance,frontier_len\n");
    for (i, s) in stats.history.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            s.expanded,
            s.generated,
            s.pruned_upper,
            s.pruned_dominance,
            s.frontier_len
        ));
    }
    write_text(path, &out)
}

/// Builds or loads the benchmark pipeline, runs it, and writes
/// `results.csv`, `report.txt`, and `report.csv`.
#[allow(clippy::too_many_arguments)]
pub fn cmd_bench(
    world: Arc<MazeWorld>,
    graph_path: Option<&Path>,
    dataset_path: Option<&Path>,
    dataset_params: &DatasetParams,
    graph_config: &GraphConfig,
    bench_config: &BenchConfig,
    planner: &PlannerConfig,
    out_dir: &Path,
) -> Result<()> {
    let oracle = GridReachOracle::new(world.clone(), world.max_speed);
    let graph = match graph_path {
        Some(path) => {
            ReachGraph::load(path).with_context(|| format!("loading graph {}", path.display()))?
        }
        None => {
            let dataset = match dataset_path {
                Some(path) => OfflineDataset::load_jsonl(path)
                    .with_context(|| format!("loading dataset {}", path.display()))?,
                None => generate_dataset(
                    &world,
                    dataset_params.n_traj,
                    dataset_params.traj_len,
                    dataset_params.seed,
                ),
            };
            let states = dataset.all_states();
            if states.is_empty() {
                bail!("dataset contains no states");
            }
            build_graph(&states, &oracle, graph_config)?
        }
    };
    println!(
        "graph: {} nodes, {} edges, mean degree {:.2}",
        graph.stats.nodes, graph.stats.edges, graph.stats.mean_degree
    );

    let ctx = BenchContext::new(&world, &oracle, &graph);
    let records = run_bench(&ctx, bench_config, planner)?;
    let report = aggregate(&records);

    write_text(&out_dir.join("results.csv"), &records_to_csv(&records))?;
    write_text(&out_dir.join("report.txt"), &report.to_text())?;
    write_text(&out_dir.join("report.csv"), &report.to_csv())?;
    print!("{}", report.to_text());
    println!(
        "wrote results.csv, report.txt, report.csv to {}",
        out_dir.display()
    );
    Ok(())
}

/// Reads a signal CSV: one `x,y` row per sample, optional `x,y` header.
fn read_signal_csv(path: &Path) -> Result<Vec<Vec2>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading signal {}", path.display()))?;
    let mut signal = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = if parts.len() == 2 {
            parts[0].parse::<f64>().ok().zip(parts[1].parse::<f64>().ok())
        } else {
            None
        };
        match parsed {
            Some((x, y)) => signal.push(Vec2::new(x, y)),
            // A non-numeric first line is a header; later ones are errors.
            None if lineno == 0 => continue,
            None => bail!(
                "signal {} line {}: expected \"x,y\", got {raw:?}",
                path.display(),
                lineno + 1
            ),
        }
    }
    if signal.is_empty() {
        bail!("signal {} contains no samples", path.display());
    }
    Ok(signal)
}

/// Monitors a formula over a recorded signal and writes the per-step
/// robustness interval CSV.
pub fn cmd_monitor(
    formula_text: &str,
    signal_path: &Path,
    config_preds: &[PredicateSpec],
    out_dir: &Path,
) -> Result<()> {
    let phi = parse_formula(formula_text)?;
    let preds = predicate_table(config_preds)?;
    for id in phi.predicate_ids() {
        if preds.get(id).is_none() {
            bail!(
                "formula references undefined predicate {id:?}; \
                 define it under [[predicates]] in the config"
            );
        }
    }
    let signal = read_signal_csv(signal_path)?;
    let rows = interval_rows(&phi, &preds, &signal)?;
    let path = out_dir.join("monitor_trace.csv");
    write_text(&path, &interval_csv(&rows))?;
    let &(steps, lo, hi) = rows.last().expect("signal is non-empty");
    println!(
        "observed {} samples; final interval [{:.9}, {:.9}] (width {:.2e})",
        steps + 1,
        lo,
        hi,
        hi - lo
    );
    if signal.len() > phi.horizon() {
        println!("prefix covers the formula horizon; the interval is exact");
    } else {
        println!(
            "prefix covers {} of {} samples needed for convergence",
            signal.len(),
            phi.horizon() + 1
        );
    }
    println!("wrote {}", path.display());
    Ok(())
}
