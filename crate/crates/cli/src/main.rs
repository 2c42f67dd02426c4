//! `stlplan`: waypoint planning for signal temporal logic tasks over
//! reachability graphs built from offline data.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 when the planner
//! finished without finding a plan.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use stlplan::planner::FrontierPolicy;

use config::{
    parse_x0, resolve_bench, resolve_dataset, resolve_graph, resolve_planner, GraphOverrides,
    PlannerOverrides, RunConfig,
};

#[derive(Parser, Debug)]
#[command(
    name = "stlplan",
    version,
    about = "Plan waypoints satisfying signal temporal logic tasks on maze worlds",
    propagate_version = true
)]
struct Cli {
    /// TOML run configuration; command-line flags override its values.
    #[arg(long, value_name = "FILE", global = true)]
    config: Option<PathBuf>,

    /// Directory output artifacts are written to (default ".").
    #[arg(long, value_name = "DIR", global = true)]
    out_dir: Option<PathBuf>,

    /// Maze layout file with '#' wall and '.' free cells
    /// (default: the built-in 20x20 four-room maze).
    #[arg(long, value_name = "FILE", global = true)]
    maze: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate an offline random-walk dataset (JSON lines).
    GenData {
        /// Output path (default: <out-dir>/dataset.jsonl).
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Number of trajectories.
        #[arg(long)]
        n_traj: Option<usize>,
        /// Control steps per trajectory.
        #[arg(long)]
        traj_len: Option<usize>,
        /// Dataset generation seed.
        #[arg(long)]
        seed: Option<u64>,
    },

    /// Build a reachability graph from an offline dataset.
    BuildGraph {
        /// Input dataset (default: <out-dir>/dataset.jsonl).
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Output path (default: <out-dir>/graph.json).
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        #[command(flatten)]
        graph_flags: GraphFlags,
    },

    /// Plan for a formula, execute the plan, and write the trace files.
    Plan {
        /// Reachability graph to plan on (default: <out-dir>/graph.json).
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        /// Formula text, e.g. "F[0,12] m1 & G[20,30] m3" (predicates come
        /// from the config file).
        #[arg(long, value_name = "TEXT")]
        formula: Option<String>,
        /// Task file: JSON with "formula", "predicates", optional "x0".
        #[arg(long, value_name = "FILE")]
        task: Option<PathBuf>,
        /// Start position.
        #[arg(long, value_name = "X,Y")]
        x0: Option<String>,
        #[command(flatten)]
        planner_flags: PlannerFlags,
    },

    /// Run the benchmark templates and write results and the report.
    Bench {
        /// Load this graph instead of building one.
        #[arg(long, value_name = "FILE")]
        graph: Option<PathBuf>,
        /// Load this dataset instead of generating one (ignored with --graph).
        #[arg(long, value_name = "FILE")]
        dataset: Option<PathBuf>,
        /// Templates to run, e.g. "T2" or "T1,T5,T12" (default: all twelve).
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        templates: Option<Vec<String>>,
        /// Task instances sampled per template.
        #[arg(long)]
        configs_per_template: Option<usize>,
        /// Benchmark sampling seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        planner_flags: PlannerFlags,
    },

    /// Evaluate the robustness interval of a formula over a recorded signal.
    Monitor {
        /// Formula text (predicates come from the config file).
        #[arg(long, value_name = "TEXT")]
        formula: String,
        /// Signal CSV: one "x,y" row per sample, optional header.
        #[arg(value_name = "SIGNAL")]
        signal: PathBuf,
    },
}

#[derive(Args, Debug, Default)]
struct GraphFlags {
    /// Side length of the subsampling cells (world units).
    #[arg(long)]
    cell_size: Option<f64>,
    /// Number of states the subsampler keeps (at most).
    #[arg(long)]
    budget: Option<usize>,
    /// Merge states closer than this many control steps.
    #[arg(long)]
    threshold: Option<f64>,
    /// Control steps allotted to traversing one edge.
    #[arg(long)]
    k: Option<u32>,
    /// Safety margin: edges require estimated travel < k - delta.
    #[arg(long)]
    delta: Option<f64>,
    /// Number of angular sectors used during edge selection.
    #[arg(long)]
    n_bins: Option<usize>,
    /// Edges are topped up to this out-degree when possible.
    #[arg(long)]
    target_degree: Option<usize>,
    /// Subsampler seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl From<&GraphFlags> for GraphOverrides {
    fn from(f: &GraphFlags) -> Self {
        GraphOverrides {
            cell_size: f.cell_size,
            budget: f.budget,
            threshold: f.threshold,
            k: f.k,
            delta: f.delta,
            n_bins: f.n_bins,
            target_degree: f.target_degree,
            seed: f.seed,
        }
    }
}

#[derive(Args, Debug, Default)]
struct PlannerFlags {
    /// Weight of the robustness guidance term in the expansion score.
    #[arg(long)]
    lambda0: Option<f64>,
    /// Weight of elapsed time in the expansion score.
    #[arg(long)]
    lambda1: Option<f64>,
    /// Weight of geometric path length in the expansion score.
    #[arg(long)]
    lambda2: Option<f64>,
    /// Robustness slack of dominance pruning.
    #[arg(long)]
    eps: Option<f64>,
    /// Candidate prefixes kept per (node, time) bucket.
    #[arg(long)]
    top_k: Option<usize>,
    /// Expansion budget before the search gives up.
    #[arg(long)]
    max_expansions: Option<u64>,
    /// Frontier policy.
    #[arg(long, value_enum)]
    frontier: Option<FrontierArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FrontierArg {
    /// Best-first by the weighted score.
    Score,
    /// Breadth-first.
    Fifo,
    /// Depth-first.
    Lifo,
}

impl From<FrontierArg> for FrontierPolicy {
    fn from(arg: FrontierArg) -> Self {
        match arg {
            FrontierArg::Score => FrontierPolicy::Score,
            FrontierArg::Fifo => FrontierPolicy::Fifo,
            FrontierArg::Lifo => FrontierPolicy::Lifo,
        }
    }
}

impl From<&PlannerFlags> for PlannerOverrides {
    fn from(f: &PlannerFlags) -> Self {
        PlannerOverrides {
            lambda0: f.lambda0,
            lambda1: f.lambda1,
            lambda2: f.lambda2,
            eps: f.eps,
            top_k: f.top_k,
            max_expansions: f.max_expansions,
            frontier: f.frontier.map(Into::into),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let config = RunConfig::load(cli.config.as_deref())?;
    let out_dir = cli
        .out_dir
        .or_else(|| config.run.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    let maze = cli.maze.or_else(|| config.run.maze.clone());
    let world = commands::load_world(maze.as_deref())?;

    match cli.command {
        Command::GenData {
            dataset,
            n_traj,
            traj_len,
            seed,
        } => {
            let params = resolve_dataset(&config.dataset, n_traj, traj_len, seed);
            let out_path = dataset.unwrap_or_else(|| out_dir.join("dataset.jsonl"));
            commands::cmd_gen_data(&world, &params, &out_path)?;
            Ok(0)
        }
        Command::BuildGraph {
            dataset,
            graph,
            graph_flags,
        } => {
            let graph_config = resolve_graph(&config.graph, &(&graph_flags).into());
            let dataset_path = dataset.unwrap_or_else(|| out_dir.join("dataset.jsonl"));
            let out_path = graph.unwrap_or_else(|| out_dir.join("graph.json"));
            commands::cmd_build_graph(world, &dataset_path, &graph_config, &out_path)?;
            Ok(0)
        }
        Command::Plan {
            graph,
            formula,
            task,
            x0,
            planner_flags,
        } => {
            let planner = resolve_planner(&config.planner, &(&planner_flags).into())?;
            let inputs = commands::PlanInputs {
                graph_path: graph.unwrap_or_else(|| out_dir.join("graph.json")),
                formula,
                task_path: task,
                x0: x0.as_deref().map(parse_x0).transpose()?,
            };
            commands::cmd_plan(world, &inputs, &config.predicates, &planner, &out_dir)
        }
        Command::Bench {
            graph,
            dataset,
            templates,
            configs_per_template,
            seed,
            planner_flags,
        } => {
            let planner = resolve_planner(&config.planner, &(&planner_flags).into())?;
            let bench_config = resolve_bench(
                &config.bench,
                templates.as_deref(),
                configs_per_template,
                seed,
            )?;
            let dataset_params = resolve_dataset(&config.dataset, None, None, None);
            let graph_config = resolve_graph(&config.graph, &GraphOverrides::default());
            commands::cmd_bench(
                world,
                graph.as_deref(),
                dataset.as_deref(),
                &dataset_params,
                &graph_config,
                &bench_config,
                &planner,
                &out_dir,
            )?;
            Ok(0)
        }
        Command::Monitor { formula, signal } => {
            commands::cmd_monitor(&formula, &signal, &config.predicates, &out_dir)?;
            Ok(0)
        }
    }
}
