//! Run configuration: a TOML document plus command-line overrides.
//!
//! Every key is optional. Resolution order is flag > config file > library
//! default, so a bare invocation without a config file runs the standard
//! desk-scale pipeline.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use stlplan::bench::{BenchConfig, TemplateId};
use stlplan::planner::{FrontierPolicy, PlannerConfig};
use stlplan::reachgraph::GraphConfig;
use stlplan::stl::{PredicateDef, PredicateTable};
use stlplan::Vec2;

/// Top-level TOML schema.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub dataset: DatasetSection,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub planner: PlannerSection,
    #[serde(default)]
    pub bench: BenchSection,
    #[serde(default)]
    pub predicates: Vec<PredicateSpec>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Maze layout file; omitted means the built-in desk maze.
    pub maze: Option<PathBuf>,
    /// Directory artifacts are written to (default ".").
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub n_traj: Option<usize>,
    pub traj_len: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub cell_size: Option<f64>,
    pub budget: Option<usize>,
    pub cluster_threshold: Option<f64>,
    pub k: Option<u32>,
    pub delta: Option<f64>,
    pub n_bins: Option<usize>,
    pub target_degree: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub eps: Option<f64>,
    pub top_k: Option<usize>,
    pub max_expansions: Option<u64>,
    /// One of "score", "fifo", "lifo".
    pub frontier: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    /// Template names such as "T1"; omitted means all twelve.
    pub templates: Option<Vec<String>>,
    pub configs_per_template: Option<usize>,
    pub seed: Option<u64>,
}

/// A named circular region, as written in the config file or a task file.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredicateSpec {
    pub id: String,
    pub center: [f64; 2],
    pub radius: f64,
}

/// A self-contained planning task: formula, predicates, and optional start.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskFile {
    pub formula: String,
    pub predicates: Vec<PredicateSpec>,
    pub x0: Option<[f64; 2]>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }
}

/// Dataset generation parameters after resolution.
#[derive(Clone, Copy, Debug)]
pub struct DatasetParams {
    pub n_traj: usize,
    pub traj_len: usize,
    pub seed: u64,
}

pub fn resolve_dataset(
    section: &DatasetSection,
    n_traj: Option<usize>,
    traj_len: Option<usize>,
    seed: Option<u64>,
) -> DatasetParams {
    DatasetParams {
        n_traj: n_traj.or(section.n_traj).unwrap_or(500),
        traj_len: traj_len.or(section.traj_len).unwrap_or(200),
        seed: seed.or(section.seed).unwrap_or(11),
    }
}

/// Graph construction flag overrides (all optional).
#[derive(Clone, Copy, Debug, Default)]
pub struct GraphOverrides {
    pub cell_size: Option<f64>,
    pub budget: Option<usize>,
    pub threshold: Option<f64>,
    pub k: Option<u32>,
    pub delta: Option<f64>,
    pub n_bins: Option<usize>,
    pub target_degree: Option<usize>,
    pub seed: Option<u64>,
}

pub fn resolve_graph(section: &GraphSection, flags: &GraphOverrides) -> GraphConfig {
    let d = GraphConfig::default();
    GraphConfig {
        cell_size: flags.cell_size.or(section.cell_size).unwrap_or(d.cell_size),
        budget: flags.budget.or(section.budget).unwrap_or(d.budget),
        cluster_threshold: flags
            .threshold
            .or(section.cluster_threshold)
            .unwrap_or(d.cluster_threshold),
        k: flags.k.or(section.k).unwrap_or(d.k),
        delta: flags.delta.or(section.delta).unwrap_or(d.delta),
        n_bins: flags.n_bins.or(section.n_bins).unwrap_or(d.n_bins),
        target_degree: flags
            .target_degree
            .or(section.target_degree)
            .unwrap_or(d.target_degree),
        seed: flags.seed.or(section.seed).unwrap_or(d.seed),
    }
}

/// Planner flag overrides (all optional).
#[derive(Clone, Copy, Debug, Default)]
pub struct PlannerOverrides {
    pub lambda0: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub eps: Option<f64>,
    pub top_k: Option<usize>,
    pub max_expansions: Option<u64>,
    pub frontier: Option<FrontierPolicy>,
}

pub fn parse_frontier(text: &str) -> Result<FrontierPolicy> {
    match text.to_ascii_lowercase().as_str() {
        "score" => Ok(FrontierPolicy::Score),
        "fifo" => Ok(FrontierPolicy::Fifo),
        "lifo" => Ok(FrontierPolicy::Lifo),
        other => bail!("unknown frontier policy {other:?}; expected score, fifo, or lifo"),
    }
}

pub fn resolve_planner(section: &PlannerSection, flags: &PlannerOverrides) -> Result<PlannerConfig> {
    let d = PlannerConfig::default();
    let frontier = match (flags.frontier, section.frontier.as_deref()) {
        (Some(policy), _) => policy,
        (None, Some(text)) => parse_frontier(text)?,
        (None, None) => d.frontier,
    };
    Ok(PlannerConfig {
        lambda0: flags.lambda0.or(section.lambda0).unwrap_or(d.lambda0),
        lambda1: flags.lambda1.or(section.lambda1).unwrap_or(d.lambda1),
        lambda2: flags.lambda2.or(section.lambda2).unwrap_or(d.lambda2),
        eps: flags.eps.or(section.eps).unwrap_or(d.eps),
        top_k: flags.top_k.or(section.top_k).unwrap_or(d.top_k),
        max_expansions: flags
            .max_expansions
            .or(section.max_expansions)
            .unwrap_or(d.max_expansions),
        frontier,
    })
}

pub fn parse_templates(items: &[String]) -> Result<Vec<TemplateId>> {
    let mut out = Vec::new();
    for item in items {
        for part in item.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match TemplateId::parse(part) {
                Some(t) => out.push(t),
                None => bail!("unknown template {part:?}; expected T1 through T12"),
            }
        }
    }
    if out.is_empty() {
        bail!("template list is empty");
    }
    Ok(out)
}

pub fn resolve_bench(
    section: &BenchSection,
    templates: Option<&[String]>,
    configs_per_template: Option<usize>,
    seed: Option<u64>,
) -> Result<BenchConfig> {
    let d = BenchConfig::default();
    let templates = match (templates, &section.templates) {
        (Some(items), _) => parse_templates(items)?,
        (None, Some(items)) => parse_templates(items)?,
        (None, None) => d.templates,
    };
    let configs_per_template = configs_per_template
        .or(section.configs_per_template)
        .unwrap_or(d.configs_per_template);
    if configs_per_template == 0 {
        bail!("configs-per-template must be >= 1");
    }
    Ok(BenchConfig {
        templates,
        configs_per_template,
        seed: seed.or(section.seed).unwrap_or(d.seed),
    })
}

pub fn predicate_table(specs: &[PredicateSpec]) -> Result<PredicateTable> {
    let mut table = PredicateTable::new();
    for spec in specs {
        let def = PredicateDef::new(
            &spec.id,
            Vec2::new(spec.center[0], spec.center[1]),
            spec.radius,
        )?;
        table.insert(def)?;
    }
    Ok(table)
}

pub fn parse_x0(text: &str) -> Result<Vec2> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        bail!("--x0 expects \"x,y\", got {text:?}");
    }
    let x: f64 = parts[0]
        .parse()
        .with_context(|| format!("parsing x coordinate {:?}", parts[0]))?;
    let y: f64 = parts[1]
        .parse()
        .with_context(|| format!("parsing y coordinate {:?}", parts[1]))?;
    Ok(Vec2::new(x, y))
}
