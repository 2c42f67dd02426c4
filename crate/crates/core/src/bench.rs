//! Benchmark harness: twelve specification templates over randomly sampled
//! circular regions, a plan/execute/evaluate protocol per task, and
//! aggregate reporting (planning success rate, execution success rate,
//! planning time) per template, per difficulty group, and overall.

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::mazesim::{
    execute_plan, generate_dataset, subsample_signal, GridReachOracle, MazeWorld,
};
use crate::planner::{nearest_anchor, stl_graph_search, PlannerConfig};
use crate::reachgraph::{build_graph, GraphConfig, GraphError, ReachGraph};
use crate::robustness::agm_robustness;
use crate::stl::{PredicateDef, PredicateTable, StlFormula};

/// The twelve benchmark formula templates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TemplateId {
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
    T8,
    T9,
    T10,
    T11,
    T12,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Group {
    Basic,
    Intermediate,
    Advanced,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Group::Basic => write!(f, "Basic"),
            Group::Intermediate => write!(f, "Intermediate"),
            Group::Advanced => write!(f, "Advanced"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.index() + 1)
    }
}

impl TemplateId {
    pub const ALL: [TemplateId; 12] = [
        TemplateId::T1,
        TemplateId::T2,
        TemplateId::T3,
        TemplateId::T4,
        TemplateId::T5,
        TemplateId::T6,
        TemplateId::T7,
        TemplateId::T8,
        TemplateId::T9,
        TemplateId::T10,
        TemplateId::T11,
        TemplateId::T12,
    ];

    /// Zero-based template index (T1 -> 0).
    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&t| t == self).expect("listed")
    }

    pub fn group(self) -> Group {
        match self.index() {
            0..=2 => Group::Basic,
            3..=6 => Group::Intermediate,
            _ => Group::Advanced,
        }
    }

    pub fn parse(text: &str) -> Option<TemplateId> {
        let n: usize = text.trim().trim_start_matches(['T', 't']).parse().ok()?;
        Self::ALL.get(n.checked_sub(1)?).copied()
    }

    /// Number of circular regions the template references.
    #[cfg(test)]
    fn n_regions(self) -> usize {
        match self {
            TemplateId::T1 | TemplateId::T2 | TemplateId::T9 | TemplateId::T12 => 2,
            TemplateId::T3 | TemplateId::T4 | TemplateId::T10 | TemplateId::T11 => 3,
            TemplateId::T5 | TemplateId::T6 | TemplateId::T7 => 4,
            TemplateId::T8 => 1,
        }
    }
}

#[derive(Debug, Error)]
pub enum TaskGenError {
    #[error("template {template}: exhausted {attempts} region-sampling attempts")]
    RegionSampling { template: TemplateId, attempts: usize },
    #[error("graph setup: {0}")]
    Graph(#[from] GraphError),
}

/// One concrete benchmark task.
#[derive(Clone, Debug)]
pub struct TaskSpec {
    pub template: TemplateId,
    pub preds: PredicateTable,
    /// Sampled time bounds in template label order (t1, t2, ...).
    pub bounds: Vec<usize>,
    pub x0: Vec2,
    pub formula: StlFormula,
    pub seed: u64,
}

/// Outcome of planning and executing one task.
#[derive(Clone, Debug)]
pub struct TaskRecord {
    pub task: TaskSpec,
    pub plan_ok: bool,
    pub exec_ok: bool,
    pub plan_time_s: f64,
    pub expanded: u64,
    pub generated: u64,
    pub pruned_upper: u64,
    pub pruned_dominance: u64,
    /// Robustness of the executed, subsampled signal (when a plan existed).
    pub executed_robustness: Option<f64>,
}

/// Shared read-only state for task generation and execution.
pub struct BenchContext<'a> {
    pub world: &'a MazeWorld,
    pub oracle: &'a GridReachOracle,
    pub graph: &'a ReachGraph,
    /// All-pairs hop counts over the graph (u32::MAX = unreachable).
    hops: Vec<Vec<u32>>,
    /// Maximum finite hop count; scales the sampled time bounds.
    pub diameter: usize,
}

impl<'a> BenchContext<'a> {
    pub fn new(world: &'a MazeWorld, oracle: &'a GridReachOracle, graph: &'a ReachGraph) -> Self {
        let n = graph.len();
        let mut hops = vec![vec![u32::MAX; n]; n];
        let mut queue = VecDeque::new();
        for (start, row) in hops.iter_mut().enumerate() {
            row[start] = 0;
            queue.clear();
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for e in graph.neighbors(v) {
                    if row[e.to] == u32::MAX {
                        row[e.to] = row[v] + 1;
                        queue.push_back(e.to);
                    }
                }
            }
        }
        let diameter = hops
            .iter()
            .flatten()
            .filter(|&&h| h != u32::MAX)
            .copied()
            .max()
            .unwrap_or(0) as usize;
        BenchContext {
            world,
            oracle,
            graph,
            hops,
            diameter,
        }
    }

    pub fn hop(&self, from: usize, to: usize) -> Option<usize> {
        match self.hops[from][to] {
            u32::MAX => None,
            h => Some(h as usize),
        }
    }
}

/// A sampled circular region plus the graph node that witnesses its
/// feasibility.
#[derive(Clone, Copy, Debug)]
struct Region {
    center: Vec2,
    radius: f64,
    rep_node: usize,
}

/// Margin factor: the witness node must sit well inside the region so the
/// predicate is satisfied with slack at that node.
const REGION_NODE_MARGIN: f64 = 0.75;
/// Attempts per region set before instantiation reports failure.
const SAMPLING_ATTEMPTS: usize = 4000;

fn sample_region<R: Rng>(
    ctx: &BenchContext,
    rng: &mut R,
    radius_range: (f64, f64),
    existing: &[Region],
) -> Option<Region> {
    let center = ctx.world.sample_free_pos(rng);
    let radius = rng.gen_range(radius_range.0..radius_range.1);
    for other in existing {
        if center.dist(other.center) <= radius + other.radius {
            return None; // overlaps an accepted region
        }
    }
    let rep_node = (0..ctx.graph.len())
        .filter(|&i| ctx.graph.node(i).pos.dist(center) <= REGION_NODE_MARGIN * radius)
        .min_by(|&a, &b| {
            ctx.graph
                .node(a)
                .pos
                .dist(center)
                .total_cmp(&ctx.graph.node(b).pos.dist(center))
        })?;
    Some(Region {
        center,
        radius,
        rep_node,
    })
}

fn sample_regions<R: Rng>(
    ctx: &BenchContext,
    rng: &mut R,
    count: usize,
    radius_range: (f64, f64),
    budget: &mut usize,
) -> Option<Vec<Region>> {
    let mut regions: Vec<Region> = Vec::with_capacity(count);
    while regions.len() < count {
        if *budget == 0 {
            return None;
        }
        *budget -= 1;
        if let Some(r) = sample_region(ctx, rng, radius_range, &regions) {
            regions.push(r);
        }
    }
    Some(regions)
}

/// True when every target's witness node stays reachable from the start's
/// anchor after removing all graph nodes covered by the avoid region.
fn routes_survive_avoid(ctx: &BenchContext, x0: Vec2, targets: &[Region], avoid: &Region) -> bool {
    let n = ctx.graph.len();
    let blocked: Vec<bool> = (0..n)
        .map(|i| ctx.graph.node(i).pos.dist(avoid.center) <= avoid.radius + 0.1)
        .collect();
    let start = nearest_anchor(ctx.graph, x0);
    if blocked[start] {
        return false;
    }
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for e in ctx.graph.neighbors(v) {
            if !seen[e.to] && !blocked[e.to] {
                seen[e.to] = true;
                queue.push_back(e.to);
            }
        }
    }
    targets.iter().all(|r| seen[r.rep_node])
}

fn pred_table(regions: &[Region]) -> PredicateTable {
    PredicateTable::from_defs(
        regions
            .iter()
            .enumerate()
            .map(|(i, r)| {
                PredicateDef::new(&format!("mu{}", i + 1), r.center, r.radius)
                    .expect("sampled radius is positive")
            })
            .collect(),
    )
    .expect("region ids are distinct")
}

fn f_window(lo: usize, hi: usize, id: &str) -> StlFormula {
    StlFormula::eventually(lo, hi, StlFormula::Predicate(id.into()))
}

fn g_window(lo: usize, hi: usize, id: &str) -> StlFormula {
    StlFormula::always(lo, hi, StlFormula::Predicate(id.into()))
}

fn g_window_not(lo: usize, hi: usize, id: &str) -> StlFormula {
    StlFormula::always(
        lo,
        hi,
        StlFormula::not(StlFormula::Predicate(id.into())),
    )
}

/// Samples a concrete task for `template`: circular regions by rejection
/// (free-space centers, pairwise disjoint, each containing a graph node), a
/// uniform free start position, and time bounds scaled to the graph's hop
/// diameter so tasks are feasible yet non-trivial. Deterministic in `seed`.
pub fn instantiate_template(
    template: TemplateId,
    ctx: &BenchContext,
    seed: u64,
) -> Result<TaskSpec, TaskGenError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = ctx.diameter.max(2) as f64;
    let mut budget = SAMPLING_ATTEMPTS;
    let radius_range = (1.2, 2.2);

    let fail = |attempts| TaskGenError::RegionSampling {
        template,
        attempts,
    };

    // Travel window: the hop diameter with headroom, so a single reach
    // obligation is almost always satisfiable from anywhere.
    fn gap<R: Rng>(rng: &mut R, d: f64) -> usize {
        ((d * rng.gen_range(1.0..1.4)).round() as usize).max(2)
    }

    let mut x0 = ctx.world.sample_free_pos(&mut rng);
    let regions: Vec<Region>;
    let bounds: Vec<usize>;
    let formula: StlFormula;

    match template {
        TemplateId::T1 => {
            regions = sample_regions(ctx, &mut rng, 2, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            let t2 = t1 + gap(&mut rng, d);
            bounds = vec![t1, t2];
            formula = StlFormula::and(vec![
                f_window(0, t1, "mu1"),
                f_window(t1, t2, "mu2"),
            ]);
        }
        TemplateId::T2 => {
            regions = sample_regions(ctx, &mut rng, 2, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            bounds = vec![t1];
            formula = StlFormula::or(vec![
                f_window(0, t1, "mu1"),
                f_window(0, t1, "mu2"),
            ]);
        }
        TemplateId::T3 => {
            regions = sample_regions(ctx, &mut rng, 3, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = ((d * rng.gen_range(2.0..2.5)).round() as usize).max(3);
            bounds = vec![t1];
            formula = StlFormula::and(
                (1..=3).map(|i| f_window(0, t1, &format!("mu{i}"))).collect(),
            );
        }
        TemplateId::T4 => {
            regions = sample_regions(ctx, &mut rng, 3, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            let t2 = t1 + gap(&mut rng, d);
            let t3 = t2 + gap(&mut rng, d);
            bounds = vec![t1, t2, t3];
            formula = StlFormula::and(vec![
                f_window(0, t1, "mu1"),
                f_window(t1, t2, "mu2"),
                f_window(t2, t3, "mu3"),
            ]);
        }
        TemplateId::T5 => {
            // Three targets plus an avoid region: the start must lie outside
            // it, and removing the graph nodes it covers must leave every
            // target reachable from the start's anchor.
            let mut rs = sample_regions(ctx, &mut rng, 3, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            loop {
                if budget == 0 {
                    return Err(fail(SAMPLING_ATTEMPTS));
                }
                budget -= 1;
                let Some(avoid) = sample_region(ctx, &mut rng, (1.0, 1.4), &rs) else {
                    continue;
                };
                while x0.dist(avoid.center) <= avoid.radius + 0.5 {
                    if budget == 0 {
                        return Err(fail(SAMPLING_ATTEMPTS));
                    }
                    budget -= 1;
                    x0 = ctx.world.sample_free_pos(&mut rng);
                }
                if routes_survive_avoid(ctx, x0, &rs, &avoid) {
                    rs.push(avoid);
                    break;
                }
            }
            regions = rs;
            let t1 = gap(&mut rng, d);
            let t2 = t1 + gap(&mut rng, d);
            let t3 = t2 + gap(&mut rng, d);
            bounds = vec![t1, t2, t3];
            formula = StlFormula::and(vec![
                f_window(0, t1, "mu1"),
                f_window(t1, t2, "mu2"),
                f_window(t2, t3, "mu3"),
                g_window_not(0, t3, "mu4"),
            ]);
        }
        TemplateId::T6 => {
            regions = sample_regions(ctx, &mut rng, 4, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            let t2 = t1 + gap(&mut rng, d);
            let t3 = t2 + gap(&mut rng, d);
            let t4 = t3 + gap(&mut rng, d);
            bounds = vec![t1, t2, t3, t4];
            formula = StlFormula::and(vec![
                f_window(0, t1, "mu1"),
                f_window(t1, t2, "mu2"),
                f_window(t2, t3, "mu3"),
                f_window(t3, t4, "mu4"),
            ]);
        }
        TemplateId::T7 => {
            regions = sample_regions(ctx, &mut rng, 4, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = ((d * rng.gen_range(2.4..3.0)).round() as usize).max(4);
            bounds = vec![t1];
            formula = StlFormula::and(
                (1..=4).map(|i| f_window(0, t1, &format!("mu{i}"))).collect(),
            );
        }
        TemplateId::T8 => {
            regions = sample_regions(ctx, &mut rng, 1, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            let hold = ((d * rng.gen_range(0.25..0.45)).round() as usize).max(2);
            let t3 = t1 + hold;
            bounds = vec![t1, t3];
            formula = StlFormula::and(vec![
                f_window(0, t1, "mu1"),
                g_window(t1, t3, "mu1"),
            ]);
        }
        TemplateId::T9 => {
            regions = sample_regions(ctx, &mut rng, 2, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            let t2 = t1 + rng.gen_range(2..=4);
            // Deliberately compressed transition window: the second hold
            // starts well under a diameter after the first ends, so distant
            // region pairs are genuinely infeasible.
            let transition = ((0.55 * d * rng.gen_range(0.8..1.2)).round() as usize).max(1);
            let t3 = t2 + transition;
            let t4 = t3 + rng.gen_range(2..=4);
            bounds = vec![t1, t2, t3, t4];
            formula = StlFormula::and(vec![
                g_window(t1, t2, "mu1"),
                g_window(t3, t4, "mu2"),
            ]);
        }
        TemplateId::T10 => {
            regions = sample_regions(ctx, &mut rng, 3, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = gap(&mut rng, d);
            let t2 = t1 + gap(&mut rng, d);
            bounds = vec![t1, t2];
            formula = StlFormula::or(vec![
                StlFormula::and(vec![
                    f_window(0, t1, "mu1"),
                    f_window(t1, t2, "mu2"),
                ]),
                f_window(0, t2, "mu3"),
            ]);
        }
        TemplateId::T11 => {
            regions = sample_regions(ctx, &mut rng, 3, radius_range, &mut budget)
                .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
            let t1 = ((d * rng.gen_range(1.6..2.2)).round() as usize).max(3);
            bounds = vec![t1];
            let pair = |a: usize, b: usize| {
                StlFormula::and(vec![
                    f_window(0, t1, &format!("mu{a}")),
                    f_window(0, t1, &format!("mu{b}")),
                ])
            };
            formula = StlFormula::or(vec![pair(1, 2), pair(1, 3), pair(2, 3)]);
        }
        TemplateId::T12 => {
            // Oscillation between two regions; the pair is resampled until
            // the graph round trip between them is short enough to bounce,
            // then each window is sized to admit one round trip with slack.
            let mut pair;
            loop {
                if budget == 0 {
                    return Err(fail(SAMPLING_ATTEMPTS));
                }
                pair = sample_regions(ctx, &mut rng, 2, radius_range, &mut budget)
                    .ok_or_else(|| fail(SAMPLING_ATTEMPTS))?;
                let h12 = ctx.hop(pair[0].rep_node, pair[1].rep_node);
                let h21 = ctx.hop(pair[1].rep_node, pair[0].rep_node);
                match (h12, h21) {
                    (Some(a), Some(b)) if a + b <= ((0.8 * d).round() as usize).max(3) => break,
                    _ => continue,
                }
            }
            regions = pair;
            let round_trip = ctx.hop(regions[0].rep_node, regions[1].rep_node).unwrap()
                + ctx.hop(regions[1].rep_node, regions[0].rep_node).unwrap();
            let anchor = nearest_anchor(ctx.graph, x0);
            let reach = ctx.hop(anchor, regions[0].rep_node).unwrap_or(ctx.diameter) + 2;
            let t2 = (round_trip + rng.gen_range(1..=2)).max(reach).max(2);
            let t3 = t2 + (round_trip + rng.gen_range(1..=2)).max(2);
            // The outer window is the longest in the suite; combined with the
            // nested obligations this makes the template the most expensive
            // to plan.
            let t1 = ((d * rng.gen_range(2.8..3.4)).round() as usize).max(2);
            bounds = vec![t1, t2, t3];
            formula = StlFormula::always(
                0,
                t1,
                StlFormula::and(vec![
                    f_window(0, t2, "mu1"),
                    f_window(t2, t3, "mu2"),
                ]),
            );
        }
    }

    Ok(TaskSpec {
        template,
        preds: pred_table(&regions),
        bounds,
        x0,
        formula,
        seed,
    })
}

/// Plans the task, executes the plan when one is found, and evaluates the
/// executed subsampled signal; failures are recorded, never raised.
pub fn run_task(ctx: &BenchContext, task: &TaskSpec, config: &PlannerConfig) -> TaskRecord {
    let outcome = stl_graph_search(task.x0, ctx.graph, &task.formula, &task.preds, config)
        .expect("validated config and resolvable predicates");
    let stats = outcome.stats();
    let mut record = TaskRecord {
        task: task.clone(),
        plan_ok: false,
        exec_ok: false,
        plan_time_s: stats.elapsed_s,
        expanded: stats.expanded,
        generated: stats.generated,
        pruned_upper: stats.pruned_upper,
        pruned_dominance: stats.pruned_dominance,
        executed_robustness: None,
    };
    if let Some(plan) = outcome.plan() {
        record.plan_ok = true;
        let traj = execute_plan(
            ctx.world,
            ctx.oracle,
            task.x0,
            &plan.waypoints,
            ctx.graph.k,
        );
        let signal = subsample_signal(&traj, ctx.graph.k);
        let rob = agm_robustness(&task.formula, &task.preds, &signal, 0)
            .expect("executed signal covers the horizon");
        record.executed_robustness = Some(rob);
        record.exec_ok = rob > 0.0;
    }
    record
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchConfig {
    pub templates: Vec<TemplateId>,
    pub configs_per_template: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            templates: TemplateId::ALL.to_vec(),
            configs_per_template: 50,
            seed: 7,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives the generation seed for one (template, config index) cell.
fn task_seed(bench_seed: u64, template: TemplateId, config_idx: usize) -> u64 {
    splitmix64(
        bench_seed
            ^ ((template.index() as u64 + 1) << 32)
            ^ (config_idx as u64 + 1),
    )
}

/// Runs the full benchmark in parallel. Each task derives its own seed, so
/// the resulting records are independent of scheduling order. A task whose
/// region sampling fails is retried with a reseeded generator (bounded).
pub fn run_bench(
    ctx: &BenchContext,
    bench: &BenchConfig,
    planner: &PlannerConfig,
) -> Result<Vec<TaskRecord>, TaskGenError> {
    let cells: Vec<(TemplateId, usize)> = bench
        .templates
        .iter()
        .flat_map(|&t| (0..bench.configs_per_template).map(move |i| (t, i)))
        .collect();
    cells
        .par_iter()
        .map(|&(template, idx)| {
            let mut seed = task_seed(bench.seed, template, idx);
            let mut last_err = None;
            for _ in 0..20 {
                match instantiate_template(template, ctx, seed) {
                    Ok(task) => return Ok(run_task(ctx, &task, planner)),
                    Err(e) => {
                        last_err = Some(e);
                        seed = splitmix64(seed);
                    }
                }
            }
            Err(last_err.expect("loop ran"))
        })
        .collect()
}

/// One aggregate row of the report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub scope: String,
    pub tasks: usize,
    pub planned: usize,
    pub executed: usize,
    pub psr: f64,
    pub esr: f64,
    pub pt_mean: f64,
    pub pt_std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<ReportRow>,
}

fn aggregate_rows<'r>(scope: String, records: impl Iterator<Item = &'r TaskRecord>) -> ReportRow {
    let records: Vec<&TaskRecord> = records.collect();
    let tasks = records.len();
    let planned = records.iter().filter(|r| r.plan_ok).count();
    let executed = records.iter().filter(|r| r.exec_ok).count();
    // Planning time is averaged only over successfully planned tasks.
    let times: Vec<f64> = records
        .iter()
        .filter(|r| r.plan_ok)
        .map(|r| r.plan_time_s)
        .collect();
    let pt_mean = if times.is_empty() {
        0.0
    } else {
        times.iter().sum::<f64>() / times.len() as f64
    };
    let pt_std = if times.len() <= 1 {
        0.0
    } else {
        (times.iter().map(|t| (t - pt_mean).powi(2)).sum::<f64>() / times.len() as f64).sqrt()
    };
    ReportRow {
        scope,
        tasks,
        planned,
        executed,
        psr: if tasks == 0 {
            0.0
        } else {
            100.0 * planned as f64 / tasks as f64
        },
        esr: if tasks == 0 {
            0.0
        } else {
            100.0 * executed as f64 / tasks as f64
        },
        pt_mean,
        pt_std,
    }
}

/// Aggregates records into per-template, per-group, and overall rows.
pub fn aggregate(records: &[TaskRecord]) -> BenchReport {
    assert!(!records.is_empty(), "aggregate requires at least one record");
    let mut rows = Vec::new();
    let templates: Vec<TemplateId> = TemplateId::ALL
        .into_iter()
        .filter(|t| records.iter().any(|r| r.task.template == *t))
        .collect();
    for &t in &templates {
        rows.push(aggregate_rows(
            t.to_string(),
            records.iter().filter(|r| r.task.template == t),
        ));
    }
    for group in [Group::Basic, Group::Intermediate, Group::Advanced] {
        if records.iter().any(|r| r.task.template.group() == group) {
            rows.push(aggregate_rows(
                group.to_string(),
                records.iter().filter(|r| r.task.template.group() == group),
            ));
        }
    }
    rows.push(aggregate_rows("Overall".into(), records.iter()));
    BenchReport { rows }
}

impl BenchReport {
    pub fn row(&self, scope: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.scope == scope)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<14} {:>6} {:>8} {:>8} {:>18}\n",
            "scope", "tasks", "PSR(%)", "ESR(%)", "PT(s)"
        ));
        for row in &self.rows {
            out.push_str(&format!(
                "{:<14} {:>6} {:>8.2} {:>8.2} {:>9.4} ± {:<.4}\n",
                row.scope, row.tasks, row.psr, row.esr, row.pt_mean, row.pt_std
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("scope,tasks,planned,executed,psr,esr,pt_mean_s,pt_std_s\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{:.4},{:.4},{:.6},{:.6}\n",
                row.scope,
                row.tasks,
                row.planned,
                row.executed,
                row.psr,
                row.esr,
                row.pt_mean,
                row.pt_std
            ));
        }
        out
    }
}

/// One CSV row per task record.
pub fn records_to_csv(records: &[TaskRecord]) -> String {
    let mut out = String::from(
        "template,seed,plan_ok,exec_ok,pt_s,expanded,pruned_upper,pruned_dominance,robustness\n",
    );
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{},{},{},{}\n",
            r.task.template,
            r.task.seed,
            r.plan_ok,
            r.exec_ok,
            r.plan_time_s,
            r.expanded,
            r.pruned_upper,
            r.pruned_dominance,
            r.executed_robustness
                .map(|v| format!("{v:.9}"))
                .unwrap_or_default(),
        ));
    }
    out
}

/// Builds the standard desk-scale pipeline: the built-in maze, its exact
/// oracle, an offline dataset, and the reachability graph.
pub struct DeskSetup {
    pub world: Arc<MazeWorld>,
    pub oracle: Arc<GridReachOracle>,
    pub graph: ReachGraph,
}

pub fn desk_setup(dataset_seed: u64) -> Result<DeskSetup, GraphError> {
    let world = Arc::new(MazeWorld::desk());
    let oracle = Arc::new(GridReachOracle::new(world.clone(), world.max_speed));
    let dataset = generate_dataset(&world, 500, 200, dataset_seed);
    let graph = build_graph(
        &dataset.all_states(),
        oracle.as_ref(),
        &GraphConfig::default(),
    )?;
    Ok(DeskSetup {
        world,
        oracle,
        graph,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    struct Fixture {
        setup: DeskSetup,
    }

    fn fixture() -> &'static Fixture {
        static FIXTURE: OnceLock<Fixture> = OnceLock::new();
        FIXTURE.get_or_init(|| Fixture {
            setup: desk_setup(11).expect("desk pipeline builds"),
        })
    }

    fn ctx(f: &Fixture) -> BenchContext<'_> {
        BenchContext::new(&f.setup.world, &f.setup.oracle, &f.setup.graph)
    }

    #[test]
    fn desk_graph_is_strongly_connected_with_finite_diameter() {
        let f = fixture();
        let c = ctx(f);
        assert!(f.setup.graph.is_strongly_connected());
        assert!(c.diameter >= 3, "diameter {} too small", c.diameter);
        assert!(c.diameter <= 40, "diameter {} too large", c.diameter);
    }

    #[test]
    fn template_shapes_match_their_definitions() {
        let f = fixture();
        let c = ctx(f);
        for template in TemplateId::ALL {
            let task = instantiate_template(template, &c, 1234).expect("sampling succeeds");
            let text = task.formula.to_string();
            let b = &task.bounds;
            let expect = match template {
                TemplateId::T1 => format!("F[0,{}] mu1 & F[{},{}] mu2", b[0], b[0], b[1]),
                TemplateId::T2 => format!("F[0,{0}] mu1 | F[0,{0}] mu2", b[0]),
                TemplateId::T3 => {
                    format!("F[0,{0}] mu1 & F[0,{0}] mu2 & F[0,{0}] mu3", b[0])
                }
                TemplateId::T4 => format!(
                    "F[0,{}] mu1 & F[{},{}] mu2 & F[{},{}] mu3",
                    b[0], b[0], b[1], b[1], b[2]
                ),
                TemplateId::T5 => format!(
                    "F[0,{}] mu1 & F[{},{}] mu2 & F[{},{}] mu3 & G[0,{}] !mu4",
                    b[0], b[0], b[1], b[1], b[2], b[2]
                ),
                TemplateId::T6 => format!(
                    "F[0,{}] mu1 & F[{},{}] mu2 & F[{},{}] mu3 & F[{},{}] mu4",
                    b[0], b[0], b[1], b[1], b[2], b[2], b[3]
                ),
                TemplateId::T7 => format!(
                    "F[0,{0}] mu1 & F[0,{0}] mu2 & F[0,{0}] mu3 & F[0,{0}] mu4",
                    b[0]
                ),
                TemplateId::T8 => format!("F[0,{}] mu1 & G[{},{}] mu1", b[0], b[0], b[1]),
                TemplateId::T9 => format!(
                    "G[{},{}] mu1 & G[{},{}] mu2",
                    b[0], b[1], b[2], b[3]
                ),
                TemplateId::T10 => format!(
                    "F[0,{}] mu1 & F[{},{}] mu2 | F[0,{}] mu3",
                    b[0], b[0], b[1], b[1]
                ),
                TemplateId::T11 => format!(
                    "F[0,{0}] mu1 & F[0,{0}] mu2 | F[0,{0}] mu1 & F[0,{0}] mu3 | F[0,{0}] mu2 & F[0,{0}] mu3",
                    b[0]
                ),
                TemplateId::T12 => format!(
                    "G[0,{}] (F[0,{}] mu1 & F[{},{}] mu2)",
                    b[0], b[1], b[1], b[2]
                ),
            };
            assert_eq!(text, expect, "template {template}");
            assert_eq!(task.preds.len(), template.n_regions(), "template {template}");
            // Bounds are strictly increasing where the template orders them;
            // the last template's outer bound is unrelated to its inner pair.
            let ordered: &[usize] = match template {
                TemplateId::T12 => &b[1..],
                _ => b,
            };
            for w in ordered.windows(2) {
                assert!(w[0] < w[1], "template {template}: bounds {b:?}");
            }
        }
    }

    #[test]
    fn regions_are_disjoint_in_free_space_and_contain_nodes() {
        let f = fixture();
        let c = ctx(f);
        for seed in 0..20u64 {
            let task = instantiate_template(TemplateId::T6, &c, seed).unwrap();
            let defs: Vec<&PredicateDef> = task.preds.iter().collect();
            for (i, a) in defs.iter().enumerate() {
                assert!(c.world.is_free_pos(a.center));
                assert!(
                    (0..c.graph.len()).any(|n| c.graph.node(n).pos.dist(a.center)
                        <= REGION_NODE_MARGIN * a.radius),
                    "region without witness node"
                );
                for b in defs.iter().skip(i + 1) {
                    assert!(
                        a.center.dist(b.center) > a.radius + b.radius,
                        "regions overlap"
                    );
                }
            }
        }
    }

    #[test]
    fn t5_start_lies_outside_the_avoid_region() {
        let f = fixture();
        let c = ctx(f);
        for seed in 0..20u64 {
            let task = instantiate_template(TemplateId::T5, &c, seed).unwrap();
            let avoid = task.preds.get("mu4").unwrap();
            assert!(task.x0.dist(avoid.center) > avoid.radius);
        }
    }

    #[test]
    fn instantiation_is_deterministic() {
        let f = fixture();
        let c = ctx(f);
        for template in [TemplateId::T1, TemplateId::T9, TemplateId::T12] {
            let a = instantiate_template(template, &c, 42).unwrap();
            let b = instantiate_template(template, &c, 42).unwrap();
            assert_eq!(a.formula.to_string(), b.formula.to_string());
            assert_eq!(a.bounds, b.bounds);
            assert_eq!(a.x0, b.x0);
            let other = instantiate_template(template, &c, 43).unwrap();
            assert!(
                a.x0 != other.x0 || a.bounds != other.bounds,
                "different seeds should differ"
            );
        }
    }

    #[test]
    fn trivially_satisfiable_task_plans_and_executes() {
        let f = fixture();
        let c = ctx(f);
        // Hand-build a T2-shaped task whose first region covers the start.
        let node0 = c.graph.node(0).pos;
        let preds = PredicateTable::from_defs(vec![
            PredicateDef::new("mu1", node0, 2.0).unwrap(),
            PredicateDef::new("mu2", Vec2::new(2.0, 2.0), 1.5).unwrap(),
        ])
        .unwrap();
        let formula = StlFormula::or(vec![
            f_window(0, 4, "mu1"),
            f_window(0, 4, "mu2"),
        ]);
        let task = TaskSpec {
            template: TemplateId::T2,
            preds,
            bounds: vec![4],
            x0: node0,
            formula,
            seed: 0,
        };
        let record = run_task(&c, &task, &PlannerConfig::default());
        assert!(record.plan_ok);
        assert!(record.exec_ok);
        assert!(record.executed_robustness.unwrap() > 0.0);
        assert!(record.plan_time_s < 1.0);
    }

    #[test]
    fn aggregate_matches_hand_arithmetic() {
        let f = fixture();
        let c = ctx(f);
        let base = instantiate_template(TemplateId::T1, &c, 5).unwrap();
        let mk = |plan_ok: bool, exec_ok: bool, pt: f64| TaskRecord {
            task: base.clone(),
            plan_ok,
            exec_ok,
            plan_time_s: pt,
            expanded: 0,
            generated: 0,
            pruned_upper: 0,
            pruned_dominance: 0,
            executed_robustness: exec_ok.then_some(0.1),
        };
        let mut records = Vec::new();
        for i in 0..10 {
            let plan_ok = i < 9;
            let exec_ok = i < 8;
            records.push(mk(plan_ok, exec_ok, 2.0));
        }
        let report = aggregate(&records);
        let row = report.row("T1").unwrap();
        assert!((row.psr - 90.0).abs() < 1e-9);
        assert!((row.esr - 80.0).abs() < 1e-9);
        // PT averaged over the 9 planned tasks only.
        assert_eq!(row.planned, 9);
        assert!((row.pt_mean - 2.0).abs() < 1e-9);
        assert_eq!(row.pt_std, 0.0);
        // Single record: std is zero by convention.
        let single = aggregate(&records[..1]);
        assert_eq!(single.row("T1").unwrap().pt_std, 0.0);
        // Overall row pools everything.
        let overall = report.row("Overall").unwrap();
        assert_eq!(overall.tasks, 10);
    }

    #[test]
    fn small_bench_round_is_deterministic_and_consistent() {
        let f = fixture();
        let c = ctx(f);
        let bench = BenchConfig {
            templates: vec![TemplateId::T1, TemplateId::T2],
            configs_per_template: 4,
            seed: 99,
        };
        let planner = PlannerConfig::default();
        let a = run_bench(&c, &bench, &planner).unwrap();
        let b = run_bench(&c, &bench, &planner).unwrap();
        assert_eq!(a.len(), 8);
        for (ra, rb) in a.iter().zip(&b) {
            assert_eq!(ra.task.seed, rb.task.seed);
            assert_eq!(ra.plan_ok, rb.plan_ok);
            assert_eq!(ra.exec_ok, rb.exec_ok);
            assert_eq!(ra.executed_robustness, rb.executed_robustness);
            assert!(!ra.exec_ok || ra.plan_ok, "exec implies plan");
        }
        let report = aggregate(&a);
        for row in &report.rows {
            assert!(row.esr <= row.psr + 1e-9, "{row:?}");
        }
        let csv = records_to_csv(&a);
        assert_eq!(csv.lines().count(), 9, "header plus one row per record");
    }

    #[test]
    #[ignore = "slow; used for threshold calibration"]
    fn calibration_report() {
        let f = fixture();
        let c = ctx(f);
        let bench = BenchConfig {
            configs_per_template: 10,
            ..BenchConfig::default()
        };
        let started = std::time::Instant::now();
        let records = run_bench(&c, &bench, &PlannerConfig::default()).unwrap();
        let report = aggregate(&records);
        println!("diameter = {}", c.diameter);
        println!("{}", report.to_text());
        for row in &report.rows {
            if row.scope.starts_with('T') {
                println!("{}: pt_mean = {:.6}s", row.scope, row.pt_mean);
            }
        }
        println!("wall = {:.1}s", started.elapsed().as_secs_f64());
    }

    #[test]
    fn template_parsing_round_trips() {
        for t in TemplateId::ALL {
            assert_eq!(TemplateId::parse(&t.to_string()), Some(t));
        }
        assert_eq!(TemplateId::parse("t7"), Some(TemplateId::T7));
        assert_eq!(TemplateId::parse("T13"), None);
        assert_eq!(TemplateId::parse("x"), None);
    }
}
