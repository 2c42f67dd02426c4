//! Waypoint planning over a reachability graph by pruned best-first search.
//!
//! Search states pair a graph node with a time step and carry an incremental
//! robustness monitor for the waypoint prefix. A popped state is accepted
//! once its prefix covers the specification horizon with a positive sound
//! lower bound; states whose sound upper bound is non-positive can never be
//! completed into a satisfying signal and are discarded. Expansion moves to a
//! graph neighbor or waits in place, so plans can let time pass without
//! motion. A heuristic monitor (unclamped predicates plus pre-window
//! look-ahead) orders the frontier; per-(node, time) buckets retain only a
//! bounded number of candidate prefixes.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};
use std::time::Instant;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;
use crate::reachgraph::ReachGraph;
use crate::robustness::{Interval, IntervalMonitor, RobustnessError, SemanticsMode};
use crate::stl::{PredicateTable, StlFormula};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontierPolicy {
    /// Best-first by the weighted score (default).
    Score,
    /// Breadth-first: expand in generation order.
    Fifo,
    /// Depth-first: expand the most recently generated node.
    Lifo,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Weight of the heuristic robustness lower bound in the score.
    pub lambda0: f64,
    /// Weight of elapsed time steps in the score.
    pub lambda1: f64,
    /// Weight (negative contribution) of geometric path length in the score.
    pub lambda2: f64,
    /// Robustness slack of the dominance rule.
    pub eps: f64,
    /// Candidate prefixes retained per (graph node, time) bucket;
    /// `usize::MAX` disables dominance pruning entirely.
    pub top_k: usize,
    /// Expansion budget before the search gives up.
    pub max_expansions: u64,
    pub frontier: FrontierPolicy,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            lambda0: 10.0,
            lambda1: 0.1,
            lambda2: 0.01,
            eps: 0.05,
            top_k: 3,
            max_expansions: 200_000,
            frontier: FrontierPolicy::Score,
        }
    }
}

impl PlannerConfig {
    fn validate(&self) -> Result<(), PlanError> {
        for (name, v) in [
            ("lambda0", self.lambda0),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
        ] {
            if !v.is_finite() {
                return Err(PlanError::InvalidConfig(format!("{name} must be finite")));
            }
        }
        if !(self.eps >= 0.0) {
            return Err(PlanError::InvalidConfig("eps must be >= 0".into()));
        }
        if self.top_k == 0 {
            return Err(PlanError::InvalidConfig("top_k must be >= 1".into()));
        }
        if self.max_expansions == 0 {
            return Err(PlanError::InvalidConfig(
                "max_expansions must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid planner config: {0}")]
    InvalidConfig(String),
    #[error("cannot plan on an empty graph")]
    EmptyGraph,
    #[error("dominance comparison requires matching node and time, got ({v1:?},{t1}) vs ({v2:?},{t2})")]
    DominanceKeyMismatch {
        v1: Option<usize>,
        t1: usize,
        v2: Option<usize>,
        t2: usize,
    },
    #[error(transparent)]
    Robustness(#[from] RobustnessError),
}

/// One explored prefix: the waypoint sequence from the start to `pos`,
/// with its sound and heuristic monitors.
#[derive(Clone, Debug)]
pub struct SearchNode {
    /// Graph node of the last waypoint; `None` for the start state itself.
    pub v: Option<usize>,
    /// Arena index of the predecessor prefix.
    pub parent: Option<u64>,
    /// Time step: the prefix has `t + 1` samples.
    pub t: usize,
    /// Last waypoint position (the start state for the root).
    pub pos: Vec2,
    /// Sound robustness interval of the specification over this prefix.
    pub interval: Interval,
    /// Sound incremental monitor for the prefix.
    pub monitor: IntervalMonitor,
    /// Heuristic-mode monitor for the prefix.
    pub monitor_h: IntervalMonitor,
    /// Heuristic interval endpoints (lower, upper) used for scoring.
    pub heuristic_pair: (f64, f64),
    /// Accumulated geometric path length in world units.
    pub path_len: f64,
}

/// Frontier ordering value: higher is better.
pub fn score(node: &SearchNode, lambdas: (f64, f64, f64)) -> f64 {
    lambdas.0 * node.heuristic_pair.0 + lambdas.1 * node.t as f64 - lambdas.2 * node.path_len
}

/// Dominance among prefixes sharing the same graph node and time step:
/// `z1` dominates `z2` when its sound lower bound is at least as high, or
/// when the lower bounds are within `eps` and `z1`'s path is no longer.
pub fn dominates(z1: &SearchNode, z2: &SearchNode, eps: f64) -> Result<bool, PlanError> {
    if z1.v != z2.v || z1.t != z2.t {
        return Err(PlanError::DominanceKeyMismatch {
            v1: z1.v,
            t1: z1.t,
            v2: z2.v,
            t2: z2.t,
        });
    }
    Ok(dominates_raw(
        z1.interval.lo,
        z1.path_len,
        z2.interval.lo,
        z2.path_len,
        eps,
    ))
}

fn dominates_raw(lo1: f64, len1: f64, lo2: f64, len2: f64, eps: f64) -> bool {
    lo1 >= lo2 || ((lo1 - lo2).abs() <= eps && len1 <= len2)
}

/// Index of the graph node geometrically nearest to `x0` (lowest index on
/// ties). Panics on an empty graph.
pub fn nearest_anchor(graph: &ReachGraph, x0: Vec2) -> usize {
    graph
        .nodes()
        .iter()
        .enumerate()
        .min_by_key(|(_, s)| OrderedFloat(s.pos.dist(x0)))
        .map(|(i, _)| i)
        .expect("graph must be non-empty")
}

/// Counter values sampled after one expansion, for search-progress traces.
#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub expanded: u64,
    pub generated: u64,
    pub pruned_upper: u64,
    pub pruned_dominance: u64,
    pub frontier_len: usize,
}

#[derive(Clone, Debug, Default)]
pub struct PlanStats {
    /// Nodes popped and expanded.
    pub expanded: u64,
    /// Candidate children evaluated (before any pruning).
    pub generated: u64,
    /// Candidates or popped nodes discarded by the sound upper bound.
    pub pruned_upper: u64,
    /// Candidates rejected or frontier nodes evicted by bucket dominance.
    pub pruned_dominance: u64,
    pub elapsed_s: f64,
    /// One snapshot per expansion.
    pub history: Vec<StatsSnapshot>,
}

/// A satisfying plan: waypoint positions (`waypoints[0]` is the start state)
/// and the converged robustness interval of the planned signal.
#[derive(Clone, Debug)]
pub struct PlanResult {
    pub waypoints: Vec<Vec2>,
    pub final_interval: Interval,
    pub stats: PlanStats,
}

impl PlanResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "waypoints": self.waypoints.iter().map(|w| [w.x, w.y]).collect::<Vec<_>>(),
            "interval": [self.final_interval.lo, self.final_interval.hi],
            "stats": {
                "expanded": self.stats.expanded,
                "generated": self.stats.generated,
                "pruned_upper": self.stats.pruned_upper,
                "pruned_dominance": self.stats.pruned_dominance,
                "elapsed_s": self.stats.elapsed_s,
            },
        })
    }
}

/// Search result: a plan when one was found, and the search statistics in
/// either case.
#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Found(PlanResult),
    Failed(PlanStats),
}

impl SearchOutcome {
    pub fn plan(&self) -> Option<&PlanResult> {
        match self {
            SearchOutcome::Found(p) => Some(p),
            SearchOutcome::Failed(_) => None,
        }
    }

    pub fn stats(&self) -> &PlanStats {
        match self {
            SearchOutcome::Found(p) => &p.stats,
            SearchOutcome::Failed(s) => s,
        }
    }
}

enum Frontier {
    Score(BinaryHeap<(OrderedFloat<f64>, Reverse<u64>)>),
    Fifo(VecDeque<u64>),
    Lifo(Vec<u64>),
}

impl Frontier {
    fn new(policy: FrontierPolicy) -> Self {
        match policy {
            FrontierPolicy::Score => Frontier::Score(BinaryHeap::new()),
            FrontierPolicy::Fifo => Frontier::Fifo(VecDeque::new()),
            FrontierPolicy::Lifo => Frontier::Lifo(Vec::new()),
        }
    }

    fn push(&mut self, id: u64, score: f64) {
        match self {
            Frontier::Score(h) => h.push((OrderedFloat(score), Reverse(id))),
            Frontier::Fifo(q) => q.push_back(id),
            Frontier::Lifo(s) => s.push(id),
        }
    }

    /// Pops the next live node id, skipping entries evicted by dominance.
    fn pop(&mut self, alive: &[bool]) -> Option<u64> {
        loop {
            let id = match self {
                Frontier::Score(h) => h.pop().map(|(_, Reverse(id))| id),
                Frontier::Fifo(q) => q.pop_front(),
                Frontier::Lifo(s) => s.pop(),
            }?;
            if alive[id as usize] {
                return Some(id);
            }
        }
    }

    fn len(&self) -> usize {
        match self {
            Frontier::Score(h) => h.len(),
            Frontier::Fifo(q) => q.len(),
            Frontier::Lifo(s) => s.len(),
        }
    }
}

struct Search<'a> {
    graph: &'a ReachGraph,
    config: &'a PlannerConfig,
    horizon: usize,
    nodes: Vec<SearchNode>,
    /// False once a node is evicted from its bucket (lazy frontier removal).
    alive: Vec<bool>,
    /// True once a node has been expanded (eviction is then a no-op).
    expanded: Vec<bool>,
    frontier: Frontier,
    /// Admitted node ids per (graph node, time step).
    buckets: HashMap<(usize, usize), Vec<u64>>,
    stats: PlanStats,
}

impl Search<'_> {
    fn add_node(&mut self, node: SearchNode) -> u64 {
        let id = self.nodes.len() as u64;
        self.nodes.push(node);
        self.alive.push(true);
        self.expanded.push(false);
        id
    }

    /// Builds the child prefix reached by appending graph node `v`.
    fn make_child(&self, parent_id: u64, v: usize) -> SearchNode {
        let parent = &self.nodes[parent_id as usize];
        let pos = self.graph.node(v).pos;
        let monitor = parent.monitor.extend(pos);
        let monitor_h = parent.monitor_h.extend(pos);
        let interval = monitor.interval();
        let h = monitor_h.interval();
        SearchNode {
            v: Some(v),
            parent: Some(parent_id),
            t: parent.t + 1,
            pos,
            interval,
            monitor,
            monitor_h,
            heuristic_pair: (h.lo, h.hi),
            path_len: parent.path_len + parent.pos.dist(pos),
        }
    }

    /// Bucket admission: rejects the candidate when its (node, time) bucket
    /// is full and the worst retained entry dominates it; otherwise inserts
    /// it, evicting the worst entry when over capacity. Returns the arena id
    /// when admitted.
    fn admit(&mut self, child: SearchNode) -> Option<u64> {
        let v = child.v.expect("children are always at graph nodes");
        let key = (v, child.t);
        if self.config.top_k != usize::MAX {
            let bucket = self.buckets.entry(key).or_default();
            if bucket.len() >= self.config.top_k {
                let worst_at = (0..bucket.len())
                    .min_by_key(|&i| {
                        let n = &self.nodes[bucket[i] as usize];
                        (OrderedFloat(n.interval.lo), Reverse(OrderedFloat(n.path_len)))
                    })
                    .expect("bucket is non-empty");
                let worst = &self.nodes[bucket[worst_at] as usize];
                if dominates_raw(
                    worst.interval.lo,
                    worst.path_len,
                    child.interval.lo,
                    child.path_len,
                    self.config.eps,
                ) {
                    self.stats.pruned_dominance += 1;
                    return None;
                }
                let evicted = bucket.swap_remove(worst_at);
                if !self.expanded[evicted as usize] {
                    // Still waiting in the frontier: the eviction prunes it.
                    self.alive[evicted as usize] = false;
                    self.stats.pruned_dominance += 1;
                }
            }
        }
        let id = self.add_node(child);
        if self.config.top_k != usize::MAX {
            self.buckets.entry(key).or_default().push(id);
        }
        let s = score(
            &self.nodes[id as usize],
            (self.config.lambda0, self.config.lambda1, self.config.lambda2),
        );
        self.frontier.push(id, s);
        Some(id)
    }

    fn snapshot(&mut self) {
        self.stats.history.push(StatsSnapshot {
            expanded: self.stats.expanded,
            generated: self.stats.generated,
            pruned_upper: self.stats.pruned_upper,
            pruned_dominance: self.stats.pruned_dominance,
            frontier_len: self.frontier.len(),
        });
    }

    fn reconstruct(&self, goal: u64) -> Vec<Vec2> {
        let mut waypoints = Vec::new();
        let mut cur = Some(goal);
        while let Some(id) = cur {
            let node = &self.nodes[id as usize];
            waypoints.push(node.pos);
            cur = node.parent;
        }
        waypoints.reverse();
        waypoints
    }
}

/// Searches the graph for a waypoint sequence satisfying `phi` from `x0`.
///
/// The frontier is seeded with one-step extensions to the nearest graph
/// node's neighborhood (including that node itself, so a plan can start by
/// waiting). Seeds are admitted when their sound upper bound is
/// non-negative; expansion children require a strictly positive upper bound.
/// A popped node is accepted when its time step covers the specification
/// horizon and the sound lower bound is positive; it is discarded when the
/// horizon is covered without satisfaction or the upper bound is
/// non-positive. Returns a plan when found; the search fails (without error)
/// when the frontier empties or the expansion budget is exhausted.
pub fn stl_graph_search(
    x0: Vec2,
    graph: &ReachGraph,
    phi: &StlFormula,
    preds: &PredicateTable,
    config: &PlannerConfig,
) -> Result<SearchOutcome, PlanError> {
    config.validate()?;
    if graph.is_empty() {
        return Err(PlanError::EmptyGraph);
    }
    let started = Instant::now();
    let horizon = phi.horizon();
    let monitor = IntervalMonitor::new(phi, preds, SemanticsMode::Sound, x0)?;
    let monitor_h = IntervalMonitor::new(phi, preds, SemanticsMode::Heuristic, x0)?;
    let root_interval = monitor.interval();
    let root_h = monitor_h.interval();
    let root = SearchNode {
        v: None,
        parent: None,
        t: 0,
        pos: x0,
        interval: root_interval,
        monitor,
        monitor_h,
        heuristic_pair: (root_h.lo, root_h.hi),
        path_len: 0.0,
    };

    let mut search = Search {
        graph,
        config,
        horizon,
        nodes: Vec::new(),
        alive: Vec::new(),
        expanded: Vec::new(),
        frontier: Frontier::new(config.frontier),
        buckets: HashMap::new(),
        stats: PlanStats::default(),
    };
    let root_id = search.add_node(root);
    search.alive[root_id as usize] = false; // never enters the frontier
    search.expanded[root_id as usize] = true;

    // Seed: the anchor's neighborhood plus the anchor itself.
    let anchor = nearest_anchor(graph, x0);
    let mut seed_targets: Vec<usize> = graph.neighbors(anchor).iter().map(|e| e.to).collect();
    seed_targets.push(anchor);
    seed_targets.sort_unstable();
    seed_targets.dedup();
    for v in seed_targets {
        search.stats.generated += 1;
        let child = search.make_child(root_id, v);
        if child.interval.hi >= 0.0 {
            search.admit(child);
        } else {
            search.stats.pruned_upper += 1;
        }
    }

    let outcome = loop {
        let Some(id) = search.frontier.pop(&search.alive) else {
            break None;
        };
        let node = &search.nodes[id as usize];
        if node.t >= search.horizon {
            if node.interval.lo > 0.0 {
                break Some(id);
            }
            if node.interval.hi <= 0.0 {
                search.stats.pruned_upper += 1;
            }
            continue; // horizon covered without satisfaction
        }
        if node.interval.hi <= 0.0 {
            search.stats.pruned_upper += 1;
            continue;
        }
        if search.stats.expanded >= config.max_expansions {
            break None;
        }
        search.stats.expanded += 1;
        search.expanded[id as usize] = true;
        let v = node.v.expect("frontier nodes are at graph nodes");
        let mut targets: Vec<usize> = graph.neighbors(v).iter().map(|e| e.to).collect();
        targets.push(v); // wait in place
        for v_next in targets {
            search.stats.generated += 1;
            let child = search.make_child(id, v_next);
            if child.interval.hi > 0.0 {
                search.admit(child);
            } else {
                search.stats.pruned_upper += 1;
            }
        }
        search.snapshot();
    };

    search.stats.elapsed_s = started.elapsed().as_secs_f64();
    Ok(match outcome {
        Some(goal) => {
            let waypoints = search.reconstruct(goal);
            let final_interval = search.nodes[goal as usize].interval;
            SearchOutcome::Found(PlanResult {
                waypoints,
                final_interval,
                stats: search.stats,
            })
        }
        None => SearchOutcome::Failed(search.stats),
    })
}
