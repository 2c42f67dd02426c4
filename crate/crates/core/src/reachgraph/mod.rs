//! Reachability graph construction from raw offline states.
//!
//! Pipeline: grid subsampling (spatial stratification) -> greedy medoid
//! clustering under a reachability metric -> per-node edge selection across
//! angular bins -> restriction to the largest strongly connected component.
//! The resulting sparse directed graph has edges the low-level controller can
//! execute within one waypoint step, and every node can reach every other.

mod scc;

pub use scc::{largest_scc, tarjan_scc};

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{angular_gap, Vec2};

/// A sampled system state: planar position plus the full state vector it was
/// recorded with (for a point mass the vector is just the position again).
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub pos: Vec2,
    pub vec: Vec<f64>,
}

impl State {
    pub fn from_pos(pos: Vec2) -> Self {
        State {
            pos,
            vec: vec![pos.x, pos.y],
        }
    }
}

/// Estimates how many control steps the low-level controller needs to drive
/// the system from one state to another. Queries must be safe to issue
/// concurrently from multiple threads.
pub trait ReachabilityOracle: Sync {
    /// Estimated control steps from `from` to `to`; `f64::INFINITY` when the
    /// transition is considered impossible.
    fn distance(&self, from: &State, to: &State) -> f64;
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("no input states to build a graph from")]
    EmptyInput,
    #[error("invalid graph config: {0}")]
    InvalidConfig(String),
    #[error("graph i/o: {0}")]
    Io(#[from] io::Error),
    #[error("graph serialization: {0}")]
    Json(#[from] serde_json::Error),
}

/// Parameters of the construction pipeline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Side length of the square subsampling cells (world units).
    pub cell_size: f64,
    /// Number of states the subsampler keeps (at most).
    pub budget: usize,
    /// Merge states whose symmetrized oracle distance is below this many
    /// control steps.
    pub cluster_threshold: f64,
    /// Control steps allotted to traversing one edge.
    pub k: u32,
    /// Safety margin: edges require oracle distance `< k - delta`.
    pub delta: f64,
    /// Number of angular sectors used during edge selection.
    pub n_bins: usize,
    /// Edges are topped up to this out-degree when feasible candidates remain.
    pub target_degree: usize,
    /// Seed for the subsampler's within-cell draws.
    pub seed: u64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            cell_size: 1.0,
            budget: 500,
            cluster_threshold: 3.0,
            k: 10,
            delta: 2.0,
            n_bins: 8,
            target_degree: 5,
            seed: 11,
        }
    }
}

impl GraphConfig {
    fn validate(&self) -> Result<(), GraphError> {
        if !(self.cell_size > 0.0) {
            return Err(GraphError::InvalidConfig("cell_size must be > 0".into()));
        }
        if self.budget == 0 {
            return Err(GraphError::InvalidConfig("budget must be >= 1".into()));
        }
        if !(self.cluster_threshold > 0.0) {
            return Err(GraphError::InvalidConfig(
                "cluster_threshold must be > 0".into(),
            ));
        }
        if self.n_bins == 0 {
            return Err(GraphError::InvalidConfig("n_bins must be >= 1".into()));
        }
        if !(self.delta >= 0.0) || self.delta >= self.k as f64 {
            return Err(GraphError::InvalidConfig(
                "delta must satisfy 0 <= delta < k".into(),
            ));
        }
        Ok(())
    }

    fn fingerprint(&self) -> String {
        let text = format!(
            "cell_size={};budget={};threshold={};k={};delta={};bins={};degree={};seed={}",
            self.cell_size,
            self.budget,
            self.cluster_threshold,
            self.k,
            self.delta,
            self.n_bins,
            self.target_degree,
            self.seed
        );
        format!("{:016x}", fnv1a64(text.as_bytes()))
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// A directed edge annotated with its estimated traversal cost in control
/// steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub to: usize,
    pub dhat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub mean_edge_len: f64,
    pub config_hash: String,
}

/// Sparse directed reachability graph over representative states.
#[derive(Clone, Debug)]
pub struct ReachGraph {
    pub k: u32,
    pub delta: f64,
    nodes: Vec<State>,
    adj: Vec<Vec<Edge>>,
    pub stats: GraphStats,
}

impl ReachGraph {
    /// Assembles a graph directly from nodes and adjacency lists, bypassing
    /// the construction pipeline (used for hand-built test fixtures and
    /// synthetic benchmarks). Statistics are computed from the parts.
    pub fn from_parts(k: u32, delta: f64, nodes: Vec<State>, adj: Vec<Vec<Edge>>) -> Self {
        assert_eq!(nodes.len(), adj.len(), "one adjacency list per node");
        for es in &adj {
            for e in es {
                assert!(e.to < nodes.len(), "edge endpoint out of range");
            }
        }
        let edge_count: usize = adj.iter().map(|es| es.len()).sum();
        let mean_edge_len = if edge_count == 0 {
            0.0
        } else {
            adj.iter()
                .enumerate()
                .flat_map(|(i, es)| es.iter().map(move |e| (i, e.to)))
                .map(|(i, j)| nodes[i].pos.dist(nodes[j].pos))
                .sum::<f64>()
                / edge_count as f64
        };
        let fingerprint = format!("parts;k={};delta={};n={};m={}", k, delta, nodes.len(), edge_count);
        let stats = GraphStats {
            nodes: nodes.len(),
            edges: edge_count,
            mean_degree: if nodes.is_empty() {
                0.0
            } else {
                edge_count as f64 / nodes.len() as f64
            },
            mean_edge_len,
            config_hash: format!("{:016x}", fnv1a64(fingerprint.as_bytes())),
        };
        ReachGraph {
            k,
            delta,
            nodes,
            adj,
            stats,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, i: usize) -> &State {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[State] {
        &self.nodes
    }

    pub fn neighbors(&self, i: usize) -> &[Edge] {
        &self.adj[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|es| es.len()).sum()
    }

    /// Maximum over node pairs of the minimum hop count, ignoring edge
    /// weights. The graph is strongly connected by construction so the value
    /// is finite (0 for a single-node graph).
    pub fn hop_diameter(&self) -> usize {
        let n = self.len();
        let mut diameter = 0usize;
        let mut dist = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::new();
        for start in 0..n {
            dist.iter_mut().for_each(|d| *d = usize::MAX);
            dist[start] = 0;
            queue.clear();
            queue.push_back(start);
            while let Some(v) = queue.pop_front() {
                for e in &self.adj[v] {
                    if dist[e.to] == usize::MAX {
                        dist[e.to] = dist[v] + 1;
                        queue.push_back(e.to);
                    }
                }
            }
            for &d in &dist {
                if d != usize::MAX {
                    diameter = diameter.max(d);
                }
            }
        }
        diameter
    }

    /// Checks that every node reaches every other node.
    pub fn is_strongly_connected(&self) -> bool {
        let adj: Vec<Vec<usize>> = self
            .adj
            .iter()
            .map(|es| es.iter().map(|e| e.to).collect())
            .collect();
        self.len() <= 1 || largest_scc(&adj).len() == self.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "k": self.k,
            "delta": self.delta,
            "nodes": self.nodes.iter().enumerate().map(|(id, s)| serde_json::json!({
                "id": id,
                "pos": [s.pos.x, s.pos.y],
                "state": s.vec,
            })).collect::<Vec<_>>(),
            "edges": self.adj.iter().enumerate().flat_map(|(from, es)| {
                es.iter().map(move |e| serde_json::json!({
                    "from": from,
                    "to": e.to,
                    "dhat": e.dhat,
                }))
            }).collect::<Vec<_>>(),
            "stats": self.stats,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), GraphError> {
        let text = serde_json::to_string_pretty(&self.to_json())?;
        fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, GraphError> {
        #[derive(Deserialize)]
        struct NodeRec {
            id: usize,
            pos: [f64; 2],
            state: Vec<f64>,
        }
        #[derive(Deserialize)]
        struct EdgeRec {
            from: usize,
            to: usize,
            dhat: f64,
        }
        #[derive(Deserialize)]
        struct GraphRec {
            k: u32,
            delta: f64,
            nodes: Vec<NodeRec>,
            edges: Vec<EdgeRec>,
            stats: GraphStats,
        }
        let text = fs::read_to_string(path)?;
        let rec: GraphRec = serde_json::from_str(&text)?;
        let mut nodes = vec![None; rec.nodes.len()];
        for n in rec.nodes {
            if n.id >= nodes.len() {
                return Err(GraphError::InvalidConfig(format!(
                    "node id {} out of range",
                    n.id
                )));
            }
            nodes[n.id] = Some(State {
                pos: Vec2::from_array(n.pos),
                vec: n.state,
            });
        }
        let nodes: Vec<State> = nodes
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| GraphError::InvalidConfig("missing node id".into()))?;
        let mut adj = vec![Vec::new(); nodes.len()];
        for e in rec.edges {
            if e.from >= nodes.len() || e.to >= nodes.len() {
                return Err(GraphError::InvalidConfig("edge endpoint out of range".into()));
            }
            adj[e.from].push(Edge {
                to: e.to,
                dhat: e.dhat,
            });
        }
        Ok(ReachGraph {
            k: rec.k,
            delta: rec.delta,
            nodes,
            adj,
            stats: rec.stats,
        })
    }
}

/// Spatially stratified subsample: states are grouped into square grid cells
/// and drawn round-robin (one random remaining state per occupied cell per
/// round) until the budget is reached, so dense regions cannot crowd out
/// sparse ones. When the budget covers the number of occupied cells, every
/// occupied cell contributes at least one sample. Deterministic in the seed.
pub fn grid_subsample(states: &[State], cell_size: f64, budget: usize, seed: u64) -> Vec<State> {
    assert!(cell_size > 0.0, "cell_size must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cells: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, s) in states.iter().enumerate() {
        let key = (
            (s.pos.x / cell_size).floor() as i64,
            (s.pos.y / cell_size).floor() as i64,
        );
        cells.entry(key).or_default().push(i);
    }
    // Shuffle each cell once (in deterministic key order), then pop from the
    // back per round.
    let mut pools: Vec<Vec<usize>> = cells.into_values().collect();
    for pool in &mut pools {
        pool.shuffle(&mut rng);
    }
    let mut out = Vec::with_capacity(budget.min(states.len()));
    while out.len() < budget {
        let mut drew_any = false;
        for pool in &mut pools {
            if out.len() >= budget {
                break;
            }
            if let Some(i) = pool.pop() {
                out.push(states[i].clone());
                drew_any = true;
            }
        }
        if !drew_any {
            break;
        }
    }
    out
}

/// Greedy single-pass clustering: each state joins the first existing cluster
/// whose medoid is within `threshold` under the symmetrized oracle distance
/// `(d(a,b) + d(b,a)) / 2`, else founds a new cluster; after every assignment
/// the affected cluster's medoid is recomputed (member minimizing total
/// symmetrized distance to the others, lowest index on ties). Returns the
/// medoid states in cluster-creation order.
pub fn cluster_medoids<O: ReachabilityOracle + ?Sized>(
    states: &[State],
    oracle: &O,
    threshold: f64,
) -> Vec<State> {
    struct Cluster {
        members: Vec<usize>,
        medoid: usize,
    }

    let sym = |a: usize, b: usize| -> f64 {
        (oracle.distance(&states[a], &states[b]) + oracle.distance(&states[b], &states[a])) / 2.0
    };

    let mut clusters: Vec<Cluster> = Vec::new();
    for i in 0..states.len() {
        let mut joined = false;
        for cluster in &mut clusters {
            if sym(i, cluster.medoid) < threshold {
                cluster.members.push(i);
                // Recompute the medoid of the cluster that changed.
                let mut best = cluster.medoid;
                let mut best_total = f64::INFINITY;
                for &m in &cluster.members {
                    let total: f64 = cluster
                        .members
                        .iter()
                        .filter(|&&o| o != m)
                        .map(|&o| sym(m, o))
                        .sum();
                    if total < best_total {
                        best_total = total;
                        best = m;
                    }
                }
                cluster.medoid = best;
                joined = true;
                break;
            }
        }
        if !joined {
            clusters.push(Cluster {
                members: vec![i],
                medoid: i,
            });
        }
    }
    clusters
        .into_iter()
        .map(|c| states[c.medoid].clone())
        .collect()
}

/// Selects directed edges for every node:
///
/// 1. candidates are nodes at oracle distance strictly below `k - delta`
///    (self-distance forced to infinity);
/// 2. candidates are partitioned into `n_bins` angular sectors around the
///    source; each sector keeps its highest "distance efficiency" candidate
///    (geometric length per control step);
/// 3. while the out-degree is below `target_degree`, remaining candidates are
///    added greedily, preferring directions most angularly distant from the
///    already selected edges, then higher efficiency;
/// 4. for every selected edge the reverse edge is added whenever it is
///    feasible, regardless of degree, so the graph trends bidirectional.
pub fn build_edges<O: ReachabilityOracle + ?Sized>(
    nodes: &[State],
    oracle: &O,
    k: u32,
    delta: f64,
    n_bins: usize,
    target_degree: usize,
) -> Vec<Vec<Edge>> {
    let n = nodes.len();
    let limit = k as f64 - delta;

    // Pairwise cost matrix; oracle queries are read-only and independent.
    let dhat: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        f64::INFINITY
                    } else {
                        oracle.distance(&nodes[i], &nodes[j])
                    }
                })
                .collect()
        })
        .collect();

    let mut adj: Vec<Vec<Edge>> = vec![Vec::new(); n];
    for i in 0..n {
        let mut candidates: Vec<(usize, f64, f64, f64)> = Vec::new(); // (j, dhat, angle, efficiency)
        for j in 0..n {
            let d = dhat[i][j];
            if d < limit {
                let dir = nodes[j].pos - nodes[i].pos;
                let eff = dir.norm() / d;
                candidates.push((j, d, dir.angle(), eff));
            }
        }
        if candidates.is_empty() {
            continue;
        }

        let bin_width = std::f64::consts::TAU / n_bins as f64;
        let mut winners: Vec<Option<usize>> = vec![None; n_bins]; // candidate index per bin
        for (ci, &(_, _, angle, eff)) in candidates.iter().enumerate() {
            let bin = ((angle / bin_width) as usize).min(n_bins - 1);
            match winners[bin] {
                None => winners[bin] = Some(ci),
                Some(prev) => {
                    if eff > candidates[prev].3 {
                        winners[bin] = Some(ci);
                    }
                }
            }
        }
        let mut selected: Vec<usize> = winners.into_iter().flatten().collect();
        selected.sort_by_key(|&ci| candidates[ci].0);

        // Top up the degree with the most angularly novel remaining candidates.
        while selected.len() < target_degree {
            let mut best: Option<(usize, f64, f64)> = None; // (ci, novelty, efficiency)
            for ci in 0..candidates.len() {
                if selected.contains(&ci) {
                    continue;
                }
                let novelty = selected
                    .iter()
                    .map(|&s| angular_gap(candidates[ci].2, candidates[s].2))
                    .fold(f64::INFINITY, f64::min);
                let eff = candidates[ci].3;
                let better = match best {
                    None => true,
                    Some((_, bn, be)) => {
                        novelty > bn || (novelty == bn && eff > be)
                    }
                };
                if better {
                    best = Some((ci, novelty, eff));
                }
            }
            match best {
                Some((ci, _, _)) => selected.push(ci),
                None => break,
            }
        }

        for &ci in &selected {
            let (j, d, _, _) = candidates[ci];
            adj[i].push(Edge { to: j, dhat: d });
        }
    }

    // Bidirectional completion: reverse edges bypass the degree cap.
    for i in 0..n {
        for ei in 0..adj[i].len() {
            let j = adj[i][ei].to;
            let back = dhat[j][i];
            if back < limit && !adj[j].iter().any(|e| e.to == i) {
                adj[j].push(Edge { to: i, dhat: back });
            }
        }
    }
    adj
}

/// Runs the full pipeline: subsample, cluster, connect, and keep the largest
/// strongly connected component (re-indexed densely, preserving order).
pub fn build_graph<O: ReachabilityOracle + ?Sized>(
    states: &[State],
    oracle: &O,
    config: &GraphConfig,
) -> Result<ReachGraph, GraphError> {
    config.validate()?;
    if states.is_empty() {
        return Err(GraphError::EmptyInput);
    }
    let sampled = grid_subsample(states, config.cell_size, config.budget, config.seed);
    let medoids = cluster_medoids(&sampled, oracle, config.cluster_threshold);
    let adj = build_edges(
        &medoids,
        oracle,
        config.k,
        config.delta,
        config.n_bins,
        config.target_degree,
    );

    let plain: Vec<Vec<usize>> = adj
        .iter()
        .map(|es| es.iter().map(|e| e.to).collect())
        .collect();
    let keep = largest_scc(&plain);
    let mut remap = vec![usize::MAX; medoids.len()];
    for (new_id, &old_id) in keep.iter().enumerate() {
        remap[old_id] = new_id;
    }
    let nodes: Vec<State> = keep.iter().map(|&i| medoids[i].clone()).collect();
    let adj: Vec<Vec<Edge>> = keep
        .iter()
        .map(|&i| {
            adj[i]
                .iter()
                .filter(|e| remap[e.to] != usize::MAX)
                .map(|e| Edge {
                    to: remap[e.to],
                    dhat: e.dhat,
                })
                .collect()
        })
        .collect();

    let edge_count: usize = adj.iter().map(|es| es.len()).sum();
    let mean_edge_len = if edge_count == 0 {
        0.0
    } else {
        adj.iter()
            .enumerate()
            .flat_map(|(i, es)| {
                es.iter()
                    .map(move |e| (i, e.to))
            })
            .map(|(i, j)| nodes[i].pos.dist(nodes[j].pos))
            .sum::<f64>()
            / edge_count as f64
    };
    let stats = GraphStats {
        nodes: nodes.len(),
        edges: edge_count,
        mean_degree: if nodes.is_empty() {
            0.0
        } else {
            edge_count as f64 / nodes.len() as f64
        },
        mean_edge_len,
        config_hash: config.fingerprint(),
    };
    Ok(ReachGraph {
        k: config.k,
        delta: config.delta,
        nodes,
        adj,
        stats,
    })
}
