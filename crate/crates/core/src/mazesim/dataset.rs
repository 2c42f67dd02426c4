//! Offline trajectory datasets: generation by a task-agnostic random walk,
//! persistence as JSON lines of transitions, and a free-cell coverage metric.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::MazeWorld;
use crate::geom::Vec2;
use crate::reachgraph::State;

/// Standard deviation (radians) of the per-step Gaussian heading change of
/// the data-collection walk. Tuned so the desk default (500 trajectories of
/// 200 steps) covers at least 95% of free cells.
const TURN_SIGMA: f64 = 0.4;

/// One rollout: `states.len() == actions.len() + 1`, and `states[t+1]` is the
/// world's response to applying `actions[t]` at `states[t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub states: Vec<Vec2>,
    pub actions: Vec<Vec2>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OfflineDataset {
    pub trajectories: Vec<Trajectory>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset i/o: {0}")]
    Io(#[from] io::Error),
    #[error("dataset line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("trajectory {traj} breaks the transition chain at step {step}")]
    BrokenChain { traj: usize, step: usize },
}

#[derive(Serialize, Deserialize)]
struct TransitionRec {
    traj: usize,
    x: [f64; 2],
    a: [f64; 2],
    x_next: [f64; 2],
}

impl OfflineDataset {
    pub fn n_transitions(&self) -> usize {
        self.trajectories.iter().map(|t| t.actions.len()).sum()
    }

    /// Every recorded state (including trajectory endpoints) as graph input.
    pub fn all_states(&self) -> Vec<State> {
        self.trajectories
            .iter()
            .flat_map(|t| t.states.iter())
            .map(|&p| State::from_pos(p))
            .collect()
    }

    /// Writes one JSON object per transition:
    /// `{"traj":0,"x":[..],"a":[..],"x_next":[..]}`.
    pub fn save_jsonl(&self, path: &Path) -> Result<(), DatasetError> {
        let mut out = BufWriter::new(File::create(path)?);
        for (ti, traj) in self.trajectories.iter().enumerate() {
            for (si, a) in traj.actions.iter().enumerate() {
                let rec = TransitionRec {
                    traj: ti,
                    x: traj.states[si].to_array(),
                    a: a.to_array(),
                    x_next: traj.states[si + 1].to_array(),
                };
                serde_json::to_writer(&mut out, &rec)
                    .map_err(|source| DatasetError::Json { line: 0, source })?;
                out.write_all(b"\n")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    /// Reads transitions written by [`save_jsonl`](Self::save_jsonl),
    /// regrouping them by trajectory id and validating that consecutive
    /// transitions chain (`x_next` of one equals `x` of the next).
    pub fn load_jsonl(path: &Path) -> Result<Self, DatasetError> {
        let reader = BufReader::new(File::open(path)?);
        let mut trajectories: Vec<Trajectory> = Vec::new();
        for (line_no, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: TransitionRec = serde_json::from_str(&line).map_err(|source| {
                DatasetError::Json {
                    line: line_no + 1,
                    source,
                }
            })?;
            if rec.traj >= trajectories.len() {
                trajectories.resize_with(rec.traj + 1, || Trajectory {
                    states: Vec::new(),
                    actions: Vec::new(),
                });
            }
            let traj = &mut trajectories[rec.traj];
            let x = Vec2::from_array(rec.x);
            if traj.states.is_empty() {
                traj.states.push(x);
            } else if traj.states.last() != Some(&x) {
                return Err(DatasetError::BrokenChain {
                    traj: rec.traj,
                    step: traj.actions.len(),
                });
            }
            traj.actions.push(Vec2::from_array(rec.a));
            traj.states.push(Vec2::from_array(rec.x_next));
        }
        Ok(OfflineDataset { trajectories })
    }
}

/// Rolls out `n_traj` trajectories of `traj_len` control steps each, starting
/// from uniform random free positions and following a momentum walk: the
/// heading receives a Gaussian turn each step and the commanded speed is the
/// world's maximum. A step that makes almost no progress (wall contact)
/// re-randomizes the heading. Deterministic in the seed.
pub fn generate_dataset(
    world: &MazeWorld,
    n_traj: usize,
    traj_len: usize,
    seed: u64,
) -> OfflineDataset {
    assert!(n_traj >= 1, "n_traj must be >= 1");
    assert!(traj_len >= 1, "traj_len must be >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let turn = Normal::new(0.0, TURN_SIGMA).expect("valid turn distribution");
    let tau = std::f64::consts::TAU;
    let mut trajectories = Vec::with_capacity(n_traj);
    for _ in 0..n_traj {
        let mut states = Vec::with_capacity(traj_len + 1);
        let mut actions = Vec::with_capacity(traj_len);
        let mut s = world.sample_free_pos(&mut rng);
        let mut heading = rng.gen_range(0.0..tau);
        states.push(s);
        for _ in 0..traj_len {
            heading = (heading + turn.sample(&mut rng)).rem_euclid(tau);
            let a = Vec2::new(heading.cos(), heading.sin()) * world.max_speed;
            let next = world.step(s, a);
            if next.dist(s) < 0.25 * world.max_speed {
                heading = rng.gen_range(0.0..tau);
            }
            actions.push(a);
            states.push(next);
            s = next;
        }
        trajectories.push(Trajectory { states, actions });
    }
    OfflineDataset { trajectories }
}

/// Fraction of free cells visited by at least one recorded state.
pub fn coverage(world: &MazeWorld, dataset: &OfflineDataset) -> f64 {
    let mut visited = vec![false; world.width() * world.height()];
    for traj in &dataset.trajectories {
        for &p in &traj.states {
            let (cx, cy) = world.cell_of(p);
            if !world.is_wall(cx, cy) {
                visited[cy as usize * world.width() + cx as usize] = true;
            }
        }
    }
    let hit = world
        .free_cells()
        .iter()
        .filter(|&&(cx, cy)| visited[cy as usize * world.width() + cx as usize])
        .count();
    hit as f64 / world.free_cells().len() as f64
}
