//! Exact reachability oracle for grid mazes.
//!
//! Distances are shortest 8-connected free-cell paths (diagonal steps cost
//! sqrt(2) cells and may not cut wall corners), converted to control steps by
//! dividing by the per-step speed. Distance-to-goal fields are cached per
//! goal cell behind a read-mostly lock so concurrent benchmark tasks share
//! work; duplicate computation on a race is harmless because fields are
//! deterministic.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Arc, RwLock};

use ordered_float::OrderedFloat;

use super::MazeWorld;
use crate::geom::Vec2;
use crate::reachgraph::{ReachabilityOracle, State};

/// Cached per-goal distance fields, keyed by the goal's grid cell.
type FieldCache = HashMap<(i64, i64), Arc<Vec<f64>>>;

pub struct GridReachOracle {
    world: Arc<MazeWorld>,
    speed: f64,
    fields: RwLock<FieldCache>,
}

impl GridReachOracle {
    /// `speed` is the distance covered per control step (world units).
    pub fn new(world: Arc<MazeWorld>, speed: f64) -> Self {
        assert!(speed > 0.0, "speed must be positive");
        GridReachOracle {
            world,
            speed,
            fields: RwLock::new(HashMap::new()),
        }
    }

    pub fn world(&self) -> &Arc<MazeWorld> {
        &self.world
    }

    /// Distance field (world units) from every cell to `goal`, indexed
    /// `cy * width + cx`; walls and unreachable cells hold infinity.
    pub fn field_to(&self, goal: (i64, i64)) -> Arc<Vec<f64>> {
        if let Some(f) = self.fields.read().expect("field cache poisoned").get(&goal) {
            return f.clone();
        }
        let field = Arc::new(self.compute_field(goal));
        let mut cache = self.fields.write().expect("field cache poisoned");
        cache.entry(goal).or_insert_with(|| field.clone());
        cache[&goal].clone()
    }

    /// Estimated control steps between two positions; infinite if either is
    /// inside a wall or no free path exists. Zero within a single cell.
    pub fn steps(&self, from: Vec2, to: Vec2) -> f64 {
        if !self.world.is_free_pos(from) || !self.world.is_free_pos(to) {
            return f64::INFINITY;
        }
        let field = self.field_to(self.world.cell_of(to));
        let (cx, cy) = self.world.cell_of(from);
        field[cy as usize * self.world.width() + cx as usize] / self.speed
    }

    fn compute_field(&self, goal: (i64, i64)) -> Vec<f64> {
        let w = self.world.width();
        let h = self.world.height();
        let mut dist = vec![f64::INFINITY; w * h];
        if self.world.is_wall(goal.0, goal.1) {
            return dist;
        }
        let idx = |cx: i64, cy: i64| cy as usize * w + cx as usize;
        let cell = self.world.cell_size;
        let diag = std::f64::consts::SQRT_2 * cell;
        let mut heap: BinaryHeap<Reverse<(OrderedFloat<f64>, i64, i64)>> = BinaryHeap::new();
        dist[idx(goal.0, goal.1)] = 0.0;
        heap.push(Reverse((OrderedFloat(0.0), goal.0, goal.1)));
        while let Some(Reverse((d, cx, cy))) = heap.pop() {
            if d.0 > dist[idx(cx, cy)] {
                continue;
            }
            for (dx, dy) in [
                (1, 0),
                (-1, 0),
                (0, 1),
                (0, -1),
                (1, 1),
                (1, -1),
                (-1, 1),
                (-1, -1),
            ] {
                let (nx, ny) = (cx + dx, cy + dy);
                if self.world.is_wall(nx, ny) {
                    continue;
                }
                // Diagonal moves may not cut past a wall corner.
                if dx != 0
                    && dy != 0
                    && (self.world.is_wall(cx + dx, cy) || self.world.is_wall(cx, cy + dy))
                {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { diag } else { cell };
                let nd = d.0 + step;
                if nd < dist[idx(nx, ny)] {
                    dist[idx(nx, ny)] = nd;
                    heap.push(Reverse((OrderedFloat(nd), nx, ny)));
                }
            }
        }
        dist
    }
}

impl ReachabilityOracle for GridReachOracle {
    fn distance(&self, from: &State, to: &State) -> f64 {
        self.steps(from.pos, to.pos)
    }
}
