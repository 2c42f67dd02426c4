//! Desk-scale 2D maze simulator.
//!
//! Provides an occupancy-grid world with point-mass dynamics (per-axis wall
//! sliding), offline dataset generation by a momentum-perturbed random walk,
//! an exact grid-path reachability oracle, a greedy goal-seeking controller,
//! waypoint-plan execution on a fixed control clock, and signal subsampling.

mod dataset;
mod oracle;

pub use dataset::{coverage, generate_dataset, DatasetError, OfflineDataset, Trajectory};
pub use oracle::GridReachOracle;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

/// A 20x20 four-room maze: two axis walls split the interior into quadrants,
/// connected by two-cell doorways. 297 free cells.
pub const DESK_MAZE: &str = "\
####################
#........#.........#
#........#.........#
#........#.........#
#..................#
#..................#
#........#.........#
#........#.........#
#........#.........#
####..########..####
#........#.........#
#........#.........#
#........#.........#
#........#.........#
#..................#
#..................#
#........#.........#
#........#.........#
#........#.........#
####################";

#[derive(Debug, Error)]
pub enum MazeError {
    #[error("maze text is empty")]
    Empty,
    #[error("maze rows have differing lengths (row {row} has {got}, expected {expected})")]
    NotRectangular {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("unknown maze character {ch:?} at row {row}, column {col}")]
    UnknownChar { ch: char, row: usize, col: usize },
    #[error("maze border must be walls (open cell at row {row}, column {col})")]
    OpenBorder { row: usize, col: usize },
    #[error("free cells do not form a single connected region")]
    Disconnected,
    #[error("maze has no free cells")]
    NoFreeCells,
    #[error("invalid world parameter: {0}")]
    InvalidParam(String),
}

/// Occupancy-grid world with point-mass motion parameters.
///
/// Cell `(cx, cy)` spans world coordinates `[cx*cell_size, (cx+1)*cell_size)
/// x [cy*cell_size, (cy+1)*cell_size)`; the first text row is `cy = 0`.
#[derive(Clone, Debug)]
pub struct MazeWorld {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    free_cells: Vec<(i64, i64)>,
    pub cell_size: f64,
    pub max_speed: f64,
}

impl MazeWorld {
    /// Parses a maze from text (`#` wall, `.` free, one row per line) and
    /// validates it: rectangular, walled border, free cells connected.
    pub fn parse(text: &str, cell_size: f64, max_speed: f64) -> Result<Self, MazeError> {
        if !(cell_size > 0.0) {
            return Err(MazeError::InvalidParam("cell_size must be > 0".into()));
        }
        if !(max_speed > 0.0) {
            return Err(MazeError::InvalidParam("max_speed must be > 0".into()));
        }
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        if rows.is_empty() {
            return Err(MazeError::Empty);
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut walls = vec![false; width * height];
        for (row, line) in rows.iter().enumerate() {
            let chars: Vec<char> = line.chars().collect();
            if chars.len() != width {
                return Err(MazeError::NotRectangular {
                    row,
                    got: chars.len(),
                    expected: width,
                });
            }
            for (col, &ch) in chars.iter().enumerate() {
                let wall = match ch {
                    '#' => true,
                    '.' => false,
                    _ => return Err(MazeError::UnknownChar { ch, row, col }),
                };
                walls[row * width + col] = wall;
                let on_border = row == 0 || row == height - 1 || col == 0 || col == width - 1;
                if on_border && !wall {
                    return Err(MazeError::OpenBorder { row, col });
                }
            }
        }
        let free_cells: Vec<(i64, i64)> = (0..height)
            .flat_map(|cy| (0..width).map(move |cx| (cx as i64, cy as i64)))
            .filter(|&(cx, cy)| !walls[cy as usize * width + cx as usize])
            .collect();
        if free_cells.is_empty() {
            return Err(MazeError::NoFreeCells);
        }
        let world = MazeWorld {
            width,
            height,
            walls,
            free_cells,
            cell_size,
            max_speed,
        };
        if !world.free_space_connected() {
            return Err(MazeError::Disconnected);
        }
        Ok(world)
    }

    /// The built-in 20x20 four-room maze with unit cells and half-cell speed.
    pub fn desk() -> Self {
        MazeWorld::parse(DESK_MAZE, 1.0, 0.5).expect("built-in maze is valid")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn world_width(&self) -> f64 {
        self.width as f64 * self.cell_size
    }

    pub fn world_height(&self) -> f64 {
        self.height as f64 * self.cell_size
    }

    /// Out-of-range cells count as walls.
    pub fn is_wall(&self, cx: i64, cy: i64) -> bool {
        if cx < 0 || cy < 0 || cx >= self.width as i64 || cy >= self.height as i64 {
            return true;
        }
        self.walls[cy as usize * self.width + cx as usize]
    }

    pub fn cell_of(&self, p: Vec2) -> (i64, i64) {
        (
            (p.x / self.cell_size).floor() as i64,
            (p.y / self.cell_size).floor() as i64,
        )
    }

    pub fn cell_center(&self, cell: (i64, i64)) -> Vec2 {
        Vec2::new(
            (cell.0 as f64 + 0.5) * self.cell_size,
            (cell.1 as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn is_free_pos(&self, p: Vec2) -> bool {
        let (cx, cy) = self.cell_of(p);
        !self.is_wall(cx, cy)
    }

    pub fn free_cells(&self) -> &[(i64, i64)] {
        &self.free_cells
    }

    /// Uniform over free space: uniform free cell, then uniform offset.
    pub fn sample_free_pos<R: Rng>(&self, rng: &mut R) -> Vec2 {
        let (cx, cy) = self.free_cells[rng.gen_range(0..self.free_cells.len())];
        Vec2::new(
            (cx as f64 + rng.gen::<f64>()) * self.cell_size,
            (cy as f64 + rng.gen::<f64>()) * self.cell_size,
        )
    }

    fn free_space_connected(&self) -> bool {
        let start = self.free_cells[0];
        let mut seen = vec![false; self.width * self.height];
        let mut stack = vec![start];
        seen[start.1 as usize * self.width + start.0 as usize] = true;
        let mut count = 0usize;
        while let Some((cx, cy)) = stack.pop() {
            count += 1;
            for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (nx, ny) = (cx + dx, cy + dy);
                if !self.is_wall(nx, ny) && !seen[ny as usize * self.width + nx as usize] {
                    seen[ny as usize * self.width + nx as usize] = true;
                    stack.push((nx, ny));
                }
            }
        }
        count == self.free_cells.len()
    }

    /// Advances the point mass one control step. The action is clipped to
    /// `max_speed`; motion is resolved per axis in substeps no longer than a
    /// cell, so a blocked axis component is dropped (the agent slides along
    /// walls) and the position never enters a wall.
    pub fn step(&self, s: Vec2, a: Vec2) -> Vec2 {
        let a = a.clipped(self.max_speed);
        let max_comp = a.x.abs().max(a.y.abs());
        if max_comp == 0.0 {
            return s;
        }
        let n_sub = ((max_comp / (0.95 * self.cell_size)).ceil() as usize).max(1);
        let dx = a.x / n_sub as f64;
        let dy = a.y / n_sub as f64;
        let mut p = s;
        for _ in 0..n_sub {
            let try_x = Vec2::new(p.x + dx, p.y);
            if self.is_free_pos(try_x) {
                p = try_x;
            }
            let try_y = Vec2::new(p.x, p.y + dy);
            if self.is_free_pos(try_y) {
                p = try_y;
            }
        }
        p
    }

    /// True when the open segment from `a` to `b` stays in free cells. Every
    /// grid cell the segment touches must be free; crossing exactly through a
    /// cell corner additionally requires both side cells free, so the check
    /// never threads a diagonal gap between two walls.
    pub fn line_of_sight(&self, a: Vec2, b: Vec2) -> bool {
        if !self.is_free_pos(a) || !self.is_free_pos(b) {
            return false;
        }
        let (mut cx, mut cy) = self.cell_of(a);
        let (gx, gy) = self.cell_of(b);
        if (cx, cy) == (gx, gy) {
            return true;
        }
        let dx = b.x - a.x;
        let dy = b.y - a.y;
        let step_x: i64 = if dx > 0.0 { 1 } else { -1 };
        let step_y: i64 = if dy > 0.0 { 1 } else { -1 };
        // Parameter t in [0,1] at which the ray crosses the next x/y cell
        // boundary, and the per-cell increments.
        let mut t_max_x = if dx == 0.0 {
            f64::INFINITY
        } else {
            let next = if dx > 0.0 {
                (cx + 1) as f64 * self.cell_size
            } else {
                cx as f64 * self.cell_size
            };
            (next - a.x) / dx
        };
        let mut t_max_y = if dy == 0.0 {
            f64::INFINITY
        } else {
            let next = if dy > 0.0 {
                (cy + 1) as f64 * self.cell_size
            } else {
                cy as f64 * self.cell_size
            };
            (next - a.y) / dy
        };
        let t_delta_x = if dx == 0.0 {
            f64::INFINITY
        } else {
            self.cell_size / dx.abs()
        };
        let t_delta_y = if dy == 0.0 {
            f64::INFINITY
        } else {
            self.cell_size / dy.abs()
        };
        let mut guard = (self.width + self.height + 8) as i64;
        while (cx, cy) != (gx, gy) {
            guard -= 1;
            if guard < 0 {
                return false;
            }
            if t_max_x < t_max_y {
                cx += step_x;
                t_max_x += t_delta_x;
            } else if t_max_y < t_max_x {
                cy += step_y;
                t_max_y += t_delta_y;
            } else {
                // Exact corner crossing: both orthogonal side cells must be
                // free or the ray is clipping a wall corner.
                if self.is_wall(cx + step_x, cy) || self.is_wall(cx, cy + step_y) {
                    return false;
                }
                cx += step_x;
                cy += step_y;
                t_max_x += t_delta_x;
                t_max_y += t_delta_y;
            }
            if self.is_wall(cx, cy) {
                return false;
            }
        }
        true
    }
}

/// One control action of the greedy goal-seeking controller.
///
/// With free line of sight to the goal the action aims straight at it (and
/// lands exactly on it when within one step). Otherwise the controller walks
/// the steepest-descent cells of the oracle's distance-to-goal field and aims
/// at the farthest cell center still visible from the current position.
pub fn greedy_action(
    world: &MazeWorld,
    oracle: &GridReachOracle,
    s: Vec2,
    g: Vec2,
) -> Vec2 {
    let to_goal = g - s;
    if to_goal.norm() < 1e-12 {
        return Vec2::ZERO;
    }
    if world.line_of_sight(s, g) {
        return to_goal.clipped(world.max_speed);
    }
    let field = oracle.field_to(world.cell_of(g));
    let start = world.cell_of(s);
    let at = |c: (i64, i64)| field[c.1 as usize * world.width() + c.0 as usize];

    // Steepest-descent cell path toward the goal.
    let mut path = Vec::new();
    let mut cur = start;
    for _ in 0..world.width() * world.height() {
        let mut best: Option<(i64, i64)> = None;
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
            let n = (cur.0 + dx, cur.1 + dy);
            if world.is_wall(n.0, n.1) {
                continue;
            }
            if dx != 0 && dy != 0 && (world.is_wall(cur.0 + dx, cur.1) || world.is_wall(cur.0, cur.1 + dy)) {
                continue;
            }
            if at(n) >= at(cur) {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => at(n) < at(b) || (at(n) == at(b) && (n.1, n.0) < (b.1, b.0)),
            };
            if better {
                best = Some(n);
            }
        }
        match best {
            Some(n) => {
                path.push(n);
                cur = n;
            }
            None => break,
        }
    }

    // Aim at the farthest path cell center still visible (string pulling);
    // fall back to the first descent cell when visibility fails outright.
    let mut aim = match path.first() {
        Some(&c) => world.cell_center(c),
        None => return Vec2::ZERO,
    };
    for &c in &path {
        let center = world.cell_center(c);
        if world.line_of_sight(s, center) {
            aim = center;
        }
    }
    (aim - s).clipped(world.max_speed)
}

/// Executes a waypoint plan on the fixed control clock: `waypoints[0]` is the
/// start and is not pursued; every later waypoint is pursued for exactly `k`
/// control steps (arriving early holds position). The returned trajectory
/// starts at `x0` and has `(waypoints.len() - 1) * k` further states.
pub fn execute_plan(
    world: &MazeWorld,
    oracle: &GridReachOracle,
    x0: Vec2,
    waypoints: &[Vec2],
    k: u32,
) -> Vec<Vec2> {
    assert!(k >= 1, "k must be >= 1");
    let mut traj = Vec::with_capacity(1 + waypoints.len().saturating_sub(1) * k as usize);
    traj.push(x0);
    let mut s = x0;
    for &w in waypoints.iter().skip(1) {
        for _ in 0..k {
            let a = greedy_action(world, oracle, s, w);
            s = world.step(s, a);
            traj.push(s);
        }
    }
    traj
}

/// Samples a control trajectory every `k` steps: sample `i` is `x[i*k]`
/// while `i*k <= T`, and the final sample repeats `x[T]` when `T` is not a
/// multiple of `k`. A trajectory of `T` control steps yields `ceil(T/k) + 1`
/// samples.
pub fn subsample_signal(trajectory: &[Vec2], k: u32) -> Vec<Vec2> {
    assert!(!trajectory.is_empty(), "trajectory must be non-empty");
    assert!(k >= 1, "k must be >= 1");
    let t_end = trajectory.len() - 1;
    let n = t_end.div_ceil(k as usize);
    (0..=n)
        .map(|i| trajectory[(i * k as usize).min(t_end)])
        .collect()
}

/// A serializable task start/goal pair used by CLI plumbing.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AgentState {
    pub pos: Vec2,
}
