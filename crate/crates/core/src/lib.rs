//! Waypoint planning for signal temporal logic (STL) tasks over reachability
//! graphs built from offline trajectory data.
//!
//! The crate is organized bottom-up:
//!
//! - [`stl`]: formula AST, concrete syntax parser, horizon/immutability analysis.
//! - [`robustness`]: arithmetic-geometric-mean (AGM) robustness, sound interval
//!   semantics over signal prefixes, and an incremental monitor with a
//!   heuristic (unnormalized, look-ahead) variant for search guidance.
//! - [`reachgraph`]: sparse reachability graph construction from raw states via
//!   grid subsampling, medoid clustering, angular-bin edge selection, and
//!   restriction to the largest strongly connected component.
//! - [`planner`]: best-first graph search that turns a formula plus a graph
//!   into a waypoint plan, with interval-based upper-bound pruning and
//!   per-(node, time) dominance pruning.
//! - [`mazesim`]: a 2D point-mass maze environment with an exact grid
//!   shortest-path oracle, offline dataset generation, a greedy tracking
//!   controller, and plan execution.
//! - [`bench`]: parameterized task templates and a benchmark harness measuring
//!   planning/execution success rates and planning times.

// Validation guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0`,
// the negated form also rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod geom;
pub mod mazesim;
pub mod planner;
pub mod reachgraph;
pub mod robustness;
pub mod stl;

pub use geom::Vec2;
