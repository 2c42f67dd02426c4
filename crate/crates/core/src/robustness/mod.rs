//! Quantitative STL semantics based on arithmetic-geometric-mean (AGM)
//! aggregation, plus an incremental interval monitor over signal prefixes.
//!
//! Conjunction over robustness values `v_1..v_n`:
//!
//! - if every `v_i > 0`: `(prod (1 + v_i))^(1/n) - 1` (geometric mean, shifted);
//! - otherwise: the arithmetic mean of `min(v_i, 0)` — only violating terms
//!   count, and a zero counts as non-positive.
//!
//! Disjunction is the exact dual: `agm_or(v) = -agm_and(-v)`. Both keep
//! `[-1, 1]` inputs inside `[-1, 1]` and are monotone in every argument, which
//! is what makes endpoint-wise interval propagation sound.

mod monitor;

pub use monitor::{IntervalMonitor, SemanticsMode};

use thiserror::Error;

use crate::geom::Vec2;
use crate::stl::{PredicateDef, PredicateTable, StlFormula};

/// A closed interval `[lo, hi]` bounding the robustness value of a formula
/// over all completions of an observed signal prefix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// The vacuous bound used before any relevant observation arrives.
    pub const UNKNOWN: Interval = Interval { lo: -1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(self) -> f64 {
        self.hi - self.lo
    }

    pub fn negated(self) -> Self {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }

    pub fn contains(self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum RobustnessError {
    #[error("aggregation over an empty list")]
    EmptyAggregation,
    #[error("unknown predicate id {0:?}")]
    UnknownPredicate(String),
    #[error(
        "signal too short: evaluation at t={t} of a horizon-{horizon} formula needs \
         {needed} samples, got {got}"
    )]
    SignalTooShort {
        t: usize,
        horizon: usize,
        needed: usize,
        got: usize,
    },
}

/// AGM conjunction of robustness values. Errors on an empty slice.
pub fn agm_and(values: &[f64]) -> Result<f64, RobustnessError> {
    if values.is_empty() {
        return Err(RobustnessError::EmptyAggregation);
    }
    Ok(agm_and_iter(values.iter().copied()))
}

/// AGM disjunction of robustness values. Errors on an empty slice.
pub fn agm_or(values: &[f64]) -> Result<f64, RobustnessError> {
    if values.is_empty() {
        return Err(RobustnessError::EmptyAggregation);
    }
    Ok(agm_or_iter(values.iter().copied()))
}

/// Single-pass AGM conjunction; the iterator must be non-empty.
///
/// The geometric branch runs in log space (`ln_1p`/`exp_m1`) so long windows
/// of near-zero values neither underflow nor lose precision.
pub(crate) fn agm_and_iter(values: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut log_sum = 0.0;
    let mut neg_sum = 0.0;
    let mut any_nonpos = false;
    for v in values {
        n += 1;
        if v > 0.0 {
            log_sum += v.ln_1p();
        } else {
            any_nonpos = true;
            neg_sum += v;
        }
    }
    debug_assert!(n > 0, "agm_and over an empty iterator");
    if any_nonpos {
        neg_sum / n as f64
    } else {
        (log_sum / n as f64).exp_m1()
    }
}

/// Single-pass AGM disjunction; the iterator must be non-empty.
pub(crate) fn agm_or_iter(values: impl Iterator<Item = f64>) -> f64 {
    let mut n = 0usize;
    let mut log_sum = 0.0;
    let mut pos_sum = 0.0;
    let mut any_nonneg = false;
    for v in values {
        n += 1;
        if v < 0.0 {
            log_sum += (-v).ln_1p();
        } else {
            any_nonneg = true;
            pos_sum += v;
        }
    }
    debug_assert!(n > 0, "agm_or over an empty iterator");
    if any_nonneg {
        pos_sum / n as f64
    } else {
        -(log_sum / n as f64).exp_m1()
    }
}

/// Unnormalized circular-region robustness `r^2 - d^2`: positive inside the
/// region, unbounded. Used by the planner's guidance heuristic.
pub fn eval_predicate_raw(pred: &PredicateDef, pos: Vec2) -> f64 {
    let dx = pos.x - pred.center.x;
    let dy = pos.y - pred.center.y;
    pred.radius * pred.radius - (dx * dx + dy * dy)
}

/// Normalized circular-region robustness `(r^2 - d^2) / (r^2 + d^2)`, which
/// maps the plane onto `(-1, 1]`: `1` at the center, `0` on the boundary,
/// approaching `-1` far away.
pub fn eval_predicate_normalized(pred: &PredicateDef, pos: Vec2) -> f64 {
    let dx = pos.x - pred.center.x;
    let dy = pos.y - pred.center.y;
    let r2 = pred.radius * pred.radius;
    let d2 = dx * dx + dy * dy;
    (r2 - d2) / (r2 + d2)
}

/// AGM robustness of `phi` at time `t` over a complete signal.
///
/// Requires `signal.len() >= t + phi.horizon() + 1` and every referenced
/// predicate to resolve in `preds`. This recursive evaluator is the reference
/// the incremental monitor is tested against.
pub fn agm_robustness(
    phi: &StlFormula,
    preds: &PredicateTable,
    signal: &[Vec2],
    t: usize,
) -> Result<f64, RobustnessError> {
    let horizon = phi.horizon();
    let needed = t + horizon + 1;
    if signal.len() < needed {
        return Err(RobustnessError::SignalTooShort {
            t,
            horizon,
            needed,
            got: signal.len(),
        });
    }
    for id in phi.predicate_ids() {
        if preds.get(id).is_none() {
            return Err(RobustnessError::UnknownPredicate(id.to_string()));
        }
    }
    Ok(eval_at(phi, preds, signal, t))
}

fn eval_at(phi: &StlFormula, preds: &PredicateTable, signal: &[Vec2], t: usize) -> f64 {
    match phi {
        StlFormula::True => 1.0,
        StlFormula::Predicate(id) => {
            eval_predicate_normalized(preds.get(id).expect("resolved above"), signal[t])
        }
        StlFormula::Not(c) => -eval_at(c, preds, signal, t),
        StlFormula::And(cs) => agm_and_iter(cs.iter().map(|c| eval_at(c, preds, signal, t))),
        StlFormula::Or(cs) => agm_or_iter(cs.iter().map(|c| eval_at(c, preds, signal, t))),
        StlFormula::Always { lo, hi, child } => {
            agm_and_iter((t + lo..=t + hi).map(|tau| eval_at(child, preds, signal, tau)))
        }
        StlFormula::Eventually { lo, hi, child } => {
            agm_or_iter((t + lo..=t + hi).map(|tau| eval_at(child, preds, signal, tau)))
        }
    }
}
