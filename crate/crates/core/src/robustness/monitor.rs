//! Incremental robustness-interval monitoring over growing signal prefixes.
//!
//! A monitor holds, for every subformula `psi` and every evaluation time `t`
//! some ancestor can consume, the interval `[lo, hi]` bounding the robustness
//! of `psi` at `t` over all completions of the observed prefix: observed
//! predicate values enter as points, unobserved window slots are completed
//! with the worst/best case `-1`/`+1`, and boolean/temporal operators
//! aggregate endpoint-wise (all aggregators are monotone, so endpoints bound
//! the image of the whole box).
//!
//! Temporal operators whose child contains no temporal operator (an
//! "immutable" child: its value at a time never changes once observed) are
//! updated in O(1) per new sample from per-window running aggregates instead
//! of re-scanning the window. Operators over mutable children fall back to
//! full-window re-aggregation; those re-aggregations are counted so tests can
//! assert the fast path really is taken.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::iter::{once, repeat_n};
use std::sync::Arc;

use crate::geom::Vec2;
use crate::stl::{PredicateDef, PredicateTable, StlFormula};

use super::{
    agm_and_iter, agm_or_iter, eval_predicate_normalized, eval_predicate_raw, Interval,
    RobustnessError,
};

/// Which quantitative semantics the monitor computes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SemanticsMode {
    /// Normalized predicates; intervals are sound bounds within `[-1, 1]` and
    /// converge to the exact robustness once the prefix covers the horizon.
    Sound,
    /// Unnormalized (unclamped) predicates plus a pre-window look-ahead that
    /// discounts a temporal child's current value toward the unknown bound.
    /// Intervals are guidance only: unbounded and not sound.
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum TemporalOp {
    Always,
    Eventually,
}

#[derive(Debug)]
enum NodeKind {
    True,
    Pred(usize),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Temporal {
        op: TemporalOp,
        lo: usize,
        hi: usize,
        child: usize,
    },
}

#[derive(Debug)]
struct PlanNode {
    kind: NodeKind,
    /// Subtree contains no temporal operator.
    immutable: bool,
    /// Largest evaluation time any chain of ancestors consumes this node at;
    /// the node's table covers `0..=max_t`.
    max_t: usize,
}

/// Formula compiled to postorder with predicate references resolved.
#[derive(Debug)]
struct MonitorPlan {
    nodes: Vec<PlanNode>,
    preds: Vec<PredicateDef>,
    horizon: usize,
}

fn compile(phi: &StlFormula, preds: &PredicateTable) -> Result<MonitorPlan, RobustnessError> {
    fn build(
        phi: &StlFormula,
        preds: &PredicateTable,
        nodes: &mut Vec<PlanNode>,
        defs: &mut Vec<PredicateDef>,
        index: &mut BTreeMap<String, usize>,
    ) -> Result<usize, RobustnessError> {
        let (kind, immutable) = match phi {
            StlFormula::True => (NodeKind::True, true),
            StlFormula::Predicate(id) => {
                let pi = match index.get(id) {
                    Some(&pi) => pi,
                    None => {
                        let def = preds
                            .get(id)
                            .ok_or_else(|| RobustnessError::UnknownPredicate(id.clone()))?;
                        defs.push(def.clone());
                        index.insert(id.clone(), defs.len() - 1);
                        defs.len() - 1
                    }
                };
                (NodeKind::Pred(pi), true)
            }
            StlFormula::Not(c) => {
                let ci = build(c, preds, nodes, defs, index)?;
                (NodeKind::Not(ci), nodes[ci].immutable)
            }
            StlFormula::And(cs) | StlFormula::Or(cs) => {
                let mut children = Vec::with_capacity(cs.len());
                for c in cs {
                    children.push(build(c, preds, nodes, defs, index)?);
                }
                let immutable = children.iter().all(|&ci| nodes[ci].immutable);
                let kind = if matches!(phi, StlFormula::And(_)) {
                    NodeKind::And(children)
                } else {
                    NodeKind::Or(children)
                };
                (kind, immutable)
            }
            StlFormula::Always { lo, hi, child } | StlFormula::Eventually { lo, hi, child } => {
                debug_assert!(lo <= hi);
                let ci = build(child, preds, nodes, defs, index)?;
                let op = if matches!(phi, StlFormula::Always { .. }) {
                    TemporalOp::Always
                } else {
                    TemporalOp::Eventually
                };
                (
                    NodeKind::Temporal {
                        op,
                        lo: *lo,
                        hi: *hi,
                        child: ci,
                    },
                    false,
                )
            }
        };
        nodes.push(PlanNode {
            kind,
            immutable,
            max_t: 0,
        });
        Ok(nodes.len() - 1)
    }

    let mut nodes = Vec::new();
    let mut defs = Vec::new();
    let mut index = BTreeMap::new();
    build(phi, preds, &mut nodes, &mut defs, &mut index)?;

    // Parents precede children in reverse postorder, so one backward sweep
    // pushes required evaluation times down the tree.
    for i in (0..nodes.len()).rev() {
        let m = nodes[i].max_t;
        match &nodes[i].kind {
            NodeKind::True | NodeKind::Pred(_) => {}
            NodeKind::Not(c) => {
                let c = *c;
                nodes[c].max_t = nodes[c].max_t.max(m);
            }
            NodeKind::And(cs) | NodeKind::Or(cs) => {
                for c in cs.clone() {
                    nodes[c].max_t = nodes[c].max_t.max(m);
                }
            }
            NodeKind::Temporal { hi, child, .. } => {
                let (hi, c) = (*hi, *child);
                nodes[c].max_t = nodes[c].max_t.max(m + hi);
            }
        }
    }

    Ok(MonitorPlan {
        nodes,
        preds: defs,
        horizon: phi.horizon(),
    })
}

/// Running aggregate of the observed part of one temporal window for one
/// interval endpoint. Appending an observation is O(1); the window value for
/// any fill (`-1` or `+1`) of the unobserved remainder is recovered in O(1).
#[derive(Clone, Copy, Debug, Default)]
struct RawStream {
    n_obs: u32,
    /// Observed values on the absorbing side of the operator: `<= 0` for
    /// Always, `>= 0` for Eventually.
    n_absorbing: u32,
    /// Always: sum of `ln(1 + v)` over observed `v > 0`.
    /// Eventually: sum of `ln(1 - v)` over observed `v < 0`.
    log_accum: f64,
    /// Always: sum of `min(v, 0)`; Eventually: sum of `max(v, 0)`.
    lin_accum: f64,
}

impl RawStream {
    fn push(&mut self, op: TemporalOp, v: f64) {
        self.n_obs += 1;
        match op {
            TemporalOp::Always => {
                if v > 0.0 {
                    self.log_accum += v.ln_1p();
                } else {
                    self.n_absorbing += 1;
                    self.lin_accum += v;
                }
            }
            TemporalOp::Eventually => {
                if v < 0.0 {
                    self.log_accum += (-v).ln_1p();
                } else {
                    self.n_absorbing += 1;
                    self.lin_accum += v;
                }
            }
        }
    }

    /// Window aggregate with `n_total - n_obs` unobserved slots completed by
    /// `fill` (`-1.0` for the lower endpoint, `+1.0` for the upper).
    fn recover(&self, op: TemporalOp, n_total: usize, fill: f64) -> f64 {
        let n = n_total as f64;
        let unobserved = (n_total as u32 - self.n_obs) as f64;
        match op {
            TemporalOp::Always => {
                if fill < 0.0 {
                    if unobserved > 0.0 {
                        (self.lin_accum - unobserved) / n
                    } else if self.n_absorbing > 0 {
                        self.lin_accum / n
                    } else {
                        (self.log_accum / n).exp_m1()
                    }
                } else if self.n_absorbing > 0 {
                    self.lin_accum / n
                } else {
                    ((self.log_accum + unobserved * LN_2) / n).exp_m1()
                }
            }
            TemporalOp::Eventually => {
                if fill > 0.0 {
                    if unobserved > 0.0 {
                        (self.lin_accum + unobserved) / n
                    } else if self.n_absorbing > 0 {
                        self.lin_accum / n
                    } else {
                        -(self.log_accum / n).exp_m1()
                    }
                } else if self.n_absorbing > 0 {
                    self.lin_accum / n
                } else {
                    -((self.log_accum + unobserved * LN_2) / n).exp_m1()
                }
            }
        }
    }
}

/// Lower/upper endpoint streams of one window. The streams are maintained
/// separately even though an immutable child observes points (lo == hi), so
/// the layout does not depend on that coincidence.
#[derive(Clone, Copy, Debug, Default)]
struct RawPair {
    lo: RawStream,
    hi: RawStream,
}

/// Incremental robustness-interval monitor over a growing signal prefix.
///
/// The monitor is persistent: [`extend`](IntervalMonitor::extend) returns a
/// new monitor and leaves `self` untouched, so a search can branch one prefix
/// into many successors. Cloning copies the interval tables, whose total size
/// is bounded by (number of subformulas) x (horizon + 1).
#[derive(Clone, Debug)]
pub struct IntervalMonitor {
    plan: Arc<MonitorPlan>,
    mode: SemanticsMode,
    /// Per node: intervals for evaluation times `0..=max_t`.
    rows: Vec<Vec<Interval>>,
    /// Per temporal node with an immutable child: running window aggregates.
    raw: Vec<Option<Vec<RawPair>>>,
    prefix_len: usize,
    reaggregations: u64,
}

impl IntervalMonitor {
    /// Builds a monitor for `phi` and observes the initial state `x0`
    /// (prefix length 1 afterwards).
    pub fn new(
        phi: &StlFormula,
        preds: &PredicateTable,
        mode: SemanticsMode,
        x0: Vec2,
    ) -> Result<Self, RobustnessError> {
        let plan = Arc::new(compile(phi, preds)?);
        let rows = plan
            .nodes
            .iter()
            .map(|n| vec![Interval::UNKNOWN; n.max_t + 1])
            .collect();
        let raw = plan
            .nodes
            .iter()
            .map(|n| match &n.kind {
                NodeKind::Temporal { child, .. } if plan.nodes[*child].immutable => {
                    Some(vec![RawPair::default(); n.max_t + 1])
                }
                _ => None,
            })
            .collect();
        let mut monitor = IntervalMonitor {
            plan,
            mode,
            rows,
            raw,
            prefix_len: 0,
            reaggregations: 0,
        };
        monitor.push(x0);
        Ok(monitor)
    }

    /// Returns a new monitor whose prefix is `self`'s prefix extended by one
    /// state. `self` is not modified.
    pub fn extend(&self, state: Vec2) -> Self {
        let mut next = self.clone();
        next.push(state);
        next
    }

    /// Robustness interval of the whole formula at time 0 given the prefix
    /// observed so far.
    pub fn interval(&self) -> Interval {
        let root = self.plan.nodes.len() - 1;
        self.rows[root][0]
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn horizon(&self) -> usize {
        self.plan.horizon
    }

    /// Number of full-window re-aggregations performed so far. Stays 0 for
    /// formulas in which every temporal operator has an immutable child.
    pub fn reaggregations(&self) -> u64 {
        self.reaggregations
    }

    fn push(&mut self, state: Vec2) {
        let t_new = self.prefix_len;
        for idx in 0..self.plan.nodes.len() {
            let (max_t, immutable) = {
                let n = &self.plan.nodes[idx];
                (n.max_t, n.immutable)
            };
            match &self.plan.nodes[idx].kind {
                NodeKind::True => {
                    if t_new <= max_t {
                        self.rows[idx][t_new] = Interval::point(1.0);
                    }
                }
                NodeKind::Pred(pi) => {
                    if t_new <= max_t {
                        let def = &self.plan.preds[*pi];
                        let v = match self.mode {
                            SemanticsMode::Sound => eval_predicate_normalized(def, state),
                            SemanticsMode::Heuristic => eval_predicate_raw(def, state),
                        };
                        self.rows[idx][t_new] = Interval::point(v);
                    }
                }
                NodeKind::Not(c) => {
                    let c = *c;
                    if immutable {
                        if t_new <= max_t {
                            self.rows[idx][t_new] = self.rows[c][t_new].negated();
                        }
                    } else {
                        for t in 0..=self.mutable_bool_limit(max_t, t_new) {
                            self.rows[idx][t] = self.rows[c][t].negated();
                        }
                    }
                }
                NodeKind::And(_) | NodeKind::Or(_) => {
                    if immutable {
                        if t_new <= max_t {
                            self.rows[idx][t_new] = self.combine_bool(idx, t_new);
                        }
                    } else {
                        for t in 0..=self.mutable_bool_limit(max_t, t_new) {
                            self.rows[idx][t] = self.combine_bool(idx, t);
                        }
                    }
                }
                NodeKind::Temporal { op, lo, hi, child } => {
                    let (op, a, b, child) = (*op, *lo, *hi, *child);
                    if self.plan.nodes[child].immutable {
                        // Windows that gained the new observation: t + a <= t_new <= t + b.
                        if t_new >= a {
                            let from = t_new.saturating_sub(b);
                            let to = max_t.min(t_new - a);
                            for t in from..=to {
                                let cv = self.rows[child][t_new];
                                let pair = &mut self.raw[idx].as_mut().expect("raw allocated")[t];
                                pair.lo.push(op, cv.lo);
                                pair.hi.push(op, cv.hi);
                                let n_total = b - a + 1;
                                let lo_v = pair.lo.recover(op, n_total, -1.0);
                                let hi_v = pair.hi.recover(op, n_total, 1.0);
                                self.rows[idx][t] = Interval::new(lo_v, hi_v);
                            }
                        }
                        if self.mode == SemanticsMode::Heuristic {
                            for t in 0..=max_t {
                                if t + a > t_new {
                                    self.rows[idx][t] =
                                        self.look_ahead(op, a, b, child, t, t_new);
                                }
                            }
                        }
                    } else {
                        match self.mode {
                            SemanticsMode::Sound => {
                                for t in 0..=max_t.min(t_new) {
                                    if t + a <= t_new {
                                        self.rows[idx][t] =
                                            self.reaggregate(op, a, b, child, t, t_new);
                                        self.reaggregations += 1;
                                    }
                                }
                            }
                            SemanticsMode::Heuristic => {
                                for t in 0..=max_t {
                                    self.rows[idx][t] = if t + a <= t_new {
                                        self.reaggregations += 1;
                                        self.reaggregate(op, a, b, child, t, t_new)
                                    } else {
                                        self.look_ahead(op, a, b, child, t, t_new)
                                    };
                                }
                            }
                        }
                    }
                }
            }
        }
        self.prefix_len = t_new + 1;
    }

    /// Largest evaluation time a boolean node over mutable children must
    /// refresh after observing sample `t_new`.
    fn mutable_bool_limit(&self, max_t: usize, t_new: usize) -> usize {
        match self.mode {
            // At times beyond the prefix end every descendant is still fully
            // unobserved, so entries keep their vacuous value.
            SemanticsMode::Sound => max_t.min(t_new),
            // Look-ahead gives temporal descendants fresh values at every
            // time, so refresh the whole table.
            SemanticsMode::Heuristic => max_t,
        }
    }

    fn combine_bool(&self, idx: usize, t: usize) -> Interval {
        match &self.plan.nodes[idx].kind {
            NodeKind::And(cs) => Interval::new(
                agm_and_iter(cs.iter().map(|&c| self.rows[c][t].lo)),
                agm_and_iter(cs.iter().map(|&c| self.rows[c][t].hi)),
            ),
            NodeKind::Or(cs) => Interval::new(
                agm_or_iter(cs.iter().map(|&c| self.rows[c][t].lo)),
                agm_or_iter(cs.iter().map(|&c| self.rows[c][t].hi)),
            ),
            _ => unreachable!("combine_bool on non-boolean node"),
        }
    }

    /// Full-window endpoint aggregation of stored child intervals, with
    /// unobserved slots completed by `-1`/`+1`.
    fn reaggregate(
        &self,
        op: TemporalOp,
        a: usize,
        b: usize,
        child: usize,
        t: usize,
        t_prime: usize,
    ) -> Interval {
        let lows = (t + a..=t + b).map(|tau| {
            if tau <= t_prime {
                self.rows[child][tau].lo
            } else {
                -1.0
            }
        });
        let highs = (t + a..=t + b).map(|tau| {
            if tau <= t_prime {
                self.rows[child][tau].hi
            } else {
                1.0
            }
        });
        match op {
            TemporalOp::Always => Interval::new(agm_and_iter(lows), agm_and_iter(highs)),
            TemporalOp::Eventually => Interval::new(agm_or_iter(lows), agm_or_iter(highs)),
        }
    }

    /// Heuristic value of a temporal node at time `t` while the prefix has
    /// not reached the window start `t + a`: the child's current endpoints
    /// are discounted toward the unknown bounds by `gamma = 1/(gap + 1)` and
    /// aggregated against a fully-unknown window.
    fn look_ahead(
        &self,
        op: TemporalOp,
        a: usize,
        b: usize,
        child: usize,
        t: usize,
        t_prime: usize,
    ) -> Interval {
        debug_assert!(t + a > t_prime);
        let gamma = 1.0 / ((t + a - t_prime) as f64 + 1.0);
        let cur = self.rows[child][t_prime];
        let disc_lo = gamma * cur.lo - (1.0 - gamma);
        let disc_hi = gamma * cur.hi + (1.0 - gamma);
        let fills = b - a;
        let lows = once(disc_lo).chain(repeat_n(-1.0, fills));
        let highs = once(disc_hi).chain(repeat_n(1.0, fills));
        match op {
            TemporalOp::Always => Interval::new(agm_and_iter(lows), agm_and_iter(highs)),
            TemporalOp::Eventually => Interval::new(agm_or_iter(lows), agm_or_iter(highs)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stl::StlFormula as F;
    use approx::assert_abs_diff_eq;

    fn table(defs: Vec<(&str, Vec2, f64)>) -> PredicateTable {
        PredicateTable::from_defs(
            defs.into_iter()
                .map(|(id, c, r)| PredicateDef::new(id, c, r).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn unit_pred() -> PredicateTable {
        table(vec![("p", Vec2::ZERO, 1.0)])
    }

    /// x-axis position with normalized robustness `v` against `p`.
    fn pos_with_value(v: f64) -> Vec2 {
        Vec2::new(((1.0 - v) / (1.0 + v)).sqrt(), 0.0)
    }

    #[test]
    fn init_with_unopened_window_is_vacuous() {
        let phi = F::always(1, 2, F::pred("p"));
        let m = IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, Vec2::ZERO).unwrap();
        assert_eq!(m.interval(), Interval::UNKNOWN);
        assert_eq!(m.prefix_len(), 1);
    }

    #[test]
    fn init_of_state_formula_is_a_point() {
        let phi = F::pred("p");
        let m = IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, Vec2::ZERO).unwrap();
        assert_eq!(m.interval(), Interval::point(1.0));
    }

    #[test]
    fn init_eventually_bounds_match_endpoint_completion() {
        // F[0,3] p with initial value -0.2: the upper endpoint completes the
        // window with +1, the lower with -1.
        let phi = F::eventually(0, 3, F::pred("p"));
        let x0 = pos_with_value(-0.2);
        let m = IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, x0).unwrap();
        let iv = m.interval();
        let expected_hi = (0.0 + 1.0 + 1.0 + 1.0) / 4.0;
        let expected_lo = -(((1.2f64.ln() + 3.0 * LN_2) / 4.0).exp_m1());
        assert_abs_diff_eq!(iv.hi, expected_hi, epsilon = 1e-9);
        assert_abs_diff_eq!(iv.lo, expected_lo, epsilon = 1e-9);
        assert!(iv.lo < 0.0 && iv.hi > 0.0);
    }

    #[test]
    fn interval_collapses_at_horizon_plus_one() {
        let phi = F::always(0, 1, F::pred("p"));
        let m0 =
            IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, pos_with_value(0.4))
                .unwrap();
        assert!(m0.interval().width() > 0.0);
        let m1 = m0.extend(pos_with_value(0.6));
        let iv = m1.interval();
        let expected = (1.4f64 * 1.6).sqrt() - 1.0;
        assert!(iv.width() <= 1e-12);
        assert_abs_diff_eq!(iv.lo, expected, epsilon = 1e-9);
        assert!((expected - 0.496663).abs() < 1e-6);
    }

    #[test]
    fn extend_does_not_mutate_the_source_monitor() {
        let phi = F::eventually(0, 2, F::pred("p"));
        let m0 =
            IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, pos_with_value(-0.5))
                .unwrap();
        let before = m0.interval();
        let _branch_a = m0.extend(pos_with_value(0.9));
        let _branch_b = m0.extend(pos_with_value(-0.9));
        assert_eq!(m0.interval(), before);
        assert_eq!(m0.prefix_len(), 1);
    }

    #[test]
    fn prefix_beyond_horizon_keeps_converged_value() {
        let phi = F::eventually(0, 1, F::pred("p"));
        let mut m =
            IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, pos_with_value(0.3))
                .unwrap();
        m = m.extend(pos_with_value(-0.2));
        let converged = m.interval();
        assert!(converged.width() <= 1e-12);
        for v in [0.9, -0.9, 0.0] {
            m = m.extend(pos_with_value(v));
            assert_eq!(m.interval(), converged);
        }
    }

    #[test]
    fn no_reaggregation_when_temporal_children_are_immutable() {
        let preds = table(vec![
            ("m1", Vec2::new(2.0, 0.0), 1.0),
            ("m2", Vec2::new(-2.0, 0.0), 1.0),
            ("m3", Vec2::new(0.0, 2.0), 1.0),
        ]);
        let phi = F::and(vec![
            F::eventually(0, 4, F::pred("m1")),
            F::eventually(2, 8, F::pred("m2")),
            F::always(6, 10, F::not(F::pred("m3"))),
        ]);
        let mut m = IntervalMonitor::new(&phi, &preds, SemanticsMode::Sound, Vec2::ZERO).unwrap();
        for i in 0..15 {
            m = m.extend(Vec2::new(i as f64 * 0.3, 0.1));
        }
        assert_eq!(m.reaggregations(), 0);
    }

    #[test]
    fn nested_temporal_operators_do_reaggregate() {
        let phi = F::always(0, 2, F::eventually(0, 2, F::pred("p")));
        let mut m =
            IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, Vec2::ZERO).unwrap();
        for _ in 0..4 {
            m = m.extend(Vec2::new(0.5, 0.0));
        }
        assert!(m.reaggregations() > 0);
    }

    #[test]
    fn unknown_predicate_fails_construction() {
        let phi = F::pred("nope");
        let err = match IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Sound, Vec2::ZERO)
        {
            Err(e) => e,
            Ok(_) => panic!("construction should fail"),
        };
        assert_eq!(err, RobustnessError::UnknownPredicate("nope".into()));
    }

    #[test]
    fn heuristic_mode_uses_raw_predicates() {
        let preds = table(vec![("big", Vec2::ZERO, 2.0)]);
        let phi = F::pred("big");
        let m = IntervalMonitor::new(&phi, &preds, SemanticsMode::Heuristic, Vec2::ZERO).unwrap();
        // r^2 - d^2 = 4 at the center: deliberately outside [-1, 1].
        assert_eq!(m.interval(), Interval::point(4.0));
    }

    #[test]
    fn heuristic_look_ahead_discounts_toward_unknown() {
        // G[2,3] p, one step before the window opens (t' = 1): gamma = 1/2.
        let phi = F::always(2, 3, F::pred("p"));
        let m0 = IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Heuristic, Vec2::ZERO)
            .unwrap();
        // Raw value 0.5 at distance sqrt(0.5) from the unit-disk center.
        let s1 = Vec2::new(0.5f64.sqrt(), 0.0);
        let m1 = m0.extend(s1);
        let raw: f64 = 1.0 - 0.5;
        let disc_lo = 0.5 * raw - 0.5;
        let disc_hi = 0.5 * raw + 0.5;
        let expected_lo = (disc_lo.min(0.0) + -1.0) / 2.0;
        let expected_hi = ((disc_hi.ln_1p() + LN_2) / 2.0).exp_m1();
        let iv = m1.interval();
        assert_abs_diff_eq!(iv.lo, expected_lo, epsilon = 1e-9);
        assert_abs_diff_eq!(iv.hi, expected_hi, epsilon = 1e-9);
    }

    #[test]
    fn heuristic_matches_sound_recursion_once_window_opens() {
        // For a formula whose window starts at 0, look-ahead never applies;
        // with predicates on the unit circle... raw == normalized only at 0,
        // so instead check structural agreement: the heuristic interval of a
        // fully observed window is a point equal to the raw aggregation.
        let phi = F::always(0, 1, F::pred("p"));
        let s0 = Vec2::new(0.5, 0.0);
        let s1 = Vec2::new(0.0, 0.5);
        let m = IntervalMonitor::new(&phi, &unit_pred(), SemanticsMode::Heuristic, s0)
            .unwrap()
            .extend(s1);
        let raw0: f64 = 1.0 - 0.25;
        let raw1: f64 = 1.0 - 0.25;
        let expected = ((raw0.ln_1p() + raw1.ln_1p()) / 2.0).exp_m1();
        let iv = m.interval();
        assert!(iv.width() <= 1e-12);
        assert_abs_diff_eq!(iv.lo, expected, epsilon = 1e-9);
    }
}
