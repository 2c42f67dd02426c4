//! Independent reference implementations used by the acceptance suite.
//!
//! Everything here is written directly from the mathematical definitions,
//! deliberately avoiding the library's own aggregation helpers, so agreement
//! between the two is meaningful evidence of correctness.

use rand::Rng;
use stlplan::reachgraph::ReachGraph;
use stlplan::stl::{PredicateDef, PredicateTable, StlFormula};
use stlplan::Vec2;

/// Conjunctive arithmetic–geometric-mean aggregation: the geometric mean of
/// `1 + v` shifted back when every argument is positive, otherwise the
/// arithmetic mean of the violations.
pub fn brute_agm_and(vals: &[f64]) -> f64 {
    assert!(!vals.is_empty());
    let m = vals.len() as f64;
    if vals.iter().all(|&v| v > 0.0) {
        vals.iter().map(|&v| 1.0 + v).product::<f64>().powf(1.0 / m) - 1.0
    } else {
        vals.iter().map(|&v| v.min(0.0)).sum::<f64>() / m
    }
}

/// Disjunctive dual of [`brute_agm_and`].
pub fn brute_agm_or(vals: &[f64]) -> f64 {
    assert!(!vals.is_empty());
    let m = vals.len() as f64;
    if vals.iter().all(|&v| v < 0.0) {
        1.0 - vals.iter().map(|&v| 1.0 - v).product::<f64>().powf(1.0 / m)
    } else {
        vals.iter().map(|&v| v.max(0.0)).sum::<f64>() / m
    }
}

/// Normalized circular-region predicate value in `[-1, 1]`.
pub fn brute_predicate(def: &PredicateDef, pos: Vec2) -> f64 {
    let dx = pos.x - def.center.x;
    let dy = pos.y - def.center.y;
    let d2 = dx * dx + dy * dy;
    let r2 = def.radius * def.radius;
    (r2 - d2) / (r2 + d2)
}

/// Plain recursive robustness over a complete signal.
pub fn brute_robustness(
    phi: &StlFormula,
    preds: &PredicateTable,
    signal: &[Vec2],
    t: usize,
) -> f64 {
    match phi {
        StlFormula::True => 1.0,
        StlFormula::Predicate(id) => brute_predicate(preds.get(id).expect("known id"), signal[t]),
        StlFormula::Not(c) => -brute_robustness(c, preds, signal, t),
        StlFormula::And(cs) => {
            let vals: Vec<f64> = cs
                .iter()
                .map(|c| brute_robustness(c, preds, signal, t))
                .collect();
            brute_agm_and(&vals)
        }
        StlFormula::Or(cs) => {
            let vals: Vec<f64> = cs
                .iter()
                .map(|c| brute_robustness(c, preds, signal, t))
                .collect();
            brute_agm_or(&vals)
        }
        StlFormula::Always { lo, hi, child } => {
            let vals: Vec<f64> = (t + lo..=t + hi)
                .map(|tau| brute_robustness(child, preds, signal, tau))
                .collect();
            brute_agm_and(&vals)
        }
        StlFormula::Eventually { lo, hi, child } => {
            let vals: Vec<f64> = (t + lo..=t + hi)
                .map(|tau| brute_robustness(child, preds, signal, tau))
                .collect();
            brute_agm_or(&vals)
        }
    }
}

/// Recursive robustness interval over completions of a prefix, mirroring the
/// published semantics: any subformula at a time not yet reached by the
/// prefix is the vacuous `[-1, 1]`; a temporal window is vacuous until its
/// start lies inside the prefix, and its unobserved slots enter the
/// aggregation as the worst/best case `-1`/`+1` of the child value. All
/// aggregations are monotone, so they apply endpoint-wise.
pub fn brute_interval(
    phi: &StlFormula,
    preds: &PredicateTable,
    prefix: &[Vec2],
    t: usize,
) -> (f64, f64) {
    let observed = prefix.len();
    match phi {
        StlFormula::True => {
            if t < observed {
                (1.0, 1.0)
            } else {
                (-1.0, 1.0)
            }
        }
        StlFormula::Predicate(id) => {
            if t < observed {
                let v = brute_predicate(preds.get(id).expect("known id"), prefix[t]);
                (v, v)
            } else {
                (-1.0, 1.0)
            }
        }
        StlFormula::Not(c) => {
            if t < observed {
                let (lo, hi) = brute_interval(c, preds, prefix, t);
                (-hi, -lo)
            } else {
                (-1.0, 1.0)
            }
        }
        StlFormula::And(cs) => {
            if t < observed {
                let parts: Vec<(f64, f64)> = cs
                    .iter()
                    .map(|c| brute_interval(c, preds, prefix, t))
                    .collect();
                endpointwise(&parts, brute_agm_and)
            } else {
                (-1.0, 1.0)
            }
        }
        StlFormula::Or(cs) => {
            if t < observed {
                let parts: Vec<(f64, f64)> = cs
                    .iter()
                    .map(|c| brute_interval(c, preds, prefix, t))
                    .collect();
                endpointwise(&parts, brute_agm_or)
            } else {
                (-1.0, 1.0)
            }
        }
        StlFormula::Always { lo, hi, child } => {
            if t + lo < observed {
                let parts: Vec<(f64, f64)> = (t + lo..=t + hi)
                    .map(|tau| brute_interval(child, preds, prefix, tau))
                    .collect();
                endpointwise(&parts, brute_agm_and)
            } else {
                (-1.0, 1.0)
            }
        }
        StlFormula::Eventually { lo, hi, child } => {
            if t + lo < observed {
                let parts: Vec<(f64, f64)> = (t + lo..=t + hi)
                    .map(|tau| brute_interval(child, preds, prefix, tau))
                    .collect();
                endpointwise(&parts, brute_agm_or)
            } else {
                (-1.0, 1.0)
            }
        }
    }
}

fn endpointwise(parts: &[(f64, f64)], agg: fn(&[f64]) -> f64) -> (f64, f64) {
    let los: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let his: Vec<f64> = parts.iter().map(|p| p.1).collect();
    (agg(&los), agg(&his))
}

/// True when every temporal operator in the formula has a temporal-free
/// child, i.e. the monitor's constant-time update path applies throughout.
pub fn temporal_children_immutable(phi: &StlFormula) -> bool {
    match phi {
        StlFormula::True | StlFormula::Predicate(_) => true,
        StlFormula::Not(c) => temporal_children_immutable(c),
        StlFormula::And(cs) | StlFormula::Or(cs) => cs.iter().all(temporal_children_immutable),
        StlFormula::Always { child, .. } | StlFormula::Eventually { child, .. } => {
            child.is_immutable() && temporal_children_immutable(child)
        }
    }
}

/// Random formula with the requested maximum depth; window bounds stay within
/// `lo <= max_lo`, `width <= max_width`.
pub fn random_formula<R: Rng>(
    rng: &mut R,
    max_depth: usize,
    ids: &[&str],
    max_lo: usize,
    max_width: usize,
) -> StlFormula {
    let leaf = |rng: &mut R| -> StlFormula {
        let id = ids[rng.gen_range(0..ids.len())].to_string();
        match rng.gen_range(0..10) {
            0 => StlFormula::True,
            1..=2 => StlFormula::not(StlFormula::Predicate(id)),
            _ => StlFormula::Predicate(id),
        }
    };
    if max_depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..100) {
        0..=19 => leaf(rng),
        20..=29 => StlFormula::not(random_formula(rng, max_depth - 1, ids, max_lo, max_width)),
        30..=49 => {
            let n = rng.gen_range(2..=3);
            StlFormula::and(
                (0..n)
                    .map(|_| random_formula(rng, max_depth - 1, ids, max_lo, max_width))
                    .collect(),
            )
        }
        50..=69 => {
            let n = rng.gen_range(2..=3);
            StlFormula::or(
                (0..n)
                    .map(|_| random_formula(rng, max_depth - 1, ids, max_lo, max_width))
                    .collect(),
            )
        }
        70..=84 => {
            let lo = rng.gen_range(0..=max_lo);
            let hi = lo + rng.gen_range(0..=max_width);
            StlFormula::always(lo, hi, random_formula(rng, max_depth - 1, ids, max_lo, max_width))
        }
        _ => {
            let lo = rng.gen_range(0..=max_lo);
            let hi = lo + rng.gen_range(0..=max_width);
            StlFormula::eventually(
                lo,
                hi,
                random_formula(rng, max_depth - 1, ids, max_lo, max_width),
            )
        }
    }
}

/// Random predicate table with the given ids, centers in `[0, span]^2`.
pub fn random_preds<R: Rng>(rng: &mut R, ids: &[&str], span: f64) -> PredicateTable {
    PredicateTable::from_defs(
        ids.iter()
            .map(|id| {
                PredicateDef::new(
                    id,
                    Vec2::new(rng.gen_range(0.0..span), rng.gen_range(0.0..span)),
                    rng.gen_range(1.0..4.0),
                )
                .expect("positive radius")
            })
            .collect(),
    )
    .expect("distinct ids")
}

/// Random points in `[0, span]^2`.
pub fn random_signal<R: Rng>(rng: &mut R, len: usize, span: f64) -> Vec<Vec2> {
    (0..len)
        .map(|_| Vec2::new(rng.gen_range(0.0..span), rng.gen_range(0.0..span)))
        .collect()
}

/// Ground truth for the planner: enumerates every waypoint sequence the
/// search could emit — first node drawn from the start anchor's neighbors
/// plus the anchor itself, each later node from the previous node's
/// neighbors plus a wait — and reports whether any complete sequence has
/// positive robustness.
pub fn exhaustive_plan_exists(
    graph: &ReachGraph,
    x0: Vec2,
    phi: &StlFormula,
    preds: &PredicateTable,
) -> bool {
    let horizon = phi.horizon();
    assert!(horizon >= 1, "enumeration assumes a temporal obligation");
    let anchor = (0..graph.len())
        .min_by(|&a, &b| {
            graph
                .node(a)
                .pos
                .dist(x0)
                .total_cmp(&graph.node(b).pos.dist(x0))
        })
        .expect("non-empty graph");
    let mut seeds: Vec<usize> = graph.neighbors(anchor).iter().map(|e| e.to).collect();
    seeds.push(anchor);
    seeds.sort_unstable();
    seeds.dedup();

    fn dfs(
        graph: &ReachGraph,
        phi: &StlFormula,
        preds: &PredicateTable,
        signal: &mut Vec<Vec2>,
        node: usize,
        remaining: usize,
    ) -> bool {
        if remaining == 0 {
            return brute_robustness(phi, preds, signal, 0) > 0.0;
        }
        let mut succ: Vec<usize> = graph.neighbors(node).iter().map(|e| e.to).collect();
        succ.push(node); // wait
        succ.sort_unstable();
        succ.dedup();
        for v in succ {
            signal.push(graph.node(v).pos);
            if dfs(graph, phi, preds, signal, v, remaining - 1) {
                return true;
            }
            signal.pop();
        }
        false
    }

    for seed in seeds {
        let mut signal = vec![x0, graph.node(seed).pos];
        if dfs(graph, phi, preds, &mut signal, seed, horizon - 1) {
            return true;
        }
    }
    false
}

/// Direct transcription of the piecewise subsampling definition: sample `i`
/// is `x[i*k]` while that index exists, else the final state; a trajectory of
/// `T` control steps yields `ceil(T/k) + 1` samples.
pub fn piecewise_subsample(traj: &[Vec2], k: usize) -> Vec<Vec2> {
    assert!(!traj.is_empty() && k >= 1);
    let t_end = traj.len() - 1;
    let n = t_end.div_ceil(k);
    (0..=n)
        .map(|i| if i * k <= t_end { traj[i * k] } else { traj[t_end] })
        .collect()
}
