use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Vec2;

/// A discrete-time STL formula over named circular-region predicates.
///
/// Structural invariants (maintained by the parser and the provided
/// constructors): `And`/`Or` hold at least two children, and temporal bounds
/// satisfy `lo <= hi`.
#[derive(Clone, Debug, PartialEq)]
pub enum StlFormula {
    /// The formula that is always satisfied.
    True,
    /// Membership in the circular region registered under this identifier.
    Predicate(String),
    /// Logical negation.
    Not(Box<StlFormula>),
    /// N-ary conjunction (two or more children).
    And(Vec<StlFormula>),
    /// N-ary disjunction (two or more children).
    Or(Vec<StlFormula>),
    /// `G[lo,hi] child`: the child holds at every step of the window.
    Always {
        lo: usize,
        hi: usize,
        child: Box<StlFormula>,
    },
    /// `F[lo,hi] child`: the child holds at some step of the window.
    Eventually {
        lo: usize,
        hi: usize,
        child: Box<StlFormula>,
    },
}

impl StlFormula {
    pub fn pred(id: &str) -> StlFormula {
        StlFormula::Predicate(id.to_string())
    }

    // A constructor like `and`/`or`/`always`, not a negation of `self`.
    #[allow(clippy::should_implement_trait)]
    pub fn not(child: StlFormula) -> StlFormula {
        StlFormula::Not(Box::new(child))
    }

    /// Builds a conjunction; panics if fewer than two children are supplied.
    pub fn and(children: Vec<StlFormula>) -> StlFormula {
        assert!(children.len() >= 2, "And requires at least two children");
        StlFormula::And(children)
    }

    /// Builds a disjunction; panics if fewer than two children are supplied.
    pub fn or(children: Vec<StlFormula>) -> StlFormula {
        assert!(children.len() >= 2, "Or requires at least two children");
        StlFormula::Or(children)
    }

    /// Builds `G[lo,hi] child`; panics if `lo > hi`.
    pub fn always(lo: usize, hi: usize, child: StlFormula) -> StlFormula {
        assert!(lo <= hi, "temporal bounds must satisfy lo <= hi");
        StlFormula::Always {
            lo,
            hi,
            child: Box::new(child),
        }
    }

    /// Builds `F[lo,hi] child`; panics if `lo > hi`.
    pub fn eventually(lo: usize, hi: usize, child: StlFormula) -> StlFormula {
        assert!(lo <= hi, "temporal bounds must satisfy lo <= hi");
        StlFormula::Eventually {
            lo,
            hi,
            child: Box::new(child),
        }
    }

    /// Number of future steps (beyond the evaluation instant) the formula can
    /// depend on. A signal prefix of `horizon() + 1` samples fully determines
    /// the formula's value at time 0.
    pub fn horizon(&self) -> usize {
        match self {
            StlFormula::True | StlFormula::Predicate(_) => 0,
            StlFormula::Not(c) => c.horizon(),
            StlFormula::And(cs) | StlFormula::Or(cs) => {
                cs.iter().map(|c| c.horizon()).max().unwrap_or(0)
            }
            StlFormula::Always { hi, child, .. } | StlFormula::Eventually { hi, child, .. } => {
                hi + child.horizon()
            }
        }
    }

    /// True when the formula contains no temporal operator, i.e. its value at
    /// time `t` depends only on the sample at `t` and can never be revised by
    /// later observations. Implies `horizon() == 0`; the converse fails only
    /// for degenerate zero-width windows such as `F[0,0] p`.
    pub fn is_immutable(&self) -> bool {
        match self {
            StlFormula::True | StlFormula::Predicate(_) => true,
            StlFormula::Not(c) => c.is_immutable(),
            StlFormula::And(cs) | StlFormula::Or(cs) => cs.iter().all(|c| c.is_immutable()),
            StlFormula::Always { .. } | StlFormula::Eventually { .. } => false,
        }
    }

    /// All subformula nodes in post order: children strictly before parents,
    /// each tree node exactly once. The last element is `self`.
    pub fn subformulae_postorder(&self) -> Vec<&StlFormula> {
        let mut out = Vec::new();
        self.collect_postorder(&mut out);
        out
    }

    fn collect_postorder<'a>(&'a self, out: &mut Vec<&'a StlFormula>) {
        match self {
            StlFormula::True | StlFormula::Predicate(_) => {}
            StlFormula::Not(c) => c.collect_postorder(out),
            StlFormula::And(cs) | StlFormula::Or(cs) => {
                for c in cs {
                    c.collect_postorder(out);
                }
            }
            StlFormula::Always { child, .. } | StlFormula::Eventually { child, .. } => {
                child.collect_postorder(out)
            }
        }
        out.push(self);
    }

    /// Identifiers of all predicates referenced by the formula, deduplicated.
    pub fn predicate_ids(&self) -> Vec<&str> {
        let mut ids = Vec::new();
        for node in self.subformulae_postorder() {
            if let StlFormula::Predicate(id) = node {
                if !ids.contains(&id.as_str()) {
                    ids.push(id.as_str());
                }
            }
        }
        ids
    }

    fn precedence(&self) -> u8 {
        match self {
            StlFormula::Or(_) => 0,
            StlFormula::And(_) => 1,
            _ => 2,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            StlFormula::True => write!(f, "TRUE")?,
            StlFormula::Predicate(id) => write!(f, "{id}")?,
            StlFormula::Not(c) => {
                write!(f, "!")?;
                c.fmt_prec(f, 2)?;
            }
            StlFormula::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " & ")?;
                    }
                    c.fmt_prec(f, 2)?;
                }
            }
            StlFormula::Or(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        write!(f, " | ")?;
                    }
                    c.fmt_prec(f, 1)?;
                }
            }
            StlFormula::Always { lo, hi, child } => {
                write!(f, "G[{lo},{hi}] ")?;
                child.fmt_prec(f, 2)?;
            }
            StlFormula::Eventually { lo, hi, child } => {
                write!(f, "F[{lo},{hi}] ")?;
                child.fmt_prec(f, 2)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl fmt::Display for StlFormula {
    /// Renders the formula in the concrete syntax accepted by
    /// [`parse_formula`](crate::stl::parse_formula); parsing the output yields
    /// a structurally identical formula.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PredicateError {
    #[error("predicate {id}: radius must be strictly positive, got {radius}")]
    NonPositiveRadius { id: String, radius: f64 },
    #[error("predicate {0} is already defined")]
    Duplicate(String),
}

/// A circular region predicate: satisfied where the agent position lies
/// strictly inside the disk of the given radius around the center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredicateDef {
    pub id: String,
    pub center: Vec2,
    pub radius: f64,
}

impl PredicateDef {
    pub fn new(id: &str, center: Vec2, radius: f64) -> Result<Self, PredicateError> {
        if !(radius > 0.0) {
            return Err(PredicateError::NonPositiveRadius {
                id: id.to_string(),
                radius,
            });
        }
        Ok(PredicateDef {
            id: id.to_string(),
            center,
            radius,
        })
    }
}

/// Named predicate definitions a formula is evaluated against.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PredicateTable {
    preds: BTreeMap<String, PredicateDef>,
}

impl PredicateTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from definitions; ids must be unique.
    pub fn from_defs(defs: Vec<PredicateDef>) -> Result<Self, PredicateError> {
        let mut table = Self::new();
        for def in defs {
            table.insert(def)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, def: PredicateDef) -> Result<(), PredicateError> {
        if self.preds.contains_key(&def.id) {
            return Err(PredicateError::Duplicate(def.id));
        }
        self.preds.insert(def.id.clone(), def);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&PredicateDef> {
        self.preds.get(id)
    }

    /// Definitions in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &PredicateDef> {
        self.preds.values()
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }
}
