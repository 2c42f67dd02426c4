//! Signal temporal logic formulas: AST, concrete syntax, and static analysis.

mod ast;
mod parser;

pub use ast::{PredicateDef, PredicateError, PredicateTable, StlFormula};
pub use parser::{parse_formula, ParseError};
