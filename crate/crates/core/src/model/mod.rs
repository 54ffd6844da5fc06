//! Linear initial value problems `x' = A(t)·x + q(t)` with time-dependent
//! coefficients, the problem file format, and the built-in catalog.

mod catalog;
mod expr;
mod problem;

pub use catalog::{catalog, catalog_names, CATALOG};
pub use expr::{parse_expr, CoeffExpr, ParseError, Term};
pub use problem::{manufacture_q, parse_problem, Coefficient, ExactSolution, LinearOdeProblem, ModelError};
