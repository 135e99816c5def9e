//! Proximal Newton-type methods for minimizing `f(x) = g(x) + h(x)` with `g`
//! smooth convex and `h` convex with an inexpensive proximal mapping.
//!
//! ```
//! use proxnewton::problems::{make_lasso, SyntheticSpec};
//! use proxnewton::{solve, Method, SolverOptions, SubproblemPolicy};
//!
//! let lasso = make_lasso(&SyntheticSpec::lasso(7, 20, 60), 0.1).unwrap();
//! let opts = SolverOptions::new(Method::ProxNewton, SubproblemPolicy::exact());
//! let report = solve(&lasso.composite(), &opts).unwrap();
//! assert!(report.norm_gf_final <= 1e-8);
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod curvature;
pub mod driver;
pub mod error;
pub mod io;
pub mod linesearch;
pub mod penalties;
pub mod problem;
pub mod problems;
pub mod subproblem;

pub use curvature::{CurvatureKind, CurvatureModel, SecantPair};
pub use driver::{
    run_fista, run_sparsa, solve, Diagnostics, IterateRecord, Method, SolveReport, SolveStatus, SolverOptions,
};
pub use error::{Error, Result};
pub use linesearch::LineSearchConfig;
pub use problem::{CompositeProblem, EvalCounts, LinearOperator, Matrix, NonsmoothOracle, SmoothOracle, Vector};
pub use subproblem::{InnerOptions, InnerSolver, SubproblemPolicy};
