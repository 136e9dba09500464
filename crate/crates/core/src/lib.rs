//! Outer approximation methods for strongly monotone variational
//! inequalities over polyhedra.
//!
//! `VI(F, C)` asks for `x* ∈ C` with `⟨F x*, z − x*⟩ ≥ 0` for all `z ∈ C`,
//! where `C = ⋂ Cᵢ` is a finite intersection of half-spaces and `F` is
//! Lipschitz and strongly monotone. Each step replaces the projection onto
//! `C` by a single projection onto a half-space built from a cutter `T_k`
//! assembled from the elementary projections `P_{Cᵢ}`.
//!
//! ```
//! use outer_approx::{generate_problem, solve, MethodConfig};
//!
//! let problem = generate_problem(0, 5, 10).unwrap();
//! let trace = solve(&problem, &MethodConfig::cyclic(), 500, 50).unwrap();
//! assert_eq!(trace.last().k, 500);
//! ```

pub mod bench;
pub mod controls;
pub mod error;
pub mod operators;
pub mod problem;
pub mod sets;
pub mod solvers;
pub mod trace;
pub mod vector;
pub mod verify;

pub use bench::{generate_problem, run_experiment, ExperimentConfig};
pub use error::{Error, Result};
pub use operators::Operator;
pub use problem::{Field, MonotoneMap, ViProblem};
pub use sets::{HalfSpace, Polyhedron};
pub use solvers::{solve, MethodConfig, OperatorFamily, Scheme, Solver};
pub use trace::RunTrace;
pub use vector::Vector;
