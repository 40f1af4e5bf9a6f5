//! Maximal reliability of finite controlled Markov systems.
//!
//! A system moves between finitely many states under a chosen action per state and fails on its
//! first visit to a designated failed set `B`. For a stationary policy `g` the failure probability
//! from state `i` is `q_i^g = P_i^g(τ_B < ∞)`, and the reliability is `1 - q_i^g`. This crate finds
//! a stationary policy that minimizes every `q_i` at once:
//!
//! 1. [`absorbing::compute_largest_absorbing`] peels off the states that cannot avoid `B` and
//!    returns the largest set `F*` that some policy keeps the chain in forever, the transient
//!    remainder `G*`, and the actions that keep `F*` closed.
//! 2. [`solver::solve`] runs policy iteration over the policies using those actions, evaluating
//!    each by a linear solve on `G*`.
//!
//! Everything is generic over [`Scalar`], with `f64` and exact [`BigRational`] arithmetic.
//! The [`oracle`] module holds independent checks: value iteration, exhaustive policy search and
//! Monte-Carlo simulation.
//!
//! ```
//! use maxrel::{catalog, solve, SolveOptions, StateId};
//!
//! let model = catalog::keep_or_fail::<f64>();
//! let report = solve(&model, &SolveOptions::default()).unwrap();
//! assert_eq!(report.q_star.get(StateId(1)), &0.0);
//! ```

pub mod absorbing;
pub mod catalog;
pub mod error;
pub mod evaluate;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod random;
pub mod report;
pub mod scalar;
pub mod solver;

pub use num_rational::BigRational;

pub use absorbing::{
    absorbing_set_of_policy, compute_largest_absorbing, enumerate_restricted_policies,
    membership_test, AbsorbingAnalysis, PolicyAbsorption,
};
pub use error::{Error, Result};
pub use evaluate::{
    assemble_failure_vector, build_reduced_system, evaluate_in_class, evaluate_policy_pes,
    solve_reduced, EvalOptions, FailureVector, ReducedSystem,
};
pub use model::{
    validate_model, ActionId, AnyModel, ModelBuilder, ModelSpec, PolicyIter, RawModel, StateId,
    StateSet, StationaryPolicy,
};
pub use oracle::{
    enumerate_and_minimize, simulate_survival, value_iterate_oe, OracleOptions, OracleResult,
    SimulationEstimate,
};
pub use scalar::{ArithmeticMode, Scalar};
pub use solver::{
    check_improved_oe, check_plain_oe, solve, SolveOptions, SolveReport, Termination,
};
