//! Bounded-rational decision making over finite spaces.
//!
//! Utilities and probabilities are two views of the same object, linked by a
//! temperature `alpha`: `U(x) = alpha * log2 P(x) + beta`. Building on that
//! conversion the crate provides
//!
//! - [`finite_prob`]: causal models over typed variables with logical and causal updates;
//! - [`conjugate`], [`transform`]: the single-variable conversions and the control/estimation trade-off;
//! - [`gvp`]: the sequence-level variational problem and an exact solver;
//! - [`solvers`]: soft optimal control, sequence prediction and the Bayesian control rule;
//! - [`envs`]: bandits, Markov decision problems and the interaction loop;
//! - [`oracle`], [`verify`]: brute-force references and the seeded invariant suites.
//!
//! Logarithms are base 2 throughout, so information is measured in bits.

pub mod conjugate;
pub mod envs;
pub mod error;
pub mod finite_prob;
pub mod gvp;
pub mod numeric;
pub mod oracle;
pub mod solvers;
pub mod transform;
pub mod verify;

pub use conjugate::{free_utility, measure_from_utility, utility_from_measure, verify_conjugacy, Temperature, UtilityVector};
pub use error::{Error, Result};
pub use finite_prob::{Alphabet, CausalModel, DistTable, History, IoType, Observation, UpdateKind, VariableSpec, VpMode};
pub use gvp::{gvp_objective, gvp_solve, GvpProblem, UtilityTable};
pub use solvers::{
    dp_limit, predictive_update, solve_optimal_control, BcrAgent, ControlProblem, EstimationProblem, Hypothesis, Policy,
    SamplingMode,
};
pub use transform::{control_solution, estimation_solution, free_utility_difference, TransformProblem};
