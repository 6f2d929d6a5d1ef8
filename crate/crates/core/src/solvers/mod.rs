//! Control with a known environment, prediction of an unknown source, and
//! adaptive control of an unknown environment.

mod bcr;
mod control;
mod estimation;

pub use bcr::{BcrAgent, Hypothesis, SamplingMode};
pub use control::{
    dp_limit, solve_optimal_control, ControlProblem, DeterministicPolicy, Interaction, Policy, MAX_CONTROL_ENTRIES,
};
pub use estimation::{batch_posterior, predictive_update, EstimationProblem};
