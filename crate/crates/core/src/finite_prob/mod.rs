//! Finite probability spaces over causally ordered, typed variables.
//!
//! A [`CausalModel`] is a list of conditional tables `P(X_t | X_<t)`; the joint
//! is their product. Three belief updates are supported:
//!
//! - logical (`X_t = x`): [`CausalModel::condition`], evidence flows to past and future;
//! - causal (`X_t <- x`): [`CausalModel::intervene`], the past is left untouched;
//! - unobserved: no update.
//!
//! Tables are dense over all histories, so everything here is exponential in
//! the number of variables. That is fine for the desk-scale instances this
//! crate targets.

mod alphabet;
mod belief;
mod model;

pub use alphabet::{Alphabet, History, IoType, VariableSpec, VpMode};
pub use belief::{Observation, UpdateKind};
pub use model::{CausalModel, DistTable, SequenceLayout, MAX_SEQUENCES};
