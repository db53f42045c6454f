//! Explicit-state distributional model checking for DTMCs and MDPs.
//!
//! The pipeline parses a model and a co-safe LTL query, builds the
//! model ⊗ DFA product, and then either generates the exact reward
//! distribution of a DTMC ([`forward`]) or optimises a policy of an MDP by
//! distributional value iteration ([`dvi`]).

// `!(x > 0.0)` is how parameter checks reject NaN along with the rest
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dist;
pub mod dvi;
pub mod error;
pub mod forward;
pub mod ingest;
pub mod ltl;
pub mod model;
pub mod query;
pub mod run;

pub use error::{Error, Result, Stage};
