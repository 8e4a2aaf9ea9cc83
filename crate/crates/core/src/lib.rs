//! Online stochastic packing with general correlations.
//!
//! The crate solves the massive deterministic-equivalent packing LP of a
//! finite-support information process *on the fly*: a decision for the one
//! prefix actually encountered is computed by a memoized recursion that
//! replays a projected stochastic gradient method only where it is needed.
//!
//! Modules:
//! - [`model`]: prefixes, simulators, explicit scenario trees, problem encodings
//!   and instance generators.
//! - [`penalty`]: the one-sided Huber penalty and the (smoothed) penalty
//!   objectives over explicit trees, with their exact gradient.
//! - [`engine`]: the stochastic gradient family, the recursive routine and
//!   the parameter calculator.
//! - [`policies`]: feasibility patching, rounding and the application policies.
//! - [`oracle`]: exact small-instance solvers and policy evaluators.

pub mod engine;
pub mod error;
pub mod keyed;
pub mod model;
pub mod oracle;
pub mod penalty;
pub mod policies;

pub use error::{Error, Result};
