//! Influence maximization under partial feedback.
//!
//! Seeds are selected one at a time on a directed graph under the independent
//! cascade model. Between selections the policy may wait for the diffusion to
//! reveal more edge states; the control parameter `α ∈ [0, 1]` interpolates
//! between committing every seed up front (`α = 0`) and waiting for complete
//! feedback (`α = 1`).
//!
//! Costs and budgets are generic over [`scalar::Cost`]; the aliases below fix
//! them to exact rationals.

pub mod bounds;
pub mod diffusion;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod harness;
pub mod oracles;
pub mod policies;
mod reach;
pub(crate) mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use estimation::Estimator;

use num_rational::Rational64;

pub type Cost = Rational64;
pub type Graph = graph::DirectedGraph<Rational64>;
pub type Policy = policies::PolicyConfig<Rational64>;
pub type Run = policies::PolicyRun<Rational64>;
pub type Round = policies::RoundLog<Rational64>;
