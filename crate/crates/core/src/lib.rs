//! Coalition-structured public-goods game.
//!
//! Players cooperate inside a coalition (`C`), join without contributing
//! (`D`) or stay outside (`O`). The crate computes payoffs and hypergeometric
//! group fitness, the best-response classification of informed players,
//! deterministic replicator dynamics and the finite-population Markov chain
//! with its stationary distribution.

pub mod cli;
pub mod deterministic;
pub mod error;
pub mod game;
pub mod informed;
pub mod io;
pub mod sampling;
pub mod stochastic;

pub use error::{Error, Result};
pub use game::{BenefitFunction, GameParams, MutationForm, PopulationState, StateSpace, Strategy};
pub use sampling::{fitness, FitnessLandscape, FitnessTriple};
