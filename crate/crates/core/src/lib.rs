//! Qubit routing: inserting SWAP gates so that every two-qubit gate of a
//! logical circuit runs on coupled physical qubits.
//!
//! The crate provides the routing environment ([`env`]), a transformer
//! actor-critic ([`agent`]) trained from Monte Carlo tree search targets
//! ([`mcts`], [`trainer`]), classical baseline routers and an exhaustive
//! optimal oracle ([`baselines`]), plus circuit and topology utilities.

pub mod agent;
pub mod baselines;
pub mod circuit;
pub mod env;
pub mod mcts;
pub mod topology;
pub mod trainer;
