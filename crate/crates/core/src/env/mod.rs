//! The routing decision process: qubit mappings, states and SWAP transitions,
//! a policy-driven routing driver, and the routed-output verifier.
//!
//! A transition applies one SWAP on a coupling edge and then schedules every
//! gate that became executable, cascading through dependencies in program
//! order. Its reward is the number of gates scheduled minus one, so over a
//! full episode rewards sum to the initial gate count minus the SWAP count.

mod mapping;
mod route;
mod state;
mod verify;

use thiserror::Error;

pub use mapping::{random_mapping, trivial_mapping, Mapping};
pub use route::{
    bidirectional_initial_mapping, default_step_cap, route, route_context, Policy,
    RouteRecorder, RoutedCircuit, RoutedOp,
};
pub use state::{init_state, RoutingContext, RoutingState, Transition};
pub use verify::{verify, VerifyReport, Violation};

#[derive(Debug, Error)]
pub enum RouteError {
    #[error("circuit needs {circuit} qubits but the device has {device}")]
    CircuitTooWide { circuit: usize, device: usize },
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("edge index {0} is not a coupling edge")]
    EdgeOutOfRange(usize),
    #[error("state is terminal")]
    Terminal,
    #[error("malformed routed circuit: {0}")]
    Malformed(String),
}
