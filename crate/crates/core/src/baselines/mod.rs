//! Classical reference routers and the exact minimum-SWAP oracle.

mod basic;
mod oracle;
mod sabre;
mod stochastic;

use std::fmt;
use std::str::FromStr;

pub use basic::{basic_swap, route_basic};
pub use oracle::{optimal_route, optimal_swap_count, OracleOutcome, DEFAULT_STATE_LIMIT};
pub use sabre::{route_sabre, SabrePolicy, DEFAULT_DECAY, DEFAULT_LOOKAHEAD_WEIGHT, EXTENDED_SET_SIZE};
pub use stochastic::{route_stochastic, ATTEMPT_SWAP_CAP};

use crate::circuit::LogicalCircuit;
use crate::env::{Mapping, RouteError, RoutedCircuit};
use crate::topology::Topology;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    Basic,
    Stochastic,
    Sabre,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Basic => "basic",
            BaselineKind::Stochastic => "stochastic",
            BaselineKind::Sabre => "sabre",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "basic" => Ok(BaselineKind::Basic),
            "stochastic" => Ok(BaselineKind::Stochastic),
            "sabre" => Ok(BaselineKind::Sabre),
            _ => Err(format!("unknown baseline router `{s}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouterConfig {
    pub kind: BaselineKind,
    pub trials: usize,
    pub lookahead_weight: f64,
    pub decay: f64,
    pub seed: u64,
}

impl RouterConfig {
    pub fn new(kind: BaselineKind) -> Self {
        Self {
            kind,
            trials: 20,
            lookahead_weight: DEFAULT_LOOKAHEAD_WEIGHT,
            decay: DEFAULT_DECAY,
            seed: 0,
        }
    }

    pub fn route(&self, circuit: &LogicalCircuit, topology: &Topology, mapping: &Mapping) -> Result<RoutedCircuit, RouteError> {
        match self.kind {
            BaselineKind::Basic => route_basic(circuit, topology, mapping),
            BaselineKind::Stochastic => route_stochastic(circuit, topology, mapping, self.trials, self.seed),
            BaselineKind::Sabre => route_sabre(circuit, topology, mapping, self.lookahead_weight, self.decay),
        }
    }
}
