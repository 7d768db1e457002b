use serde::{Deserialize, Serialize};

use crate::baselines::basic_swap;
use crate::circuit::LogicalCircuit;
use crate::topology::Topology;

use super::{Mapping, RouteError, RoutingContext, RoutingState};

/// One instruction of a routed physical circuit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutedOp {
    Swap([usize; 2]),
    Exec { gate: usize, phys: [usize; 2] },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutedCircuit {
    pub initial_mapping: Vec<usize>,
    pub ops: Vec<RoutedOp>,
    pub swap_count: usize,
    pub fallback_used: bool,
}

impl RoutedCircuit {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("routed circuit serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, RouteError> {
        serde_json::from_str(text).map_err(|e| RouteError::Malformed(e.to_string()))
    }

    /// Mapping reached after replaying every SWAP from the initial mapping.
    pub fn final_mapping(&self) -> Result<Mapping, RouteError> {
        let mut mapping = Mapping::new(self.initial_mapping.clone())?;
        for op in &self.ops {
            if let RoutedOp::Swap([a, b]) = *op {
                if a >= mapping.len() || b >= mapping.len() {
                    return Err(RouteError::Malformed(format!("swap ({a}, {b}) out of range")));
                }
                mapping.swap_physical(a, b);
            }
        }
        Ok(mapping)
    }
}

/// Chooses the next SWAP (an edge index) for a non-terminal state.
pub trait Policy {
    fn choose(&mut self, state: &RoutingState) -> usize;
}

impl<F: FnMut(&RoutingState) -> usize> Policy for F {
    fn choose(&mut self, state: &RoutingState) -> usize {
        self(state)
    }
}

/// Step budget used when none is given: `10 * gates + 50`.
pub fn default_step_cap(num_gates: usize) -> usize {
    10 * num_gates + 50
}

/// Incrementally records the ops of a routing run.
#[derive(Debug)]
pub struct RouteRecorder {
    initial_mapping: Vec<usize>,
    ops: Vec<RoutedOp>,
    swap_count: usize,
}

impl RouteRecorder {
    /// Starts recording from an initial state, emitting its pre-scheduled gates.
    pub fn start(ctx: std::sync::Arc<RoutingContext>, mapping: Mapping) -> Result<(Self, RoutingState), RouteError> {
        let initial_mapping = mapping.log_to_phys().to_vec();
        let (state, pre) = RoutingState::new_with_schedule(ctx, mapping)?;
        let mut rec = Self {
            initial_mapping,
            ops: Vec::new(),
            swap_count: 0,
        };
        rec.record_execs(&state, &pre);
        Ok((rec, state))
    }

    /// Applies `edge` to `state`, recording the SWAP and the gates it unlocks.
    pub fn apply(&mut self, state: &RoutingState, edge: usize) -> Result<(RoutingState, i64), RouteError> {
        let t = state.transition(edge)?;
        let (a, b) = state.topology().edges()[edge];
        self.ops.push(RoutedOp::Swap([a, b]));
        self.swap_count += 1;
        self.record_execs(&t.state, &t.scheduled);
        Ok((t.state, t.reward))
    }

    fn record_execs(&mut self, state: &RoutingState, gates: &[usize]) {
        for &g in gates {
            let (p, q) = state.physical_pair(g);
            self.ops.push(RoutedOp::Exec { gate: g, phys: [p, q] });
        }
    }

    pub fn finish(self, fallback_used: bool) -> RoutedCircuit {
        RoutedCircuit {
            initial_mapping: self.initial_mapping,
            ops: self.ops,
            swap_count: self.swap_count,
            fallback_used,
        }
    }
}

/// Routes by repeatedly asking `policy` for a SWAP. After `step_cap` policy
/// steps the remainder is finished by the basic router and `fallback_used`
/// is set, so routing always terminates.
pub fn route<P: Policy + ?Sized>(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mapping: &Mapping,
    policy: &mut P,
    step_cap: usize,
) -> Result<RoutedCircuit, RouteError> {
    let ctx = RoutingContext::new(circuit.clone(), topology.clone())?;
    route_context(ctx, mapping.clone(), policy, step_cap)
}

pub fn route_context<P: Policy + ?Sized>(
    ctx: std::sync::Arc<RoutingContext>,
    mapping: Mapping,
    policy: &mut P,
    step_cap: usize,
) -> Result<RoutedCircuit, RouteError> {
    let (mut rec, mut state) = RouteRecorder::start(ctx, mapping)?;
    let mut steps = 0;
    while !state.is_terminal() && steps < step_cap {
        let edge = policy.choose(&state);
        if edge >= state.topology().num_edges() {
            return Err(RouteError::EdgeOutOfRange(edge));
        }
        state = rec.apply(&state, edge)?.0;
        steps += 1;
    }
    let fallback_used = !state.is_terminal();
    while !state.is_terminal() {
        let edge = basic_swap(&state);
        state = rec.apply(&state, edge)?.0;
    }
    Ok(rec.finish(fallback_used))
}

/// Forward pass from `m0`, then a pass over the reversed circuit starting from
/// the forward pass's final mapping; the reverse pass's final mapping is the
/// refined initial mapping.
pub fn bidirectional_initial_mapping<R>(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mut router: R,
    m0: &Mapping,
) -> Result<Mapping, RouteError>
where
    R: FnMut(&LogicalCircuit, &Topology, &Mapping) -> Result<RoutedCircuit, RouteError>,
{
    let forward = router(circuit, topology, m0)?;
    let after_forward = forward.final_mapping()?;
    let backward = router(&circuit.reversed(), topology, &after_forward)?;
    backward.final_mapping()
}
