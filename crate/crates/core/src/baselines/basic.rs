use crate::circuit::LogicalCircuit;
use crate::env::{route, Mapping, RouteError, RoutedCircuit, RoutingState};
use crate::topology::Topology;

/// Next SWAP of the greedy shortest-path router: take the earliest
/// unscheduled gate and move the qubit on its lower-indexed physical endpoint
/// one hop along a shortest path toward the other endpoint (lowest-indexed
/// next hop wins ties).
///
/// Panics on a terminal state.
pub fn basic_swap(state: &RoutingState) -> usize {
    let gate = *state.remaining().first().expect("basic_swap on terminal state");
    let (pa, pb) = state.physical_pair(gate);
    let (from, to) = if pa < pb { (pa, pb) } else { (pb, pa) };
    let topology = state.topology();
    let d = topology.distance(from, to);
    // The earliest unscheduled gate is always ready, so it cannot already be
    // adjacent after a scheduling pass.
    debug_assert!(d >= 2);
    let next = topology
        .neighbors(from)
        .iter()
        .copied()
        .find(|&w| topology.distance(w, to) + 1 == d)
        .expect("connected topology has a shortest-path neighbour");
    topology.edge_between(from, next).expect("neighbour is coupled")
}

pub fn route_basic(circuit: &LogicalCircuit, topology: &Topology, mapping: &Mapping) -> Result<RoutedCircuit, RouteError> {
    // Every swap shortens the current gate's distance, so no cap is needed.
    route(circuit, topology, mapping, &mut basic_swap, usize::MAX)
}
