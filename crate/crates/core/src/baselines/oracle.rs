//! Exhaustive minimum-SWAP search for small instances.

use std::collections::{HashSet, VecDeque};

use crate::circuit::LogicalCircuit;
use crate::env::{Mapping, RouteError, RouteRecorder, RoutedCircuit, RoutingContext, RoutingState};
use crate::topology::Topology;

/// Default bound on the number of distinct states explored.
pub const DEFAULT_STATE_LIMIT: usize = 2_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum OracleOutcome<T> {
    Optimal(T),
    /// More than the allowed number of states would have to be explored.
    Exhausted,
}

impl<T> OracleOutcome<T> {
    pub fn optimal(self) -> Option<T> {
        match self {
            OracleOutcome::Optimal(v) => Some(v),
            OracleOutcome::Exhausted => None,
        }
    }
}

/// Two states with the same key have the same optimal cost-to-go: only the
/// placement of qubits that still have gates matters.
fn canonical_key(state: &RoutingState) -> (Vec<u32>, Vec<u32>) {
    let circuit = state.circuit();
    let mut active = vec![false; state.mapping().len()];
    for &g in state.remaining() {
        for &q in &circuit.gates()[g].qubits {
            active[q] = true;
        }
    }
    let placement = state
        .mapping()
        .phys_to_log()
        .iter()
        .map(|&l| if active[l] { l as u32 } else { u32::MAX })
        .collect();
    let remaining = state.remaining().iter().map(|&g| g as u32).collect();
    (placement, remaining)
}

/// Breadth-first search over SWAP sequences; every SWAP costs one, so the
/// first terminal state reached is optimal.
pub fn optimal_route(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mapping: &Mapping,
    limit: usize,
) -> Result<OracleOutcome<RoutedCircuit>, RouteError> {
    let ctx = RoutingContext::new(circuit.clone(), topology.clone())?;
    let root = RoutingState::new(ctx.clone(), mapping.clone())?;

    // (state, parent node, edge taken from parent)
    let mut nodes: Vec<(Option<usize>, usize)> = vec![(None, usize::MAX)];
    let mut frontier: VecDeque<(usize, RoutingState)> = VecDeque::new();
    let mut seen = HashSet::new();
    seen.insert(canonical_key(&root));

    let mut goal = None;
    if root.is_terminal() {
        goal = Some(0);
    } else {
        frontier.push_back((0, root));
    }
    'search: while let Some((node, state)) = frontier.pop_front() {
        for edge in 0..topology.num_edges() {
            let (next, _) = state.step(edge)?;
            if !seen.insert(canonical_key(&next)) {
                continue;
            }
            nodes.push((Some(node), edge));
            let id = nodes.len() - 1;
            if next.is_terminal() {
                goal = Some(id);
                break 'search;
            }
            if seen.len() > limit {
                return Ok(OracleOutcome::Exhausted);
            }
            frontier.push_back((id, next));
        }
    }
    let Some(mut id) = goal else {
        // Unreachable on a connected topology.
        return Ok(OracleOutcome::Exhausted);
    };

    let mut path = Vec::new();
    while let (Some(parent), edge) = nodes[id] {
        path.push(edge);
        id = parent;
    }
    path.reverse();
    let (mut rec, mut state) = RouteRecorder::start(ctx, mapping.clone())?;
    for edge in path {
        state = rec.apply(&state, edge)?.0;
    }
    debug_assert!(state.is_terminal());
    Ok(OracleOutcome::Optimal(rec.finish(false)))
}

pub fn optimal_swap_count(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mapping: &Mapping,
    limit: usize,
) -> Result<OracleOutcome<usize>, RouteError> {
    Ok(match optimal_route(circuit, topology, mapping, limit)? {
        OracleOutcome::Optimal(rc) => OracleOutcome::Optimal(rc.swap_count),
        OracleOutcome::Exhausted => OracleOutcome::Exhausted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{trivial_mapping, verify};

    #[test]
    fn fig1_needs_two() {
        let t = Topology::ring(5).unwrap();
        let c = LogicalCircuit::new(5, [(0, 2), (1, 3), (1, 4), (3, 4)]).unwrap();
        let rc = optimal_route(&c, &t, &trivial_mapping(5), DEFAULT_STATE_LIMIT)
            .unwrap()
            .optimal()
            .unwrap();
        assert_eq!(rc.swap_count, 2);
        assert!(verify(&rc, &c, &t).is_ok());
    }

    #[test]
    fn compliant_is_zero() {
        let t = Topology::ring(5).unwrap();
        let c = LogicalCircuit::new(5, [(0, 1), (2, 3)]).unwrap();
        assert_eq!(
            optimal_swap_count(&c, &t, &trivial_mapping(5), 10).unwrap(),
            OracleOutcome::Optimal(0)
        );
    }

    #[test]
    fn single_gate_distance_minus_one() {
        let t = Topology::line(6).unwrap();
        for far in 1..6 {
            let c = LogicalCircuit::new(6, [(0, far)]).unwrap();
            assert_eq!(
                optimal_swap_count(&c, &t, &trivial_mapping(6), DEFAULT_STATE_LIMIT).unwrap(),
                OracleOutcome::Optimal(far - 1)
            );
        }
    }

    #[test]
    fn tiny_limit_exhausts() {
        let t = Topology::line(6).unwrap();
        let c = LogicalCircuit::new(6, [(0, 5), (1, 4), (0, 3)]).unwrap();
        assert_eq!(
            optimal_swap_count(&c, &t, &trivial_mapping(6), 3).unwrap(),
            OracleOutcome::Exhausted
        );
    }
}
