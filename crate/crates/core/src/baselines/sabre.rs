use crate::circuit::LogicalCircuit;
use crate::env::{default_step_cap, route, Mapping, Policy, RouteError, RoutedCircuit, RoutingState};
use crate::topology::Topology;

/// Gates beyond the front layer considered by the lookahead term.
pub const EXTENDED_SET_SIZE: usize = 20;
pub const DEFAULT_LOOKAHEAD_WEIGHT: f64 = 0.5;
pub const DEFAULT_DECAY: f64 = 1.001;

/// SABRE-style swap selection as a routing policy.
///
/// Candidates are the swaps touching a front-layer qubit. Each is scored by
/// the summed front-layer distance plus `lookahead_weight` times the mean
/// distance over the extended set, scaled by the larger decay factor of the
/// two swapped qubits. Decay grows by `decay` (multiplicatively) each time a
/// qubit is swapped and resets whenever a gate gets scheduled.
#[derive(Clone, Debug)]
pub struct SabrePolicy {
    lookahead_weight: f64,
    decay: f64,
    penalty: Vec<f64>,
    last_remaining: Option<usize>,
}

impl SabrePolicy {
    pub fn new(num_physical: usize, lookahead_weight: f64, decay: f64) -> Self {
        Self {
            lookahead_weight,
            decay,
            penalty: vec![1.0; num_physical],
            last_remaining: None,
        }
    }

    /// Heuristic score of swapping `edge` in `state`; lower is better.
    pub fn score(&self, state: &RoutingState, front: &[usize], extended: &[usize], edge: usize) -> f64 {
        let topology = state.topology();
        let (a, b) = topology.edges()[edge];
        let moved = |p: usize| {
            if p == a {
                b
            } else if p == b {
                a
            } else {
                p
            }
        };
        let dist = |g: usize| {
            let (p, q) = state.physical_pair(g);
            f64::from(topology.distance(moved(p), moved(q)))
        };
        let front_cost: f64 = front.iter().map(|&g| dist(g)).sum();
        let lookahead = if extended.is_empty() {
            0.0
        } else {
            self.lookahead_weight * extended.iter().map(|&g| dist(g)).sum::<f64>() / extended.len() as f64
        };
        (front_cost + lookahead) * self.penalty[a].max(self.penalty[b])
    }
}

impl Policy for SabrePolicy {
    fn choose(&mut self, state: &RoutingState) -> usize {
        let remaining = state.remaining().len();
        if self.last_remaining != Some(remaining) {
            self.penalty.iter_mut().for_each(|p| *p = 1.0);
            self.last_remaining = Some(remaining);
        }
        let front = state.front_layer();
        let extended: Vec<usize> = state
            .remaining()
            .iter()
            .copied()
            .filter(|g| !front.contains(g))
            .take(EXTENDED_SET_SIZE)
            .collect();

        let topology = state.topology();
        let mut active = vec![false; topology.num_qubits()];
        for &g in &front {
            let (p, q) = state.physical_pair(g);
            active[p] = true;
            active[q] = true;
        }
        let mut best: Option<(usize, f64)> = None;
        for (edge, &(a, b)) in topology.edges().iter().enumerate() {
            if !(active[a] || active[b]) {
                continue;
            }
            let h = self.score(state, &front, &extended, edge);
            if best.is_none_or(|(_, bh)| h < bh) {
                best = Some((edge, h));
            }
        }
        let (edge, _) = best.expect("non-terminal state has a front layer");
        let (a, b) = topology.edges()[edge];
        self.penalty[a] *= self.decay;
        self.penalty[b] *= self.decay;
        edge
    }
}

pub fn route_sabre(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mapping: &Mapping,
    lookahead_weight: f64,
    decay: f64,
) -> Result<RoutedCircuit, RouteError> {
    let mut policy = SabrePolicy::new(topology.num_qubits(), lookahead_weight, decay);
    route(circuit, topology, mapping, &mut policy, default_step_cap(circuit.len()))
}
