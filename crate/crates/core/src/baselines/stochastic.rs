use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::LogicalCircuit;
use crate::env::{Mapping, RouteError, RouteRecorder, RoutedCircuit, RoutingContext, RoutingState};
use crate::topology::Topology;

use super::basic_swap;

/// Swaps allowed in one randomized attempt at clearing a layer.
pub const ATTEMPT_SWAP_CAP: usize = 50;

/// Layer-by-layer randomized router. For each front layer it makes `trials`
/// seeded attempts, each a sequence of random distance-reducing swaps run
/// until every gate of the layer has been scheduled, and commits the shortest
/// successful attempt. A layer no attempt can clear within the cap advances
/// by basic-router swaps instead.
pub fn route_stochastic(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mapping: &Mapping,
    trials: usize,
    seed: u64,
) -> Result<RoutedCircuit, RouteError> {
    let trials = trials.max(1);
    let ctx = RoutingContext::new(circuit.clone(), topology.clone())?;
    let (mut rec, mut state) = RouteRecorder::start(ctx, mapping.clone())?;
    let mut fallback_used = false;
    let mut layer_no = 0u64;
    while !state.is_terminal() {
        let layer = state.front_layer();
        let best = (0..trials as u64)
            .filter_map(|attempt| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(layer_no * trials as u64 + attempt);
                clear_layer(&state, &layer, &mut rng)
            })
            .min_by_key(Vec::len);
        match best {
            Some(swaps) => {
                for edge in swaps {
                    state = rec.apply(&state, edge)?.0;
                }
            }
            None => {
                fallback_used = true;
                let before = state.remaining().len();
                while state.remaining().len() == before {
                    let edge = basic_swap(&state);
                    state = rec.apply(&state, edge)?.0;
                }
            }
        }
        layer_no += 1;
    }
    let mut rc = rec.finish(false);
    rc.fallback_used = fallback_used;
    Ok(rc)
}

fn clear_layer(start: &RoutingState, layer: &[usize], rng: &mut ChaCha8Rng) -> Option<Vec<usize>> {
    let mut state = start.clone();
    let mut swaps = Vec::new();
    while swaps.len() < ATTEMPT_SWAP_CAP {
        let pending: Vec<usize> = layer.iter().copied().filter(|&g| !state.is_scheduled(g)).collect();
        if pending.is_empty() {
            return Some(swaps);
        }
        let candidates = reducing_swaps(&state, &pending);
        let edge = candidates[rng.gen_range(0..candidates.len())];
        state = state.step(edge).ok()?.0;
        swaps.push(edge);
    }
    layer.iter().all(|&g| state.is_scheduled(g)).then_some(swaps)
}

/// Edges whose SWAP moves some pending gate's qubits strictly closer.
fn reducing_swaps(state: &RoutingState, pending: &[usize]) -> Vec<usize> {
    let topology = state.topology();
    let mut edges = Vec::new();
    for &g in pending {
        let (pa, pb) = state.physical_pair(g);
        let d = topology.distance(pa, pb);
        for (from, to) in [(pa, pb), (pb, pa)] {
            for &w in topology.neighbors(from) {
                if topology.distance(w, to) < d {
                    edges.push(topology.edge_between(from, w).expect("neighbour is coupled"));
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{generate_benchmark, BenchmarkKind, BenchmarkParams};
    use crate::env::{trivial_mapping, verify};

    #[test]
    fn deterministic_per_seed() {
        let t = Topology::grid(3, 4).unwrap();
        let p = BenchmarkParams {
            gate_count: 40,
            ..Default::default()
        };
        let c = generate_benchmark(BenchmarkKind::Random, 12, 5, &p).unwrap();
        let m = trivial_mapping(12);
        let a = route_stochastic(&c, &t, &m, 4, 9).unwrap();
        assert_eq!(a, route_stochastic(&c, &t, &m, 4, 9).unwrap());
        assert!(verify(&a, &c, &t).is_ok());
    }

    #[test]
    fn single_trial_is_valid() {
        let t = Topology::ring(5).unwrap();
        let c = LogicalCircuit::new(5, [(0, 2), (1, 3), (1, 4), (3, 4)]).unwrap();
        let rc = route_stochastic(&c, &t, &trivial_mapping(5), 1, 0).unwrap();
        assert!(rc.swap_count >= 2);
        assert!(verify(&rc, &c, &t).is_ok());
    }

    #[test]
    fn more_trials_never_worse_on_first_layer() {
        // The trial-1 attempt is also attempt 0 of every larger trial count.
        let t = Topology::grid(3, 4).unwrap();
        let c = LogicalCircuit::new(12, [(0, 11), (3, 8)]).unwrap();
        let m = trivial_mapping(12);
        let one = route_stochastic(&c, &t, &m, 1, 3).unwrap().swap_count;
        let many = route_stochastic(&c, &t, &m, 16, 3).unwrap().swap_count;
        assert!(many <= one);
    }

    #[test]
    fn reducing_swaps_exist_for_distant_gate() {
        let t = Topology::line(4).unwrap();
        let c = LogicalCircuit::new(4, [(0, 3)]).unwrap();
        let s = crate::env::init_state(&c, &t, &trivial_mapping(4)).unwrap();
        let edges: Vec<_> = reducing_swaps(&s, &[0]).into_iter().map(|e| t.edges()[e]).collect();
        assert_eq!(edges, vec![(0, 1), (2, 3)]);
    }
}
