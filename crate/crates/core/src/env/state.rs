use std::sync::Arc;

use crate::circuit::{DagIndex, LogicalCircuit};
use crate::topology::Topology;

use super::{Mapping, RouteError};

/// Everything about a routing problem that does not change while routing.
#[derive(Debug)]
pub struct RoutingContext {
    circuit: LogicalCircuit,
    dag: DagIndex,
    topology: Topology,
}

impl RoutingContext {
    pub fn new(circuit: LogicalCircuit, topology: Topology) -> Result<Arc<Self>, RouteError> {
        if circuit.num_qubits() > topology.num_qubits() {
            return Err(RouteError::CircuitTooWide {
                circuit: circuit.num_qubits(),
                device: topology.num_qubits(),
            });
        }
        let dag = circuit.dag();
        Ok(Arc::new(Self {
            circuit,
            dag,
            topology,
        }))
    }

    pub fn circuit(&self) -> &LogicalCircuit {
        &self.circuit
    }

    pub fn dag(&self) -> &DagIndex {
        &self.dag
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }
}

/// MDP state: the unscheduled gates plus the current qubit mapping.
///
/// The mapping always spans every physical qubit; logical qubits beyond the
/// circuit's width are idle.
#[derive(Clone, Debug)]
pub struct RoutingState {
    ctx: Arc<RoutingContext>,
    remaining: Vec<usize>,
    scheduled: Vec<bool>,
    mapping: Mapping,
    swaps_applied: usize,
}

/// Result of one SWAP action.
#[derive(Clone, Debug)]
pub struct Transition {
    pub state: RoutingState,
    pub reward: i64,
    /// Gates scheduled by this step, in the order they were scheduled.
    pub scheduled: Vec<usize>,
}

impl RoutingState {
    /// Initial state. Gates that are already executable under `mapping` are
    /// scheduled up front and earn no reward.
    pub fn new(ctx: Arc<RoutingContext>, mapping: Mapping) -> Result<Self, RouteError> {
        Ok(Self::new_with_schedule(ctx, mapping)?.0)
    }

    /// Like [`RoutingState::new`], also returning the pre-scheduled gates.
    pub fn new_with_schedule(
        ctx: Arc<RoutingContext>,
        mapping: Mapping,
    ) -> Result<(Self, Vec<usize>), RouteError> {
        if mapping.len() != ctx.topology.num_qubits() {
            return Err(RouteError::InvalidMapping(format!(
                "mapping covers {} qubits, device has {}",
                mapping.len(),
                ctx.topology.num_qubits()
            )));
        }
        let n_gates = ctx.circuit.len();
        let mut state = Self {
            remaining: (0..n_gates).collect(),
            scheduled: vec![false; n_gates],
            mapping,
            swaps_applied: 0,
            ctx,
        };
        let done = state.schedule_ready();
        Ok((state, done))
    }

    pub fn context(&self) -> &Arc<RoutingContext> {
        &self.ctx
    }

    pub fn topology(&self) -> &Topology {
        &self.ctx.topology
    }

    pub fn circuit(&self) -> &LogicalCircuit {
        &self.ctx.circuit
    }

    pub fn dag(&self) -> &DagIndex {
        &self.ctx.dag
    }

    pub fn mapping(&self) -> &Mapping {
        &self.mapping
    }

    /// Unscheduled gate indices in program order.
    pub fn remaining(&self) -> &[usize] {
        &self.remaining
    }

    pub fn swaps_applied(&self) -> usize {
        self.swaps_applied
    }

    pub fn is_scheduled(&self, gate: usize) -> bool {
        self.scheduled[gate]
    }

    pub fn is_terminal(&self) -> bool {
        self.remaining.is_empty()
    }

    /// Physical qubits currently holding the gate's two logical qubits.
    pub fn physical_pair(&self, gate: usize) -> (usize, usize) {
        let [a, b] = self.ctx.circuit.gates()[gate].qubits;
        (self.mapping.phys(a), self.mapping.phys(b))
    }

    /// Unscheduled gates whose DAG predecessors are all scheduled.
    pub fn front_layer(&self) -> Vec<usize> {
        self.remaining
            .iter()
            .copied()
            .filter(|&g| self.ctx.dag.predecessors[g].iter().all(|&p| self.scheduled[p]))
            .collect()
    }

    pub fn step(&self, edge: usize) -> Result<(RoutingState, i64), RouteError> {
        self.transition(edge).map(|t| (t.state, t.reward))
    }

    /// Applies the SWAP on `edge`, then schedules, in program order, every
    /// remaining gate that is adjacent and has all predecessors scheduled
    /// (including ones scheduled earlier in this same pass).
    pub fn transition(&self, edge: usize) -> Result<Transition, RouteError> {
        if self.is_terminal() {
            return Err(RouteError::Terminal);
        }
        let &(a, b) = self
            .ctx
            .topology
            .edges()
            .get(edge)
            .ok_or(RouteError::EdgeOutOfRange(edge))?;
        let before = self.remaining.len();
        let mut next = self.clone();
        next.mapping.swap_physical(a, b);
        next.swaps_applied += 1;
        let scheduled = next.schedule_ready();
        let reward = before as i64 - next.remaining.len() as i64 - 1;
        Ok(Transition {
            state: next,
            reward,
            scheduled,
        })
    }

    fn schedule_ready(&mut self) -> Vec<usize> {
        let topology = &self.ctx.topology;
        let gates = self.ctx.circuit.gates();
        let preds = &self.ctx.dag.predecessors;
        let mut done = Vec::new();
        // Program order is a topological order, so one pass reaches the fixpoint.
        self.remaining.retain(|&g| {
            let [la, lb] = gates[g].qubits;
            let ready = preds[g].iter().all(|&p| self.scheduled[p])
                && topology.are_adjacent(self.mapping.phys(la), self.mapping.phys(lb));
            if ready {
                self.scheduled[g] = true;
                done.push(g);
            }
            !ready
        });
        done
    }
}

/// Initial routing state for `circuit` on `topology` under `mapping`.
pub fn init_state(
    circuit: &LogicalCircuit,
    topology: &Topology,
    mapping: &Mapping,
) -> Result<RoutingState, RouteError> {
    RoutingState::new(
        RoutingContext::new(circuit.clone(), topology.clone())?,
        mapping.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::trivial_mapping;

    fn fig1_state() -> RoutingState {
        let c = LogicalCircuit::new(5, [(0, 2), (1, 3), (1, 4), (3, 4)]).unwrap();
        let t = Topology::ring(5).unwrap();
        init_state(&c, &t, &trivial_mapping(5)).unwrap()
    }

    fn edge(s: &RoutingState, a: usize, b: usize) -> usize {
        s.topology().edge_between(a, b).unwrap()
    }

    #[test]
    fn fig1_initial_state_has_all_gates() {
        let s = fig1_state();
        assert_eq!(s.remaining(), &[0, 1, 2, 3]);
        assert!(!s.is_terminal());
        assert_eq!(s.front_layer(), vec![0, 1]);
    }

    #[test]
    fn fig1_two_swaps() {
        let s0 = fig1_state();
        let t1 = s0.transition(edge(&s0, 1, 2)).unwrap();
        assert_eq!(t1.scheduled, vec![0, 1]);
        assert_eq!(t1.reward, 1);
        assert_eq!(t1.state.remaining(), &[2, 3]);

        let t2 = t1.state.transition(edge(&t1.state, 3, 4)).unwrap();
        assert_eq!(t2.scheduled, vec![2, 3]);
        assert_eq!(t2.reward, 1);
        assert!(t2.state.is_terminal());
        assert_eq!(t2.state.swaps_applied(), 2);
    }

    #[test]
    fn useless_swap_costs_one() {
        let s0 = fig1_state();
        let (s1, r) = s0.step(edge(&s0, 0, 4)).unwrap();
        assert_eq!(r, -1);
        assert_eq!(s1.remaining().len(), 4);
    }

    #[test]
    fn compliant_circuit_starts_terminal() {
        let c = LogicalCircuit::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let s = init_state(&c, &Topology::ring(5).unwrap(), &trivial_mapping(5)).unwrap();
        assert!(s.is_terminal());
        assert_eq!(s.swaps_applied(), 0);
    }

    #[test]
    fn distant_gate_stays_remaining() {
        let c = LogicalCircuit::new(5, [(0, 2)]).unwrap();
        let s = init_state(&c, &Topology::ring(5).unwrap(), &trivial_mapping(5)).unwrap();
        assert_eq!(s.remaining(), &[0]);
    }

    #[test]
    fn blocked_gate_waits_for_predecessor() {
        // (3,4) is adjacent but sits behind (1,4).
        let s = fig1_state();
        assert!(!s.is_scheduled(3));
    }

    #[test]
    fn step_errors() {
        let s = fig1_state();
        assert!(matches!(s.step(5), Err(RouteError::EdgeOutOfRange(5))));
        let c = LogicalCircuit::new(2, []).unwrap();
        let done = init_state(&c, &Topology::ring(3).unwrap(), &trivial_mapping(3)).unwrap();
        assert!(done.is_terminal());
        assert!(matches!(done.step(0), Err(RouteError::Terminal)));
    }

    #[test]
    fn width_and_mapping_checks() {
        let c = LogicalCircuit::new(6, [(0, 5)]).unwrap();
        let t = Topology::ring(5).unwrap();
        assert!(matches!(
            init_state(&c, &t, &trivial_mapping(5)),
            Err(RouteError::CircuitTooWide { .. })
        ));
        let small = LogicalCircuit::new(3, [(0, 2)]).unwrap();
        assert!(matches!(
            init_state(&small, &t, &trivial_mapping(3)),
            Err(RouteError::InvalidMapping(_))
        ));
        assert!(init_state(&small, &t, &trivial_mapping(5)).is_ok());
    }

    #[test]
    fn step_is_pure() {
        let s0 = fig1_state();
        let (a, ra) = s0.step(2).unwrap();
        let (b, rb) = s0.step(2).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.remaining(), b.remaining());
        assert_eq!(a.mapping(), b.mapping());
        assert_eq!(s0.remaining(), &[0, 1, 2, 3]);
    }
}
