//! Independent checker for routed output. Replays the ops from the initial
//! mapping and derives gate ordering directly from the circuit's per-qubit
//! gate sequences, without going through the routing scheduler.

use std::fmt;

use crate::circuit::LogicalCircuit;
use crate::topology::Topology;

use super::{RoutedCircuit, RoutedOp};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    CircuitTooWide { circuit: usize, device: usize },
    InitialMapping(String),
    SwapNotOnEdge { op: usize, pair: [usize; 2] },
    ExecNotOnEdge { op: usize, gate: usize, pair: [usize; 2] },
    ExecWrongQubits { op: usize, gate: usize, expected: [usize; 2], found: [usize; 2] },
    UnknownGate { op: usize, gate: usize },
    GateRepeated { op: usize, gate: usize },
    DependencyOrder { op: usize, gate: usize, waiting_on: usize },
    GateMissing { gate: usize },
    SwapCountMismatch { declared: usize, actual: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::CircuitTooWide { circuit, device } => {
                write!(f, "circuit uses {circuit} qubits, device has {device}")
            }
            Violation::InitialMapping(msg) => write!(f, "initial mapping: {msg}"),
            Violation::SwapNotOnEdge { op, pair } => write!(f, "op {op}: swap {pair:?} is not a coupling edge"),
            Violation::ExecNotOnEdge { op, gate, pair } => {
                write!(f, "op {op}: gate {gate} executed on uncoupled pair {pair:?}")
            }
            Violation::ExecWrongQubits { op, gate, expected, found } => write!(
                f,
                "op {op}: gate {gate} executed on {found:?} but its qubits sit on {expected:?}"
            ),
            Violation::UnknownGate { op, gate } => write!(f, "op {op}: no gate {gate} in circuit"),
            Violation::GateRepeated { op, gate } => write!(f, "op {op}: gate {gate} executed more than once"),
            Violation::DependencyOrder { op, gate, waiting_on } => {
                write!(f, "op {op}: gate {gate} executed before its dependency {waiting_on}")
            }
            Violation::GateMissing { gate } => write!(f, "gate {gate} never executed"),
            Violation::SwapCountMismatch { declared, actual } => {
                write!(f, "swap_count says {declared}, output has {actual} swaps")
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn verify(rc: &RoutedCircuit, circuit: &LogicalCircuit, topology: &Topology) -> VerifyReport {
    let mut violations = Vec::new();
    let n = topology.num_qubits();
    if circuit.num_qubits() > n {
        violations.push(Violation::CircuitTooWide {
            circuit: circuit.num_qubits(),
            device: n,
        });
        return VerifyReport { violations };
    }

    // Physical position of every logical qubit, and who sits where.
    let mut position = rc.initial_mapping.clone();
    let mut occupant = vec![usize::MAX; n];
    if position.len() != n {
        violations.push(Violation::InitialMapping(format!(
            "covers {} qubits, device has {n}",
            position.len()
        )));
        return VerifyReport { violations };
    }
    for (l, &p) in position.iter().enumerate() {
        if p >= n || occupant[p] != usize::MAX {
            violations.push(Violation::InitialMapping(format!("{position:?} is not a permutation")));
            return VerifyReport { violations };
        }
        occupant[p] = l;
    }

    // Gates touching each logical qubit, in program order; `cursor` points at
    // the next one that may run.
    let mut per_qubit: Vec<Vec<usize>> = vec![Vec::new(); circuit.num_qubits()];
    for (i, gate) in circuit.gates().iter().enumerate() {
        for &q in &gate.qubits {
            per_qubit[q].push(i);
        }
    }
    let mut cursor = vec![0usize; circuit.num_qubits()];
    let mut executed = vec![false; circuit.len()];
    let mut swaps = 0;

    for (op_index, op) in rc.ops.iter().enumerate() {
        match *op {
            RoutedOp::Swap([a, b]) => {
                swaps += 1;
                if a >= n || b >= n || a == b || !topology.are_adjacent(a, b) {
                    violations.push(Violation::SwapNotOnEdge { op: op_index, pair: [a, b] });
                    continue;
                }
                let (la, lb) = (occupant[a], occupant[b]);
                occupant.swap(a, b);
                position[la] = b;
                position[lb] = a;
            }
            RoutedOp::Exec { gate, phys: [p, q] } => {
                let Some(g) = circuit.gates().get(gate) else {
                    violations.push(Violation::UnknownGate { op: op_index, gate });
                    continue;
                };
                if executed[gate] {
                    violations.push(Violation::GateRepeated { op: op_index, gate });
                    continue;
                }
                if p >= n || q >= n || !topology.are_adjacent(p, q) {
                    violations.push(Violation::ExecNotOnEdge { op: op_index, gate, pair: [p, q] });
                }
                let [la, lb] = g.qubits;
                let expected = [position[la], position[lb]];
                if !(expected == [p, q] || expected == [q, p]) {
                    violations.push(Violation::ExecWrongQubits {
                        op: op_index,
                        gate,
                        expected,
                        found: [p, q],
                    });
                }
                for l in [la, lb] {
                    let next = per_qubit[l][cursor[l]];
                    if next != gate {
                        violations.push(Violation::DependencyOrder {
                            op: op_index,
                            gate,
                            waiting_on: next,
                        });
                    }
                }
                executed[gate] = true;
                for l in [la, lb] {
                    // Skip past this gate even if it ran out of order so later
                    // checks report their own problems.
                    while cursor[l] < per_qubit[l].len() && executed[per_qubit[l][cursor[l]]] {
                        cursor[l] += 1;
                    }
                }
            }
        }
    }

    for (gate, &done) in executed.iter().enumerate() {
        if !done {
            violations.push(Violation::GateMissing { gate });
        }
    }
    if swaps != rc.swap_count {
        violations.push(Violation::SwapCountMismatch {
            declared: rc.swap_count,
            actual: swaps,
        });
    }
    VerifyReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> (LogicalCircuit, Topology, RoutedCircuit) {
        let c = LogicalCircuit::new(5, [(0, 2), (1, 3), (1, 4), (3, 4)]).unwrap();
        let t = Topology::ring(5).unwrap();
        let rc = RoutedCircuit {
            initial_mapping: vec![0, 1, 2, 3, 4],
            ops: vec![
                RoutedOp::Swap([1, 2]),
                RoutedOp::Exec { gate: 0, phys: [0, 1] },
                RoutedOp::Exec { gate: 1, phys: [2, 3] },
                RoutedOp::Swap([3, 4]),
                RoutedOp::Exec { gate: 2, phys: [2, 3] },
                RoutedOp::Exec { gate: 3, phys: [4, 3] },
            ],
            swap_count: 2,
            fallback_used: false,
        };
        (c, t, rc)
    }

    #[test]
    fn accepts_fig1_route() {
        let (c, t, rc) = fig1();
        assert!(verify(&rc, &c, &t).is_ok());
    }

    #[test]
    fn flags_duplicate_exec() {
        let (c, t, mut rc) = fig1();
        rc.ops.push(RoutedOp::Exec { gate: 3, phys: [4, 3] });
        let report = verify(&rc, &c, &t);
        assert_eq!(report.violations, vec![Violation::GateRepeated { op: 6, gate: 3 }]);
    }

    #[test]
    fn flags_non_adjacent_exec() {
        let (c, t, mut rc) = fig1();
        rc.ops.remove(0);
        rc.swap_count = 1;
        let report = verify(&rc, &c, &t);
        assert!(report
            .violations
            .contains(&Violation::ExecNotOnEdge { op: 0, gate: 0, pair: [0, 1] })
            || report.violations.iter().any(|v| matches!(v, Violation::ExecWrongQubits { gate: 0, .. })));
        assert!(!report.is_ok());
    }

    #[test]
    fn flags_uncoupled_pair() {
        let c = LogicalCircuit::new(5, [(0, 2)]).unwrap();
        let t = Topology::ring(5).unwrap();
        let rc = RoutedCircuit {
            initial_mapping: vec![0, 1, 2, 3, 4],
            ops: vec![RoutedOp::Exec { gate: 0, phys: [0, 2] }],
            swap_count: 0,
            fallback_used: false,
        };
        assert_eq!(
            verify(&rc, &c, &t).violations,
            vec![Violation::ExecNotOnEdge { op: 0, gate: 0, pair: [0, 2] }]
        );
    }

    #[test]
    fn flags_dependency_order_and_missing() {
        let (c, t, mut rc) = fig1();
        rc.ops.swap(4, 5);
        let report = verify(&rc, &c, &t);
        assert!(report
            .violations
            .contains(&Violation::DependencyOrder { op: 4, gate: 3, waiting_on: 2 }));

        let (c, t, mut rc) = fig1();
        rc.ops.pop();
        assert_eq!(verify(&rc, &c, &t).violations, vec![Violation::GateMissing { gate: 3 }]);
    }

    #[test]
    fn flags_bad_swaps_and_counts() {
        let (c, t, mut rc) = fig1();
        rc.swap_count = 3;
        assert_eq!(
            verify(&rc, &c, &t).violations,
            vec![Violation::SwapCountMismatch { declared: 3, actual: 2 }]
        );
        let (c, t, mut rc) = fig1();
        rc.ops.insert(0, RoutedOp::Swap([0, 2]));
        rc.swap_count = 3;
        assert!(verify(&rc, &c, &t)
            .violations
            .contains(&Violation::SwapNotOnEdge { op: 0, pair: [0, 2] }));
        let (c, t, mut rc) = fig1();
        rc.initial_mapping = vec![0, 0, 1, 2, 3];
        assert!(matches!(verify(&rc, &c, &t).violations[0], Violation::InitialMapping(_)));
    }
}
