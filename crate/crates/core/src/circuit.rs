//! Logical circuits: two-qubit gate sequences, their dependency DAG, the
//! circuit file format, and the benchmark circuit generators.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("malformed circuit file: {0}")]
    Malformed(String),
    #[error("gate {gate}: qubit {qubit} out of range for {num_qubits} qubits")]
    QubitOutOfRange {
        gate: usize,
        qubit: usize,
        num_qubits: usize,
    },
    #[error("gate {gate}: qubit {qubit} appears twice")]
    DuplicateQubit { gate: usize, qubit: usize },
    #[error("invalid benchmark parameters: {0}")]
    InvalidParams(String),
}

/// A two-qubit gate over logical qubits. Program position is `index`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub index: usize,
    pub qubits: [usize; 2],
}

impl Gate {
    pub fn touches(&self, qubit: usize) -> bool {
        self.qubits[0] == qubit || self.qubits[1] == qubit
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LogicalCircuit {
    num_qubits: usize,
    gates: Vec<Gate>,
}

impl LogicalCircuit {
    /// Builds a circuit from qubit pairs in program order.
    pub fn new(
        num_qubits: usize,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, CircuitError> {
        let mut gates = Vec::new();
        for (index, (a, b)) in pairs.into_iter().enumerate() {
            for q in [a, b] {
                if q >= num_qubits {
                    return Err(CircuitError::QubitOutOfRange {
                        gate: index,
                        qubit: q,
                        num_qubits,
                    });
                }
            }
            if a == b {
                return Err(CircuitError::DuplicateQubit { gate: index, qubit: a });
            }
            gates.push(Gate {
                index,
                qubits: [a, b],
            });
        }
        Ok(Self { num_qubits, gates })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.gates.iter().map(|g| (g.qubits[0], g.qubits[1]))
    }

    /// The same gates in reverse program order.
    pub fn reversed(&self) -> Self {
        let pairs: Vec<_> = self.pairs().collect();
        Self::new(self.num_qubits, pairs.into_iter().rev()).expect("reversal keeps gates valid")
    }

    pub fn dag(&self) -> DagIndex {
        build_dag(self)
    }
}

/// Immediate-predecessor dependency DAG with per-gate depths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DagIndex {
    pub predecessors: Vec<Vec<usize>>,
    pub depth: Vec<usize>,
}

/// For every gate, its predecessors are the most recent earlier gates on each
/// of its two qubits; depth is one more than the deepest predecessor.
pub fn build_dag(circuit: &LogicalCircuit) -> DagIndex {
    let mut last_on_qubit: Vec<Option<usize>> = vec![None; circuit.num_qubits];
    let mut predecessors = Vec::with_capacity(circuit.len());
    let mut depth = Vec::with_capacity(circuit.len());
    for gate in &circuit.gates {
        let mut preds: Vec<usize> = gate.qubits.iter().filter_map(|&q| last_on_qubit[q]).collect();
        preds.sort_unstable();
        preds.dedup();
        let d = 1 + preds.iter().map(|&p| depth[p]).max().unwrap_or(0);
        for &q in &gate.qubits {
            last_on_qubit[q] = Some(gate.index);
        }
        predecessors.push(preds);
        depth.push(d);
    }
    DagIndex {
        predecessors,
        depth,
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitFile {
    num_qubits: usize,
    gates: Vec<Vec<usize>>,
}

/// Side information gathered while parsing a circuit file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParseReport {
    /// Single-qubit entries that were dropped; routing only sees two-qubit gates.
    pub dropped_single_qubit: usize,
}

pub fn parse_circuit(text: &str) -> Result<LogicalCircuit, CircuitError> {
    parse_circuit_with_report(text).map(|(c, _)| c)
}

pub fn parse_circuit_with_report(text: &str) -> Result<(LogicalCircuit, ParseReport), CircuitError> {
    let file: CircuitFile =
        serde_json::from_str(text).map_err(|e| CircuitError::Malformed(e.to_string()))?;
    let mut report = ParseReport::default();
    let mut pairs = Vec::with_capacity(file.gates.len());
    for (entry, qubits) in file.gates.iter().enumerate() {
        if let Some(&q) = qubits.iter().find(|&&q| q >= file.num_qubits) {
            return Err(CircuitError::QubitOutOfRange {
                gate: entry,
                qubit: q,
                num_qubits: file.num_qubits,
            });
        }
        match qubits.as_slice() {
            [_] => report.dropped_single_qubit += 1,
            &[a, b] => pairs.push((a, b)),
            other => {
                return Err(CircuitError::Malformed(format!(
                    "gate entry {entry} has {} qubits, expected 1 or 2",
                    other.len()
                )))
            }
        }
    }
    // Gate numbers in errors from here on count two-qubit gates only.
    let circuit = LogicalCircuit::new(file.num_qubits, pairs)?;
    Ok((circuit, report))
}

/// Canonical, whitespace-free circuit JSON.
pub fn serialize_circuit(circuit: &LogicalCircuit) -> String {
    let file = CircuitFile {
        num_qubits: circuit.num_qubits,
        gates: circuit.gates.iter().map(|g| g.qubits.to_vec()).collect(),
    };
    serde_json::to_string(&file).expect("circuit serialization cannot fail")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchmarkKind {
    Regular,
    Erdos,
    Qft,
    Qv,
    Ghz,
    Bv,
    Hs,
    Random,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 8] = [
        BenchmarkKind::Regular,
        BenchmarkKind::Erdos,
        BenchmarkKind::Qft,
        BenchmarkKind::Qv,
        BenchmarkKind::Ghz,
        BenchmarkKind::Bv,
        BenchmarkKind::Hs,
        BenchmarkKind::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Regular => "regular",
            BenchmarkKind::Erdos => "erdos",
            BenchmarkKind::Qft => "qft",
            BenchmarkKind::Qv => "qv",
            BenchmarkKind::Ghz => "ghz",
            BenchmarkKind::Bv => "bv",
            BenchmarkKind::Hs => "hs",
            BenchmarkKind::Random => "random",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CircuitError::InvalidParams(format!("unknown benchmark kind `{s}`")))
    }
}

/// Kind-specific generator parameters. Fields irrelevant to a kind are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkParams {
    /// QAOA layer count for `regular` and `erdos`.
    pub qaoa_layers: usize,
    /// Edge probability for `erdos`.
    pub edge_probability: f64,
    /// Hidden string for `bv`; drawn from the seed when absent.
    pub hidden_string: Option<Vec<bool>>,
    /// Gate count for `random`.
    pub gate_count: usize,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        Self {
            qaoa_layers: 1,
            edge_probability: 0.5,
            hidden_string: None,
            gate_count: 20,
        }
    }
}

/// Parses a bit string such as `"101"` into a hidden string.
pub fn parse_bit_string(s: &str) -> Result<Vec<bool>, CircuitError> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(CircuitError::InvalidParams(format!("bad bit `{c}` in hidden string"))),
        })
        .collect()
}

pub fn generate_benchmark(
    kind: BenchmarkKind,
    num_qubits: usize,
    seed: u64,
    params: &BenchmarkParams,
) -> Result<LogicalCircuit, CircuitError> {
    if num_qubits < 2 {
        return Err(CircuitError::InvalidParams("at least 2 qubits required".into()));
    }
    let n = num_qubits;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<(usize, usize)> = match kind {
        BenchmarkKind::Ghz => (0..n - 1).map(|i| (i, i + 1)).collect(),
        BenchmarkKind::Qft => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect(),
        BenchmarkKind::Bv => {
            let hidden = match &params.hidden_string {
                Some(bits) if bits.len() == n - 1 => bits.clone(),
                Some(bits) => {
                    return Err(CircuitError::InvalidParams(format!(
                        "hidden string has length {}, expected {}",
                        bits.len(),
                        n - 1
                    )))
                }
                None => (0..n - 1).map(|_| rng.gen_bool(0.5)).collect(),
            };
            hidden
                .iter()
                .enumerate()
                .filter(|(_, &bit)| bit)
                .map(|(i, _)| (i, n - 1))
                .collect()
        }
        BenchmarkKind::Regular | BenchmarkKind::Erdos => {
            if params.qaoa_layers == 0 {
                return Err(CircuitError::InvalidParams("QAOA layer count must be >= 1".into()));
            }
            let edges = if kind == BenchmarkKind::Regular {
                random_regular_graph(n, &mut rng)?
            } else {
                let p = params.edge_probability;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(CircuitError::InvalidParams(format!(
                        "edge probability {p} outside (0, 1]"
                    )));
                }
                let mut edges = Vec::new();
                for i in 0..n {
                    for j in i + 1..n {
                        if rng.gen_bool(p) {
                            edges.push((i, j));
                        }
                    }
                }
                edges
            };
            let mut pairs = Vec::with_capacity(edges.len() * params.qaoa_layers);
            for _ in 0..params.qaoa_layers {
                pairs.extend_from_slice(&edges);
            }
            pairs
        }
        BenchmarkKind::Qv => (0..n).flat_map(|_| random_pairing(n, &mut rng)).collect(),
        BenchmarkKind::Hs => {
            let first = random_pairing(n, &mut rng);
            let second = random_pairing(n, &mut rng);
            first
                .iter()
                .chain(first.iter())
                .chain(second.iter())
                .copied()
                .collect()
        }
        BenchmarkKind::Random => {
            let m = params.gate_count;
            (0..m)
                .map(|_| {
                    let a = rng.gen_range(0..n);
                    let mut b = rng.gen_range(0..n - 1);
                    if b >= a {
                        b += 1;
                    }
                    (a, b)
                })
                .collect()
        }
    };
    LogicalCircuit::new(n, pairs)
}

/// One random perfect (or near-perfect, for odd n) matching of the qubits.
fn random_pairing(n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks_exact(2).map(|c| (c[0], c[1])).collect()
}

/// Random 3-regular simple graph by the pairing model with rejection.
fn random_regular_graph(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<(usize, usize)>, CircuitError> {
    if !n.is_multiple_of(2) || n < 4 {
        return Err(CircuitError::InvalidParams(format!(
            "a 3-regular graph needs an even qubit count >= 4, got {n}"
        )));
    }
    let mut points: Vec<usize> = (0..3 * n).map(|p| p / 3).collect();
    'attempt: loop {
        points.shuffle(rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(3 * n / 2);
        for pair in points.chunks_exact(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a == b || edges.contains(&(a, b)) {
                continue 'attempt;
            }
            edges.push((a, b));
        }
        edges.sort_unstable();
        return Ok(edges);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig1() -> LogicalCircuit {
        LogicalCircuit::new(5, [(0, 2), (1, 3), (1, 4), (3, 4)]).unwrap()
    }

    #[test]
    fn parses_fig1_circuit() {
        let c = parse_circuit(r#"{"num_qubits":5,"gates":[[0,2],[1,3],[1,4],[3,4]]}"#).unwrap();
        assert_eq!(c, fig1());
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn parses_empty_circuit() {
        let c = parse_circuit(r#"{"num_qubits":2,"gates":[]}"#).unwrap();
        assert!(c.is_empty());
        assert_eq!(c.num_qubits(), 2);
    }

    #[test]
    fn rejects_out_of_range_qubit() {
        let err = parse_circuit(r#"{"num_qubits":3,"gates":[[0,3]]}"#).unwrap_err();
        assert!(matches!(err, CircuitError::QubitOutOfRange { qubit: 3, .. }));
    }

    #[test]
    fn rejects_duplicate_qubit_and_bad_json() {
        assert!(matches!(
            parse_circuit(r#"{"num_qubits":3,"gates":[[1,1]]}"#),
            Err(CircuitError::DuplicateQubit { qubit: 1, .. })
        ));
        assert!(matches!(parse_circuit("{\"num_qubits\":3"), Err(CircuitError::Malformed(_))));
        assert!(matches!(
            parse_circuit(r#"{"num_qubits":3,"gates":[[0,1,2]]}"#),
            Err(CircuitError::Malformed(_))
        ));
    }

    #[test]
    fn drops_single_qubit_gates_with_count() {
        let (c, report) =
            parse_circuit_with_report(r#"{"num_qubits":3,"gates":[[0],[0,1],[2],[1,2]]}"#).unwrap();
        assert_eq!(report.dropped_single_qubit, 2);
        assert_eq!(c.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        assert_eq!(c.gates()[1].index, 1);
    }

    #[test]
    fn serializes_canonically() {
        let empty = LogicalCircuit::new(3, []).unwrap();
        assert_eq!(serialize_circuit(&empty), r#"{"num_qubits":3,"gates":[]}"#);
        assert_eq!(
            serialize_circuit(&fig1()),
            r#"{"num_qubits":5,"gates":[[0,2],[1,3],[1,4],[3,4]]}"#
        );
        assert_eq!(parse_circuit(&serialize_circuit(&fig1())).unwrap(), fig1());
    }

    #[test]
    fn dag_depths() {
        assert_eq!(build_dag(&fig1()).depth, vec![1, 1, 2, 3]);
        assert_eq!(build_dag(&fig1()).predecessors, vec![vec![], vec![], vec![1], vec![1, 2]]);

        let disjoint = LogicalCircuit::new(6, [(0, 1), (2, 3), (4, 5)]).unwrap();
        assert_eq!(build_dag(&disjoint).depth, vec![1, 1, 1]);

        let chain = LogicalCircuit::new(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        let dag = build_dag(&chain);
        assert_eq!(dag.depth, vec![1, 2, 3]);
        assert_eq!(dag.predecessors, vec![vec![], vec![0], vec![1]]);
    }

    #[test]
    fn repeated_pair_has_single_predecessor() {
        let c = LogicalCircuit::new(2, [(0, 1), (1, 0)]).unwrap();
        assert_eq!(build_dag(&c).predecessors[1], vec![0]);
    }

    #[test]
    fn fixed_generators() {
        let p = BenchmarkParams::default();
        let ghz = generate_benchmark(BenchmarkKind::Ghz, 5, 0, &p).unwrap();
        assert_eq!(ghz.pairs().collect::<Vec<_>>(), vec![(0, 1), (1, 2), (2, 3), (3, 4)]);

        let qft = generate_benchmark(BenchmarkKind::Qft, 4, 0, &p).unwrap();
        assert_eq!(qft.len(), 6);
        assert_eq!(qft.pairs().next(), Some((0, 1)));
        assert_eq!(qft.pairs().last(), Some((2, 3)));

        let bv_params = BenchmarkParams {
            hidden_string: Some(parse_bit_string("101").unwrap()),
            ..BenchmarkParams::default()
        };
        let bv = generate_benchmark(BenchmarkKind::Bv, 4, 0, &bv_params).unwrap();
        assert_eq!(bv.pairs().collect::<Vec<_>>(), vec![(0, 3), (2, 3)]);
    }

    #[test]
    fn random_generator_count_and_validity() {
        let p = BenchmarkParams {
            gate_count: 10,
            ..BenchmarkParams::default()
        };
        let c = generate_benchmark(BenchmarkKind::Random, 5, 7, &p).unwrap();
        assert_eq!(c.len(), 10);
        assert!(c.pairs().all(|(a, b)| a != b && a < 5 && b < 5));
    }

    #[test]
    fn regular_graph_is_three_regular() {
        let c = generate_benchmark(BenchmarkKind::Regular, 10, 3, &BenchmarkParams::default()).unwrap();
        assert_eq!(c.len(), 15);
        let mut degree = [0; 10];
        for (a, b) in c.pairs() {
            degree[a] += 1;
            degree[b] += 1;
        }
        assert!(degree.iter().all(|&d| d == 3));
        let two_layers = BenchmarkParams {
            qaoa_layers: 2,
            ..BenchmarkParams::default()
        };
        assert_eq!(generate_benchmark(BenchmarkKind::Regular, 10, 3, &two_layers).unwrap().len(), 30);
    }

    #[test]
    fn invalid_params_rejected() {
        let p = BenchmarkParams::default();
        assert!(generate_benchmark(BenchmarkKind::Regular, 5, 0, &p).is_err());
        assert!(generate_benchmark(BenchmarkKind::Ghz, 1, 0, &p).is_err());
        let bad_p = BenchmarkParams {
            edge_probability: 0.0,
            ..p.clone()
        };
        assert!(generate_benchmark(BenchmarkKind::Erdos, 5, 0, &bad_p).is_err());
        let bad_bv = BenchmarkParams {
            hidden_string: Some(vec![true]),
            ..p
        };
        assert!(generate_benchmark(BenchmarkKind::Bv, 5, 0, &bad_bv).is_err());
    }

    #[test]
    fn structured_generators_shapes() {
        let p = BenchmarkParams::default();
        let qv = generate_benchmark(BenchmarkKind::Qv, 6, 1, &p).unwrap();
        assert_eq!(qv.len(), 6 * 3);
        let hs = generate_benchmark(BenchmarkKind::Hs, 6, 1, &p).unwrap();
        let g: Vec<_> = hs.pairs().collect();
        assert_eq!(g.len(), 9);
        assert_eq!(g[0..3], g[3..6]);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in BenchmarkKind::ALL {
            assert_eq!(kind.name().parse::<BenchmarkKind>().unwrap(), kind);
        }
        assert!("qaoa".parse::<BenchmarkKind>().is_err());
    }
}
