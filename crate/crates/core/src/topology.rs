//! Coupling graphs over physical qubits and their hop-count distances.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("malformed topology file: {0}")]
    Malformed(String),
    #[error("invalid topology dimensions: {0}")]
    InvalidDimensions(String),
    #[error("edge ({0}, {1}) references a qubit outside the device")]
    QubitOutOfRange(usize, usize),
    #[error("self-loop on qubit {0}")]
    SelfLoop(usize),
    #[error("duplicate edge ({0}, {1})")]
    DuplicateEdge(usize, usize),
    #[error("coupling graph is disconnected")]
    Disconnected,
    #[error("unknown topology `{0}`")]
    Unknown(String),
}

/// Edge list of the 16-qubit heavy-hex device.
pub const GUADALUPE_EDGES: [(usize, usize); 16] = [
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 5),
    (1, 4),
    (4, 7),
    (5, 8),
    (6, 7),
    (7, 10),
    (8, 9),
    (8, 11),
    (10, 12),
    (11, 14),
    (12, 13),
    (12, 15),
    (13, 14),
];

/// An undirected, connected coupling graph. Edges are stored as `(low, high)`
/// pairs in ascending order; an edge's position in [`Topology::edges`] is its
/// action index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    num_qubits: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    edge_index: Vec<Option<usize>>,
    distances: DistanceMatrix,
}

impl Topology {
    pub fn new(
        num_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, TopologyError> {
        let mut normalized = Vec::new();
        for (a, b) in edges {
            if a >= num_qubits || b >= num_qubits {
                return Err(TopologyError::QubitOutOfRange(a, b));
            }
            if a == b {
                return Err(TopologyError::SelfLoop(a));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        if let Some(w) = normalized.windows(2).find(|w| w[0] == w[1]) {
            return Err(TopologyError::DuplicateEdge(w[0].0, w[0].1));
        }
        if num_qubits == 0 {
            return Err(TopologyError::InvalidDimensions("no qubits".into()));
        }

        let mut neighbors = vec![Vec::new(); num_qubits];
        let mut edge_index = vec![None; num_qubits * num_qubits];
        for (i, &(a, b)) in normalized.iter().enumerate() {
            neighbors[a].push(b);
            neighbors[b].push(a);
            edge_index[a * num_qubits + b] = Some(i);
            edge_index[b * num_qubits + a] = Some(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let distances = DistanceMatrix::from_neighbors(&neighbors)?;
        Ok(Self {
            num_qubits,
            edges: normalized,
            neighbors,
            edge_index,
            distances,
        })
    }

    /// `n` qubits on a cycle.
    pub fn ring(n: usize) -> Result<Self, TopologyError> {
        if n < 3 {
            return Err(TopologyError::InvalidDimensions(format!("ring needs n >= 3, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Nearest-neighbour lattice, qubits numbered row-major.
    pub fn grid(rows: usize, cols: usize) -> Result<Self, TopologyError> {
        if rows == 0 || cols == 0 || rows * cols < 2 {
            return Err(TopologyError::InvalidDimensions(format!(
                "grid {rows}x{cols} needs rows, cols >= 1 and at least 2 qubits"
            )));
        }
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        Self::new(rows * cols, edges)
    }

    /// A path of `n` qubits; same as `grid(1, n)`.
    pub fn line(n: usize) -> Result<Self, TopologyError> {
        Self::grid(1, n)
    }

    pub fn guadalupe() -> Self {
        Self::new(16, GUADALUPE_EDGES).expect("fixed edge list is valid")
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.neighbors[q]
    }

    pub fn are_adjacent(&self, a: usize, b: usize) -> bool {
        self.edge_index[a * self.num_qubits + b].is_some()
    }

    /// Action index of the edge between `a` and `b`, if coupled.
    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index[a * self.num_qubits + b]
    }

    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.distances.get(a, b)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Short content hash identifying the coupling graph.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(serialize_topology(self).as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// All-pairs hop counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    dist: Vec<u32>,
}

impl DistanceMatrix {
    fn from_neighbors(neighbors: &[Vec<usize>]) -> Result<Self, TopologyError> {
        let n = neighbors.len();
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for source in 0..n {
            let row = &mut dist[source * n..(source + 1) * n];
            row[source] = 0;
            queue.push_back(source);
            while let Some(v) = queue.pop_front() {
                for &w in &neighbors[v] {
                    if row[w] == u32::MAX {
                        row[w] = row[v] + 1;
                        queue.push_back(w);
                    }
                }
            }
            if row.contains(&u32::MAX) {
                return Err(TopologyError::Disconnected);
            }
        }
        Ok(Self { n, dist })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.dist[a * self.n + b]
    }
}

pub fn all_pairs_distance(topology: &Topology) -> DistanceMatrix {
    topology.distances.clone()
}

/// Named device families.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyKind {
    Ring(usize),
    Grid(usize, usize),
    Guadalupe,
}

impl TopologyKind {
    pub fn build(self) -> Result<Topology, TopologyError> {
        match self {
            TopologyKind::Ring(n) => Topology::ring(n),
            TopologyKind::Grid(r, c) => Topology::grid(r, c),
            TopologyKind::Guadalupe => Ok(Topology::guadalupe()),
        }
    }
}

pub fn build_topology(kind: TopologyKind) -> Result<Topology, TopologyError> {
    kind.build()
}

impl fmt::Display for TopologyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TopologyKind::Ring(n) => write!(f, "ring{n}"),
            TopologyKind::Grid(r, c) => write!(f, "grid{r}x{c}"),
            TopologyKind::Guadalupe => f.write_str("guadalupe"),
        }
    }
}

/// Accepts `ringN`, `lineN`, `gridRxC`, and the device aliases `tokyo`
/// (3x4 grid), `oqc` (ring of 8) and `guadalupe`.
impl FromStr for TopologyKind {
    type Err = TopologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        let unknown = || TopologyError::Unknown(s.to_string());
        match lower.as_str() {
            "tokyo" => return Ok(TopologyKind::Grid(3, 4)),
            "oqc" => return Ok(TopologyKind::Ring(8)),
            "guadalupe" => return Ok(TopologyKind::Guadalupe),
            _ => {}
        }
        if let Some(n) = lower.strip_prefix("ring") {
            return n.parse().map(TopologyKind::Ring).map_err(|_| unknown());
        }
        if let Some(n) = lower.strip_prefix("line") {
            return n.parse().map(|n| TopologyKind::Grid(1, n)).map_err(|_| unknown());
        }
        if let Some(dims) = lower.strip_prefix("grid") {
            let (r, c) = dims.split_once('x').ok_or_else(unknown)?;
            let r = r.parse().map_err(|_| unknown())?;
            let c = c.parse().map_err(|_| unknown())?;
            return Ok(TopologyKind::Grid(r, c));
        }
        Err(unknown())
    }
}

#[derive(Serialize, Deserialize)]
struct TopologyFile {
    num_qubits: usize,
    edges: Vec<[usize; 2]>,
}

pub fn parse_topology(text: &str) -> Result<Topology, TopologyError> {
    let file: TopologyFile =
        serde_json::from_str(text).map_err(|e| TopologyError::Malformed(e.to_string()))?;
    Topology::new(file.num_qubits, file.edges.into_iter().map(|[a, b]| (a, b)))
}

pub fn serialize_topology(topology: &Topology) -> String {
    let file = TopologyFile {
        num_qubits: topology.num_qubits,
        edges: topology.edges.iter().map(|&(a, b)| [a, b]).collect(),
    };
    serde_json::to_string(&file).expect("topology serialization cannot fail")
}
