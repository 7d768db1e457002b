use crate::env::RoutingState;

use super::{AgentModel, Mat};

/// Model-independent view of a state: the physical qubit pair and depth of
/// each gate in the lookahead window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Observation {
    pub lookahead: usize,
    pub pairs: Vec<[usize; 2]>,
    pub depths: Vec<usize>,
}

impl Observation {
    pub fn valid_len(&self) -> usize {
        self.pairs.len()
    }
}

/// Takes the first `lookahead` remaining gates in program order. Depth is
/// measured within the remaining circuit: 1 for gates with no unscheduled
/// predecessor, otherwise one more than the deepest unscheduled predecessor.
pub fn observe(state: &RoutingState, lookahead: usize) -> Observation {
    let window = &state.remaining()[..state.remaining().len().min(lookahead)];
    let dag = state.dag();
    let mut pairs = Vec::with_capacity(window.len());
    let mut depths: Vec<usize> = Vec::with_capacity(window.len());
    for (row, &g) in window.iter().enumerate() {
        let (p, q) = state.physical_pair(g);
        pairs.push([p, q]);
        // Unscheduled predecessors precede `g` in the remaining list, so they
        // are inside the window.
        let depth = 1 + dag.predecessors[g]
            .iter()
            .filter(|&&pred| !state.is_scheduled(pred))
            .map(|&pred| {
                let pos = window[..row].binary_search(&pred).expect("pending predecessor is in window");
                depths[pos]
            })
            .max()
            .unwrap_or(0);
        depths.push(depth);
    }
    Observation {
        lookahead,
        pairs,
        depths,
    }
}

/// `lookahead x (embedding_dim + 1)` gate features; rows at or beyond
/// `valid_len` are zero padding.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Mat,
    pub valid_len: usize,
    pub observation: Observation,
}

impl FeatureMatrix {
    pub(crate) fn embed(observation: &Observation, model: &AgentModel) -> Self {
        let e = model.config.embedding_dim;
        let table = &model.params.embedding.data;
        let mut rows = Mat::zeros(observation.lookahead, e + 1);
        for (i, (&[p, q], &depth)) in observation.pairs.iter().zip(&observation.depths).enumerate() {
            let row = rows.row_mut(i);
            for k in 0..e {
                row[k] = 0.5 * (table[p * e + k] + table[q * e + k]);
            }
            row[e] = depth as f64 / observation.lookahead as f64;
        }
        Self {
            rows,
            valid_len: observation.valid_len(),
            observation: observation.clone(),
        }
    }
}

pub fn encode_state(state: &RoutingState, model: &AgentModel, lookahead: usize) -> FeatureMatrix {
    FeatureMatrix::embed(&observe(state, lookahead), model)
}

/// Sinusoidal positions: `sin(pos / 10000^(2i/d))` in even columns and the
/// matching cosine in odd columns.
pub fn positional_encoding(length: usize, d: usize) -> Mat {
    let mut pe = Mat::zeros(length, d);
    for pos in 0..length {
        for i in 0..d.div_ceil(2) {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d as f64);
            pe.data[pos * d + 2 * i] = angle.sin();
            if 2 * i + 1 < d {
                pe.data[pos * d + 2 * i + 1] = angle.cos();
            }
        }
    }
    pe
}
