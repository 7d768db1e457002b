//! Transformer actor-critic over routing states.
//!
//! A state is observed as its first `lookahead` remaining gates. Each gate
//! becomes the mean of the learned embeddings of its two physical qubits plus
//! a scaled depth feature; rows are projected to the model width, given
//! sinusoidal positions, run through a masked transformer encoder, and
//! mean-pooled into a policy head (one logit per coupling edge) and a scalar
//! value head.
//!
//! All arithmetic is `f64`. Parameters and optimizer moments are kept at
//! `f32` precision (rounded after initialization and after every update) so
//! that checkpoints, which store `f32`, round-trip exactly.

mod adam;
mod checkpoint;
mod encoding;
mod loss;
mod network;
mod tensor;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use adam::{adam_step, OptimizerState};
pub use checkpoint::{load_checkpoint, load_checkpoint_for, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use encoding::{encode_state, observe, positional_encoding, FeatureMatrix, Observation};
pub use loss::{batch_loss, gradient_check, gradients, loss, loss_terms, Sample, LOG_CLAMP};
pub use network::{forward, Prediction};
pub use tensor::{Mat, Tensor};

use crate::env::RoutingState;
use crate::mcts::ValueEstimator;
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
    #[error("checkpoint was trained for {found}, expected {expected}")]
    TopologyMismatch { expected: String, found: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Network hyperparameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub num_qubits: usize,
    pub num_actions: usize,
    pub embedding_dim: usize,
    pub model_dim: usize,
    pub num_heads: usize,
    pub num_layers: usize,
    pub ffn_dim: usize,
    pub lookahead: usize,
}

impl AgentConfig {
    /// Defaults: 20-wide qubit embeddings, 4 layers of 6 heads at width 24,
    /// and a 48-gate lookahead window.
    pub fn for_topology(topology: &Topology) -> Self {
        Self {
            num_qubits: topology.num_qubits(),
            num_actions: topology.num_edges(),
            embedding_dim: 20,
            model_dim: 24,
            num_heads: 6,
            num_layers: 4,
            ffn_dim: 96,
            lookahead: 48,
        }
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let positive = [
            self.num_qubits,
            self.num_actions,
            self.embedding_dim,
            self.model_dim,
            self.num_heads,
            self.num_layers,
            self.ffn_dim,
            self.lookahead,
        ];
        if positive.contains(&0) {
            return Err(AgentError::InvalidConfig("all sizes must be positive".into()));
        }
        if !self.model_dim.is_multiple_of(self.num_heads) {
            return Err(AgentError::InvalidConfig(format!(
                "model width {} is not divisible by {} heads",
                self.model_dim, self.num_heads
            )));
        }
        if !self.model_dim.is_multiple_of(2) {
            return Err(AgentError::InvalidConfig("model width must be even".into()));
        }
        Ok(())
    }

    pub fn feature_width(&self) -> usize {
        self.embedding_dim + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub wq: Tensor,
    pub bq: Tensor,
    pub wk: Tensor,
    pub bk: Tensor,
    pub wv: Tensor,
    pub bv: Tensor,
    pub wo: Tensor,
    pub bo: Tensor,
    pub norm1_gain: Tensor,
    pub norm1_bias: Tensor,
    pub ffn_w1: Tensor,
    pub ffn_b1: Tensor,
    pub ffn_w2: Tensor,
    pub ffn_b2: Tensor,
    pub norm2_gain: Tensor,
    pub norm2_bias: Tensor,
}

const LAYER_TENSOR_NAMES: [&str; 16] = [
    "attn.wq", "attn.bq", "attn.wk", "attn.bk", "attn.wv", "attn.bv", "attn.wo", "attn.bo", "norm1.gain",
    "norm1.bias", "ffn.w1", "ffn.b1", "ffn.w2", "ffn.b2", "norm2.gain", "norm2.bias",
];

impl LayerParams {
    fn tensors(&self) -> [&Tensor; 16] {
        [
            &self.wq,
            &self.bq,
            &self.wk,
            &self.bk,
            &self.wv,
            &self.bv,
            &self.wo,
            &self.bo,
            &self.norm1_gain,
            &self.norm1_bias,
            &self.ffn_w1,
            &self.ffn_b1,
            &self.ffn_w2,
            &self.ffn_b2,
            &self.norm2_gain,
            &self.norm2_bias,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor; 16] {
        [
            &mut self.wq,
            &mut self.bq,
            &mut self.wk,
            &mut self.bk,
            &mut self.wv,
            &mut self.bv,
            &mut self.wo,
            &mut self.bo,
            &mut self.norm1_gain,
            &mut self.norm1_bias,
            &mut self.ffn_w1,
            &mut self.ffn_b1,
            &mut self.ffn_w2,
            &mut self.ffn_b2,
            &mut self.norm2_gain,
            &mut self.norm2_bias,
        ]
    }
}

/// Every trainable tensor of the network. Also used for gradients and
/// optimizer moments, which share the parameter layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub embedding: Tensor,
    pub input_w: Tensor,
    pub input_b: Tensor,
    pub layers: Vec<LayerParams>,
    pub policy_w: Tensor,
    pub policy_b: Tensor,
    pub value_w: Tensor,
    pub value_b: Tensor,
}

impl Params {
    fn init(config: &AgentConfig, rng: &mut ChaCha8Rng) -> Self {
        let d = config.model_dim;
        let ff = config.ffn_dim;
        let mut uniform = |shape: &[usize], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            let mut t = Tensor::zeros(shape);
            for v in &mut t.data {
                *v = rng.gen_range(-bound..bound);
            }
            t
        };
        let embedding = uniform(&[config.num_qubits, config.embedding_dim], 1);
        let input_w = uniform(&[config.feature_width(), d], config.feature_width());
        let input_b = uniform(&[d], config.feature_width());
        let layers = (0..config.num_layers)
            .map(|_| LayerParams {
                wq: uniform(&[d, d], d),
                bq: uniform(&[d], d),
                wk: uniform(&[d, d], d),
                bk: uniform(&[d], d),
                wv: uniform(&[d, d], d),
                bv: uniform(&[d], d),
                wo: uniform(&[d, d], d),
                bo: uniform(&[d], d),
                norm1_gain: Tensor::filled(&[d], 1.0),
                norm1_bias: Tensor::zeros(&[d]),
                ffn_w1: uniform(&[d, ff], d),
                ffn_b1: uniform(&[ff], d),
                ffn_w2: uniform(&[ff, d], ff),
                ffn_b2: uniform(&[d], ff),
                norm2_gain: Tensor::filled(&[d], 1.0),
                norm2_bias: Tensor::zeros(&[d]),
            })
            .collect();
        let policy_w = uniform(&[d, config.num_actions], d);
        let policy_b = uniform(&[config.num_actions], d);
        let value_w = uniform(&[d, 1], d);
        let value_b = uniform(&[1], d);
        let mut params = Self {
            embedding,
            input_w,
            input_b,
            layers,
            policy_w,
            policy_b,
            value_w,
            value_b,
        };
        params.snap_to_f32();
        params
    }

    /// Stable tensor names, in serialization order.
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["embedding".to_string(), "input.w".into(), "input.b".into()];
        for i in 0..self.layers.len() {
            names.extend(LAYER_TENSOR_NAMES.iter().map(|n| format!("layer{i}.{n}")));
        }
        names.extend(["policy.w", "policy.b", "value.w", "value.b"].map(String::from));
        names
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.embedding, &self.input_w, &self.input_b];
        for layer in &self.layers {
            out.extend(layer.tensors());
        }
        out.extend([&self.policy_w, &self.policy_b, &self.value_w, &self.value_b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.embedding, &mut self.input_w, &mut self.input_b];
        for layer in &mut self.layers {
            out.extend(layer.tensors_mut());
        }
        out.extend([&mut self.policy_w, &mut self.policy_b, &mut self.value_w, &mut self.value_b]);
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.iter_mut().for_each(|v| *v = 0.0);
        }
        z
    }

    pub fn num_values(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn snap_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.snap_to_f32();
        }
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.is_finite())
    }

    pub fn same_shapes(&self, other: &Params) -> bool {
        let (a, b) = (self.tensors(), other.tensors());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.shape == y.shape)
    }
}

/// Network parameters together with the device they were built for.
#[derive(Clone, Debug, PartialEq)]
pub struct AgentModel {
    pub config: AgentConfig,
    pub topology_fingerprint: String,
    pub params: Params,
}

impl AgentModel {
    /// Seeded initialization with uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))
    /// weights and unit layer-norm gains.
    pub fn new(config: AgentConfig, topology_fingerprint: impl Into<String>, seed: u64) -> Result<Self, AgentError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = Params::init(&config, &mut rng);
        Ok(Self {
            config,
            topology_fingerprint: topology_fingerprint.into(),
            params,
        })
    }

    pub fn for_topology(topology: &Topology, seed: u64) -> Self {
        Self::new(AgentConfig::for_topology(topology), topology.fingerprint(), seed)
            .expect("default configuration is valid")
    }

    /// Errors unless the model was built for this coupling graph.
    pub fn check_topology(&self, topology: &Topology) -> Result<(), AgentError> {
        if self.config.num_actions != topology.num_edges() || self.config.num_qubits != topology.num_qubits() {
            return Err(AgentError::TopologyMismatch {
                expected: format!("{} qubits / {} edges", topology.num_qubits(), topology.num_edges()),
                found: format!("{} qubits / {} edges", self.config.num_qubits, self.config.num_actions),
            });
        }
        if self.topology_fingerprint != topology.fingerprint() {
            return Err(AgentError::TopologyMismatch {
                expected: topology.fingerprint(),
                found: self.topology_fingerprint.clone(),
            });
        }
        Ok(())
    }

    pub fn predict(&self, state: &RoutingState) -> Prediction {
        forward(self, &encode_state(state, self, self.config.lookahead))
    }

    /// Highest-probability action, lowest index on ties.
    pub fn greedy_action(&self, state: &RoutingState) -> usize {
        let p = self.predict(state).policy;
        let mut best = 0;
        for (i, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = i;
            }
        }
        best
    }
}

impl ValueEstimator for AgentModel {
    fn value(&self, state: &RoutingState) -> f64 {
        self.predict(state).value
    }
}
