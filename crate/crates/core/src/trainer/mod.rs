//! Self-play training: live circuits are stepped with actions sampled from the
//! policy, visited states feed a replay buffer, and once the buffer passes a
//! threshold every episode trains on a batch labelled by tree search.

mod buffer;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use buffer::ReplayBuffer;

use crate::agent::{
    adam_step, encode_state, gradients, loss_terms, AgentError, AgentModel, OptimizerState, Sample,
};
use crate::baselines::basic_swap;
use crate::circuit::{generate_benchmark, BenchmarkKind, BenchmarkParams, CircuitError};
use crate::env::{default_step_cap, init_state, random_mapping, trivial_mapping, RouteError, RoutingState};
use crate::mcts::{search, SearchError, DEFAULT_EXPLORATION};
use crate::topology::Topology;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("non-finite {what} at episode {episode}")]
    NonFinite { episode: usize, what: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Route(#[from] RouteError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    Fixed(f64),
    /// `mean(l1) / mean(l2)` over the first training batch.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainMapping {
    Trivial,
    Random,
}

#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub topology: Topology,
    pub benchmark: BenchmarkKind,
    pub benchmark_params: BenchmarkParams,
    /// Logical qubits per generated circuit.
    pub circuit_qubits: usize,
    pub mapping: TrainMapping,
    pub circuit_count: usize,
    pub episodes: usize,
    pub rollouts: usize,
    pub batch_size: usize,
    pub buffer_threshold: usize,
    pub buffer_capacity: usize,
    pub alpha: AlphaMode,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub exploration: f64,
    /// Replace finished circuits with fresh ones. When false, finished
    /// circuits are retired for good.
    pub regenerate: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(topology: Topology, benchmark: BenchmarkKind) -> Self {
        let circuit_qubits = topology.num_qubits();
        Self {
            topology,
            benchmark,
            benchmark_params: BenchmarkParams::default(),
            circuit_qubits,
            mapping: TrainMapping::Trivial,
            circuit_count: 8,
            episodes: 100,
            rollouts: 200,
            batch_size: 32,
            buffer_threshold: 320,
            buffer_capacity: 10_000,
            alpha: AlphaMode::Fixed(1.0),
            learning_rate: 0.1,
            lr_decay: 0.8,
            exploration: DEFAULT_EXPLORATION,
            regenerate: true,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::InvalidConfig(m.into()));
        if self.circuit_count == 0 || self.rollouts == 0 || self.batch_size == 0 || self.buffer_capacity == 0 {
            return bad("counts must be positive");
        }
        if self.buffer_threshold < self.batch_size {
            return bad("buffer threshold must be at least the batch size");
        }
        if self.buffer_capacity <= self.buffer_threshold {
            return bad("buffer capacity must exceed the threshold");
        }
        if self.circuit_qubits == 0 || self.circuit_qubits > self.topology.num_qubits() {
            return bad("circuit width must be between 1 and the device size");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be positive");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return bad("learning-rate decay must be in (0, 1]");
        }
        if let AlphaMode::Fixed(a) = self.alpha {
            if !(a >= 0.0 && a.is_finite()) {
                return bad("alpha must be non-negative");
            }
        }
        Ok(())
    }
}

/// One JSON-lines record per episode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Batch loss of this episode's update, if one ran.
    pub mean_loss: Option<f64>,
    /// Optimizer updates so far.
    pub updates: usize,
    pub buffer_size: usize,
    /// Learning rate after this episode's decay.
    pub lr: f64,
    /// Mean swap count of circuits that finished during this episode.
    pub mean_episode_swaps: Option<f64>,
}

impl EpisodeLog {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("log record serializes")
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: AgentModel,
    pub optimizer: OptimizerState,
    pub log: Vec<EpisodeLog>,
    /// The trade-off actually used; `None` if auto mode never saw a batch.
    pub alpha: Option<f64>,
}

// Independent streams derived from the one seed.
const STREAM_CIRCUITS: u64 = 1;
const STREAM_ACTIONS: u64 = 2;
const STREAM_BATCHES: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

struct LiveCircuit {
    state: RoutingState,
    steps: usize,
    cap: usize,
}

fn fresh_circuit(cfg: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<LiveCircuit, TrainError> {
    // Circuits that need no SWAP at all teach nothing; draw again.
    for _ in 0..1000 {
        let circuit_seed: u64 = rng.gen();
        let mapping_seed: u64 = rng.gen();
        let c = generate_benchmark(cfg.benchmark, cfg.circuit_qubits, circuit_seed, &cfg.benchmark_params)?;
        let n = cfg.topology.num_qubits();
        let m = match cfg.mapping {
            TrainMapping::Trivial => trivial_mapping(n),
            TrainMapping::Random => random_mapping(n, mapping_seed),
        };
        let state = init_state(&c, &cfg.topology, &m)?;
        if !state.is_terminal() {
            return Ok(LiveCircuit {
                cap: default_step_cap(c.len()),
                state,
                steps: 0,
            });
        }
    }
    Err(TrainError::InvalidConfig(
        "benchmark only produced circuits that need no routing".into(),
    ))
}

/// Finishes a capped episode with the basic router; returns the SWAPs it adds.
fn finish_with_basic(mut state: RoutingState) -> usize {
    let mut swaps = 0;
    while !state.is_terminal() {
        state = state.step(basic_swap(&state)).expect("basic router picks valid edges").0;
        swaps += 1;
    }
    swaps
}

pub fn train(cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    cfg.validate()?;
    let mut model = AgentModel::for_topology(&cfg.topology, cfg.seed);
    let mut opt = OptimizerState::new(&model, cfg.learning_rate, cfg.lr_decay);
    let mut circuit_rng = stream(cfg.seed, STREAM_CIRCUITS);
    let mut action_rng = stream(cfg.seed, STREAM_ACTIONS);
    let mut batch_rng = stream(cfg.seed, STREAM_BATCHES);

    let mut live: Vec<Option<LiveCircuit>> = (0..cfg.circuit_count)
        .map(|_| fresh_circuit(cfg, &mut circuit_rng).map(Some))
        .collect::<Result<_, _>>()?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut alpha = match cfg.alpha {
        AlphaMode::Fixed(a) => Some(a),
        AlphaMode::Auto => None,
    };
    let mut updates = 0;
    let mut log = Vec::with_capacity(cfg.episodes);

    for episode in 1..=cfg.episodes {
        let mut finished_swaps = Vec::new();
        for slot in live.iter_mut() {
            let Some(circuit) = slot else { continue };
            let policy = model.predict(&circuit.state).policy;
            let action = WeightedIndex::new(&policy)
                .map_err(|_| TrainError::NonFinite {
                    episode,
                    what: "policy".into(),
                })?
                .sample(&mut action_rng);
            let (next, _) = circuit.state.step(action)?;
            buffer.push(std::mem::replace(&mut circuit.state, next));
            circuit.steps += 1;

            let done = if circuit.state.is_terminal() {
                Some(circuit.steps)
            } else if circuit.steps >= circuit.cap {
                Some(circuit.steps + finish_with_basic(circuit.state.clone()))
            } else {
                None
            };
            if let Some(swaps) = done {
                finished_swaps.push(swaps as f64);
                *slot = if cfg.regenerate {
                    Some(fresh_circuit(cfg, &mut circuit_rng)?)
                } else {
                    None
                };
            }
        }

        let mut mean_loss = None;
        if buffer.len() > cfg.buffer_threshold {
            let states = buffer.sample(&mut batch_rng, cfg.batch_size);
            let frozen = &model;
            let targets = states
                .par_iter()
                .map(|s| search(s, frozen, cfg.rollouts, cfg.exploration))
                .collect::<Result<Vec<_>, _>>()?;
            let batch: Vec<Sample> = states
                .iter()
                .zip(&targets)
                .map(|(s, t)| Sample {
                    features: encode_state(s, &model, model.config.lookahead),
                    mcts_action: t.best_action,
                    mcts_value: t.root_value,
                })
                .collect();
            let a = *alpha.get_or_insert_with(|| auto_alpha(&model, &states, &batch));
            let (grads, loss) = gradients(&model, &batch, a).map_err(|e| match e {
                AgentError::NonFinite(what) => TrainError::NonFinite {
                    episode,
                    what: what.into(),
                },
                other => other.into(),
            })?;
            adam_step(&mut model, &grads, &mut opt)?;
            updates += 1;
            mean_loss = Some(loss);
        }

        opt.settings.learning_rate = cfg.learning_rate * cfg.lr_decay.powi(episode as i32);
        log.push(EpisodeLog {
            episode,
            mean_loss,
            updates,
            buffer_size: buffer.len(),
            lr: opt.settings.learning_rate,
            mean_episode_swaps: (!finished_swaps.is_empty())
                .then(|| finished_swaps.iter().sum::<f64>() / finished_swaps.len() as f64),
        });
    }

    Ok(TrainOutcome {
        model,
        optimizer: opt,
        log,
        alpha,
    })
}

fn auto_alpha(model: &AgentModel, states: &[&RoutingState], batch: &[Sample]) -> f64 {
    let (mut l1, mut l2) = (0.0, 0.0);
    for (s, sample) in states.iter().zip(batch) {
        let p = model.predict(s);
        let (a, b) = loss_terms(&p.policy, p.value, sample.mcts_action, sample.mcts_value);
        l1 += a;
        l2 += b;
    }
    if l2 > 0.0 {
        l1 / l2
    } else {
        1.0
    }
}
