use qroute_core::agent::{
    encode_state, gradient_check, load_checkpoint, save_checkpoint, AgentConfig, AgentModel, OptimizerState, Sample,
};
use qroute_core::circuit::{generate_benchmark, BenchmarkKind, BenchmarkParams};
use qroute_core::env::{init_state, random_mapping};
use qroute_core::topology::Topology;

fn tiny_model(t: &Topology, seed: u64) -> AgentModel {
    let config = AgentConfig {
        num_qubits: t.num_qubits(),
        num_actions: t.num_edges(),
        embedding_dim: 5,
        model_dim: 12,
        num_heads: 3,
        num_layers: 2,
        ffn_dim: 16,
        lookahead: 6,
    };
    AgentModel::new(config, t.fingerprint(), seed).unwrap()
}

fn batch(t: &Topology, model: &AgentModel, seed: u64) -> Vec<Sample> {
    let params = BenchmarkParams {
        gate_count: 5,
        ..Default::default()
    };
    (0..3)
        .filter_map(|i| {
            let c = generate_benchmark(BenchmarkKind::Random, 4, seed * 10 + i, &params).unwrap();
            let s = init_state(&c, t, &random_mapping(4, seed * 7 + i)).unwrap();
            (!s.is_terminal()).then(|| Sample {
                features: encode_state(&s, model, model.config.lookahead),
                mcts_action: (seed + i) as usize % t.num_edges(),
                mcts_value: i as f64 - 1.3,
            })
        })
        .collect()
}

#[test]
fn analytic_gradients_match_central_differences() {
    let t = Topology::ring(4).unwrap();
    for seed in 0..5 {
        let model = tiny_model(&t, seed);
        let b = batch(&t, &model, seed);
        assert!(!b.is_empty());
        for (name, err) in gradient_check(&model, &b, 0.7, 1e-4).unwrap() {
            assert!(err < 1e-4, "seed {seed}, {name}: relative error {err:e}");
        }
    }
}

#[test]
fn checkpoint_round_trip_preserves_predictions() {
    let t = Topology::grid(2, 3).unwrap();
    let model = AgentModel::for_topology(&t, 3);
    let opt = OptimizerState::with_defaults(&model);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    save_checkpoint(&model, &opt, &path).unwrap();
    let (loaded, _) = load_checkpoint(&path).unwrap();
    let c = generate_benchmark(BenchmarkKind::Qv, 6, 2, &BenchmarkParams::default()).unwrap();
    let s = init_state(&c, &t, &random_mapping(6, 4)).unwrap();
    assert_eq!(model.predict(&s), loaded.predict(&s));
}
