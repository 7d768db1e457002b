//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each, and
//! exits nonzero if any failed.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qroute_core::agent::{
    gradient_check, encode_state, load_checkpoint, loss, save_checkpoint, AgentConfig, AgentModel, Sample,
};
use qroute_core::baselines::{
    optimal_route, optimal_swap_count, route_basic, route_sabre, route_stochastic, OracleOutcome, DEFAULT_DECAY,
    DEFAULT_LOOKAHEAD_WEIGHT,
};
use qroute_core::circuit::{generate_benchmark, BenchmarkKind, BenchmarkParams, LogicalCircuit};
use qroute_core::env::{
    bidirectional_initial_mapping, default_step_cap, init_state, random_mapping, route, trivial_mapping, verify,
    Mapping, RoutingState,
};
use qroute_core::mcts::{search, ucb, MctsPolicy, ZeroValue, DEFAULT_EXPLORATION};
use qroute_core::topology::Topology;
use qroute_core::trainer::{train, TrainConfig};

// Pinned tolerances and budgets.
const FIG1_BUDGET: Duration = Duration::from_secs(5);
const FUZZ_INSTANCES: usize = 240;
const FUZZ_BUDGET: Duration = Duration::from_secs(60);
const TELESCOPE_EPISODES: usize = 150;
const GRAD_H: f64 = 1e-4;
const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(120);
const LOSS_TOL: f64 = 1e-9;
const LOSS_EXPECTED: f64 = 0.5218876;
const UCB_TOL: f64 = 1e-4;
const HELD_OUT: u64 = 50;
const TRAIN_BUDGET: Duration = Duration::from_secs(30 * 60);
const PEARSON_MIN: f64 = 0.95;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fig1() -> (LogicalCircuit, Topology) {
    (
        LogicalCircuit::new(5, [(0, 2), (1, 3), (1, 4), (3, 4)]).unwrap(),
        Topology::ring(5).unwrap(),
    )
}

fn c1_fig1_golden() -> Outcome {
    let start = Instant::now();
    let (c, t) = fig1();
    let m = trivial_mapping(5);
    let oracle = optimal_route(&c, &t, &m, 1_000_000).map_err(|e| e.to_string())?.optimal();
    let oracle = oracle.ok_or("oracle exhausted")?;
    let mcts = route(&c, &t, &m, &mut MctsPolicy::new(ZeroValue, 2000), default_step_cap(c.len()))
        .map_err(|e| e.to_string())?;
    let ok_verify = verify(&oracle, &c, &t).is_ok() && verify(&mcts, &c, &t).is_ok();
    let elapsed = start.elapsed();
    check(
        oracle.swap_count == 2 && mcts.swap_count == 2 && !mcts.fallback_used && ok_verify && elapsed < FIG1_BUDGET,
        format!(
            "oracle {} swaps, mcts {} swaps, verified {ok_verify}, {:.2}s",
            oracle.swap_count,
            mcts.swap_count,
            elapsed.as_secs_f64()
        ),
    )
}

fn fuzz_instance(rng: &mut ChaCha8Rng) -> (LogicalCircuit, Topology, Mapping) {
    let t = match rng.gen_range(0..3) {
        0 => Topology::ring(4).unwrap(),
        1 => Topology::ring(5).unwrap(),
        _ => Topology::line(4).unwrap(),
    };
    let n = t.num_qubits();
    let gates = rng.gen_range(1..=6);
    let pairs: Vec<(usize, usize)> = (0..gates)
        .map(|_| {
            let a = rng.gen_range(0..n);
            (a, (a + rng.gen_range(1..n)) % n)
        })
        .collect();
    let c = LogicalCircuit::new(n, pairs).unwrap();
    let m = random_mapping(n, rng.gen());
    (c, t, m)
}

fn c2_oracle_lower_bound() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut violations = 0;
    let mut routed = 0;
    for i in 0..FUZZ_INSTANCES {
        let (c, t, m) = fuzz_instance(&mut rng);
        let best = match optimal_swap_count(&c, &t, &m, 2_000_000).map_err(|e| e.to_string())? {
            OracleOutcome::Optimal(b) => b,
            OracleOutcome::Exhausted => return Err(format!("oracle exhausted on instance {i}")),
        };
        let outputs = [
            route_basic(&c, &t, &m),
            route_stochastic(&c, &t, &m, 20, i as u64),
            route_sabre(&c, &t, &m, DEFAULT_LOOKAHEAD_WEIGHT, DEFAULT_DECAY),
            route(&c, &t, &m, &mut MctsPolicy::new(ZeroValue, 200), default_step_cap(c.len())),
            optimal_route(&c, &t, &m, 2_000_000).map(|o| o.optimal().unwrap()),
        ];
        for rc in outputs {
            let rc = rc.map_err(|e| e.to_string())?;
            routed += 1;
            if rc.swap_count < best || !verify(&rc, &c, &t).is_ok() {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        violations == 0 && elapsed < FUZZ_BUDGET,
        format!(
            "{FUZZ_INSTANCES} instances, {routed} routings, {violations} violations, {:.2}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_reward_telescoping() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let topologies = [Topology::ring(5).unwrap(), Topology::grid(2, 3).unwrap(), Topology::line(4).unwrap()];
    let mut mismatches = 0;
    let mut total_steps = 0;
    for ep in 0..TELESCOPE_EPISODES {
        let t = &topologies[ep % topologies.len()];
        let n = t.num_qubits();
        let params = BenchmarkParams {
            gate_count: rng.gen_range(1..=15),
            ..Default::default()
        };
        let c = generate_benchmark(BenchmarkKind::Random, n, rng.gen(), &params).unwrap();
        let mut s: RoutingState = init_state(&c, t, &random_mapping(n, rng.gen())).unwrap();
        let g0 = s.remaining().len() as i64;
        let (mut sum, mut swaps) = (0i64, 0i64);
        while !s.is_terminal() {
            let (next, r) = s.step(rng.gen_range(0..t.num_edges())).unwrap();
            sum += r;
            swaps += 1;
            s = next;
        }
        total_steps += swaps;
        if sum != g0 - swaps {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{TELESCOPE_EPISODES} complete random episodes, {total_steps} steps, {mismatches} mismatches"),
    )
}

fn c4_gradient_check() -> Outcome {
    let start = Instant::now();
    let t = Topology::ring(4).unwrap();
    let mut worst = (0.0f64, String::new());
    for seed in 0..5u64 {
        let config = AgentConfig {
            num_qubits: 4,
            num_actions: t.num_edges(),
            embedding_dim: 5,
            model_dim: 12,
            num_heads: 3,
            num_layers: 2,
            ffn_dim: 16,
            lookahead: 6,
        };
        let model = AgentModel::new(config, t.fingerprint(), seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let mut batch = Vec::new();
        while batch.len() < 3 {
            let params = BenchmarkParams {
                gate_count: rng.gen_range(2..=8),
                ..Default::default()
            };
            let c = generate_benchmark(BenchmarkKind::Random, 4, rng.gen(), &params).unwrap();
            let s = init_state(&c, &t, &random_mapping(4, rng.gen())).unwrap();
            if s.is_terminal() {
                continue;
            }
            batch.push(Sample {
                features: encode_state(&s, &model, model.config.lookahead),
                mcts_action: rng.gen_range(0..t.num_edges()),
                mcts_value: rng.gen_range(-3.0..3.0),
            });
        }
        for (name, err) in gradient_check(&model, &batch, 0.8, GRAD_H).map_err(|e| e.to_string())? {
            if err > worst.0 {
                worst = (err, format!("seed {seed} {name}"));
            }
        }
    }
    let elapsed = start.elapsed();
    check(
        worst.0 < GRAD_TOL && elapsed < GRAD_BUDGET,
        format!(
            "max block relative error {:.2e} ({}), {:.2}s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64()
        ),
    )
}

fn c5_loss_spot() -> Outcome {
    let l = loss(&[0.2; 5], 2.0, 2, 3.0, 1.0);
    let direct = (-(0.2f64).ln() + 1.0) / 5.0;
    check(
        (l - direct).abs() < LOSS_TOL && (l - LOSS_EXPECTED).abs() < 1e-7,
        format!("L = {l:.10}"),
    )
}

fn c6_ucb_spot() -> Outcome {
    let c = DEFAULT_EXPLORATION;
    let a = ucb(2, 1, 1.0, c);
    let b = ucb(10, 2, 2.0, c);
    let d = ucb(10, 1, 1.0, c);
    let (_, t) = fig1();
    let (circ, _) = fig1();
    let s = init_state(&circ, &t, &trivial_mapping(5)).unwrap();
    let first = search(&s, &ZeroValue, t.num_edges(), c).map_err(|e| e.to_string())?;
    let all_once = first.child_stats.iter().all(|cs| cs.visits == 1);
    check(
        (a - 2.17741).abs() < UCB_TOL
            && (b - 2.5175).abs() < UCB_TOL
            && (d - 3.1459).abs() < UCB_TOL
            && d > b
            && ucb(10, 0, -5.0, c) == f64::INFINITY
            && all_once,
        format!("{a:.5}, {b:.4}, {d:.4}; first |E| rollouts visit each child once: {all_once}"),
    )
}

fn mean_greedy_swaps(model: &AgentModel, t: &Topology) -> (f64, usize) {
    let params = BenchmarkParams {
        gate_count: 10,
        ..Default::default()
    };
    let mut total = 0;
    let mut fallbacks = 0;
    for i in 0..HELD_OUT {
        let c = generate_benchmark(BenchmarkKind::Random, 5, 900_000 + i, &params).unwrap();
        let mut greedy = |s: &RoutingState| model.greedy_action(s);
        let rc = route(&c, t, &trivial_mapping(5), &mut greedy, default_step_cap(c.len())).unwrap();
        total += rc.swap_count;
        fallbacks += usize::from(rc.fallback_used);
    }
    (total as f64 / HELD_OUT as f64, fallbacks)
}

fn c7_training_improvement() -> Outcome {
    let start = Instant::now();
    let t = Topology::ring(5).unwrap();
    let mut cfg = TrainConfig::new(t.clone(), BenchmarkKind::Random);
    cfg.benchmark_params.gate_count = 10;
    cfg.circuit_count = 8;
    cfg.episodes = 100;
    cfg.seed = 7;
    let untrained = AgentModel::for_topology(&t, cfg.seed);
    let out = train(&cfg).map_err(|e| e.to_string())?;
    let updates = out.log.last().map_or(0, |r| r.updates);
    let (before, fb_before) = mean_greedy_swaps(&untrained, &t);
    let (after, fb_after) = mean_greedy_swaps(&out.model, &t);
    let elapsed = start.elapsed();
    check(
        after <= before && elapsed < TRAIN_BUDGET,
        format!(
            "held-out mean swaps {after:.2} trained vs {before:.2} untrained (fallbacks {fb_after}/{fb_before}), {updates} updates, {:.1}s",
            elapsed.as_secs_f64()
        ),
    )
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

fn c8_linear_scaling() -> Outcome {
    let t = Topology::grid(3, 4).unwrap();
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let sizes: Vec<usize> = (20..=120).step_by(10).collect();
    for &size in &sizes {
        for seed in 0..10 {
            let params = BenchmarkParams {
                gate_count: size,
                ..Default::default()
            };
            let c = generate_benchmark(BenchmarkKind::Random, 12, seed, &params).unwrap();
            let rc = route_sabre(&c, &t, &trivial_mapping(12), DEFAULT_LOOKAHEAD_WEIGHT, DEFAULT_DECAY).unwrap();
            xs.push(size as f64);
            ys.push(rc.swap_count as f64);
        }
    }
    let r = pearson(&xs, &ys);
    check(r > PEARSON_MIN, format!("{} sizes x 10 seeds, pearson r = {r:.4}", sizes.len()))
}

fn c9_bidirectional() -> Outcome {
    let t = Topology::grid(3, 4).unwrap();
    let sabre = |c: &LogicalCircuit, t: &Topology, m: &Mapping| route_sabre(c, t, m, DEFAULT_LOOKAHEAD_WEIGHT, DEFAULT_DECAY);
    let (mut trivial_total, mut bidir_total, mut count) = (0usize, 0usize, 0usize);
    let mut per_family = Vec::new();
    for kind in BenchmarkKind::ALL {
        let (mut ft, mut fb) = (0, 0);
        for seed in 0..10 {
            let c = generate_benchmark(kind, 12, seed, &BenchmarkParams::default()).unwrap();
            let m0 = trivial_mapping(12);
            let plain = sabre(&c, &t, &m0).unwrap();
            let refined = bidirectional_initial_mapping(&c, &t, sabre, &m0).unwrap();
            let bidir = sabre(&c, &t, &refined).unwrap();
            if !verify(&bidir, &c, &t).is_ok() {
                return Err(format!("{kind} seed {seed}: invalid routing"));
            }
            ft += plain.swap_count;
            fb += bidir.swap_count;
        }
        per_family.push(format!("{kind} {ft}->{fb}"));
        trivial_total += ft;
        bidir_total += fb;
        count += 10;
    }
    let (mt, mb) = (trivial_total as f64 / count as f64, bidir_total as f64 / count as f64);
    check(
        mb <= mt,
        format!(
            "mean swaps {mb:.2} bidirectional vs {mt:.2} trivial ({:.1}% reduction); {}",
            100.0 * (mt - mb) / mt,
            per_family.join(", ")
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qroute"))
        .current_dir(dir)
        .env_remove("QROUTE_SEED")
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("qroute {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs: Vec<Vec<Vec<u8>>> = Vec::new();
    for run in 0..2 {
        let dir = tmp.path().join(format!("run{run}"));
        std::fs::create_dir(&dir).map_err(|e| e.to_string())?;
        run_cli(&dir, &["gen", "--kind", "random", "--qubits", "5", "--gates", "12", "--seed", "4", "--out", "c.json"])?;
        run_cli(
            &dir,
            &[
                "train", "--topology", "ring5", "--gates", "10", "--episodes", "45", "--rollouts", "30", "--seed", "11",
                "--out", "a.ckpt", "--log", "train.jsonl",
            ],
        )?;
        for router in ["stochastic", "sabre", "mcts", "agent"] {
            run_cli(
                &dir,
                &[
                    "route", "--circuit", "c.json", "--topology", "ring5", "--router", router, "--mapping", "random",
                    "--checkpoint", "a.ckpt", "--rollouts", "100", "--seed", "9", "--verify", "--out",
                    &format!("{router}.json"),
                ],
            )?;
        }
        run_cli(
            &dir,
            &[
                "bench", "--suite", "all", "--topology", "grid3x4", "--routers", "basic,stochastic,sabre", "--mapping",
                "trivial,bidirectional", "--seeds", "3", "--out", "bench", "--plot-data", "plot.csv", "--plot-sizes",
                "20,40",
            ],
        )?;
        let files = [
            "c.json", "a.ckpt", "train.jsonl", "stochastic.json", "sabre.json", "mcts.json", "agent.json", "bench.json",
            "bench.csv", "plot.csv",
        ];
        runs.push(
            files
                .iter()
                .map(|f| std::fs::read(dir.join(f)).map_err(|e| format!("{f}: {e}")))
                .collect::<Result<_, _>>()?,
        );
    }
    let identical = runs[0] == runs[1];

    let ckpt = tmp.path().join("run0/a.ckpt");
    let (model, opt) = load_checkpoint(&ckpt).map_err(|e| e.to_string())?;
    let again = tmp.path().join("again.ckpt");
    save_checkpoint(&model, &opt, &again).map_err(|e| e.to_string())?;
    let (model2, opt2) = load_checkpoint(&again).map_err(|e| e.to_string())?;
    let round_trip = std::fs::read(&ckpt).ok() == std::fs::read(&again).ok() && model == model2 && opt == opt2;
    let log = String::from_utf8_lossy(&runs[0][2]).into_owned();
    let updated = log.lines().last().is_some_and(|l| !l.contains("\"updates\":0,"));
    check(
        identical && round_trip && updated,
        format!("10 output files byte-identical: {identical}; checkpoint round trip bit-exact: {round_trip}; training updated: {updated}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("fig-1 golden instance", c1_fig1_golden),
        ("oracle lower bound", c2_oracle_lower_bound),
        ("reward telescoping", c3_reward_telescoping),
        ("gradient check", c4_gradient_check),
        ("loss spot value", c5_loss_spot),
        ("ucb spot values", c6_ucb_spot),
        ("training improvement", c7_training_improvement),
        ("linear scaling", c8_linear_scaling),
        ("bidirectional mapping", c9_bidirectional),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (tag, detail) = match f() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name}: {detail}", i + 1);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
