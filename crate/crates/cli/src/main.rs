mod bench;
mod routers;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qroute_core::agent::save_checkpoint;
use qroute_core::circuit::{
    generate_benchmark, parse_bit_string, parse_circuit_with_report, serialize_circuit, BenchmarkKind, BenchmarkParams,
    LogicalCircuit,
};
use qroute_core::env::{verify, RoutedCircuit};
use qroute_core::trainer::{train, AlphaMode, TrainConfig, TrainMapping};

use bench::{plot_series, run_bench, write_plot, write_report, BenchPlan};
use routers::{load_topology, MappingName, RouterName, RouterSetup};

#[derive(Parser)]
#[command(name = "qroute", version, about = "SWAP-insertion routing for qubit coupling graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a benchmark circuit.
    Gen(GenArgs),
    /// Route a circuit onto a device.
    Route(RouteArgs),
    /// Train an agent by self-play with tree-search targets.
    Train(TrainArgs),
    /// Check a routed circuit against its source and device.
    Verify(VerifyArgs),
    /// Compare routers across benchmark families.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct CircuitParamArgs {
    /// Gate count for the random family.
    #[arg(long, default_value_t = 20)]
    gates: usize,
    /// QAOA layers for the regular and erdos families.
    #[arg(long, default_value_t = 1)]
    layers: usize,
    /// Edge probability for the erdos family.
    #[arg(long, default_value_t = 0.5)]
    edge_prob: f64,
    /// Hidden bit string for bv, e.g. 1011.
    #[arg(long)]
    hidden: Option<String>,
}

impl CircuitParamArgs {
    fn params(&self) -> Result<BenchmarkParams> {
        Ok(BenchmarkParams {
            qaoa_layers: self.layers,
            edge_probability: self.edge_prob,
            hidden_string: self.hidden.as_deref().map(parse_bit_string).transpose()?,
            gate_count: self.gates,
        })
    }
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    kind: BenchmarkKind,
    #[arg(long)]
    qubits: usize,
    #[arg(long, env = "QROUTE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: CircuitParamArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RouteArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Topology JSON file or device name (ring5, grid3x4, line4, tokyo, oqc, guadalupe).
    #[arg(long)]
    topology: String,
    #[arg(long, value_enum, default_value_t = RouterName::Sabre)]
    router: RouterName,
    #[arg(long, value_enum, default_value_t = MappingName::Trivial)]
    mapping: MappingName,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value_t = 200)]
    rollouts: usize,
    /// Attempts per layer for the stochastic router.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, env = "QROUTE_SEED", default_value_t = 0)]
    seed: u64,
    /// Re-check the output and fail if it is invalid.
    #[arg(long)]
    verify: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value = "ring5")]
    topology: String,
    #[arg(long, default_value_t = BenchmarkKind::Random)]
    kind: BenchmarkKind,
    /// Logical qubits per circuit; defaults to the device size.
    #[arg(long)]
    qubits: Option<usize>,
    #[command(flatten)]
    params: CircuitParamArgs,
    #[arg(long, value_parser = ["trivial", "random"], default_value = "trivial")]
    mapping: String,
    /// Live circuits per episode.
    #[arg(long, default_value_t = 8)]
    circuits: usize,
    #[arg(long, default_value_t = 100)]
    episodes: usize,
    #[arg(long, default_value_t = 200)]
    rollouts: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 320)]
    buffer_threshold: usize,
    #[arg(long, default_value_t = 10_000)]
    buffer_capacity: usize,
    /// Loss trade-off: a number, or `auto` to balance the first batch.
    #[arg(long, default_value = "1.0")]
    alpha: String,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 0.8)]
    lr_decay: f64,
    /// Retire finished circuits instead of replacing them.
    #[arg(long)]
    no_regenerate: bool,
    #[arg(long, env = "QROUTE_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "agent.ckpt")]
    out: PathBuf,
    /// JSON-lines training log; stdout when absent.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    circuit: PathBuf,
    #[arg(long)]
    topology: String,
    #[arg(long)]
    routed: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// `all` or a comma-separated list of families.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value = "grid3x4")]
    topology: String,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "basic,stochastic,sabre")]
    routers: Vec<RouterName>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "trivial")]
    mapping: Vec<MappingName>,
    /// Circuits per family.
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    /// First circuit seed.
    #[arg(long, env = "QROUTE_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: CircuitParamArgs,
    #[arg(long, default_value_t = 200)]
    rollouts: usize,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// Record wall-clock routing time (otherwise mean_ms is 0 and output is reproducible).
    #[arg(long)]
    timing: bool,
    /// Report prefix; writes PREFIX.json and PREFIX.csv.
    #[arg(long, default_value = "bench")]
    out: PathBuf,
    /// Also write a swaps-vs-gates CSV for random circuits to this path.
    #[arg(long)]
    plot_data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "20,30,40,50,60,70,80,90,100,110,120")]
    plot_sizes: Vec<usize>,
}

fn read_circuit(path: &Path) -> Result<LogicalCircuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (c, report) = parse_circuit_with_report(&text).with_context(|| format!("parsing {}", path.display()))?;
    if report.dropped_single_qubit > 0 {
        eprintln!("note: ignored {} single-qubit gates", report.dropped_single_qubit);
    }
    Ok(c)
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let c = generate_benchmark(args.kind, args.qubits, args.seed, &args.params.params()?)?;
    let mut text = serialize_circuit(&c);
    text.push('\n');
    write_output(args.out.as_ref(), &text)
}

fn cmd_route(args: RouteArgs) -> Result<()> {
    let c = read_circuit(&args.circuit)?;
    let (_, t) = load_topology(&args.topology)?;
    let mut setup = RouterSetup::new(args.router, args.seed);
    setup.rollouts = args.rollouts;
    setup.trials = args.trials;
    setup.load_agent(args.checkpoint.as_ref(), &t)?;
    let m = setup.initial_mapping(args.mapping, &c, &t)?;
    let rc = setup.route(&c, &t, &m)?;
    if args.verify {
        let report = verify(&rc, &c, &t);
        if !report.is_ok() {
            for v in &report.violations {
                eprintln!("violation: {v}");
            }
            bail!("routed circuit failed verification");
        }
    }
    eprintln!("swaps: {}{}", rc.swap_count, if rc.fallback_used { " (fallback used)" } else { "" });
    let mut text = rc.to_json();
    text.push('\n');
    write_output(args.out.as_ref(), &text)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let (_, t) = load_topology(&args.topology)?;
    let mut cfg = TrainConfig::new(t, args.kind);
    cfg.benchmark_params = args.params.params()?;
    if let Some(q) = args.qubits {
        cfg.circuit_qubits = q;
    }
    cfg.mapping = if args.mapping == "random" {
        TrainMapping::Random
    } else {
        TrainMapping::Trivial
    };
    cfg.circuit_count = args.circuits;
    cfg.episodes = args.episodes;
    cfg.rollouts = args.rollouts;
    cfg.batch_size = args.batch_size;
    cfg.buffer_threshold = args.buffer_threshold;
    cfg.buffer_capacity = args.buffer_capacity;
    cfg.alpha = match args.alpha.as_str() {
        "auto" => AlphaMode::Auto,
        a => AlphaMode::Fixed(a.parse().context("--alpha must be a number or `auto`")?),
    };
    cfg.learning_rate = args.lr;
    cfg.lr_decay = args.lr_decay;
    cfg.regenerate = !args.no_regenerate;
    cfg.seed = args.seed;

    let outcome = train(&cfg)?;
    let mut log = String::new();
    for rec in &outcome.log {
        log.push_str(&rec.to_json_line());
        log.push('\n');
    }
    write_output(args.log.as_ref(), &log)?;
    save_checkpoint(&outcome.model, &outcome.optimizer, &args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let c = read_circuit(&args.circuit)?;
    let (_, t) = load_topology(&args.topology)?;
    let text = std::fs::read_to_string(&args.routed).with_context(|| format!("reading {}", args.routed.display()))?;
    let rc = RoutedCircuit::from_json(&text)?;
    let report = verify(&rc, &c, &t);
    if report.is_ok() {
        println!("ok: {} swaps", rc.swap_count);
        Ok(())
    } else {
        for v in &report.violations {
            println!("violation: {v}");
        }
        bail!("{} violation(s)", report.violations.len())
    }
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let (label, t) = load_topology(&args.topology)?;
    let kinds = if args.suite == "all" {
        BenchmarkKind::ALL.to_vec()
    } else {
        args.suite
            .split(',')
            .map(|k| k.trim().parse::<BenchmarkKind>())
            .collect::<Result<_, _>>()?
    };
    let agent = match &args.checkpoint {
        Some(path) => Some(qroute_core::agent::load_checkpoint_for(path, &t)?.0),
        None if args.routers.contains(&RouterName::Agent) => bail!("the agent router needs --checkpoint"),
        None => None,
    };
    let plan = BenchPlan {
        topology_label: label,
        topology: &t,
        kinds,
        routers: args.routers.clone(),
        mappings: args.mapping.clone(),
        seeds: args.seeds,
        base_seed: args.seed,
        params: args.params.params()?,
        rollouts: args.rollouts,
        agent: agent.as_ref(),
        timing: args.timing,
    };
    let report = run_bench(&plan)?;
    let json = args.out.with_extension("json");
    let csv = args.out.with_extension("csv");
    write_report(&report, &json, &csv)?;
    for row in &report.rows {
        eprintln!(
            "{:<8} {:<11} {:<13} gates {:>6.1}  swaps {:>7.2} +- {:.2}",
            row.benchmark, row.router, row.mapping, row.n_gates, row.mean_swaps, row.std_swaps
        );
    }
    if let Some(path) = &args.plot_data {
        let points = plot_series(&plan, &args.plot_sizes)?;
        write_plot(&points, path)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Route(a) => cmd_route(a),
        Command::Train(a) => cmd_train(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
