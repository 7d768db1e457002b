use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use qroute_core::agent::AgentModel;
use qroute_core::circuit::{generate_benchmark, BenchmarkKind, BenchmarkParams, LogicalCircuit};
use qroute_core::env::verify;
use qroute_core::topology::Topology;

use crate::routers::{MappingName, RouterName, RouterSetup};

/// One aggregated cell of the report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub benchmark: String,
    pub topology: String,
    pub router: String,
    pub mapping: String,
    /// Mean gate count over the sampled circuits.
    pub n_gates: f64,
    pub mean_swaps: f64,
    /// Population standard deviation.
    pub std_swaps: f64,
    pub n_samples: usize,
    pub mean_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub topology: String,
    pub seeds: usize,
    pub base_seed: u64,
    pub rows: Vec<BenchRow>,
}

pub struct BenchPlan<'a> {
    pub topology_label: String,
    pub topology: &'a Topology,
    pub kinds: Vec<BenchmarkKind>,
    pub routers: Vec<RouterName>,
    pub mappings: Vec<MappingName>,
    pub seeds: usize,
    pub base_seed: u64,
    pub params: BenchmarkParams,
    pub rollouts: usize,
    pub agent: Option<&'a AgentModel>,
    pub timing: bool,
}

/// Width used for a family on this device: the whole device, except that the
/// 3-regular family needs an even count.
pub fn circuit_width(kind: BenchmarkKind, device_qubits: usize) -> usize {
    if kind == BenchmarkKind::Regular && device_qubits % 2 == 1 {
        device_qubits - 1
    } else {
        device_qubits
    }
}

struct Sample {
    gates: usize,
    swaps: usize,
    ms: f64,
}

fn run_one(
    plan: &BenchPlan,
    router: RouterName,
    mapping: MappingName,
    circuit: &LogicalCircuit,
    seed: u64,
) -> Result<Sample> {
    let mut setup = RouterSetup::new(router, seed);
    setup.rollouts = plan.rollouts;
    setup.agent = plan.agent.cloned();
    let start = Instant::now();
    let m = setup.initial_mapping(mapping, circuit, plan.topology)?;
    let rc = setup.route(circuit, plan.topology, &m)?;
    let ms = if plan.timing { start.elapsed().as_secs_f64() * 1e3 } else { 0.0 };
    let report = verify(&rc, circuit, plan.topology);
    if !report.is_ok() {
        bail!("{router} produced an invalid routing: {}", report.violations[0]);
    }
    Ok(Sample {
        gates: circuit.len(),
        swaps: rc.swap_count,
        ms,
    })
}

pub fn run_bench(plan: &BenchPlan) -> Result<BenchReport> {
    if plan.seeds == 0 {
        bail!("--seeds must be positive");
    }
    let n = plan.topology.num_qubits();
    let mut circuits = Vec::new();
    for &kind in &plan.kinds {
        for i in 0..plan.seeds {
            let seed = plan.base_seed + i as u64;
            let c = generate_benchmark(kind, circuit_width(kind, n), seed, &plan.params)
                .with_context(|| format!("generating {kind} on {n} qubits"))?;
            circuits.push((kind, seed, c));
        }
    }
    let mut jobs = Vec::new();
    for (ci, _) in circuits.iter().enumerate() {
        for &router in &plan.routers {
            for &mapping in &plan.mappings {
                jobs.push((ci, router, mapping));
            }
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(ci, router, mapping)| {
            let (kind, seed, c) = &circuits[ci];
            run_one(plan, router, mapping, c, *seed).map(|s| ((*kind, router, mapping), s))
        })
        .collect::<Result<_>>()?;

    let mut cells: BTreeMap<(BenchmarkKind, RouterName, MappingName), Vec<Sample>> = BTreeMap::new();
    for (key, sample) in results {
        cells.entry(key).or_default().push(sample);
    }
    let rows = cells
        .into_iter()
        .map(|((kind, router, mapping), samples)| {
            let k = samples.len() as f64;
            let mean = samples.iter().map(|s| s.swaps as f64).sum::<f64>() / k;
            let var = samples.iter().map(|s| (s.swaps as f64 - mean).powi(2)).sum::<f64>() / k;
            BenchRow {
                benchmark: kind.name().to_string(),
                topology: plan.topology_label.clone(),
                router: router.to_string(),
                mapping: mapping.as_str().to_string(),
                n_gates: samples.iter().map(|s| s.gates as f64).sum::<f64>() / k,
                mean_swaps: mean,
                std_swaps: var.sqrt(),
                n_samples: samples.len(),
                mean_ms: samples.iter().map(|s| s.ms).sum::<f64>() / k,
            }
        })
        .collect();
    Ok(BenchReport {
        topology: plan.topology_label.clone(),
        seeds: plan.seeds,
        base_seed: plan.base_seed,
        rows,
    })
}

pub fn write_report(report: &BenchReport, json: &Path, csv_path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(json, text).with_context(|| format!("writing {}", json.display()))?;
    let mut w = csv::Writer::from_path(csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    for row in &report.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct PlotPoint {
    pub router: String,
    pub topology: String,
    pub mapping: String,
    pub n_gates: usize,
    pub seed: u64,
    pub swaps: usize,
}

/// Swaps against circuit size on the random family, one point per
/// (router, size, seed).
pub fn plot_series(plan: &BenchPlan, sizes: &[usize]) -> Result<Vec<PlotPoint>> {
    let n = plan.topology.num_qubits();
    let mut jobs = Vec::new();
    for &router in &plan.routers {
        for &mapping in &plan.mappings {
            for &size in sizes {
                for i in 0..plan.seeds {
                    jobs.push((router, mapping, size, plan.base_seed + i as u64));
                }
            }
        }
    }
    jobs.par_iter()
        .map(|&(router, mapping, size, seed)| {
            let params = BenchmarkParams {
                gate_count: size,
                ..plan.params.clone()
            };
            let c = generate_benchmark(BenchmarkKind::Random, n, seed, &params)?;
            let s = run_one(plan, router, mapping, &c, seed)?;
            Ok(PlotPoint {
                router: router.to_string(),
                topology: plan.topology_label.clone(),
                mapping: mapping.as_str().to_string(),
                n_gates: size,
                seed,
                swaps: s.swaps,
            })
        })
        .collect()
}

pub fn write_plot(points: &[PlotPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
