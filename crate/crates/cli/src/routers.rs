use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::ValueEnum;

use qroute_core::agent::{load_checkpoint_for, AgentModel};
use qroute_core::baselines::{optimal_route, BaselineKind, OracleOutcome, RouterConfig, DEFAULT_STATE_LIMIT};
use qroute_core::circuit::LogicalCircuit;
use qroute_core::env::{
    bidirectional_initial_mapping, default_step_cap, random_mapping, route, trivial_mapping, Mapping, RouteError,
    RoutedCircuit, RoutingState,
};
use qroute_core::mcts::{MctsPolicy, ZeroValue};
use qroute_core::topology::{parse_topology, Topology, TopologyKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum RouterName {
    Basic,
    Stochastic,
    Sabre,
    Mcts,
    Agent,
    Oracle,
}

impl RouterName {
    pub fn as_str(self) -> &'static str {
        match self {
            RouterName::Basic => "basic",
            RouterName::Stochastic => "stochastic",
            RouterName::Sabre => "sabre",
            RouterName::Mcts => "mcts",
            RouterName::Agent => "agent",
            RouterName::Oracle => "oracle",
        }
    }
}

impl fmt::Display for RouterName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RouterName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, ValueEnum)]
pub enum MappingName {
    Trivial,
    Random,
    Bidirectional,
}

impl MappingName {
    pub fn as_str(self) -> &'static str {
        match self {
            MappingName::Trivial => "trivial",
            MappingName::Random => "random",
            MappingName::Bidirectional => "bidirectional",
        }
    }
}

/// Accepts a topology JSON file or a name such as `ring5`, `grid3x4`, `tokyo`.
pub fn load_topology(arg: &str) -> Result<(String, Topology)> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        let t = parse_topology(&text).with_context(|| format!("parsing topology {arg}"))?;
        let label = path.file_stem().map_or(arg.to_string(), |s| s.to_string_lossy().into_owned());
        return Ok((label, t));
    }
    let kind: TopologyKind = arg
        .parse()
        .map_err(|_| anyhow!("`{arg}` is neither a topology file nor a known device name"))?;
    Ok((arg.to_ascii_lowercase(), kind.build()?))
}

/// Everything a router might need beyond the circuit itself.
pub struct RouterSetup {
    pub router: RouterName,
    pub seed: u64,
    pub rollouts: usize,
    pub trials: usize,
    pub agent: Option<AgentModel>,
}

impl RouterSetup {
    pub fn new(router: RouterName, seed: u64) -> Self {
        Self {
            router,
            seed,
            rollouts: 200,
            trials: 20,
            agent: None,
        }
    }

    pub fn load_agent(&mut self, checkpoint: Option<&PathBuf>, topology: &Topology) -> Result<()> {
        match (self.router, checkpoint) {
            (RouterName::Agent, None) => bail!("the agent router needs --checkpoint"),
            (_, Some(path)) => {
                let (model, _) = load_checkpoint_for(path, topology)
                    .with_context(|| format!("loading checkpoint {}", path.display()))?;
                self.agent = Some(model);
            }
            _ => {}
        }
        Ok(())
    }

    pub fn route(&self, c: &LogicalCircuit, t: &Topology, m: &Mapping) -> Result<RoutedCircuit> {
        let baseline = |kind| {
            let mut cfg = RouterConfig::new(kind);
            cfg.trials = self.trials;
            cfg.seed = self.seed;
            cfg
        };
        let rc = match self.router {
            RouterName::Basic => baseline(BaselineKind::Basic).route(c, t, m)?,
            RouterName::Stochastic => baseline(BaselineKind::Stochastic).route(c, t, m)?,
            RouterName::Sabre => baseline(BaselineKind::Sabre).route(c, t, m)?,
            RouterName::Mcts => {
                let cap = default_step_cap(c.len());
                match &self.agent {
                    Some(model) => route(c, t, m, &mut MctsPolicy::new(model, self.rollouts), cap)?,
                    None => route(c, t, m, &mut MctsPolicy::new(ZeroValue, self.rollouts), cap)?,
                }
            }
            RouterName::Agent => {
                let model = self.agent.as_ref().context("the agent router needs --checkpoint")?;
                let mut greedy = |s: &RoutingState| model.greedy_action(s);
                route(c, t, m, &mut greedy, default_step_cap(c.len()))?
            }
            RouterName::Oracle => match optimal_route(c, t, m, DEFAULT_STATE_LIMIT)? {
                OracleOutcome::Optimal(rc) => rc,
                OracleOutcome::Exhausted => bail!("oracle search exceeded {DEFAULT_STATE_LIMIT} states"),
            },
        };
        Ok(rc)
    }

    pub fn initial_mapping(&self, mapping: MappingName, c: &LogicalCircuit, t: &Topology) -> Result<Mapping> {
        let n = t.num_qubits();
        Ok(match mapping {
            MappingName::Trivial => trivial_mapping(n),
            MappingName::Random => random_mapping(n, self.seed),
            MappingName::Bidirectional => bidirectional_initial_mapping(
                c,
                t,
                |c: &LogicalCircuit, t: &Topology, m: &Mapping| {
                    self.route(c, t, m).map_err(|e| RouteError::Malformed(format!("{e:#}")))
                },
                &trivial_mapping(n),
            )?,
        })
    }
}
