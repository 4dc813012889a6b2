//! Two-stage robust partitioning and operation: master MILP, fixed-topology
//! subproblem, subgradient cuts and the cutting-plane loop.

mod algorithm;
mod cuts;
mod master;
mod robust;
mod subproblem;
mod verify;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lindistflow::{Dispatch, EmitError, Topology, XIdx};
use crate::netmodel::{Network, PerPhase, ScenarioError, SwitchStates, DEFAULT_SCENARIO_CAP};

pub use algorithm::{cutting_plane, worst_case, IterationLog, RpopResult, WorstCase};
pub use cuts::{make_cut, Cut};
pub(crate) use master::representative_scenario;
pub use master::{
    build_master, coloring_constraints, phase_eligibility_constraints, radiality_constraints,
    MasterHandles, MasterModel,
};
pub use robust::{robust_feasibility_sample, SampleReport};
pub use subproblem::{build_subproblem, solve_subproblem, Subproblem, SubproblemSolution};
pub use verify::{verify_topology, verify_topology_under, Violation};

/// Load realization used inside the master problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representative {
    AllMax,
    Nominal,
    AllMin,
}

/// Elements forced out of service.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub blocks_off: Vec<usize>,
    pub switches_open: Vec<usize>,
    pub substation_out: bool,
}

impl Contingency {
    /// Parses `block:<id>`, `switch:<id>` or `substation`.
    pub fn parse_item(&mut self, net: &Network, item: &str) -> Result<(), RpopError> {
        let bad = || RpopError::Contingency(item.to_string());
        if item == "substation" {
            self.substation_out = true;
        } else if let Some(id) = item.strip_prefix("block:") {
            self.blocks_off.push(net.block_index(id).ok_or_else(bad)?);
        } else if let Some(id) = item.strip_prefix("switch:") {
            self.switches_open
                .push(net.switch_index(id).ok_or_else(bad)?);
        } else {
            return Err(bad());
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.blocks_off.is_empty() && self.switches_open.is_empty() && !self.substation_out
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpopConfig {
    /// Termination tolerance on the worst-case slack sum (per unit).
    pub epsilon: f64,
    /// Slack weight; defaults to `1e4 * max c1`.
    pub beta_s: Option<f64>,
    /// Per-block priority override.
    pub block_priority: Option<Vec<f64>>,
    pub max_iterations: usize,
    pub k_polygon: usize,
    pub representative: Representative,
    pub scenario_cap: usize,
    /// Uncertainty level; `None` uses the network file.
    pub uncertainty: Option<f64>,
    pub contingency: Contingency,
}

impl Default for RpopConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            beta_s: None,
            block_priority: None,
            max_iterations: 50,
            k_polygon: 12,
            representative: Representative::AllMax,
            scenario_cap: DEFAULT_SCENARIO_CAP,
            uncertainty: None,
            contingency: Contingency::default(),
        }
    }
}

impl RpopConfig {
    pub fn beta_s(&self, net: &Network) -> f64 {
        self.beta_s.unwrap_or_else(|| {
            let c = net
                .generators
                .iter()
                .map(|g| g.cost_linear.abs())
                .fold(0.0, f64::max);
            1e4 * if c > 0.0 { c } else { 1.0 }
        })
    }

    pub fn priority(&self, net: &Network, block: usize) -> f64 {
        match &self.block_priority {
            Some(p) => p[block],
            None => net.blocks[block].priority,
        }
    }
}

#[derive(Debug, Error)]
pub enum RpopError {
    #[error(transparent)]
    Emit(#[from] EmitError),
    #[error(transparent)]
    Model(#[from] optcore::ModelError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unknown contingency item `{0}`")]
    Contingency(String),
    #[error("master problem is {0}")]
    Master(String),
    #[error("subproblem is {0}")]
    Subproblem(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// First-stage decision `x*`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MasterSolution {
    pub switches: Vec<bool>,
    pub inverters: Vec<bool>,
    pub blocks: Vec<bool>,
    pub p: Vec<PerPhase>,
    pub q: Vec<PerPhase>,
    pub theta: f64,
    pub objective: f64,
}

impl MasterSolution {
    pub fn value(&self, x: XIdx) -> f64 {
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        match x {
            XIdx::Block(l) => b(self.blocks[l]),
            XIdx::Switch(s) => b(self.switches[s]),
            XIdx::Inverter(g) => b(self.inverters[g]),
            XIdx::P(g, a) => self.p[g][a],
            XIdx::Q(g, a) => self.q[g][a],
        }
    }

    pub fn topology(&self) -> Topology {
        Topology {
            switches: SwitchStates(self.switches.clone()),
            energized: self.blocks.clone(),
            grid_forming: self.inverters.clone(),
        }
    }

    pub fn dispatch(&self) -> Dispatch {
        Dispatch {
            p: self.p.clone(),
            q: self.q.clone(),
        }
    }

    /// First-stage cost without `θ`.
    pub fn first_stage_cost(&self, net: &Network, config: &RpopConfig) -> f64 {
        let mut c = 0.0;
        for l in 0..net.blocks.len() {
            if !self.blocks[l] {
                c += config.priority(net, l);
            }
        }
        for (g, gen) in net.generators.iter().enumerate() {
            c += gen.cost_linear * gen.phases.iter().map(|a| self.p[g][a]).sum::<f64>();
            if self.blocks[net.block_of_generator(g)] {
                c += gen.cost_fixed;
            }
        }
        c
    }
}
