//! Network description, validation and topology analytics.

mod blocks;
mod scenario;
mod schema;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blocks::{BlockGraph, Components, SwitchStates};
pub use scenario::{ScenarioError, ScenarioVector, UncertaintyModel, DEFAULT_SCENARIO_CAP};

pub const PHASE_NAMES: [&str; 3] = ["a", "b", "c"];

/// Subset of {a, b, c} stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct PhaseSet(u8);

impl PhaseSet {
    pub const ABC: PhaseSet = PhaseSet(0b111);
    pub const EMPTY: PhaseSet = PhaseSet(0);

    pub fn single(phase: usize) -> Self {
        PhaseSet(1 << phase)
    }

    pub fn from_indices(idx: impl IntoIterator<Item = usize>) -> Self {
        PhaseSet(idx.into_iter().fold(0, |m, p| m | (1 << p)))
    }

    pub fn contains(self, phase: usize) -> bool {
        self.0 & (1 << phase) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: PhaseSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: PhaseSet) -> PhaseSet {
        PhaseSet(self.0 | other.0)
    }

    pub fn intersection(self, other: PhaseSet) -> PhaseSet {
        PhaseSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..3).filter(move |&p| self.contains(p))
    }

    pub fn with(self, phase: usize) -> PhaseSet {
        PhaseSet(self.0 | (1 << phase))
    }
}

impl fmt::Debug for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.iter() {
            f.write_str(PHASE_NAMES[p])?;
        }
        Ok(())
    }
}

impl Serialize for PhaseSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.iter().map(|p| PHASE_NAMES[p]))
    }
}

impl<'de> Deserialize<'de> for PhaseSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let names: Vec<String> = Vec::deserialize(d)?;
        let mut set = PhaseSet::EMPTY;
        for n in names {
            let p = PHASE_NAMES
                .iter()
                .position(|x| *x == n.to_ascii_lowercase())
                .ok_or_else(|| serde::de::Error::custom(format!("unknown phase `{n}`")))?;
            set = set.with(p);
        }
        Ok(set)
    }
}

/// A per-phase quantity; absent phases hold zero.
pub type PerPhase = [f64; 3];

#[derive(Debug, Clone)]
pub struct Bus {
    pub id: String,
    pub phases: PhaseSet,
    pub v_min: f64,
    pub v_max: f64,
    pub voltage_level: Option<String>,
    /// Shunt admittance `g + jb` per phase.
    pub shunt_g: PerPhase,
    pub shunt_b: PerPhase,
}

#[derive(Debug, Clone)]
pub struct LineSegment {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub phases: PhaseSet,
    pub r: [[f64; 3]; 3],
    pub x: [[f64; 3]; 3],
    pub flow_limit: PerPhase,
}

#[derive(Debug, Clone)]
pub struct Switch {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub phases: PhaseSet,
    pub flow_limit: PerPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransformerKind {
    Wye,
    Delta,
}

#[derive(Debug, Clone)]
pub struct Transformer {
    pub id: String,
    pub kind: TransformerKind,
    pub from: usize,
    pub to: usize,
    pub phases: PhaseSet,
    pub tap_ratio: f64,
    pub flow_limit: PerPhase,
}

#[derive(Debug, Clone)]
pub struct Generator {
    pub id: String,
    pub bus: usize,
    pub phases: PhaseSet,
    pub p_min: PerPhase,
    pub p_max: PerPhase,
    pub q_min: PerPhase,
    pub q_max: PerPhase,
    pub cost_linear: f64,
    pub cost_fixed: f64,
    pub ramp_limit: PerPhase,
    /// Substation connection: always a voltage source, never an inverter.
    pub substation: bool,
    pub v_setpoint: f64,
}

#[derive(Debug, Clone)]
pub struct LoadPoint {
    pub id: String,
    pub bus: usize,
    pub phases: PhaseSet,
    pub p_nominal: PerPhase,
    pub q_nominal: PerPhase,
    /// Explicit bounds `(p_lo, p_hi, q_lo, q_hi)`; otherwise derived from the
    /// uncertainty level.
    pub bounds: Option<[PerPhase; 4]>,
    pub cluster: usize,
    pub priority: f64,
}

#[derive(Debug, Clone)]
pub struct Cluster {
    pub id: String,
    pub loads: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub id: String,
    pub buses: Vec<usize>,
    pub phases: PhaseSet,
    pub phi_max: usize,
    pub priority: f64,
    pub generators: Vec<usize>,
    pub loads: Vec<usize>,
    pub switches: Vec<usize>,
    pub substation: Option<usize>,
    pub cluster: Option<usize>,
}

/// Immutable, validated network with derived block structure.
#[derive(Debug, Clone)]
pub struct Network {
    pub name: String,
    pub base_power_va: f64,
    pub base_voltage_v: BTreeMap<String, f64>,
    pub buses: Vec<Bus>,
    pub lines: Vec<LineSegment>,
    pub switches: Vec<Switch>,
    pub transformers: Vec<Transformer>,
    pub generators: Vec<Generator>,
    pub loads: Vec<LoadPoint>,
    pub clusters: Vec<Cluster>,
    /// Uncertainty level declared in the file, if any.
    pub uncertainty: Option<f64>,
    pub blocks: Vec<Block>,
    pub block_of_bus: Vec<usize>,
    bus_index: HashMap<String, usize>,
}

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("{kind} `{id}` references unknown {target} `{name}`")]
    Referential {
        kind: &'static str,
        id: String,
        target: &'static str,
        name: String,
    },
    #[error("duplicate {kind} id `{id}`")]
    Duplicate { kind: &'static str, id: String },
    #[error("{kind} `{id}`: {msg}")]
    Invalid {
        kind: &'static str,
        id: String,
        msg: String,
    },
    #[error("network is disconnected with all switches closed: bus `{0}` unreachable")]
    Disconnected(String),
    #[error("block {block} mixes load clusters `{a}` and `{b}`")]
    MixedClusters { block: String, a: String, b: String },
}

impl Network {
    pub fn from_json(text: &str) -> Result<Network, NetworkError> {
        schema::parse(text)
    }

    pub fn bus_index(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn block_index(&self, id: &str) -> Option<usize> {
        self.blocks.iter().position(|b| b.id == id)
    }

    pub fn switch_index(&self, id: &str) -> Option<usize> {
        self.switches.iter().position(|s| s.id == id)
    }

    pub fn generator_index(&self, id: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.id == id)
    }

    pub fn block_of_generator(&self, g: usize) -> usize {
        self.block_of_bus[self.generators[g].bus]
    }

    pub fn block_of_load(&self, d: usize) -> usize {
        self.block_of_bus[self.loads[d].bus]
    }

    /// Switch endpoints as block indices.
    pub fn switch_blocks(&self, s: usize) -> (usize, usize) {
        let sw = &self.switches[s];
        (self.block_of_bus[sw.from], self.block_of_bus[sw.to])
    }

    pub fn block_graph(&self) -> BlockGraph {
        BlockGraph::new(self)
    }

    /// Largest phase count among the block's buses.
    pub fn max_phases(&self, block: usize) -> usize {
        self.blocks[block].phi_max
    }

    /// Generators allowed to be grid-forming in each block: non-substation
    /// units connected to every phase present in the block.
    pub fn gfm_eligibility(&self) -> Vec<Vec<usize>> {
        self.blocks
            .iter()
            .map(|b| {
                b.generators
                    .iter()
                    .copied()
                    .filter(|&g| self.is_eligible(g))
                    .collect()
            })
            .collect()
    }

    pub fn is_eligible(&self, g: usize) -> bool {
        let gen = &self.generators[g];
        !gen.substation
            && self.blocks[self.block_of_generator(g)]
                .phases
                .is_subset(gen.phases)
    }

    /// Blocks that carry load but can never host a voltage source.
    pub fn eligibility_warnings(&self) -> Vec<String> {
        let elig = self.gfm_eligibility();
        let graph = self.block_graph();
        self.blocks
            .iter()
            .enumerate()
            .filter(|(l, b)| {
                b.substation.is_none()
                    && elig[*l].is_empty()
                    && !b.loads.is_empty()
                    && graph.neighbors(*l).is_empty()
            })
            .map(|(_, b)| {
                format!(
                    "block {} has no eligible grid-forming generator and no substation",
                    b.id
                )
            })
            .collect()
    }

    pub fn connected_components(&self, states: &SwitchStates) -> Components {
        Components::new(self, states)
    }

    /// True if the closed switches form a forest over blocks.
    pub fn is_acyclic(&self, states: &SwitchStates) -> bool {
        blocks::closed_switches_acyclic(self, states)
    }

    pub fn substation(&self) -> Option<usize> {
        self.generators.iter().position(|g| g.substation)
    }

    pub fn cluster_index(&self, id: &str) -> Option<usize> {
        self.clusters.iter().position(|c| c.id == id)
    }

    /// Phases carried by a bus node list, in bus order: `(bus, phase)` pairs.
    pub fn nodes(&self) -> Vec<(usize, usize)> {
        self.buses
            .iter()
            .enumerate()
            .flat_map(|(i, b)| b.phases.iter().map(move |p| (i, p)))
            .collect()
    }

    /// Replace cluster membership with a map from cluster id to load ids.
    pub fn with_clusters(
        &self,
        clusters: &BTreeMap<String, Vec<String>>,
    ) -> Result<Network, NetworkError> {
        let mut doc = schema::to_document(self);
        doc.clusters = clusters
            .iter()
            .map(|(id, loads)| schema::ClusterDoc {
                id: id.clone(),
                loads: loads.clone(),
            })
            .collect();
        for l in doc.loads.iter_mut() {
            l.cluster = None;
        }
        schema::build(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&schema::to_document(self)).expect("network serializes")
    }
}
