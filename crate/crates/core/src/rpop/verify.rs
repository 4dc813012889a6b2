//! Graph checks on an integral first-stage decision, independent of the MILP.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{Contingency, MasterSolution};
use crate::netmodel::Network;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Cycle {
        cc: String,
    },
    EnergizationMismatch {
        switch: String,
    },
    NoSource {
        cc: String,
    },
    MultipleSources {
        cc: String,
        sources: Vec<String>,
    },
    IneligibleGfm {
        generator: String,
    },
    GfmDeenergized {
        generator: String,
    },
    PhaseCoverage {
        generator: String,
        block: String,
        hops: usize,
    },
    /// Phase gap reached only through a chain longer than two switches.
    MultiHopPhaseGap {
        generator: String,
        block: String,
        hops: usize,
    },
}

impl Violation {
    pub fn is_warning(&self) -> bool {
        matches!(self, Violation::MultiHopPhaseGap { .. })
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Cycle { cc } => write!(f, "{cc}: closed switches form a cycle"),
            Violation::EnergizationMismatch { switch } => {
                write!(
                    f,
                    "switch {switch} is closed between an energized and a de-energized block"
                )
            }
            Violation::NoSource { cc } => write!(f, "{cc}: energized without a voltage source"),
            Violation::MultipleSources { cc, sources } => {
                write!(f, "{cc}: several sources ({})", sources.join(", "))
            }
            Violation::IneligibleGfm { generator } => {
                write!(f, "{generator} is grid-forming but not eligible")
            }
            Violation::GfmDeenergized { generator } => {
                write!(f, "{generator} is grid-forming in a de-energized block")
            }
            Violation::PhaseCoverage {
                generator,
                block,
                hops,
            } => {
                write!(
                    f,
                    "{generator} does not cover the phases of block {block} ({hops} hops away)"
                )
            }
            Violation::MultiHopPhaseGap {
                generator,
                block,
                hops,
            } => {
                write!(f, "warning: {generator} does not cover the phases of block {block} ({hops} hops away)")
            }
        }
    }
}

/// Returns every violation found, warnings included.
pub fn verify_topology(net: &Network, x: &MasterSolution) -> Vec<Violation> {
    verify_topology_under(net, x, &Contingency::default())
}

/// As [`verify_topology`], with the substation removed when the contingency
/// says so.
pub fn verify_topology_under(
    net: &Network,
    x: &MasterSolution,
    cont: &Contingency,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let nb = net.blocks.len();
    let states = x.topology().switches;
    let comps = net.connected_components(&states);

    for (s, sw) in net.switches.iter().enumerate() {
        let (i, j) = net.switch_blocks(s);
        if x.switches[s] && x.blocks[i] != x.blocks[j] {
            out.push(Violation::EnergizationMismatch {
                switch: sw.id.clone(),
            });
        }
    }

    // Edge count per component: a tree has one fewer closed switch than blocks.
    let mut edges = vec![0usize; comps.len()];
    for s in 0..net.switches.len() {
        if x.switches[s] {
            let (i, _) = net.switch_blocks(s);
            edges[comps.of_block[i]] += 1;
        }
    }
    for cc in 0..comps.len() {
        if edges[cc] + 1 != comps.members[cc].len() {
            out.push(Violation::Cycle {
                cc: comps.id(cc).to_string(),
            });
        }
    }

    for (g, gen) in net.generators.iter().enumerate() {
        if x.inverters[g] {
            if gen.substation || !net.is_eligible(g) {
                out.push(Violation::IneligibleGfm {
                    generator: gen.id.clone(),
                });
            }
            if !x.blocks[net.block_of_generator(g)] {
                out.push(Violation::GfmDeenergized {
                    generator: gen.id.clone(),
                });
            }
        }
    }

    for cc in 0..comps.len() {
        let members = &comps.members[cc];
        if !members.iter().any(|&l| x.blocks[l]) {
            continue;
        }
        let mut sources = Vec::new();
        for &l in members {
            for &g in &net.blocks[l].generators {
                let gen = &net.generators[g];
                if (gen.substation && !cont.substation_out && x.blocks[l]) || x.inverters[g] {
                    sources.push(gen.id.clone());
                }
            }
        }
        match sources.len() {
            0 => out.push(Violation::NoSource {
                cc: comps.id(cc).to_string(),
            }),
            1 => {}
            _ => out.push(Violation::MultipleSources {
                cc: comps.id(cc).to_string(),
                sources,
            }),
        }
    }

    // Phase coverage from each grid-forming generator along closed switches.
    let graph = net.block_graph();
    for (g, gen) in net.generators.iter().enumerate() {
        if !x.inverters[g] {
            continue;
        }
        let root = net.block_of_generator(g);
        let mut dist = vec![usize::MAX; nb];
        dist[root] = 0;
        let mut queue = VecDeque::from([root]);
        while let Some(b) = queue.pop_front() {
            for &(n, s) in graph.neighbors(b) {
                if x.switches[s] && dist[n] == usize::MAX {
                    dist[n] = dist[b] + 1;
                    queue.push_back(n);
                }
            }
        }
        for (k, block) in net.blocks.iter().enumerate() {
            if dist[k] == usize::MAX || block.phases.is_subset(gen.phases) {
                continue;
            }
            let (generator, blk, hops) = (gen.id.clone(), block.id.clone(), dist[k]);
            out.push(if hops <= 2 {
                Violation::PhaseCoverage {
                    generator,
                    block: blk,
                    hops,
                }
            } else {
                Violation::MultiHopPhaseGap {
                    generator,
                    block: blk,
                    hops,
                }
            });
        }
    }
    out
}
