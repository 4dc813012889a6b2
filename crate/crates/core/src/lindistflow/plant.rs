//! Fixed-topology plant evaluation: component discovery, spanning trees and
//! the linear radial sweep.

use thiserror::Error;

use crate::netmodel::{Network, PerPhase, ScenarioVector, SwitchStates, TransformerKind};

use super::sensitivity::voltage_sensitivity;

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Switch, block and inverter states of a first-stage decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub switches: SwitchStates,
    pub energized: Vec<bool>,
    pub grid_forming: Vec<bool>,
}

impl Topology {
    /// Every block energized, no inverter grid-forming.
    pub fn energized_with(net: &Network, switches: SwitchStates) -> Self {
        Topology {
            switches,
            energized: vec![true; net.blocks.len()],
            grid_forming: vec![false; net.generators.len()],
        }
    }
}

/// Generator outputs per phase.
#[derive(Debug, Clone, PartialEq)]
pub struct Dispatch {
    pub p: Vec<PerPhase>,
    pub q: Vec<PerPhase>,
}

impl Dispatch {
    pub fn zeros(net: &Network) -> Self {
        Dispatch {
            p: vec![[0.0; 3]; net.generators.len()],
            q: vec![[0.0; 3]; net.generators.len()],
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("component {0} is not radial")]
    NotRadial(String),
    #[error("component {0} has no voltage source")]
    NoSlack(String),
    #[error("component {0} mixes energized and de-energized blocks")]
    MixedEnergization(String),
    #[error("delta transformer `{0}` must be fed from its from side")]
    DeltaReversed(String),
    #[error("meshed component {0} contains a transformer")]
    MeshedTransformer(String),
    #[error("singular admittance matrix in component {0}")]
    Singular(String),
    #[error("AC power flow did not converge in component {0}")]
    NotConverged(String),
}

/// An energized connected component with its voltage source.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantCc {
    /// `CC-<block holding the source>`.
    pub id: String,
    pub blocks: Vec<usize>,
    pub buses: Vec<usize>,
    pub slack_gen: usize,
    pub slack_bus: usize,
}

/// Energized components in block order. The substation is the source when
/// present, otherwise the lowest-index grid-forming generator.
pub fn energized_ccs(net: &Network, topo: &Topology) -> Result<Vec<PlantCc>, PlantError> {
    let comps = net.connected_components(&topo.switches);
    let mut out = Vec::new();
    for c in 0..comps.len() {
        let blocks = &comps.members[c];
        let on = blocks.iter().filter(|&&l| topo.energized[l]).count();
        if on == 0 {
            continue;
        }
        if on != blocks.len() {
            return Err(PlantError::MixedEnergization(comps.id(c).to_string()));
        }
        let gens: Vec<usize> = blocks
            .iter()
            .flat_map(|&l| net.blocks[l].generators.iter().copied())
            .collect();
        let slack = gens
            .iter()
            .copied()
            .filter(|&g| net.generators[g].substation)
            .chain(gens.iter().copied().filter(|&g| topo.grid_forming[g]))
            .min_by_key(|&g| (!net.generators[g].substation, g))
            .ok_or_else(|| PlantError::NoSlack(comps.id(c).to_string()))?;
        let mut buses: Vec<usize> = blocks
            .iter()
            .flat_map(|&l| net.blocks[l].buses.iter().copied())
            .collect();
        buses.sort_unstable();
        out.push(PlantCc {
            id: format!("CC-{}", net.blocks[net.block_of_generator(slack)].id),
            blocks: blocks.clone(),
            buses,
            slack_gen: slack,
            slack_bus: net.generators[slack].bus,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Edge {
    Line(usize),
    Switch(usize),
    Transformer(usize),
}

/// Tree edge into a bus from its parent.
#[derive(Debug, Clone, Copy)]
pub struct TreeLink {
    pub parent: usize,
    pub edge: Edge,
    /// True if the parent is the edge's `from` end.
    pub parent_is_from: bool,
}

/// Breadth-first spanning structure of a component.
#[derive(Debug, Clone)]
pub struct CcTree {
    pub order: Vec<usize>,
    pub link: Vec<Option<TreeLink>>,
    pub meshed: bool,
    pub has_transformer: bool,
}

pub(crate) fn cc_edges(
    net: &Network,
    topo: &Topology,
    in_cc: &[bool],
) -> Vec<(Edge, usize, usize)> {
    let mut edges = Vec::new();
    for (l, seg) in net.lines.iter().enumerate() {
        if in_cc[seg.from] {
            edges.push((Edge::Line(l), seg.from, seg.to));
        }
    }
    for (s, sw) in net.switches.iter().enumerate() {
        if topo.switches.closed(s) && in_cc[sw.from] && in_cc[sw.to] {
            edges.push((Edge::Switch(s), sw.from, sw.to));
        }
    }
    for (t, x) in net.transformers.iter().enumerate() {
        if in_cc[x.from] {
            edges.push((Edge::Transformer(t), x.from, x.to));
        }
    }
    edges
}

pub fn build_tree(net: &Network, topo: &Topology, cc: &PlantCc) -> CcTree {
    let nb = net.buses.len();
    let mut in_cc = vec![false; nb];
    for &b in &cc.buses {
        in_cc[b] = true;
    }
    let edges = cc_edges(net, topo, &in_cc);
    let mut adj: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); nb];
    for (k, &(_, f, t)) in edges.iter().enumerate() {
        adj[f].push((k, t, true));
        adj[t].push((k, f, false));
    }
    let mut link = vec![None; nb];
    let mut seen = vec![false; nb];
    let mut used = vec![false; edges.len()];
    let mut order = vec![cc.slack_bus];
    seen[cc.slack_bus] = true;
    let mut meshed = false;
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &(k, v, u_is_from) in &adj[u] {
            if used[k] {
                continue;
            }
            used[k] = true;
            if seen[v] {
                meshed = true;
                continue;
            }
            seen[v] = true;
            link[v] = Some(TreeLink {
                parent: u,
                edge: edges[k].0,
                parent_is_from: u_is_from,
            });
            order.push(v);
        }
    }
    let has_transformer = edges.iter().any(|e| matches!(e.0, Edge::Transformer(_)));
    CcTree {
        order,
        link,
        meshed,
        has_transformer,
    }
}

/// Per-branch flows measured at the `from` end (transformers: both ends,
/// each as power leaving the bus into the transformer).
#[derive(Debug, Clone, PartialEq)]
pub struct BranchFlow {
    pub line_p: Vec<PerPhase>,
    pub line_q: Vec<PerPhase>,
    pub switch_p: Vec<PerPhase>,
    pub switch_q: Vec<PerPhase>,
    pub xfmr_from_p: Vec<PerPhase>,
    pub xfmr_from_q: Vec<PerPhase>,
    pub xfmr_to_p: Vec<PerPhase>,
    pub xfmr_to_q: Vec<PerPhase>,
}

impl BranchFlow {
    fn zeros(net: &Network) -> Self {
        let z = |n: usize| vec![[0.0; 3]; n];
        BranchFlow {
            line_p: z(net.lines.len()),
            line_q: z(net.lines.len()),
            switch_p: z(net.switches.len()),
            switch_q: z(net.switches.len()),
            xfmr_from_p: z(net.transformers.len()),
            xfmr_from_q: z(net.transformers.len()),
            xfmr_to_p: z(net.transformers.len()),
            xfmr_to_q: z(net.transformers.len()),
        }
    }
}

/// Result of the linear sweep for one component.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFlow {
    /// Squared voltage magnitude per bus phase (zero outside the component).
    pub w: Vec<PerPhase>,
    pub flows: BranchFlow,
    pub slack_p: PerPhase,
    pub slack_q: PerPhase,
    pub iterations: usize,
}

impl LinearFlow {
    pub fn v(&self, bus: usize, phase: usize) -> f64 {
        self.w[bus][phase].max(0.0).sqrt()
    }
}

/// Net demand per bus phase excluding the slack generator: loads minus other
/// generators. Shunts are added separately.
pub(crate) fn nodal_demand(
    net: &Network,
    cc: &PlantCc,
    dispatch: &Dispatch,
    scenario: &ScenarioVector,
) -> (Vec<PerPhase>, Vec<PerPhase>) {
    let nb = net.buses.len();
    let mut dp = vec![[0.0; 3]; nb];
    let mut dq = vec![[0.0; 3]; nb];
    let mut in_cc = vec![false; nb];
    for &b in &cc.buses {
        in_cc[b] = true;
    }
    for (d, l) in net.loads.iter().enumerate() {
        if in_cc[l.bus] {
            for a in l.phases.iter() {
                dp[l.bus][a] += scenario.p[d][a];
                dq[l.bus][a] += scenario.q[d][a];
            }
        }
    }
    for (g, gen) in net.generators.iter().enumerate() {
        if in_cc[gen.bus] && g != cc.slack_gen {
            for a in gen.phases.iter() {
                dp[gen.bus][a] -= dispatch.p[g][a];
                dq[gen.bus][a] -= dispatch.q[g][a];
            }
        }
    }
    (dp, dq)
}

pub(crate) fn edge_phases(net: &Network, e: Edge) -> crate::netmodel::PhaseSet {
    match e {
        Edge::Line(l) => net.lines[l].phases,
        Edge::Switch(s) => net.switches[s].phases,
        Edge::Transformer(t) => net.transformers[t].phases,
    }
}

/// Linear power flow on a radial component: flows aggregate leaf to root,
/// squared voltages propagate root to leaf. Iterates only to settle shunt
/// terms, which depend on voltage.
pub fn solve_linear_power_flow(
    net: &Network,
    cc: &PlantCc,
    topo: &Topology,
    dispatch: &Dispatch,
    scenario: &ScenarioVector,
    slack_w0: f64,
) -> Result<LinearFlow, PlantError> {
    let tree = build_tree(net, topo, cc);
    if tree.meshed {
        return Err(PlantError::NotRadial(cc.id.clone()));
    }
    for &u in &tree.order {
        if let Some(TreeLink {
            edge: Edge::Transformer(t),
            parent_is_from: false,
            ..
        }) = tree.link[u]
        {
            if net.transformers[t].kind == TransformerKind::Delta {
                return Err(PlantError::DeltaReversed(net.transformers[t].id.clone()));
            }
        }
    }
    let nb = net.buses.len();
    let (dp0, dq0) = nodal_demand(net, cc, dispatch, scenario);
    let has_shunt = cc.buses.iter().any(|&b| {
        net.buses[b]
            .shunt_g
            .iter()
            .chain(&net.buses[b].shunt_b)
            .any(|v| *v != 0.0)
    });

    let mut w = vec![[0.0; 3]; nb];
    let mut flows;
    let mut slack;
    let mut iterations = 0;
    let max_iter = if has_shunt { 200 } else { 1 };
    loop {
        iterations += 1;
        // Power drawn into each bus from its parent.
        let mut fp = vec![[0.0; 3]; nb];
        let mut fq = vec![[0.0; 3]; nb];
        for &u in &tree.order {
            let bus = &net.buses[u];
            for a in bus.phases.iter() {
                fp[u][a] = dp0[u][a] + bus.shunt_g[a] * w[u][a];
                fq[u][a] = dq0[u][a] - bus.shunt_b[a] * w[u][a];
            }
        }
        flows = BranchFlow::zeros(net);
        for &u in tree.order.iter().rev() {
            let Some(link) = tree.link[u] else { continue };
            let ph = edge_phases(net, link.edge);
            let (cp, cq) = (fp[u], fq[u]);
            let (mut drawn_p, mut drawn_q) = ([0.0; 3], [0.0; 3]);
            match link.edge {
                Edge::Line(_) | Edge::Switch(_) => {
                    for a in ph.iter() {
                        drawn_p[a] = cp[a];
                        drawn_q[a] = cq[a];
                    }
                    let sign = if link.parent_is_from { 1.0 } else { -1.0 };
                    let (tp, tq) = match link.edge {
                        Edge::Line(l) => (&mut flows.line_p[l], &mut flows.line_q[l]),
                        Edge::Switch(s) => (&mut flows.switch_p[s], &mut flows.switch_q[s]),
                        Edge::Transformer(_) => unreachable!(),
                    };
                    for a in ph.iter() {
                        tp[a] = sign * cp[a];
                        tq[a] = sign * cq[a];
                    }
                }
                Edge::Transformer(t) => {
                    let x = &net.transformers[t];
                    // Child side draws into the transformer the negative of its demand.
                    let (chp, chq) = (cp.map(|v| -v), cq.map(|v| -v));
                    if x.kind == TransformerKind::Wye || !link.parent_is_from {
                        for a in ph.iter() {
                            drawn_p[a] = -chp[a];
                            drawn_q[a] = -chq[a];
                        }
                    } else {
                        for (a, b) in [(0, 2), (1, 0), (2, 1)] {
                            drawn_p[a] = 0.5 * (-(chp[a] + chp[b]) + (chq[b] - chq[a]) / SQRT3);
                            drawn_q[a] = 0.5 * ((chp[a] - chp[b]) / SQRT3 - (chq[b] + chq[a]));
                        }
                    }
                    let (pp, pq, cp_, cq_) = if link.parent_is_from {
                        (
                            &mut flows.xfmr_from_p[t],
                            &mut flows.xfmr_from_q[t],
                            &mut flows.xfmr_to_p[t],
                            &mut flows.xfmr_to_q[t],
                        )
                    } else {
                        (
                            &mut flows.xfmr_to_p[t],
                            &mut flows.xfmr_to_q[t],
                            &mut flows.xfmr_from_p[t],
                            &mut flows.xfmr_from_q[t],
                        )
                    };
                    for a in ph.iter() {
                        pp[a] = drawn_p[a];
                        pq[a] = drawn_q[a];
                        cp_[a] = chp[a];
                        cq_[a] = chq[a];
                    }
                }
            }
            for a in ph.iter() {
                fp[link.parent][a] += drawn_p[a];
                fq[link.parent][a] += drawn_q[a];
            }
        }
        slack = (fp[cc.slack_bus], fq[cc.slack_bus]);

        let mut nw = vec![[0.0; 3]; nb];
        for a in net.buses[cc.slack_bus].phases.iter() {
            nw[cc.slack_bus][a] = slack_w0;
        }
        for &u in tree.order.iter().skip(1) {
            let link = tree.link[u].unwrap();
            let ph = edge_phases(net, link.edge);
            let wp = nw[link.parent];
            match link.edge {
                Edge::Line(l) => {
                    let m = voltage_sensitivity(&net.lines[l]);
                    let drop = m.drop(&fp[u], &fq[u]);
                    for a in ph.iter() {
                        nw[u][a] = wp[a] - drop[a];
                    }
                }
                Edge::Switch(_) => {
                    for a in ph.iter() {
                        nw[u][a] = wp[a];
                    }
                }
                Edge::Transformer(t) => {
                    let x = &net.transformers[t];
                    let n2 = x.tap_ratio * x.tap_ratio;
                    match (x.kind, link.parent_is_from) {
                        (TransformerKind::Wye, true) => {
                            ph.iter().for_each(|a| nw[u][a] = wp[a] / n2)
                        }
                        (TransformerKind::Wye, false) => {
                            ph.iter().for_each(|a| nw[u][a] = wp[a] * n2)
                        }
                        (TransformerKind::Delta, _) => {
                            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                                nw[u][a] = 3.0 * (wp[a] + wp[b]) / (2.0 * n2);
                            }
                        }
                    }
                }
            }
        }
        let change = nw
            .iter()
            .zip(&w)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        w = nw;
        if iterations >= max_iter || (iterations > 1 && change < 1e-14) {
            break;
        }
    }
    Ok(LinearFlow {
        w,
        flows,
        slack_p: slack.0,
        slack_q: slack.1,
        iterations,
    })
}
