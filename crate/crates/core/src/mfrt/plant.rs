//! Plant measurements: slack injections and PQ-node voltages per component.

use serde::{Deserialize, Serialize};

use crate::lindistflow::{
    balanced, solve_ac_fixed_point, solve_linear_power_flow, AcOptions, Dispatch, Fidelity,
    PlantCc, PlantError, Topology,
};
use crate::netmodel::{Network, PerPhase, ScenarioVector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantMeasurement {
    /// Slack active injection per component and phase.
    pub slack_p: Vec<PerPhase>,
    /// `(bus, phase)` of every PQ node, components in order.
    pub nodes: Vec<(usize, usize)>,
    pub node_cc: Vec<usize>,
    pub v: Vec<f64>,
}

impl PlantMeasurement {
    /// Element-wise average of two measurements on the same topology.
    pub fn midpoint(a: &PlantMeasurement, b: &PlantMeasurement) -> PlantMeasurement {
        PlantMeasurement {
            slack_p: a
                .slack_p
                .iter()
                .zip(&b.slack_p)
                .map(|(x, y)| [0, 1, 2].map(|k| 0.5 * (x[k] + y[k])))
                .collect(),
            nodes: a.nodes.clone(),
            node_cc: a.node_cc.clone(),
            v: a.v.iter().zip(&b.v).map(|(x, y)| 0.5 * (x + y)).collect(),
        }
    }
}

/// PQ nodes of the energized components: every bus phase except those at the
/// slack bus.
pub fn pq_nodes(net: &Network, ccs: &[PlantCc]) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut nodes = Vec::new();
    let mut owner = Vec::new();
    for (m, cc) in ccs.iter().enumerate() {
        for &b in &cc.buses {
            if b == cc.slack_bus {
                continue;
            }
            for a in net.buses[b].phases.iter() {
                nodes.push((b, a));
                owner.push(m);
            }
        }
    }
    (nodes, owner)
}

pub fn plant_measure(
    net: &Network,
    topo: &Topology,
    ccs: &[PlantCc],
    s: &Dispatch,
    scenario: &ScenarioVector,
    fidelity: Fidelity,
) -> Result<PlantMeasurement, PlantError> {
    let (nodes, node_cc) = pq_nodes(net, ccs);
    let mut v = vec![0.0; nodes.len()];
    let mut slack_p = Vec::with_capacity(ccs.len());
    let mut k = 0;
    for (m, cc) in ccs.iter().enumerate() {
        let vset = net.generators[cc.slack_gen].v_setpoint;
        let start = k;
        while k < nodes.len() && node_cc[k] == m {
            k += 1;
        }
        match fidelity {
            Fidelity::Linear => {
                let lf = solve_linear_power_flow(net, cc, topo, s, scenario, vset * vset)?;
                for i in start..k {
                    v[i] = lf.v(nodes[i].0, nodes[i].1);
                }
                slack_p.push(lf.slack_p);
            }
            Fidelity::Ac => {
                let sol = solve_ac_fixed_point(
                    net,
                    cc,
                    topo,
                    s,
                    scenario,
                    balanced(vset),
                    &AcOptions::default(),
                )?;
                if !sol.converged {
                    return Err(PlantError::NotConverged(cc.id.clone()));
                }
                for i in start..k {
                    v[i] = sol.magnitude(nodes[i].0, nodes[i].1);
                }
                slack_p.push(sol.slack_s.map(|c| c.re));
            }
        }
    }
    Ok(PlantMeasurement {
        slack_p,
        nodes,
        node_cc,
        v,
    })
}
