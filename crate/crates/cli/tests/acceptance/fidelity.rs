//! Linear power flow against the AC solver: voltages at nominal load and
//! segment sensitivities by finite differences.

use dnmg::fixtures::{toybay, TOYBAY_JSON};
use dnmg::lindistflow::{
    balanced, energized_ccs, solve_ac_fixed_point, voltage_sensitivity, AcOptions, Dispatch,
    Fidelity, Topology,
};
use dnmg::mfrt::plant_measure;
use dnmg::netmodel::{Network, SwitchStates, UncertaintyModel};
use serde_json::{json, Value};

use crate::Outcome;

fn max_voltage_gap(net: &Network, topo: &Topology, dispatch: &Dispatch) -> f64 {
    let ccs = energized_ccs(net, topo).unwrap();
    let nominal = UncertaintyModel::new(net, Some(0.0)).unwrap().nominal();
    let lin = plant_measure(net, topo, &ccs, dispatch, &nominal, Fidelity::Linear).unwrap();
    let ac = plant_measure(net, topo, &ccs, dispatch, &nominal, Fidelity::Ac).unwrap();
    lin.v
        .iter()
        .zip(&ac.v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Source bus, one segment copied from the fixture, a small load at the far end.
fn two_bus(line: &Value) -> Network {
    let phases = line["phases"].clone();
    let doc = json!({
        "name": "two-bus",
        "base_power_va": 1e6,
        "base_voltage_v": {"mv": 12470.0},
        "buses": [
            {"id": "src", "phases": phases, "v_min": 0.9, "v_max": 1.1},
            {"id": "dst", "phases": phases, "v_min": 0.9, "v_max": 1.1}
        ],
        "lines": [{"id": "seg", "from": "src", "to": "dst", "phases": phases,
                   "impedance": line["impedance"], "flow_limit": 10.0}],
        "generators": [{"id": "sub", "bus": "src", "phases": phases, "p_max": 10.0, "q_min": -10.0,
                        "q_max": 10.0, "substation": true}],
        "loads": [{"id": "d", "bus": "dst", "phases": phases, "p_nominal": 0.01, "q_nominal": 0.005}],
        "clusters": [{"id": "C1", "loads": ["d"]}]
    });
    Network::from_json(&doc.to_string()).unwrap()
}

/// Largest relative error of `M_P`, `M_Q` against `-∂w_to/∂(p, q)` from
/// central differences of the AC solution.
fn sensitivity_error(net: &Network) -> f64 {
    let topo = Topology::energized_with(net, SwitchStates(vec![]));
    let ccs = energized_ccs(net, &topo).unwrap();
    let dispatch = Dispatch::zeros(net);
    let base = UncertaintyModel::new(net, Some(0.0)).unwrap().nominal();
    let opts = AcOptions {
        tolerance: 1e-13,
        max_iterations: 1000,
        ..Default::default()
    };
    let w_to = |s: &dnmg::netmodel::ScenarioVector| {
        let sol =
            solve_ac_fixed_point(net, &ccs[0], &topo, &dispatch, s, balanced(1.0), &opts).unwrap();
        assert!(sol.converged);
        [0, 1, 2].map(|a| sol.magnitude(1, a).powi(2))
    };
    let m = voltage_sensitivity(&net.lines[0]);
    let phases = net.lines[0].phases;
    let scale =
        m.mp.iter()
            .chain(&m.mq)
            .flatten()
            .fold(0.0f64, |a, v| a.max(v.abs()));
    let h = 1e-5;
    let mut worst = 0.0f64;
    for b in phases.iter() {
        for reactive in [false, true] {
            let shift = |sign: f64| {
                let mut s = base.clone();
                if reactive {
                    s.q[0][b] += sign * h;
                } else {
                    s.p[0][b] += sign * h;
                }
                w_to(&s)
            };
            let (up, down) = (shift(1.0), shift(-1.0));
            for a in phases.iter() {
                let fd = -(up[a] - down[a]) / (2.0 * h);
                let exact = if reactive { m.mq[a][b] } else { m.mp[a][b] };
                // Entries far below the matrix scale only need to stay small.
                worst = worst.max((fd - exact).abs() / exact.abs().max(0.05 * scale));
            }
        }
    }
    worst
}

fn closed(net: &Network, ids: &[&str]) -> SwitchStates {
    SwitchStates(
        net.switches
            .iter()
            .map(|s| ids.contains(&s.id.as_str()))
            .collect(),
    )
}

pub fn criterion() -> Outcome {
    let net = toybay();
    // Every block on the substation.
    let feeder = Topology::energized_with(&net, closed(&net, &["sw1", "sw2", "sw4", "sw5"]));
    let gap_feeder = max_voltage_gap(&net, &feeder, &Dispatch::zeros(&net));
    // Substation feeds B1 to B3; g2 and g3 form islands on B4 and B5.
    let mut islands = Topology::energized_with(&net, closed(&net, &["sw1", "sw2"]));
    for id in ["g2", "g3"] {
        islands.grid_forming[net.generator_index(id).unwrap()] = true;
    }
    let mut dispatch = Dispatch::zeros(&net);
    dispatch.p[net.generator_index("g1").unwrap()] = [0.1; 3];
    let gap_islands = max_voltage_gap(&net, &islands, &dispatch);

    let doc: Value = serde_json::from_str(TOYBAY_JSON).unwrap();
    let mut worst = 0.0f64;
    for line in doc["lines"].as_array().unwrap() {
        worst = worst.max(sensitivity_error(&two_bus(line)));
    }
    let gap = gap_islands.max(gap_feeder);
    let detail = format!(
        "max |v_lin - v_ac| {gap:.4} (single feeder {gap_feeder:.4}, islanded {gap_islands:.4}), worst sensitivity error {:.2}%",
        worst * 100.0
    );
    if gap <= 0.02 && worst <= 0.05 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
