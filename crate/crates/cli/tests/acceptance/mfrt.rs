//! Real-time controller: load-step response and the stationary point of the
//! projected primal-dual recursion.

use dnmg::fixtures::twinbay;
use dnmg::lindistflow::{energized_ccs, Dispatch, Fidelity, Topology};
use dnmg::mfrt::{
    cc_masks, constraint_g, dual_step, plant_measure, primal_step, run_episode, ControllerConfig,
    DualSign, EpisodeSchedule, EventScope, LoadEvent, Period,
};
use dnmg::netmodel::{Network, ScenarioVector, SwitchStates};
use dnmg::rpop::MasterSolution;
use serde_json::json;

use crate::Outcome;

const GLOBAL_STEP: usize = 7;
const LOCAL_STEP: usize = 40;
const STEPS: usize = 80;

/// Twinbay split in two: the substation feeds B1 and B2, gB forms B3.
fn split() -> MasterSolution {
    MasterSolution {
        switches: vec![true, false, false],
        inverters: vec![false, false, true, false],
        blocks: vec![true; 3],
        p: vec![[0.0; 3], [0.08; 3], [0.05; 3], [0.1; 3]],
        q: vec![[0.0; 3], [0.02; 3], [0.0; 3], [0.03; 3]],
        theta: 0.0,
        objective: 0.0,
    }
}

pub fn load_step() -> Outcome {
    let net = twinbay();
    let cfg = ControllerConfig {
        alpha: 0.2,
        ..Default::default()
    };
    let eps = cfg.epsilon;
    let schedule = EpisodeSchedule {
        periods: vec![Period {
            steps: STEPS,
            solution: split(),
            contingency: Default::default(),
            load_scale: 1.0,
            events: vec![
                LoadEvent {
                    step: GLOBAL_STEP,
                    scope: EventScope::Global,
                    factor: 1.15,
                },
                LoadEvent {
                    step: LOCAL_STEP,
                    scope: EventScope::Cc("CC-B3".into()),
                    factor: 0.97,
                },
            ],
        }],
    };
    let log = run_episode(&net, &schedule, &cfg, 1).map_err(|e| e.to_string())?;

    // First step after the global event at which each component tracks within 2ε.
    let ids: Vec<String> = log.records[0].ccs.iter().map(|c| c.id.clone()).collect();
    let mut settle = Vec::new();
    for (m, id) in ids.iter().enumerate() {
        let hit = log
            .records
            .iter()
            .filter(|r| r.step >= GLOBAL_STEP && r.step < LOCAL_STEP)
            .find(|r| {
                let c = &r.ccs[m];
                c.phases
                    .iter()
                    .all(|a| (c.slack_p[a] - c.reference_p[a]).abs() < 2.0 * eps)
            });
        settle.push((id.clone(), hit.map(|r| r.step - GLOBAL_STEP)));
    }

    // Injections of the substation component's controllable unit around the B3 step.
    let ga = net.generator_index("gA").unwrap();
    let before = log
        .records
        .iter()
        .find(|r| r.step == LOCAL_STEP - 1)
        .unwrap();
    let mut drift = 0.0f64;
    for r in log.records.iter().filter(|r| r.step >= LOCAL_STEP) {
        for a in 0..3 {
            drift = drift.max((r.p[ga][a] - before.p[ga][a]).abs());
            drift = drift.max((r.q[ga][a] - before.q[ga][a]).abs());
        }
    }

    let settled = settle.iter().all(|(_, s)| s.is_some_and(|k| k <= 30));
    let parts: Vec<String> = settle
        .iter()
        .map(|(id, s)| match s {
            Some(k) => format!("{id} within 2eps after {k} steps"),
            None => format!("{id} never within 2eps"),
        })
        .collect();
    let detail = format!(
        "{}; gA drift after CC-B3 step {drift:.4} (limit {:.2})",
        parts.join(", "),
        3.0 * eps
    );
    if settled && drift <= 3.0 * eps {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn two_bus() -> Network {
    let z = |r: f64, x: f64| {
        (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| if i == j { [r, x] } else { [0.4 * r, 0.4 * x] })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let doc = json!({
        "name": "two-bus",
        "base_power_va": 1e6,
        "base_voltage_v": {"mv": 12470.0},
        "buses": [
            {"id": "src", "phases": ["a", "b", "c"], "v_min": 0.95, "v_max": 1.05},
            {"id": "dst", "phases": ["a", "b", "c"], "v_min": 0.95, "v_max": 1.05}
        ],
        "lines": [{"id": "seg", "from": "src", "to": "dst", "phases": ["a", "b", "c"],
                   "impedance": z(0.01, 0.02), "flow_limit": 2.0}],
        "generators": [
            {"id": "sub", "bus": "src", "phases": ["a", "b", "c"], "p_max": 2.0, "q_min": -2.0, "q_max": 2.0,
             "substation": true},
            {"id": "dg", "bus": "dst", "phases": ["a", "b", "c"], "p_max": 0.3, "q_max": 0.2}
        ],
        "loads": [{"id": "d", "bus": "dst", "phases": ["a", "b", "c"],
                   "p_nominal": [0.2, 0.15, 0.1], "q_nominal": 0.05}],
        "clusters": [{"id": "C1", "loads": ["d"]}]
    });
    Network::from_json(&doc.to_string()).unwrap()
}

/// Exploration off and `∇_s f` supplied analytically: the slack injection is
/// `load - p` per phase, so `∂f/∂p = -2 (P_sl - ref)` and `∂f/∂q = 0`. The
/// recursion is iterated to its fixed point and compared with the closed-form
/// minimizer of `Σ (load - p - ref)² + ρ/2 |s|²` over the box.
pub fn stationarity() -> Outcome {
    let net = two_bus();
    let cfg = ControllerConfig {
        alpha: 0.2,
        rho: 0.1,
        dual_sign: DualSign::Ascent,
        ..Default::default()
    };
    let topo = Topology::energized_with(&net, SwitchStates(vec![]));
    let ccs = energized_ccs(&net, &topo).map_err(|e| e.to_string())?;
    let dg = net.generator_index("dg").unwrap();
    let gen = &net.generators[dg];

    let before = ScenarioVector {
        p: vec![[0.2, 0.15, 0.1]],
        q: vec![[0.05; 3]],
        zeta_plus: None,
    };
    let after = ScenarioVector {
        p: vec![[0.26, 0.18, 0.04]],
        q: vec![[0.05; 3]],
        zeta_plus: None,
    };
    // s = [p_a, p_b, p_c, q_a, q_b, q_c]
    let mut s = vec![0.03, 0.03, 0.03, 0.02, 0.02, 0.02];
    let lo = vec![0.0; 6];
    let hi: Vec<f64> = (0..6)
        .map(|i| {
            if i < 3 {
                gen.p_max[i]
            } else {
                gen.q_max[i - 3]
            }
        })
        .collect();
    let dispatch = |s: &[f64]| {
        let mut d = Dispatch::zeros(&net);
        for a in 0..3 {
            d.p[dg][a] = s[a];
            d.q[dg][a] = s[3 + a];
        }
        d
    };
    let measure = |s: &[f64], scen: &ScenarioVector| {
        plant_measure(&net, &topo, &ccs, &dispatch(s), scen, Fidelity::Linear)
            .map_err(|e| e.to_string())
    };

    let first = measure(&s, &before)?;
    let reference = first.slack_p[0];
    let v_min: Vec<f64> = first
        .nodes
        .iter()
        .map(|&(b, _)| net.buses[b].v_min)
        .collect();
    let v_max: Vec<f64> = first
        .nodes
        .iter()
        .map(|&(b, _)| net.buses[b].v_max)
        .collect();
    let nu = cc_masks(&first.node_cc, 1).remove(0);
    let mut lambda = vec![0.0; 2 * first.nodes.len()];
    let mut iters = 0;
    for k in 0..5000 {
        iters = k + 1;
        let y = measure(&s, &after)?;
        let mut grad = vec![0.0; 6];
        for a in 0..3 {
            grad[a] = -2.0 * (y.slack_p[0][a] - reference[a]);
        }
        let prev = s.clone();
        primal_step(&mut s, &grad, &lo, &hi, cfg.alpha, cfg.rho);
        let g = constraint_g(&y.v, &v_min, &v_max);
        dual_step(&mut lambda, &g, &nu, &cfg);
        let moved = s
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if moved < 1e-13 {
            break;
        }
    }
    if lambda.iter().any(|&l| l != 0.0) {
        return Err("voltage multipliers moved off zero".into());
    }

    let mut qp = [0.0; 6];
    for a in 0..3 {
        let target = after.p[0][a] - reference[a];
        qp[a] = (2.0 * target / (2.0 + cfg.rho)).clamp(lo[a], hi[a]);
    }
    let err = s
        .iter()
        .zip(&qp)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "fixed point {:.6?} vs QP {:.6?}, max error {err:.2e} after {iters} iterations",
        &s[..3],
        &qp[..3]
    );
    if err <= 1e-4 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
