//! Randomized fixture family: nested phases, block trees plus tie switches
//! and two load clusters.

use dnmg::netmodel::Network;
use dnmg::rpop::{cutting_plane, verify_topology, RpopConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::Outcome;

const PHASES: [&[&str]; 3] = [&["a", "b", "c"], &["a", "b"], &["a"]];

fn impedance(n: usize, r: f64, x: f64) -> Value {
    let m: Vec<Vec<[f64; 2]>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { [r, x] } else { [0.4 * r, 0.4 * x] })
                .collect()
        })
        .collect();
    json!(m)
}

fn bus(id: &str, level: usize) -> Value {
    json!({"id": id, "phases": PHASES[level], "v_min": 0.95, "v_max": 1.05, "voltage_level": "mv"})
}

/// Network for `seed`. Block 0 holds the substation; every other block hangs
/// off an earlier one and never has more phases than its parent.
pub fn random_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.random_range(3..=5);
    let mut buses = vec![bus("s0", 0)];
    let mut lines = Vec::new();
    let mut switches = Vec::new();
    let mut generators = vec![json!({
        "id": "sub", "bus": "s0", "phases": PHASES[0], "p_max": 2.0, "q_min": -2.0, "q_max": 2.0,
        "cost_linear": 1.0, "ramp_limit": 2.0, "substation": true
    })];
    let mut level = vec![0usize; nb];
    let mut block_buses: Vec<Vec<String>> = vec![vec!["s0".into()]];
    let mut parent = vec![0usize; nb];

    for b in 0..nb {
        if b > 0 {
            parent[b] = rng.random_range(0..b);
            level[b] = rng.random_range(level[parent[b]]..=2);
            block_buses.push(Vec::new());
        }
        let n = rng.random_range(1..=2);
        for k in 0..n {
            let id = format!("b{b}_{k}");
            buses.push(bus(&id, level[b]));
            if let Some(prev) = block_buses[b].last() {
                let r = rng.random_range(0.005..0.02);
                lines.push(json!({
                    "id": format!("l{b}_{k}"), "from": prev, "to": id, "phases": PHASES[level[b]],
                    "impedance": impedance(PHASES[level[b]].len(), r, 2.0 * r), "flow_limit": 1.0
                }));
            }
            block_buses[b].push(id);
        }
        if b > 0 {
            let from =
                block_buses[parent[b]][rng.random_range(0..block_buses[parent[b]].len())].clone();
            switches.push(json!({
                "id": format!("sw{}", switches.len() + 1), "from": from, "to": block_buses[b][0],
                "phases": PHASES[level[b]], "flow_limit": 1.0
            }));
        }
    }
    let ties = rng.random_range(1..=2);
    for _ in 0..ties {
        let i = rng.random_range(0..nb);
        let j = rng.random_range(0..nb);
        if i == j || parent[i] == j || parent[j] == i {
            continue;
        }
        let from = block_buses[i][rng.random_range(0..block_buses[i].len())].clone();
        let to = block_buses[j][rng.random_range(0..block_buses[j].len())].clone();
        switches.push(json!({
            "id": format!("sw{}", switches.len() + 1), "from": from, "to": to,
            "phases": PHASES[level[i].max(level[j])], "flow_limit": 1.0
        }));
    }

    for b in 1..nb {
        if rng.random_bool(0.6) {
            let at = block_buses[b][rng.random_range(0..block_buses[b].len())].clone();
            // Occasionally a single-phase unit in a wider block, which is never eligible.
            let lv = if rng.random_bool(0.2) { 2 } else { level[b] };
            let p_max = rng.random_range(0.1..0.3);
            generators.push(json!({
                "id": format!("g{b}"), "bus": at, "phases": PHASES[lv], "p_max": p_max, "q_max": 0.5 * p_max,
                "cost_linear": rng.random_range(0.4..0.9), "cost_fixed": rng.random_range(0.05..0.1),
                "ramp_limit": rng.random_range(0.03..0.06)
            }));
        }
    }

    // Clusters follow blocks; blocks 1 and 2 always carry a load, one per cluster.
    let mut loads = Vec::new();
    let mut clusters: [Vec<String>; 2] = Default::default();
    for b in 0..nb {
        let c = match b {
            0 | 1 => 0,
            2 => 1,
            _ => rng.random_range(0..2),
        };
        for (k, id) in block_buses[b].iter().enumerate() {
            let forced = (b == 1 || b == 2) && k == 0;
            if id == "s0" || (!forced && !rng.random_bool(0.7)) {
                continue;
            }
            let p = rng.random_range(0.02..0.15);
            let lid = format!("L{}", loads.len() + 1);
            clusters[c].push(lid.clone());
            loads.push(json!({
                "id": lid, "bus": id, "phases": PHASES[level[b]], "p_nominal": p, "q_nominal": 0.3 * p,
                "priority": rng.random_range(1..=10) as f64
            }));
        }
    }

    let doc = json!({
        "name": format!("family-{seed}"),
        "base_power_va": 1e6,
        "base_voltage_v": {"mv": 12470.0},
        "buses": buses,
        "lines": lines,
        "switches": switches,
        "generators": generators,
        "loads": loads,
        "clusters": [{"id": "C1", "loads": clusters[0]}, {"id": "C2", "loads": clusters[1]}],
        "uncertainty": 0.1
    });
    Network::from_json(&doc.to_string()).unwrap_or_else(|e| panic!("seed {seed}: {e}"))
}

pub fn criterion() -> Outcome {
    let results: Vec<Result<(bool, Vec<String>), String>> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let net = random_network(seed);
            let res = cutting_plane(&net, &RpopConfig::default())
                .map_err(|e| format!("seed {seed}: {e}"))?;
            let bad: Vec<String> = if res.converged {
                verify_topology(&net, &res.solution)
                    .into_iter()
                    .filter(|v| !v.is_warning())
                    .map(|v| format!("seed {seed}: {v}"))
                    .collect()
            } else {
                Vec::new()
            };
            Ok((res.converged, bad))
        })
        .collect();
    let mut converged = 0;
    let mut violations = Vec::new();
    for r in results {
        let (c, bad) = r?;
        converged += c as usize;
        violations.extend(bad);
    }
    if violations.is_empty() && converged > 0 {
        Ok(format!("{converged}/100 converged, 0 violations"))
    } else {
        Err(format!(
            "{converged}/100 converged, {} violations: {}",
            violations.len(),
            violations.join("; ")
        ))
    }
}
