//! Sampled feasibility of robust and nominal partitions, and objective trend.

use std::time::Instant;

use dnmg::fixtures::{toybay, toybay_stress, twinbay};
use dnmg::lindistflow::Fidelity;
use dnmg::netmodel::{Network, ScenarioVector, UncertaintyModel};
use dnmg::optcore::{solve_lp, LpOptions};
use dnmg::rpop::{
    build_subproblem, cutting_plane, robust_feasibility_sample, MasterSolution, RpopConfig,
};
use rayon::prelude::*;

use crate::Outcome;

const SAMPLES: usize = 1000;
const SEED: u64 = 20_240_601;

fn partition(net: &Network, level: f64) -> Result<(MasterSolution, f64), String> {
    let config = RpopConfig {
        uncertainty: Some(level),
        ..Default::default()
    };
    let res = cutting_plane(net, &config).map_err(|e| e.to_string())?;
    if !res.converged {
        return Err(format!("{} at {level}: not converged", net.name));
    }
    Ok((res.solution, res.objective))
}

pub fn feasibility() -> Outcome {
    let net = toybay();
    let config = RpopConfig::default();
    let t0 = Instant::now();
    let mut parts = Vec::new();
    let mut ok = true;
    for level in [0.05, 0.1, 0.2] {
        let (sol, _) = partition(&net, level)?;
        let lin = robust_feasibility_sample(
            &net,
            &sol,
            level,
            true,
            SAMPLES,
            SEED,
            Fidelity::Linear,
            &config,
        )
        .map_err(|e| e.to_string())?;
        let ac = robust_feasibility_sample(
            &net,
            &sol,
            level,
            true,
            SAMPLES,
            SEED,
            Fidelity::Ac,
            &config,
        )
        .map_err(|e| e.to_string())?;
        ok &= lin.fraction == 1.0 && ac.fraction >= 0.95;
        parts.push(format!(
            "{:.0}%: linear {:.1}% ac {:.1}%",
            level * 100.0,
            lin.fraction * 100.0,
            ac.fraction * 100.0
        ));
    }
    let secs = t0.elapsed().as_secs_f64();
    ok &= secs <= 120.0;
    let detail = format!("{} ({secs:.1}s)", parts.join(", "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Feasible share of the clustered box for a fixed decision, by integrating
/// the feasible interval of the second cluster factor over a grid of the
/// first. For a fixed decision the set of serviceable factors is convex, so
/// each slice is one interval found by two LPs.
fn feasible_area(net: &Network, x: &MasterSolution, level: f64, grid: usize) -> f64 {
    let unc = UncertaintyModel::new(net, Some(level)).unwrap();
    assert_eq!(unc.num_clusters(), 2, "oracle expects two clusters");
    let (c1, c2) = (unc.cluster_order[0], unc.cluster_order[1]);
    let config = RpopConfig::default();
    let h = 2.0 * level / grid as f64;
    let lengths: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let u1 = -level + (i as f64 + 0.5) * h;
            let scale = |d: usize| {
                if unc.load_cluster[d] == c1 {
                    1.0 + u1
                } else {
                    1.0
                }
            };
            let scen = ScenarioVector {
                p: unc
                    .p_nominal
                    .iter()
                    .enumerate()
                    .map(|(d, v)| v.map(|s| s * scale(d)))
                    .collect(),
                q: unc
                    .q_nominal
                    .iter()
                    .enumerate()
                    .map(|(d, v)| v.map(|s| s * scale(d)))
                    .collect(),
                zeta_plus: None,
            };
            let mut sub = build_subproblem(net, x, &scen, &config, true).unwrap();
            let m = &mut sub.model;
            for v in sub.flow.slack_columns() {
                m.set_bounds(v, 0.0, 0.0);
            }
            for j in 0..m.num_vars() {
                m.set_cost(dnmg::optcore::VarId(j), 0.0);
            }
            // u2 enters every balance row of cluster-2 loads through z·s0.
            let t = m.add_var("u2", -level, level);
            for (d, load) in net.loads.iter().enumerate() {
                if unc.load_cluster[d] != c2 {
                    continue;
                }
                let z = if x.blocks[net.block_of_bus[load.bus]] {
                    1.0
                } else {
                    0.0
                };
                for a in load.phases.iter() {
                    let (bp, bq) = sub.flow.balance[load.bus][a].unwrap();
                    m.add_coef(bp, t, z * unc.p_nominal[d][a]);
                    m.add_coef(bq, t, z * unc.q_nominal[d][a]);
                }
            }
            m.set_cost(t, 1.0);
            let lo = solve_lp(m, &LpOptions::default());
            if !lo.is_optimal() {
                return 0.0;
            }
            m.set_cost(t, -1.0);
            let hi = solve_lp(m, &LpOptions::default());
            assert!(hi.is_optimal());
            (-hi.objective - lo.objective).max(0.0)
        })
        .collect();
    lengths.iter().sum::<f64>() * h / (2.0 * level).powi(2)
}

pub fn degradation() -> Outcome {
    let net = toybay_stress();
    let level = 0.2;
    let (sol, _) = partition(&net, 0.0)?;
    let config = RpopConfig::default();
    let rep = robust_feasibility_sample(
        &net,
        &sol,
        level,
        true,
        SAMPLES,
        SEED,
        Fidelity::Linear,
        &config,
    )
    .map_err(|e| e.to_string())?;
    let exact = feasible_area(&net, &sol, level, 400);
    let sigma = (exact * (1.0 - exact) / SAMPLES as f64)
        .sqrt()
        .max(1.0 / SAMPLES as f64);
    let detail = format!(
        "sampled {:.3} vs exact {exact:.4} (3 sigma = {:.4})",
        rep.fraction,
        3.0 * sigma
    );
    if rep.fraction < 1.0 && (rep.fraction - exact).abs() <= 3.0 * sigma {
        Ok(detail)
    } else {
        Err(detail)
    }
}

pub fn monotone() -> Outcome {
    let levels = [0.0, 0.05, 0.1, 0.2];
    let mut parts = Vec::new();
    let mut ok = true;
    for net in [toybay(), toybay_stress(), twinbay()] {
        let objs: Vec<f64> = levels
            .iter()
            .map(|&x| partition(&net, x).map(|r| r.1))
            .collect::<Result<_, _>>()?;
        ok &= objs.windows(2).all(|w| w[0] <= w[1] + 1e-7);
        let s: Vec<String> = objs.iter().map(|o| format!("{o:.4}")).collect();
        parts.push(format!("{} [{}]", net.name, s.join(" <= ")));
    }
    let detail = parts.join(", ");
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}
