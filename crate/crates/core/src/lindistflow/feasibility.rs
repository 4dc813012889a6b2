//! Feasibility of a fixed first-stage decision under one load realization.

use serde::{Deserialize, Serialize};

use super::ac::{ac_branch_magnitudes, balanced, solve_ac_fixed_point, AcOptions};
use super::plant::{energized_ccs, Dispatch, Edge, PlantCc};
use crate::netmodel::{Network, ScenarioVector, UncertaintyModel};
use crate::rpop::{build_subproblem, solve_subproblem, MasterSolution, RpopConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fidelity {
    Linear,
    Ac,
}

impl std::str::FromStr for Fidelity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "linear" => Ok(Fidelity::Linear),
            "ac" => Ok(Fidelity::Ac),
            _ => Err(format!("unknown fidelity `{s}` (expected linear or ac)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// Largest bound violation in per unit (slack sum for linear fidelity).
    pub max_violation: f64,
    pub reason: Option<String>,
}

impl FeasibilityReport {
    fn failed(reason: String) -> Self {
        FeasibilityReport {
            feasible: false,
            max_violation: f64::INFINITY,
            reason: Some(reason),
        }
    }
}

const AC_TOL: f64 = 1e-6;
const PROJECTION_ROUNDS: usize = 3;

pub fn check_feasibility(
    net: &Network,
    x: &MasterSolution,
    scenario: &ScenarioVector,
    fidelity: Fidelity,
    config: &RpopConfig,
) -> FeasibilityReport {
    match fidelity {
        Fidelity::Linear => check_linear(net, x, scenario, config),
        Fidelity::Ac => check_ac(net, x, scenario, config),
    }
}

fn check_linear(
    net: &Network,
    x: &MasterSolution,
    scenario: &ScenarioVector,
    config: &RpopConfig,
) -> FeasibilityReport {
    let sol = build_subproblem(net, x, scenario, config, true)
        .and_then(|sub| solve_subproblem(net, &sub));
    match sol {
        Ok(s) => FeasibilityReport {
            feasible: s.slack <= config.epsilon,
            max_violation: s.slack,
            reason: (s.slack > config.epsilon).then(|| format!("balance slack {:.3e}", s.slack)),
        },
        Err(e) => FeasibilityReport::failed(e.to_string()),
    }
}

/// Headroom of a generator phase in the direction of `delta`, limited by its
/// capability range and by the ramp window around the first-stage set-point.
fn headroom(
    net: &Network,
    x: &MasterSolution,
    d: &Dispatch,
    g: usize,
    a: usize,
    reactive: bool,
    delta: f64,
) -> f64 {
    let gen = &net.generators[g];
    let (set, first, lo, hi) = if reactive {
        (d.q[g][a], x.q[g][a], gen.q_min[a], gen.q_max[a])
    } else {
        (d.p[g][a], x.p[g][a], gen.p_min[a], gen.p_max[a])
    };
    let r = gen.ramp_limit[a];
    let h = if delta > 0.0 {
        hi.min(first + r) - set
    } else {
        set - lo.max(first - r)
    };
    h.max(0.0)
}

/// Spreads `delta` over the non-slack generators of `cc` on phase `a` in
/// proportion to headroom. With `slack_share` the slack generator counts
/// toward the total and keeps its share.
#[allow(clippy::too_many_arguments)]
fn spread(
    net: &Network,
    cc: &PlantCc,
    x: &MasterSolution,
    d: &mut Dispatch,
    a: usize,
    reactive: bool,
    delta: f64,
    slack_share: bool,
) {
    if delta == 0.0 {
        return;
    }
    let in_cc = |bus: usize| cc.buses.binary_search(&bus).is_ok();
    let mut room = Vec::new();
    let mut total = 0.0;
    for (g, gen) in net.generators.iter().enumerate() {
        if !in_cc(gen.bus) || !gen.phases.contains(a) {
            continue;
        }
        let h = headroom(net, x, d, g, a, reactive, delta);
        if g == cc.slack_gen {
            if slack_share {
                total += h;
            }
            continue;
        }
        total += h;
        room.push((g, h));
    }
    if total <= 0.0 {
        return;
    }
    let frac = (delta.abs() / total).min(1.0);
    for (g, h) in room {
        let step = delta.signum() * h * frac;
        if reactive {
            d.q[g][a] += step;
        } else {
            d.p[g][a] += step;
        }
    }
}

/// Moves set-points toward the load change of each component in proportion
/// to the remaining headroom of its generators, clipped by ramp limits. The
/// slack generator keeps its own share.
pub fn headroom_dispatch(
    net: &Network,
    ccs: &[PlantCc],
    x: &MasterSolution,
    scenario: &ScenarioVector,
    reference: &ScenarioVector,
) -> Dispatch {
    let mut d = x.dispatch();
    for cc in ccs {
        let in_cc = |bus: usize| cc.buses.binary_search(&bus).is_ok();
        for reactive in [false, true] {
            let mut delta = [0.0; 3];
            for (i, l) in net.loads.iter().enumerate() {
                if in_cc(l.bus) {
                    for a in l.phases.iter() {
                        delta[a] += if reactive {
                            scenario.q[i][a] - reference.q[i][a]
                        } else {
                            scenario.p[i][a] - reference.p[i][a]
                        };
                    }
                }
            }
            for (a, &dl) in delta.iter().enumerate() {
                spread(net, cc, x, &mut d, a, reactive, dl, true);
            }
        }
    }
    d
}

fn check_ac(
    net: &Network,
    x: &MasterSolution,
    scenario: &ScenarioVector,
    config: &RpopConfig,
) -> FeasibilityReport {
    let topo = x.topology();
    let ccs = match energized_ccs(net, &topo) {
        Ok(c) => c,
        Err(e) => return FeasibilityReport::failed(e.to_string()),
    };
    let reference = match UncertaintyModel::new(net, config.uncertainty) {
        Ok(u) => crate::rpop::representative_scenario(&u, config.representative),
        Err(e) => return FeasibilityReport::failed(e.to_string()),
    };
    let mut dispatch = headroom_dispatch(net, &ccs, x, scenario, &reference);
    let mut worst = 0.0f64;
    let mut reason = None;
    let mut note = |v: f64, what: String| {
        if v > worst {
            worst = v;
            reason = Some(what);
        }
    };
    for cc in &ccs {
        let gen = &net.generators[cc.slack_gen];
        // Project the slack output back into its window by moving the other
        // generators, then re-solve.
        let mut sol = None;
        for round in 0..=PROJECTION_ROUNDS {
            let s = match solve_ac_fixed_point(
                net,
                cc,
                &topo,
                &dispatch,
                scenario,
                balanced(gen.v_setpoint),
                &AcOptions::default(),
            ) {
                Ok(s) if s.converged => s,
                Ok(_) => {
                    return FeasibilityReport::failed(format!(
                        "{}: AC power flow did not converge",
                        cc.id
                    ))
                }
                Err(e) => return FeasibilityReport::failed(e.to_string()),
            };
            let mut moved = false;
            if round < PROJECTION_ROUNDS {
                for a in gen.phases.iter() {
                    for reactive in [false, true] {
                        let out = if reactive {
                            s.slack_s[a].im
                        } else {
                            s.slack_s[a].re
                        };
                        let (first, lo, hi) = if reactive {
                            (x.q[cc.slack_gen][a], gen.q_min[a], gen.q_max[a])
                        } else {
                            (x.p[cc.slack_gen][a], gen.p_min[a], gen.p_max[a])
                        };
                        let r = gen.ramp_limit[a];
                        let excess = out - out.clamp(lo.max(first - r), hi.min(first + r));
                        if excess.abs() > AC_TOL {
                            spread(net, cc, x, &mut dispatch, a, reactive, excess, false);
                            moved = true;
                        }
                    }
                }
            }
            sol = Some(s);
            if !moved {
                break;
            }
        }
        let sol = sol.expect("at least one round");
        for &b in &cc.buses {
            let bus = &net.buses[b];
            for a in bus.phases.iter() {
                let m = sol.magnitude(b, a);
                note(
                    (bus.v_min - m).max(m - bus.v_max),
                    format!("voltage at {}", bus.id),
                );
            }
        }
        let flows = match ac_branch_magnitudes(net, cc, &topo, &dispatch, scenario, &sol) {
            Ok(f) => f,
            Err(e) => return FeasibilityReport::failed(e.to_string()),
        };
        for (edge, mag) in flows {
            let (id, limit) = match edge {
                Edge::Line(l) => (&net.lines[l].id, net.lines[l].flow_limit),
                Edge::Switch(s) => (&net.switches[s].id, net.switches[s].flow_limit),
                Edge::Transformer(t) => (&net.transformers[t].id, net.transformers[t].flow_limit),
            };
            for a in 0..3 {
                if mag[a] > 0.0 {
                    note(mag[a] - limit[a], format!("flow on {id}"));
                }
            }
        }
        let g = cc.slack_gen;
        for a in gen.phases.iter() {
            let s = sol.slack_s[a];
            note(
                (gen.p_min[a] - s.re).max(s.re - gen.p_max[a]),
                format!("{} active range", gen.id),
            );
            note(
                (gen.q_min[a] - s.im).max(s.im - gen.q_max[a]),
                format!("{} reactive range", gen.id),
            );
            note(
                (s.re - x.p[g][a]).abs() - gen.ramp_limit[a],
                format!("{} active ramp", gen.id),
            );
            note(
                (s.im - x.q[g][a]).abs() - gen.ramp_limit[a],
                format!("{} reactive ramp", gen.id),
            );
        }
    }
    let feasible = worst <= AC_TOL;
    FeasibilityReport {
        feasible,
        max_violation: worst,
        reason: if feasible { None } else { reason },
    }
}
