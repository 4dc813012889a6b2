//! Cut tightness and finite-difference checks of the cut gradients.

use dnmg::fixtures::{toybay, toybay_stress};
use dnmg::lindistflow::{master_indices, XIdx};
use dnmg::netmodel::{Network, ScenarioVector, UncertaintyModel};
use dnmg::optcore::{solve_lp, solve_milp, LpOptions, MilpOptions, ModelIR, SolveResult};
use dnmg::rpop::{
    build_master, build_subproblem, make_cut, worst_case, Cut, MasterSolution, RpopConfig,
};

use crate::Outcome;

const STEP: f64 = 1e-4;

struct Generated {
    cut: Cut,
    x: MasterSolution,
    scenario: ScenarioVector,
}

/// Runs the cutting-plane loop and keeps every cut with its generation point.
fn generate(net: &Network, config: &RpopConfig) -> Vec<Generated> {
    let unc = UncertaintyModel::new(net, config.uncertainty).unwrap();
    let scenarios = unc.extremes(config.scenario_cap).unwrap();
    let mut master = build_master(net, config, &unc).unwrap();
    let mut out = Vec::new();
    for _ in 0..config.max_iterations {
        let res = solve_milp(&master.model, &MilpOptions::default());
        assert!(res.is_optimal());
        let x = master.extract(&res.x, res.objective);
        let wc = worst_case(net, &x, &scenarios, config).unwrap();
        let v = wc.solution.objective;
        let tol = 1e-7 * v.abs().max(1.0);
        let need_opt = v > x.theta + tol;
        let need_feas = wc.solution.slack > config.epsilon;
        if !need_opt && !need_feas {
            break;
        }
        let scenario = scenarios[wc.index].clone();
        if need_opt {
            let cut = make_cut(&wc.subproblem, &wc.solution, &x, true);
            master.add_cut(&cut).unwrap();
            out.push(Generated {
                cut,
                x: x.clone(),
                scenario: scenario.clone(),
            });
        }
        if need_feas {
            let sub = build_subproblem(net, &x, &scenario, config, true).unwrap();
            let sol = dnmg::rpop::solve_subproblem(net, &sub).unwrap();
            let cut = make_cut(&sub, &sol, &x, false);
            master.add_cut(&cut).unwrap();
            out.push(Generated { cut, x, scenario });
        }
    }
    out
}

fn solve(m: &ModelIR) -> SolveResult {
    let r = solve_lp(m, &LpOptions::default());
    assert!(r.is_optimal(), "recourse LP not optimal");
    r
}

struct Tally {
    worst_tight: f64,
    checked: usize,
    skipped: usize,
    worst_fd: f64,
}

fn check(net: &Network, config: &RpopConfig, t: &mut Tally) {
    for g in generate(net, config) {
        let slack_only = !g.cut.optimality;
        let sub = build_subproblem(net, &g.x, &g.scenario, config, slack_only).unwrap();
        let base = solve(&sub.model);
        t.worst_tight = t
            .worst_tight
            .max((g.cut.evaluate(&g.x) - base.objective).abs());

        let grad = |x: XIdx| {
            g.cut
                .gradient
                .iter()
                .find(|e| e.0 == x)
                .map_or(0.0, |e| e.1)
        };
        for x in master_indices(net) {
            for h in [STEP, -STEP] {
                let pert = match x {
                    // Continuous set-points: rebuild from a perturbed decision.
                    XIdx::P(gi, a) | XIdx::Q(gi, a) => {
                        let mut xp = g.x.clone();
                        match x {
                            XIdx::P(..) => xp.p[gi][a] += h,
                            _ => xp.q[gi][a] += h,
                        }
                        solve_lp(
                            &build_subproblem(net, &xp, &g.scenario, config, slack_only)
                                .unwrap()
                                .model,
                            &LpOptions::default(),
                        )
                    }
                    // Binaries: shift the coupling right-hand sides directly.
                    _ => {
                        let mut m = sub.model.clone();
                        for row in &sub.coupling {
                            for &(y, c) in &row.terms {
                                if y == x {
                                    let rhs = m.row(row.row).rhs;
                                    m.set_rhs(row.row, rhs - c * h);
                                }
                            }
                        }
                        solve_lp(&m, &LpOptions::default())
                    }
                };
                // Leaving the feasible domain counts as a basis change.
                if !pert.is_optimal() || pert.basis != base.basis {
                    t.skipped += 1;
                    continue;
                }
                t.checked += 1;
                let fd = pert.objective - base.objective;
                t.worst_fd = t.worst_fd.max((fd - grad(x) * h).abs());
            }
        }
    }
}

pub fn criterion() -> Outcome {
    let mut t = Tally {
        worst_tight: 0.0,
        checked: 0,
        skipped: 0,
        worst_fd: 0.0,
    };
    for net in [toybay(), toybay_stress()] {
        for level in [0.1, 0.2] {
            let config = RpopConfig {
                uncertainty: Some(level),
                ..Default::default()
            };
            check(&net, &config, &mut t);
        }
    }
    let detail = format!(
        "max tightness gap {:.1e}, max |dV - g dx| {:.1e} over {} same-basis perturbations ({} skipped)",
        t.worst_tight, t.worst_fd, t.checked, t.skipped
    );
    if t.worst_tight <= 1e-9 && t.worst_fd <= 1e-6 && t.checked > 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
