//! Worst-case search and the cutting-plane loop.

use std::time::Instant;

use log::{debug, info};
use optcore::{solve_milp, MilpOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cuts::{make_cut, Cut};
use super::master::build_master;
use super::subproblem::{build_subproblem, solve_subproblem, Subproblem, SubproblemSolution};
use super::{MasterSolution, RpopConfig, RpopError};
use crate::netmodel::{Network, ScenarioVector, UncertaintyModel};

#[derive(Debug, Clone)]
pub struct WorstCase {
    pub index: usize,
    pub subproblem: Subproblem,
    pub solution: SubproblemSolution,
    /// Recourse value per scenario, in scenario order.
    pub values: Vec<f64>,
}

/// Solves the recourse LP for every scenario and returns the one with the
/// largest value (lowest index on ties).
pub fn worst_case(
    net: &Network,
    x_star: &MasterSolution,
    scenarios: &[ScenarioVector],
    config: &RpopConfig,
) -> Result<WorstCase, RpopError> {
    let solved: Vec<(Subproblem, SubproblemSolution)> = scenarios
        .par_iter()
        .map(|s| {
            let sub = build_subproblem(net, x_star, s, config, false)?;
            let sol = solve_subproblem(net, &sub)?;
            Ok((sub, sol))
        })
        .collect::<Result<_, RpopError>>()?;
    let values: Vec<f64> = solved.iter().map(|(_, s)| s.objective).collect();
    let mut index = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[index] {
            index = i;
        }
    }
    let (subproblem, solution) = solved
        .into_iter()
        .nth(index)
        .expect("at least one scenario");
    Ok(WorstCase {
        index,
        subproblem,
        solution,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub master_objective: f64,
    pub theta: f64,
    pub worst_scenario: usize,
    pub worst_value: f64,
    pub worst_slack: f64,
    pub cuts_added: usize,
    pub master_nodes: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RpopResult {
    pub solution: MasterSolution,
    pub converged: bool,
    pub objective: f64,
    pub iterations: Vec<IterationLog>,
    pub cuts: Vec<Cut>,
    pub scenarios: Vec<ScenarioVector>,
    pub worst_scenario: usize,
    pub worst_slack: f64,
    pub elapsed_s: f64,
}

/// Alternates master solves and worst-case recourse evaluation, adding cuts
/// until the worst-case slack is within `epsilon` and `θ` covers the
/// worst-case recourse value.
pub fn cutting_plane(net: &Network, config: &RpopConfig) -> Result<RpopResult, RpopError> {
    let start = Instant::now();
    if config.epsilon < 0.0 || config.max_iterations == 0 {
        return Err(RpopError::Config(
            "epsilon must be >= 0 and max_iterations > 0".into(),
        ));
    }
    let unc = UncertaintyModel::new(net, config.uncertainty)?;
    let scenarios = unc.extremes(config.scenario_cap)?;
    let mut master = build_master(net, config, &unc)?;
    let opts = MilpOptions::default();
    let mut log = Vec::new();
    let mut cuts = Vec::new();

    let mut last = None;
    for k in 1..=config.max_iterations {
        let res = solve_milp(&master.model, &opts);
        if !res.is_optimal() {
            return Err(RpopError::Master(res.status.to_string()));
        }
        let x_star = master.extract(&res.x, res.objective);
        let wc = worst_case(net, &x_star, &scenarios, config)?;
        let v = wc.solution.objective;
        let slack = wc.solution.slack;
        let tol = 1e-7 * v.abs().max(1.0);
        let done = slack <= config.epsilon && x_star.theta >= v - tol;
        let mut added = 0;
        if !done {
            if v > x_star.theta + tol {
                let cut = make_cut(&wc.subproblem, &wc.solution, &x_star, true);
                master.add_cut(&cut)?;
                cuts.push(cut);
                added += 1;
            }
            if slack > config.epsilon {
                let scen = &scenarios[wc.index];
                let fsub = build_subproblem(net, &x_star, scen, config, true)?;
                let fsol = solve_subproblem(net, &fsub)?;
                let cut = make_cut(&fsub, &fsol, &x_star, false);
                master.add_cut(&cut)?;
                cuts.push(cut);
                added += 1;
            }
        }
        debug!(
            "iteration {k}: master {:.6} theta {:.6} worst #{} value {:.6} slack {:.3e}",
            res.objective, x_star.theta, wc.index, v, slack
        );
        log.push(IterationLog {
            iteration: k,
            master_objective: res.objective,
            theta: x_star.theta,
            worst_scenario: wc.index,
            worst_value: v,
            worst_slack: slack,
            cuts_added: added,
            master_nodes: res.nodes,
        });
        let finished = done || added == 0;
        last = Some((x_star, wc.index, slack, done));
        if finished {
            break;
        }
    }

    let (solution, worst_scenario, worst_slack, converged) = last.expect("at least one iteration");
    info!(
        "cutting plane {} after {} iterations, objective {:.6}",
        if converged { "converged" } else { "stopped" },
        log.len(),
        solution.objective
    );
    Ok(RpopResult {
        objective: solution.objective,
        solution,
        converged,
        iterations: log,
        cuts,
        scenarios,
        worst_scenario,
        worst_slack,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}
