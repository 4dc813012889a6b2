//! Fixed-topology recourse LP: set-point adjustments `o⁺`, `o⁻` and balance
//! slacks `h` for one load realization.

use optcore::{solve_lp, LpOptions, ModelIR, Sense, VarId};

use super::{MasterSolution, RpopConfig, RpopError};
use crate::lindistflow::{
    emit_flow_constraints, Binding, CouplingRow, FlowOptions, FlowVars, LinExpr, RowWriter, XIdx,
};
use crate::netmodel::{Network, PerPhase, ScenarioVector, PHASE_NAMES};

#[derive(Debug, Clone)]
pub struct Subproblem {
    pub model: ModelIR,
    pub coupling: Vec<CouplingRow>,
    pub flow: FlowVars,
    /// `(o⁺_p, o⁻_p, o⁺_q, o⁻_q)` per generator phase.
    pub adjust: Vec<[Option<[VarId; 4]>; 3]>,
    pub slack_only: bool,
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub objective: f64,
    /// `Σ h⁺ + h⁻`
    pub slack: f64,
    /// `Σ c1 (o⁺_p - o⁻_p)`
    pub adjust_cost: f64,
    pub o_p: Vec<PerPhase>,
    pub o_q: Vec<PerPhase>,
    pub duals: Vec<f64>,
}

/// Builds the recourse LP for `x*` under `scenario`. With `slack_only` the
/// objective is the slack sum alone (used for feasibility cuts).
pub fn build_subproblem(
    net: &Network,
    x_star: &MasterSolution,
    scenario: &ScenarioVector,
    config: &RpopConfig,
    slack_only: bool,
) -> Result<Subproblem, RpopError> {
    let mut model = ModelIR::new();
    let sub_out = |g: usize| config.contingency.substation_out && net.generators[g].substation;

    let mut adjust = vec![[None; 3]; net.generators.len()];
    for (g, gen) in net.generators.iter().enumerate() {
        for a in gen.phases.iter() {
            let ph = PHASE_NAMES[a];
            let r = gen.ramp_limit[a];
            let mk = |m: &mut ModelIR, n: &str| m.add_var(format!("{n}:{}:{ph}", gen.id), 0.0, r);
            let cols = [
                mk(&mut model, "op+"),
                mk(&mut model, "op-"),
                mk(&mut model, "oq+"),
                mk(&mut model, "oq-"),
            ];
            if !slack_only {
                model.set_cost(cols[0], gen.cost_linear);
                model.set_cost(cols[1], -gen.cost_linear);
            }
            adjust[g][a] = Some(cols);
        }
    }

    let val = |x: XIdx| x_star.value(x);
    let injection = |g: usize, a: usize, reactive: bool| {
        let c = adjust[g][a].unwrap();
        let (x, up, down) = if reactive {
            (XIdx::Q(g, a), c[2], c[3])
        } else {
            (XIdx::P(g, a), c[0], c[1])
        };
        LinExpr::master(x, 1.0)
            .plus(LinExpr::var(up, 1.0))
            .plus(LinExpr::var(down, -1.0))
    };
    let opts = FlowOptions {
        k_polygon: config.k_polygon,
        prefix: String::new(),
        balance_slack: true,
    };
    let mut rows = RowWriter::new(&mut model, Binding::Fixed(&val));
    let flow = emit_flow_constraints(net, &mut rows, scenario, &injection, &opts)?;

    // Adjustments stay inside the block-scaled capability range.
    for (g, gen) in net.generators.iter().enumerate() {
        let blk = XIdx::Block(net.block_of_generator(g));
        for a in gen.phases.iter() {
            let ph = PHASE_NAMES[a];
            let c = adjust[g][a].unwrap();
            let (pmin, pmax, qmin, qmax) = if sub_out(g) {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                (gen.p_min[a], gen.p_max[a], gen.q_min[a], gen.q_max[a])
            };
            for (name, up, down, x, lo, hi) in [
                ("p", c[0], c[1], XIdx::P(g, a), pmin, pmax),
                ("q", c[2], c[3], XIdx::Q(g, a), qmin, qmax),
            ] {
                let e = LinExpr::var(up, 1.0)
                    .plus(LinExpr::master(x, 1.0))
                    .plus(LinExpr::master(blk, -hi));
                rows.add(format!("o{name}+:{}:{ph}", gen.id), e, Sense::Le, 0.0)?;
                let e = LinExpr::var(down, 1.0)
                    .plus(LinExpr::master(x, -1.0))
                    .plus(LinExpr::master(blk, lo));
                rows.add(format!("o{name}-:{}:{ph}", gen.id), e, Sense::Le, 0.0)?;
            }
        }
    }
    let coupling = std::mem::take(&mut rows.coupling);
    drop(rows);

    let beta = if slack_only { 1.0 } else { config.beta_s(net) };
    for v in flow.slack_columns() {
        model.set_cost(v, beta);
    }
    Ok(Subproblem {
        model,
        coupling,
        flow,
        adjust,
        slack_only,
    })
}

pub fn solve_subproblem(net: &Network, sub: &Subproblem) -> Result<SubproblemSolution, RpopError> {
    let res = solve_lp(&sub.model, &LpOptions::default());
    if !res.is_optimal() {
        return Err(RpopError::Subproblem(res.status.to_string()));
    }
    let x = &res.x;
    let slack: f64 = sub.flow.slack_columns().iter().map(|v| x[v.0]).sum();
    let mut o_p = vec![[0.0; 3]; net.generators.len()];
    let mut o_q = vec![[0.0; 3]; net.generators.len()];
    let mut adjust_cost = 0.0;
    for (g, gen) in net.generators.iter().enumerate() {
        for a in gen.phases.iter() {
            let c = sub.adjust[g][a].unwrap();
            o_p[g][a] = x[c[0].0] - x[c[1].0];
            o_q[g][a] = x[c[2].0] - x[c[3].0];
            adjust_cost += gen.cost_linear * o_p[g][a];
        }
    }
    Ok(SubproblemSolution {
        objective: res.objective,
        slack,
        adjust_cost,
        o_p,
        o_q,
        duals: res.duals,
    })
}
