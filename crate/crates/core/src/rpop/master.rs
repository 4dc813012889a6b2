//! Master MILP: energization, switching, grid-forming selection and dispatch
//! at a representative load, plus the recourse estimate `θ`.

use optcore::{ModelError, ModelIR, Sense, VarId};

use super::cuts::Cut;
use super::{Contingency, MasterSolution, Representative, RpopConfig, RpopError};
use crate::lindistflow::{
    emit_flow_constraints, Binding, FlowOptions, FlowVars, LinExpr, RowWriter, XIdx,
};
use crate::netmodel::{Network, ScenarioVector, UncertaintyModel, PHASE_NAMES};

#[derive(Debug, Clone)]
pub struct MasterHandles {
    pub block: Vec<VarId>,
    pub switch: Vec<VarId>,
    pub inverter: Vec<VarId>,
    pub p: Vec<[Option<VarId>; 3]>,
    pub q: Vec<[Option<VarId>; 3]>,
    pub theta: VarId,
}

impl MasterHandles {
    pub fn col(&self, x: XIdx) -> VarId {
        match x {
            XIdx::Block(l) => self.block[l],
            XIdx::Switch(s) => self.switch[s],
            XIdx::Inverter(g) => self.inverter[g],
            XIdx::P(g, a) => self.p[g][a].expect("generator phase"),
            XIdx::Q(g, a) => self.q[g][a].expect("generator phase"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MasterModel {
    pub model: ModelIR,
    pub handles: MasterHandles,
    pub flow: FlowVars,
    pub cuts: usize,
}

impl MasterModel {
    pub fn add_cut(&mut self, cut: &Cut) -> Result<(), ModelError> {
        // θ - Σ g·x >= V - Σ g·x*
        let mut coefs = Vec::with_capacity(cut.gradient.len() + 1);
        if cut.optimality {
            coefs.push((self.handles.theta, 1.0));
        }
        for &(x, g) in &cut.gradient {
            coefs.push((self.handles.col(x), -g));
        }
        let tag = format!("cut:{}", self.cuts);
        self.model.add_row(tag, coefs, Sense::Ge, cut.rhs())?;
        self.cuts += 1;
        Ok(())
    }

    pub fn extract(&self, x: &[f64], objective: f64) -> MasterSolution {
        let h = &self.handles;
        let bin = |v: VarId| x[v.0] > 0.5;
        let per_phase = |cols: &[Option<VarId>; 3]| {
            let mut out = [0.0; 3];
            for a in 0..3 {
                if let Some(v) = cols[a] {
                    out[a] = x[v.0];
                }
            }
            out
        };
        MasterSolution {
            switches: h.switch.iter().map(|&v| bin(v)).collect(),
            inverters: h.inverter.iter().map(|&v| bin(v)).collect(),
            blocks: h.block.iter().map(|&v| bin(v)).collect(),
            p: h.p.iter().map(per_phase).collect(),
            q: h.q.iter().map(per_phase).collect(),
            theta: x[h.theta.0],
            objective,
        }
    }
}

pub(crate) fn representative_scenario(
    unc: &UncertaintyModel,
    rep: Representative,
) -> ScenarioVector {
    match rep {
        Representative::AllMax => unc.all_max(),
        Representative::Nominal => unc.nominal(),
        Representative::AllMin => unc.all_min(),
    }
}

/// Builds the master problem without cuts.
pub fn build_master(
    net: &Network,
    config: &RpopConfig,
    unc: &UncertaintyModel,
) -> Result<MasterModel, RpopError> {
    let mut model = ModelIR::new();
    let cont = &config.contingency;
    let sub_out = |g: usize| cont.substation_out && net.generators[g].substation;

    let block: Vec<VarId> = net
        .blocks
        .iter()
        .map(|b| model.add_binary(format!("zbl:{}", b.id)))
        .collect();
    let switch: Vec<VarId> = net
        .switches
        .iter()
        .map(|s| model.add_binary(format!("zsw:{}", s.id)))
        .collect();
    let inverter: Vec<VarId> = net
        .generators
        .iter()
        .map(|g| model.add_binary(format!("zinv:{}", g.id)))
        .collect();
    let mut p = vec![[None; 3]; net.generators.len()];
    let mut q = vec![[None; 3]; net.generators.len()];
    for (g, gen) in net.generators.iter().enumerate() {
        for a in gen.phases.iter() {
            let ph = PHASE_NAMES[a];
            p[g][a] = Some(model.add_var(
                format!("p:{}:{ph}", gen.id),
                f64::NEG_INFINITY,
                f64::INFINITY,
            ));
            q[g][a] = Some(model.add_var(
                format!("q:{}:{ph}", gen.id),
                f64::NEG_INFINITY,
                f64::INFINITY,
            ));
        }
    }
    let theta = model.add_var("theta", 0.0, f64::INFINITY);
    let handles = MasterHandles {
        block,
        switch,
        inverter,
        p,
        q,
        theta,
    };

    // Objective: Σ β_l (1 - z_l) + Σ c1 p + Σ c0 z_l(g) + θ.
    for l in 0..net.blocks.len() {
        let beta = config.priority(net, l);
        model.add_objective_offset(beta);
        model.add_cost(handles.block[l], -beta);
    }
    for (g, gen) in net.generators.iter().enumerate() {
        for a in gen.phases.iter() {
            model.add_cost(handles.p[g][a].unwrap(), gen.cost_linear);
        }
        model.add_cost(handles.block[net.block_of_generator(g)], gen.cost_fixed);
    }
    model.add_cost(handles.theta, 1.0);

    apply_contingency(&mut model, net, cont, &handles);

    // Switch closed only between blocks in the same state.
    for (s, sw) in net.switches.iter().enumerate() {
        let (i, j) = net.switch_blocks(s);
        let (zi, zj, zs) = (handles.block[i], handles.block[j], handles.switch[s]);
        model.add_row(
            format!("swst+:{}", sw.id),
            vec![(zi, 1.0), (zj, -1.0), (zs, 1.0)],
            Sense::Le,
            1.0,
        )?;
        model.add_row(
            format!("swst-:{}", sw.id),
            vec![(zj, 1.0), (zi, -1.0), (zs, 1.0)],
            Sense::Le,
            1.0,
        )?;
    }

    // Voltage sources per block.
    for (l, b) in net.blocks.iter().enumerate() {
        let zl = handles.block[l];
        let sub_here = b.substation.filter(|&g| !sub_out(g)).is_some();
        let mut lo = vec![(zl, if sub_here { 0.0 } else { 1.0 })];
        lo.extend(b.switches.iter().map(|&s| (handles.switch[s], -1.0)));
        lo.extend(
            b.generators
                .iter()
                .filter(|&&g| !net.generators[g].substation)
                .map(|&g| (handles.inverter[g], -1.0)),
        );
        model.add_row(format!("src:{}", b.id), lo, Sense::Le, 0.0)?;
        let mut hi: Vec<(VarId, f64)> = b
            .generators
            .iter()
            .filter(|&&g| !net.generators[g].substation)
            .map(|&g| (handles.inverter[g], 1.0))
            .collect();
        hi.push((zl, if sub_here { 0.0 } else { -1.0 }));
        model.add_row(format!("gfm1:{}", b.id), hi, Sense::Le, 0.0)?;
    }

    phase_eligibility_constraints(&mut model, net, &handles)?;
    radiality_constraints(&mut model, net, &handles)?;
    coloring_constraints(&mut model, net, &handles, cont)?;

    // Generator limits scaled by the block state.
    for (g, gen) in net.generators.iter().enumerate() {
        let zl = handles.block[net.block_of_generator(g)];
        for a in gen.phases.iter() {
            let ph = PHASE_NAMES[a];
            let (pmin, pmax, qmin, qmax) = if sub_out(g) {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                (gen.p_min[a], gen.p_max[a], gen.q_min[a], gen.q_max[a])
            };
            let pv = handles.p[g][a].unwrap();
            let qv = handles.q[g][a].unwrap();
            model.add_row(
                format!("pmax:{}:{ph}", gen.id),
                vec![(pv, 1.0), (zl, -pmax)],
                Sense::Le,
                0.0,
            )?;
            model.add_row(
                format!("pmin:{}:{ph}", gen.id),
                vec![(pv, 1.0), (zl, -pmin)],
                Sense::Ge,
                0.0,
            )?;
            model.add_row(
                format!("qmax:{}:{ph}", gen.id),
                vec![(qv, 1.0), (zl, -qmax)],
                Sense::Le,
                0.0,
            )?;
            model.add_row(
                format!("qmin:{}:{ph}", gen.id),
                vec![(qv, 1.0), (zl, -qmin)],
                Sense::Ge,
                0.0,
            )?;
        }
    }

    let scenario = representative_scenario(unc, config.representative);
    let col = |x: XIdx| handles.col(x);
    let injection = |g: usize, a: usize, reactive: bool| {
        LinExpr::master(
            if reactive {
                XIdx::Q(g, a)
            } else {
                XIdx::P(g, a)
            },
            1.0,
        )
    };
    let opts = FlowOptions {
        k_polygon: config.k_polygon,
        prefix: String::new(),
        balance_slack: false,
    };
    let flow = {
        let mut rows = RowWriter::new(&mut model, Binding::Coupled(&col));
        emit_flow_constraints(net, &mut rows, &scenario, &injection, &opts)?
    };

    Ok(MasterModel {
        model,
        handles,
        flow,
        cuts: 0,
    })
}

fn apply_contingency(model: &mut ModelIR, net: &Network, cont: &Contingency, h: &MasterHandles) {
    for &l in &cont.blocks_off {
        model.set_bounds(h.block[l], 0.0, 0.0);
        for &s in &net.blocks[l].switches {
            model.set_bounds(h.switch[s], 0.0, 0.0);
        }
    }
    for &s in &cont.switches_open {
        model.set_bounds(h.switch[s], 0.0, 0.0);
    }
    // The substation never acts as an inverter.
    for (g, gen) in net.generators.iter().enumerate() {
        if gen.substation || !net.is_eligible(g) {
            model.set_bounds(h.inverter[g], 0.0, 0.0);
        }
    }
}

/// Grid-forming eligibility, one-hop and two-hop phase rules.
pub fn phase_eligibility_constraints(
    model: &mut ModelIR,
    net: &Network,
    h: &MasterHandles,
) -> Result<(), ModelError> {
    let graph = net.block_graph();
    for (g, gen) in net.generators.iter().enumerate() {
        if gen.substation {
            continue;
        }
        if !net.is_eligible(g) {
            model.add_row(
                format!("gfmelig:{}", gen.id),
                vec![(h.inverter[g], 1.0)],
                Sense::Eq,
                0.0,
            )?;
            continue;
        }
        let l = net.block_of_generator(g);
        let phi_l = net.max_phases(l);
        for &(j, s) in graph.neighbors(l) {
            let phi_j = net.max_phases(j);
            if phi_j > phi_l {
                model.add_row(
                    format!("hop1:{}:{}", gen.id, net.switches[s].id),
                    vec![(h.inverter[g], 1.0), (h.switch[s], 1.0)],
                    Sense::Le,
                    1.0,
                )?;
                continue;
            }
            for &(k, t) in graph.neighbors(j) {
                if k == l || t == s {
                    continue;
                }
                let phi_k = net.max_phases(k);
                if phi_k > phi_j && phi_k > phi_l {
                    model.add_row(
                        format!(
                            "hop2:{}:{}:{}",
                            gen.id, net.switches[s].id, net.switches[t].id
                        ),
                        vec![(h.inverter[g], 1.0), (h.switch[s], 1.0), (h.switch[t], 1.0)],
                        Sense::Le,
                        2.0,
                    )?;
                }
            }
        }
    }
    Ok(())
}

/// Closed switches form a forest: a spanning tree over blocks plus a virtual
/// root, certified by one unit of flow from the root to every block.
pub fn radiality_constraints(
    model: &mut ModelIR,
    net: &Network,
    h: &MasterHandles,
) -> Result<(), ModelError> {
    let nb = net.blocks.len();
    let root: Vec<VarId> = net
        .blocks
        .iter()
        .map(|b| model.add_var(format!("vroot:{}", b.id), 0.0, 1.0))
        .collect();
    let mut total: Vec<(VarId, f64)> = h.switch.iter().map(|&v| (v, 1.0)).collect();
    total.extend(root.iter().map(|&v| (v, 1.0)));
    model.add_row("tree:edges", total, Sense::Eq, nb as f64)?;

    for k in 0..nb {
        let kid = &net.blocks[k].id;
        // Balance per block: inflow - outflow = [l == k].
        let mut bal: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nb];
        for l in 0..nb {
            let f = model.add_var(format!("fr:{kid}:{}", net.blocks[l].id), 0.0, f64::INFINITY);
            model.add_row(
                format!("frcap:{kid}:{}", net.blocks[l].id),
                vec![(f, 1.0), (root[l], -1.0)],
                Sense::Le,
                0.0,
            )?;
            bal[l].push((f, 1.0));
        }
        for (s, sw) in net.switches.iter().enumerate() {
            let (i, j) = net.switch_blocks(s);
            for (dir, a, b) in [("+", i, j), ("-", j, i)] {
                let f = model.add_var(format!("fs{dir}:{kid}:{}", sw.id), 0.0, f64::INFINITY);
                model.add_row(
                    format!("fscap{dir}:{kid}:{}", sw.id),
                    vec![(f, 1.0), (h.switch[s], -1.0)],
                    Sense::Le,
                    0.0,
                )?;
                bal[a].push((f, -1.0));
                bal[b].push((f, 1.0));
            }
        }
        for (l, terms) in bal.into_iter().enumerate() {
            let rhs = if l == k { 1.0 } else { 0.0 };
            model.add_row(
                format!("fbal:{kid}:{}", net.blocks[l].id),
                terms,
                Sense::Eq,
                rhs,
            )?;
        }
    }
    Ok(())
}

/// Every energized component holds exactly one active voltage source. Each
/// candidate source block owns a color; colors are equal across closed
/// switches and may only spread through closed switches from their owner.
pub fn coloring_constraints(
    model: &mut ModelIR,
    net: &Network,
    h: &MasterHandles,
    cont: &Contingency,
) -> Result<(), ModelError> {
    let nb = net.blocks.len();
    let big = nb as f64;
    // Source indicator per candidate block.
    let mut colors: Vec<(usize, Vec<(VarId, f64)>)> = Vec::new();
    for (c, b) in net.blocks.iter().enumerate() {
        let mut a = Vec::new();
        if let Some(g) = b.substation {
            if !(cont.substation_out && net.generators[g].substation) {
                a.push((h.block[c], 1.0));
            }
        }
        for &g in &b.generators {
            if !net.generators[g].substation && net.is_eligible(g) {
                a.push((h.inverter[g], 1.0));
            }
        }
        if !a.is_empty() {
            colors.push((c, a));
        }
    }

    let mut y = vec![Vec::with_capacity(colors.len()); nb];
    for (l, b) in net.blocks.iter().enumerate() {
        for (c, _) in &colors {
            y[l].push(model.add_var(format!("color:{}:{}", b.id, net.blocks[*c].id), 0.0, 1.0));
        }
        let mut row: Vec<(VarId, f64)> = y[l].iter().map(|&v| (v, 1.0)).collect();
        row.push((h.block[l], -1.0));
        model.add_row(format!("color1:{}", b.id), row, Sense::Eq, 0.0)?;
    }

    for (ci, (c, active)) in colors.iter().enumerate() {
        let cid = &net.blocks[*c].id;
        let mut row = vec![(y[*c][ci], 1.0)];
        row.extend(active.iter().map(|&(v, k)| (v, -k)));
        model.add_row(format!("colorsrc:{cid}"), row, Sense::Eq, 0.0)?;

        let mut bal: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nb];
        for (s, sw) in net.switches.iter().enumerate() {
            let (i, j) = net.switch_blocks(s);
            let zs = h.switch[s];
            model.add_row(
                format!("coloreq+:{cid}:{}", sw.id),
                vec![(y[i][ci], 1.0), (y[j][ci], -1.0), (zs, 1.0)],
                Sense::Le,
                1.0,
            )?;
            model.add_row(
                format!("coloreq-:{cid}:{}", sw.id),
                vec![(y[j][ci], 1.0), (y[i][ci], -1.0), (zs, 1.0)],
                Sense::Le,
                1.0,
            )?;
            for (dir, a, b) in [("+", i, j), ("-", j, i)] {
                let f = model.add_var(format!("cf{dir}:{cid}:{}", sw.id), 0.0, f64::INFINITY);
                model.add_row(
                    format!("cfcap{dir}:{cid}:{}", sw.id),
                    vec![(f, 1.0), (zs, -big)],
                    Sense::Le,
                    0.0,
                )?;
                bal[a].push((f, -1.0));
                bal[b].push((f, 1.0));
            }
        }
        // Inflow covers the color everywhere except at the owner.
        for (l, mut terms) in bal.into_iter().enumerate() {
            if l == *c {
                continue;
            }
            terms.push((y[l][ci], -1.0));
            model.add_row(
                format!("cfbal:{cid}:{}", net.blocks[l].id),
                terms,
                Sense::Eq,
                0.0,
            )?;
        }
    }
    Ok(())
}
