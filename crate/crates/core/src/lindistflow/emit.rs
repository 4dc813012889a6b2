//! LinDist3Flow rows for a `ModelIR`, either coupled to first-stage columns
//! or with the first-stage decision fixed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use optcore::{ModelError, ModelIR, RowId, Sense, VarId};

use super::sensitivity::voltage_sensitivity;
use crate::netmodel::{Network, ScenarioVector, TransformerKind, PHASE_NAMES};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// A first-stage (master) decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum XIdx {
    Block(usize),
    Switch(usize),
    Inverter(usize),
    /// Generator active set-point on a phase.
    P(usize, usize),
    /// Generator reactive set-point on a phase.
    Q(usize, usize),
}

/// Every first-stage decision of the network in a fixed order.
pub fn master_indices(net: &Network) -> Vec<XIdx> {
    let mut out: Vec<XIdx> = (0..net.blocks.len()).map(XIdx::Block).collect();
    out.extend((0..net.switches.len()).map(XIdx::Switch));
    out.extend((0..net.generators.len()).map(XIdx::Inverter));
    for (g, gen) in net.generators.iter().enumerate() {
        out.extend(gen.phases.iter().map(|p| XIdx::P(g, p)));
        out.extend(gen.phases.iter().map(|p| XIdx::Q(g, p)));
    }
    out
}

pub enum Binding<'a> {
    /// First-stage decisions are columns of the model.
    Coupled(&'a dyn Fn(XIdx) -> VarId),
    /// First-stage decisions are fixed; their terms move to the right-hand side.
    Fixed(&'a dyn Fn(XIdx) -> f64),
}

/// Linear expression over model columns, first-stage decisions and a constant.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub vars: Vec<(VarId, f64)>,
    pub master: Vec<(XIdx, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(v: VarId, c: f64) -> Self {
        LinExpr {
            vars: vec![(v, c)],
            ..Default::default()
        }
    }

    pub fn master(x: XIdx, c: f64) -> Self {
        LinExpr {
            master: vec![(x, c)],
            ..Default::default()
        }
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            constant: c,
            ..Default::default()
        }
    }

    pub fn scaled(mut self, k: f64) -> Self {
        self.vars.iter_mut().for_each(|t| t.1 *= k);
        self.master.iter_mut().for_each(|t| t.1 *= k);
        self.constant *= k;
        self
    }

    pub fn plus(mut self, other: LinExpr) -> Self {
        self.vars.extend(other.vars);
        self.master.extend(other.master);
        self.constant += other.constant;
        self
    }
}

/// Row whose left-hand side contained first-stage terms (coefficients as
/// written on the left).
#[derive(Debug, Clone)]
pub struct CouplingRow {
    pub row: RowId,
    pub terms: Vec<(XIdx, f64)>,
}

#[derive(Debug, Error)]
pub enum EmitError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("transformer `{0}`: unsupported phase configuration")]
    Transformer(String),
}

/// Writes rows, recording coupling when first-stage terms are fixed.
pub struct RowWriter<'a> {
    pub model: &'a mut ModelIR,
    binding: Binding<'a>,
    pub coupling: Vec<CouplingRow>,
}

impl<'a> RowWriter<'a> {
    pub fn new(model: &'a mut ModelIR, binding: Binding<'a>) -> Self {
        Self {
            model,
            binding,
            coupling: Vec::new(),
        }
    }

    /// Adds `expr <sense> rhs`.
    pub fn add(
        &mut self,
        tag: String,
        expr: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId, ModelError> {
        let mut rhs = rhs - expr.constant;
        let mut coefs = expr.vars;
        let mut fixed_terms = Vec::new();
        match &self.binding {
            Binding::Coupled(col) => coefs.extend(expr.master.iter().map(|&(x, c)| (col(x), c))),
            Binding::Fixed(val) => {
                for &(x, c) in &expr.master {
                    if c != 0.0 {
                        rhs -= c * val(x);
                        fixed_terms.push((x, c));
                    }
                }
            }
        }
        let row = self.model.add_row(tag, coefs, sense, rhs)?;
        if !fixed_terms.is_empty() {
            self.coupling.push(CouplingRow {
                row,
                terms: fixed_terms,
            });
        }
        Ok(row)
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.binding, Binding::Fixed(_))
    }
}

pub type PhaseVars = [Option<VarId>; 3];
pub type PhasePairs = [Option<(VarId, VarId)>; 3];

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub k_polygon: usize,
    /// Prefix for column names and row tags.
    pub prefix: String,
    /// Add `h⁺ - h⁻` slack columns to every balance row.
    pub balance_slack: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            k_polygon: 12,
            prefix: String::new(),
            balance_slack: false,
        }
    }
}

/// Columns created by [`emit_flow_constraints`].
#[derive(Debug, Clone)]
pub struct FlowVars {
    pub w: Vec<PhaseVars>,
    /// `(p, q)` from -> to per line phase.
    pub line: Vec<PhasePairs>,
    pub switch: Vec<PhasePairs>,
    /// Flow leaving the from bus into the transformer.
    pub xfmr_from: Vec<PhasePairs>,
    /// Flow leaving the to bus into the transformer.
    pub xfmr_to: Vec<PhasePairs>,
    /// `(p, q)` slacks per bus phase when requested.
    pub h_plus: Vec<PhasePairs>,
    pub h_minus: Vec<PhasePairs>,
    /// `(p, q)` balance rows per bus phase.
    pub balance: Vec<[Option<(RowId, RowId)>; 3]>,
}

impl FlowVars {
    pub fn slack_columns(&self) -> Vec<VarId> {
        self.h_plus
            .iter()
            .chain(&self.h_minus)
            .flatten()
            .flatten()
            .flat_map(|&(p, q)| [p, q])
            .collect()
    }
}

fn pairs(
    model: &mut ModelIR,
    name: &str,
    phases: impl Iterator<Item = usize>,
    lo: f64,
) -> PhasePairs {
    let mut out = [None; 3];
    for p in phases {
        let ph = PHASE_NAMES[p];
        out[p] = Some((
            model.add_var(format!("{name}:p:{ph}"), lo, f64::INFINITY),
            model.add_var(format!("{name}:q:{ph}"), lo, f64::INFINITY),
        ));
    }
    out
}

fn polygon(
    rows: &mut RowWriter,
    tag: &str,
    (p, q): (VarId, VarId),
    limit: f64,
    scale: Option<XIdx>,
    k: usize,
) -> Result<(), EmitError> {
    if k < 4 || !k.is_multiple_of(2) {
        return Err(ModelError::NonFinite(format!("{tag}: polygon side count {k}")).into());
    }
    for i in 0..k {
        let a = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
        let clean = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        let mut e = LinExpr {
            vars: vec![(p, clean(a.cos())), (q, clean(a.sin()))],
            ..Default::default()
        };
        let rhs = match scale {
            Some(x) => {
                e.master.push((x, -limit));
                0.0
            }
            None => limit,
        };
        rows.add(format!("{tag}#{i}"), e, Sense::Le, rhs)?;
    }
    Ok(())
}

/// Emits voltage limits, voltage drops, flow limits, transformer relations and
/// nodal balance for one load realization. `injection(g, phase, reactive)`
/// gives the generator output on a phase. Generator limits are left to the
/// caller.
pub fn emit_flow_constraints(
    net: &Network,
    rows: &mut RowWriter,
    scenario: &ScenarioVector,
    injection: &dyn Fn(usize, usize, bool) -> LinExpr,
    opts: &FlowOptions,
) -> Result<FlowVars, EmitError> {
    let pf = &opts.prefix;
    let k = opts.k_polygon;
    let nb = net.buses.len();

    let mut w: Vec<PhaseVars> = vec![[None; 3]; nb];
    for (i, bus) in net.buses.iter().enumerate() {
        for p in bus.phases.iter() {
            w[i][p] = Some(rows.model.add_var(
                format!("{pf}w:{}:{}", bus.id, PHASE_NAMES[p]),
                0.0,
                f64::INFINITY,
            ));
        }
    }
    let wv = |i: usize, p: usize| w[i][p].expect("phase present at bus");

    // Voltage limits scaled by the block state.
    for (i, bus) in net.buses.iter().enumerate() {
        let blk = XIdx::Block(net.block_of_bus[i]);
        for p in bus.phases.iter() {
            let ph = PHASE_NAMES[p];
            let hi = LinExpr::var(wv(i, p), 1.0).plus(LinExpr::master(blk, -bus.v_max * bus.v_max));
            rows.add(format!("{pf}vmax:{}:{ph}", bus.id), hi, Sense::Le, 0.0)?;
            let lo = LinExpr::var(wv(i, p), 1.0).plus(LinExpr::master(blk, -bus.v_min * bus.v_min));
            rows.add(format!("{pf}vmin:{}:{ph}", bus.id), lo, Sense::Ge, 0.0)?;
        }
    }

    let mut line = Vec::with_capacity(net.lines.len());
    for l in &net.lines {
        let f = pairs(
            rows.model,
            &format!("{pf}line:{}", l.id),
            l.phases.iter(),
            f64::NEG_INFINITY,
        );
        let m = voltage_sensitivity(l);
        for a in l.phases.iter() {
            let ph = PHASE_NAMES[a];
            let mut e = LinExpr::var(wv(l.to, a), 1.0);
            e.vars.push((wv(l.from, a), -1.0));
            for b in l.phases.iter() {
                let (p, q) = f[b].unwrap();
                e.vars.push((p, m.mp[a][b]));
                e.vars.push((q, m.mq[a][b]));
            }
            rows.add(format!("{pf}vdrop:{}:{ph}", l.id), e, Sense::Eq, 0.0)?;
            polygon(
                rows,
                &format!("{pf}slim:{}:{ph}", l.id),
                f[a].unwrap(),
                l.flow_limit[a],
                None,
                k,
            )?;
        }
        line.push(f);
    }

    let mut switch = Vec::with_capacity(net.switches.len());
    for (s, sw) in net.switches.iter().enumerate() {
        let f = pairs(
            rows.model,
            &format!("{pf}sw:{}", sw.id),
            sw.phases.iter(),
            f64::NEG_INFINITY,
        );
        let big_w = net.buses[sw.from]
            .v_max
            .powi(2)
            .max(net.buses[sw.to].v_max.powi(2));
        for a in sw.phases.iter() {
            let ph = PHASE_NAMES[a];
            for (dir, sign) in [("+", 1.0), ("-", -1.0)] {
                let mut e = LinExpr::var(wv(sw.from, a), sign);
                e.vars.push((wv(sw.to, a), -sign));
                e.master.push((XIdx::Switch(s), big_w));
                rows.add(format!("{pf}swv{dir}:{}:{ph}", sw.id), e, Sense::Le, big_w)?;
            }
            polygon(
                rows,
                &format!("{pf}swlim:{}:{ph}", sw.id),
                f[a].unwrap(),
                sw.flow_limit[a],
                Some(XIdx::Switch(s)),
                k,
            )?;
        }
        switch.push(f);
    }

    let mut xfmr_from = Vec::with_capacity(net.transformers.len());
    let mut xfmr_to = Vec::with_capacity(net.transformers.len());
    for t in &net.transformers {
        let ff = pairs(
            rows.model,
            &format!("{pf}xf:{}:fr", t.id),
            t.phases.iter(),
            f64::NEG_INFINITY,
        );
        let ft = pairs(
            rows.model,
            &format!("{pf}xf:{}:to", t.id),
            t.phases.iter(),
            f64::NEG_INFINITY,
        );
        let n2 = t.tap_ratio * t.tap_ratio;
        match t.kind {
            TransformerKind::Wye => {
                for a in t.phases.iter() {
                    let ph = PHASE_NAMES[a];
                    let mut e = LinExpr::var(wv(t.from, a), 1.0);
                    e.vars.push((wv(t.to, a), -n2));
                    rows.add(format!("{pf}xv:{}:{ph}", t.id), e, Sense::Eq, 0.0)?;
                    let (pf_, qf) = ff[a].unwrap();
                    let (pt, qt) = ft[a].unwrap();
                    rows.add(
                        format!("{pf}xp:{}:{ph}", t.id),
                        LinExpr {
                            vars: vec![(pf_, 1.0), (pt, 1.0)],
                            ..Default::default()
                        },
                        Sense::Eq,
                        0.0,
                    )?;
                    rows.add(
                        format!("{pf}xq:{}:{ph}", t.id),
                        LinExpr {
                            vars: vec![(qf, 1.0), (qt, 1.0)],
                            ..Default::default()
                        },
                        Sense::Eq,
                        0.0,
                    )?;
                }
            }
            TransformerKind::Delta => {
                if t.phases.len() != 3 {
                    return Err(EmitError::Transformer(t.id.clone()));
                }
                for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                    let e = LinExpr {
                        vars: vec![
                            (wv(t.from, a), 3.0),
                            (wv(t.from, b), 3.0),
                            (wv(t.to, a), -2.0 * n2),
                        ],
                        ..Default::default()
                    };
                    rows.add(
                        format!("{pf}xv:{}:{}", t.id, PHASE_NAMES[a]),
                        e,
                        Sense::Eq,
                        0.0,
                    )?;
                }
                for (a, b) in [(0, 2), (1, 0), (2, 1)] {
                    let (pfa, qfa) = ff[a].unwrap();
                    let (pta, qta) = ft[a].unwrap();
                    let (ptb, qtb) = ft[b].unwrap();
                    let ep = LinExpr {
                        vars: vec![
                            (pfa, 2.0),
                            (pta, 1.0),
                            (ptb, 1.0),
                            (qtb, -1.0 / SQRT3),
                            (qta, 1.0 / SQRT3),
                        ],
                        ..Default::default()
                    };
                    rows.add(
                        format!("{pf}xp:{}:{}", t.id, PHASE_NAMES[a]),
                        ep,
                        Sense::Eq,
                        0.0,
                    )?;
                    let eq = LinExpr {
                        vars: vec![
                            (qfa, 2.0),
                            (pta, -1.0 / SQRT3),
                            (ptb, 1.0 / SQRT3),
                            (qtb, 1.0),
                            (qta, 1.0),
                        ],
                        ..Default::default()
                    };
                    rows.add(
                        format!("{pf}xq:{}:{}", t.id, PHASE_NAMES[a]),
                        eq,
                        Sense::Eq,
                        0.0,
                    )?;
                }
            }
        }
        for a in t.phases.iter() {
            let ph = PHASE_NAMES[a];
            polygon(
                rows,
                &format!("{pf}xlim:{}:fr:{ph}", t.id),
                ff[a].unwrap(),
                t.flow_limit[a],
                None,
                k,
            )?;
            polygon(
                rows,
                &format!("{pf}xlim:{}:to:{ph}", t.id),
                ft[a].unwrap(),
                t.flow_limit[a],
                None,
                k,
            )?;
        }
        xfmr_from.push(ff);
        xfmr_to.push(ft);
    }

    // Nodal balance: outflow - generation + z_bl * load + shunt = 0.
    let mut out_p: Vec<[Vec<(VarId, f64)>; 3]> = vec![Default::default(); nb];
    let mut out_q: Vec<[Vec<(VarId, f64)>; 3]> = vec![Default::default(); nb];
    let mut push = |bus: usize, a: usize, (p, q): (VarId, VarId), sign: f64| {
        out_p[bus][a].push((p, sign));
        out_q[bus][a].push((q, sign));
    };
    for (l, seg) in net.lines.iter().enumerate() {
        for a in seg.phases.iter() {
            push(seg.from, a, line[l][a].unwrap(), 1.0);
            push(seg.to, a, line[l][a].unwrap(), -1.0);
        }
    }
    for (s, sw) in net.switches.iter().enumerate() {
        for a in sw.phases.iter() {
            push(sw.from, a, switch[s][a].unwrap(), 1.0);
            push(sw.to, a, switch[s][a].unwrap(), -1.0);
        }
    }
    for (x, t) in net.transformers.iter().enumerate() {
        for a in t.phases.iter() {
            push(t.from, a, xfmr_from[x][a].unwrap(), 1.0);
            push(t.to, a, xfmr_to[x][a].unwrap(), 1.0);
        }
    }
    let mut load_p = vec![[0.0; 3]; nb];
    let mut load_q = vec![[0.0; 3]; nb];
    for (d, l) in net.loads.iter().enumerate() {
        for a in l.phases.iter() {
            load_p[l.bus][a] += scenario.p[d][a];
            load_q[l.bus][a] += scenario.q[d][a];
        }
    }
    let mut gens_at: Vec<Vec<usize>> = vec![Vec::new(); nb];
    for (g, gen) in net.generators.iter().enumerate() {
        gens_at[gen.bus].push(g);
    }

    let mut h_plus = vec![[None; 3]; nb];
    let mut h_minus = vec![[None; 3]; nb];
    let mut balance = vec![[None; 3]; nb];
    for (i, bus) in net.buses.iter().enumerate() {
        if opts.balance_slack {
            h_plus[i] = pairs(
                rows.model,
                &format!("{pf}h+:{}", bus.id),
                bus.phases.iter(),
                0.0,
            );
            h_minus[i] = pairs(
                rows.model,
                &format!("{pf}h-:{}", bus.id),
                bus.phases.iter(),
                0.0,
            );
        }
        let blk = XIdx::Block(net.block_of_bus[i]);
        for a in bus.phases.iter() {
            let ph = PHASE_NAMES[a];
            let mut rid = [RowId(0); 2];
            for (kq, reactive) in [false, true].into_iter().enumerate() {
                let mut e = LinExpr::default();
                e.vars
                    .extend(if reactive { &out_q[i][a] } else { &out_p[i][a] });
                for &g in &gens_at[i] {
                    if net.generators[g].phases.contains(a) {
                        e = e.plus(injection(g, a, reactive).scaled(-1.0));
                    }
                }
                let load = if reactive { load_q[i][a] } else { load_p[i][a] };
                if load != 0.0 {
                    e.master.push((blk, load));
                }
                let shunt = if reactive {
                    -bus.shunt_b[a]
                } else {
                    bus.shunt_g[a]
                };
                if shunt != 0.0 {
                    e.vars.push((wv(i, a), shunt));
                }
                if let (Some(hp), Some(hm)) = (h_plus[i][a], h_minus[i][a]) {
                    let pick = |v: (VarId, VarId)| if reactive { v.1 } else { v.0 };
                    e.vars.push((pick(hp), 1.0));
                    e.vars.push((pick(hm), -1.0));
                }
                let name = if reactive { "balq" } else { "balp" };
                rid[kq] = rows.add(format!("{pf}{name}:{}:{ph}", bus.id), e, Sense::Eq, 0.0)?;
            }
            balance[i][a] = Some((rid[0], rid[1]));
        }
    }

    Ok(FlowVars {
        w,
        line,
        switch,
        xfmr_from,
        xfmr_to,
        h_plus,
        h_minus,
        balance,
    })
}
