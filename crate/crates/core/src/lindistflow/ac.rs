//! Unbalanced AC power flow by fixed-point iteration: backward/forward sweep
//! on radial components, Z-bus iteration on meshed ones.

use nalgebra::{Complex, DMatrix, DVector, Matrix3};

use crate::netmodel::{Network, ScenarioVector, TransformerKind};

use super::plant::{
    build_tree, edge_phases, nodal_demand, CcTree, Dispatch, Edge, PlantCc, PlantError, Topology,
};

pub type C64 = Complex<f64>;
pub type PhaseVoltages = [C64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcMethod {
    /// Sweep on radial components, Z-bus otherwise.
    Auto,
    Sweep,
    ZBus,
}

#[derive(Debug, Clone)]
pub struct AcOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub method: AcMethod,
}

impl Default for AcOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 100,
            method: AcMethod::Auto,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AcSolution {
    /// Complex voltage per bus phase; zero outside the component.
    pub v: Vec<PhaseVoltages>,
    /// Complex power delivered by the slack generator per phase.
    pub slack_s: PhaseVoltages,
    pub iterations: usize,
    pub converged: bool,
}

impl AcSolution {
    pub fn magnitude(&self, bus: usize, phase: usize) -> f64 {
        self.v[bus][phase].norm()
    }
}

/// Balanced positive-sequence phasors of magnitude `v`.
pub fn balanced(v: f64) -> PhaseVoltages {
    let a = -2.0 * std::f64::consts::PI / 3.0;
    [
        C64::new(v, 0.0),
        C64::from_polar(v, a),
        C64::from_polar(v, -a),
    ]
}

fn zero3() -> PhaseVoltages {
    [C64::new(0.0, 0.0); 3]
}

/// Voltage map across a tree edge, parent side to child side. Currents map
/// back with the transpose.
fn edge_map(net: &Network, e: Edge, parent_is_from: bool) -> Matrix3<f64> {
    match e {
        Edge::Line(_) | Edge::Switch(_) => Matrix3::identity(),
        Edge::Transformer(t) => {
            let x = &net.transformers[t];
            let n = x.tap_ratio;
            match (x.kind, parent_is_from) {
                (TransformerKind::Wye, true) => Matrix3::identity() / n,
                (TransformerKind::Wye, false) => Matrix3::identity() * n,
                (TransformerKind::Delta, _) => {
                    Matrix3::new(1.0, -1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0, 1.0) / n
                }
            }
        }
    }
}

fn apply(m: &Matrix3<f64>, v: &PhaseVoltages) -> PhaseVoltages {
    let mut out = zero3();
    for (a, o) in out.iter_mut().enumerate() {
        for b in 0..3 {
            *o += v[b] * m[(a, b)];
        }
    }
    out
}

fn apply_t(m: &Matrix3<f64>, v: &PhaseVoltages) -> PhaseVoltages {
    apply(&m.transpose(), v)
}

/// Constant-power loads, fixed generator injections and shunt admittances;
/// the slack generator's bus is held at `slack_v`.
pub fn solve_ac_fixed_point(
    net: &Network,
    cc: &PlantCc,
    topo: &Topology,
    dispatch: &Dispatch,
    scenario: &ScenarioVector,
    slack_v: PhaseVoltages,
    opts: &AcOptions,
) -> Result<AcSolution, PlantError> {
    let tree = build_tree(net, topo, cc);
    let use_zbus = match opts.method {
        AcMethod::Auto => tree.meshed,
        AcMethod::Sweep => {
            if tree.meshed {
                return Err(PlantError::NotRadial(cc.id.clone()));
            }
            false
        }
        AcMethod::ZBus => true,
    };
    let (dp, dq) = nodal_demand(net, cc, dispatch, scenario);
    let demand: Vec<PhaseVoltages> = dp
        .iter()
        .zip(&dq)
        .map(|(p, q)| [0, 1, 2].map(|a| C64::new(p[a], q[a])))
        .collect();
    if use_zbus {
        if tree.has_transformer {
            return Err(PlantError::MeshedTransformer(cc.id.clone()));
        }
        zbus(net, cc, topo, &demand, slack_v, opts)
    } else {
        sweep(net, cc, &tree, &demand, slack_v, opts)
    }
}

/// Current drawn at a bus by its demand and shunt.
fn drawn_current(
    net: &Network,
    bus: usize,
    demand: &PhaseVoltages,
    v: &PhaseVoltages,
) -> PhaseVoltages {
    let b = &net.buses[bus];
    let mut out = zero3();
    for a in b.phases.iter() {
        if v[a].norm() > 1e-12 {
            out[a] = (demand[a] / v[a]).conj();
        }
        out[a] += C64::new(b.shunt_g[a], b.shunt_b[a]) * v[a];
    }
    out
}

fn sweep(
    net: &Network,
    cc: &PlantCc,
    tree: &CcTree,
    demand: &[PhaseVoltages],
    slack_v: PhaseVoltages,
    opts: &AcOptions,
) -> Result<AcSolution, PlantError> {
    let nb = net.buses.len();
    let mut v = vec![zero3(); nb];
    let maps: Vec<Option<Matrix3<f64>>> = (0..nb)
        .map(|u| tree.link[u].map(|l| edge_map(net, l.edge, l.parent_is_from)))
        .collect();
    let mask = |u: usize, x: PhaseVoltages| -> PhaseVoltages {
        let ph = edge_phases(net, tree.link[u].unwrap().edge);
        [0, 1, 2].map(|a| {
            if ph.contains(a) {
                x[a]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    };
    // Initial guess: no-load propagation of the slack voltage.
    for a in net.buses[cc.slack_bus].phases.iter() {
        v[cc.slack_bus][a] = slack_v[a];
    }
    for &u in tree.order.iter().skip(1) {
        let p = tree.link[u].unwrap().parent;
        v[u] = mask(u, apply(maps[u].as_ref().unwrap(), &v[p]));
    }
    let mut converged = false;
    let mut iterations = 0;
    let mut root_current = zero3();
    while iterations < opts.max_iterations {
        iterations += 1;
        let mut j: Vec<PhaseVoltages> = (0..nb)
            .map(|u| drawn_current(net, u, &demand[u], &v[u]))
            .collect();
        for &u in tree.order.iter().rev() {
            let Some(link) = tree.link[u] else { continue };
            let up = apply_t(maps[u].as_ref().unwrap(), &mask(u, j[u]));
            for a in 0..3 {
                j[link.parent][a] += up[a];
            }
        }
        root_current = j[cc.slack_bus];
        let mut nv = vec![zero3(); nb];
        for a in net.buses[cc.slack_bus].phases.iter() {
            nv[cc.slack_bus][a] = slack_v[a];
        }
        for &u in tree.order.iter().skip(1) {
            let link = tree.link[u].unwrap();
            let mut x = apply(maps[u].as_ref().unwrap(), &nv[link.parent]);
            if let Edge::Line(l) = link.edge {
                let seg = &net.lines[l];
                // Current through the line toward the child.
                let ju = mask(u, j[u]);
                for a in seg.phases.iter() {
                    for b in seg.phases.iter() {
                        x[a] -= C64::new(seg.r[a][b], seg.x[a][b]) * ju[b];
                    }
                }
            }
            nv[u] = mask(u, x);
        }
        let change = nv
            .iter()
            .zip(&v)
            .flat_map(|(a, b)| (0..3).map(move |k| (a[k] - b[k]).norm()))
            .fold(0.0, f64::max);
        v = nv;
        if change < opts.tolerance {
            converged = true;
            break;
        }
    }
    // The drawn current at the slack bus already includes its local demand.
    let slack_s = [0, 1, 2].map(|a| v[cc.slack_bus][a] * root_current[a].conj());
    Ok(AcSolution {
        v,
        slack_s,
        iterations,
        converged,
    })
}

fn zbus(
    net: &Network,
    cc: &PlantCc,
    topo: &Topology,
    demand: &[PhaseVoltages],
    slack_v: PhaseVoltages,
    opts: &AcOptions,
) -> Result<AcSolution, PlantError> {
    let nb = net.buses.len();
    // Closed switches are ideal: merge their end buses.
    let mut rep: Vec<usize> = (0..nb).collect();
    fn find(rep: &mut [usize], mut a: usize) -> usize {
        while rep[a] != a {
            rep[a] = rep[rep[a]];
            a = rep[a];
        }
        a
    }
    let in_cc: Vec<bool> = {
        let mut m = vec![false; nb];
        cc.buses.iter().for_each(|&b| m[b] = true);
        m
    };
    for (s, sw) in net.switches.iter().enumerate() {
        if topo.switches.closed(s) && in_cc[sw.from] && in_cc[sw.to] {
            let (a, b) = (find(&mut rep, sw.from), find(&mut rep, sw.to));
            if a != b {
                rep[a.max(b)] = a.min(b);
            }
        }
    }
    let root: Vec<usize> = (0..nb).map(|u| find(&mut rep, u)).collect();
    let slack_root = root[cc.slack_bus];

    // Node numbering over (representative bus, phase) touched by a line.
    let mut node_of = vec![[usize::MAX; 3]; nb];
    let mut nodes: Vec<(usize, usize)> = Vec::new();
    let lines: Vec<usize> = (0..net.lines.len())
        .filter(|&l| in_cc[net.lines[l].from])
        .collect();
    for &l in &lines {
        let seg = &net.lines[l];
        for a in seg.phases.iter() {
            for end in [root[seg.from], root[seg.to]] {
                if end != slack_root && node_of[end][a] == usize::MAX {
                    node_of[end][a] = nodes.len();
                    nodes.push((end, a));
                }
            }
        }
    }
    let n = nodes.len();
    let mut yll = DMatrix::<C64>::zeros(n, n);
    // Coupling of each unknown node to the slack phases.
    let mut yls = DMatrix::<C64>::zeros(n, 3);
    for &l in &lines {
        let seg = &net.lines[l];
        let ph: Vec<usize> = seg.phases.iter().collect();
        let k = ph.len();
        let z = DMatrix::<C64>::from_fn(k, k, |i, j| {
            C64::new(seg.r[ph[i]][ph[j]], seg.x[ph[i]][ph[j]])
        });
        let y = z
            .try_inverse()
            .ok_or_else(|| PlantError::Singular(cc.id.clone()))?;
        let ends = [root[seg.from], root[seg.to]];
        for (ei, &e) in ends.iter().enumerate() {
            for (fi, &f) in ends.iter().enumerate() {
                let sign = if ei == fi { 1.0 } else { -1.0 };
                for i in 0..k {
                    if e == slack_root {
                        continue;
                    }
                    let row = node_of[e][ph[i]];
                    for j in 0..k {
                        let val = y[(i, j)] * sign;
                        if f == slack_root {
                            yls[(row, ph[j])] += val;
                        } else {
                            yll[(row, node_of[f][ph[j]])] += val;
                        }
                    }
                }
            }
        }
    }
    // Shunts enter the drawn current, not the matrix, to share code with the sweep.
    let lu = yll.clone().lu();
    if n > 0 && !lu.is_invertible() {
        return Err(PlantError::Singular(cc.id.clone()));
    }
    let vs = DVector::from_iterator(3, slack_v.iter().copied());
    let rhs0 = -(&yls * &vs);
    // Initial guess: no-load solution.
    let mut x = if n > 0 {
        lu.solve(&rhs0)
            .ok_or_else(|| PlantError::Singular(cc.id.clone()))?
    } else {
        DVector::zeros(0)
    };

    // Demand aggregated on representative buses.
    let mut agg = vec![zero3(); nb];
    for &b in &cc.buses {
        for a in 0..3 {
            agg[root[b]][a] += demand[b][a];
        }
    }
    let voltages = |x: &DVector<C64>| -> Vec<PhaseVoltages> {
        let mut v = vec![zero3(); nb];
        for &b in &cc.buses {
            let r = root[b];
            for a in net.buses[b].phases.iter() {
                v[b][a] = if r == slack_root {
                    slack_v[a]
                } else if node_of[r][a] != usize::MAX {
                    x[node_of[r][a]]
                } else {
                    C64::new(0.0, 0.0)
                };
            }
        }
        v
    };
    let drawn = |v: &[PhaseVoltages]| -> Vec<PhaseVoltages> {
        let mut j = vec![zero3(); nb];
        for &b in &cc.buses {
            let d = drawn_current(net, b, &demand[b], &v[b]);
            for a in 0..3 {
                j[root[b]][a] += d[a];
            }
        }
        j
    };
    let mut converged = n == 0;
    let mut iterations = 0;
    while !converged && iterations < opts.max_iterations {
        iterations += 1;
        let v = voltages(&x);
        let j = drawn(&v);
        let mut rhs = rhs0.clone();
        for (k, &(r, a)) in nodes.iter().enumerate() {
            rhs[k] -= j[r][a];
        }
        let nx = lu
            .solve(&rhs)
            .ok_or_else(|| PlantError::Singular(cc.id.clone()))?;
        let change = (&nx - &x).iter().map(|c| c.norm()).fold(0.0, f64::max);
        x = nx;
        if change < opts.tolerance {
            converged = true;
        }
    }
    let v = voltages(&x);
    // Slack output: current leaving the slack node into lines plus its own demand.
    let j = drawn(&v);
    let xs = &x;
    let mut out_current = [0, 1, 2].map(|a| j[slack_root][a]);
    for &l in &lines {
        let seg = &net.lines[l];
        let ph: Vec<usize> = seg.phases.iter().collect();
        let k = ph.len();
        let z = DMatrix::<C64>::from_fn(k, k, |i, jj| {
            C64::new(seg.r[ph[i]][ph[jj]], seg.x[ph[i]][ph[jj]])
        });
        let y = z
            .try_inverse()
            .ok_or_else(|| PlantError::Singular(cc.id.clone()))?;
        let (f, t) = (root[seg.from], root[seg.to]);
        let volt = |e: usize, a: usize| {
            if e == slack_root {
                slack_v[a]
            } else {
                xs[node_of[e][a]]
            }
        };
        for (here, there) in [(f, t), (t, f)] {
            if here != slack_root || there == slack_root {
                continue;
            }
            for i in 0..k {
                for jj in 0..k {
                    out_current[ph[i]] += y[(i, jj)] * (volt(here, ph[jj]) - volt(there, ph[jj]));
                }
            }
        }
    }
    let slack_s = [0, 1, 2].map(|a| slack_v[a] * out_current[a].conj());
    Ok(AcSolution {
        v,
        slack_s,
        iterations,
        converged,
    })
}

/// Largest apparent power per phase at either end of every tree edge of a
/// radial component, from a converged voltage solution.
pub fn ac_branch_magnitudes(
    net: &Network,
    cc: &PlantCc,
    topo: &Topology,
    dispatch: &Dispatch,
    scenario: &ScenarioVector,
    sol: &AcSolution,
) -> Result<Vec<(Edge, [f64; 3])>, PlantError> {
    let tree = build_tree(net, topo, cc);
    if tree.meshed {
        return Err(PlantError::NotRadial(cc.id.clone()));
    }
    let (dp, dq) = nodal_demand(net, cc, dispatch, scenario);
    let nb = net.buses.len();
    let mut j: Vec<PhaseVoltages> = (0..nb)
        .map(|u| {
            let d = [0, 1, 2].map(|a| C64::new(dp[u][a], dq[u][a]));
            drawn_current(net, u, &d, &sol.v[u])
        })
        .collect();
    let mut out = Vec::new();
    for &u in tree.order.iter().rev() {
        let Some(link) = tree.link[u] else { continue };
        let ph = edge_phases(net, link.edge);
        let ju: PhaseVoltages = [0, 1, 2].map(|a| {
            if ph.contains(a) {
                j[u][a]
            } else {
                C64::new(0.0, 0.0)
            }
        });
        let m = edge_map(net, link.edge, link.parent_is_from);
        let up = apply_t(&m, &ju);
        let mut mag = [0.0; 3];
        for a in ph.iter() {
            let child = (sol.v[u][a] * ju[a].conj()).norm();
            let parent = (sol.v[link.parent][a] * up[a].conj()).norm();
            mag[a] = child.max(parent);
        }
        for a in 0..3 {
            j[link.parent][a] += up[a];
        }
        out.push((link.edge, mag));
    }
    Ok(out)
}
