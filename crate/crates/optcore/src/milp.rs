//! Branch-and-bound over the simplex relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::ModelIR;
use crate::result::{Basis, SolveResult, SolveStatus};
use crate::simplex::{solve_lp_with_bounds, LpOptions};

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub lp: LpOptions,
    pub node_limit: usize,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            lp: LpOptions::default(),
            node_limit: 200_000,
            abs_gap: 1e-7,
            rel_gap: 1e-9,
        }
    }
}

struct Node {
    id: usize,
    bound: f64,
    lo: Vec<f64>,
    up: Vec<f64>,
    basis: Option<Basis>,
}

// Min-heap on (bound, id).
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}

/// Solves a MILP. Branches on the most fractional integer column (lowest
/// index on ties), dives depth-first until an incumbent exists and then
/// switches to best-bound order. The returned point comes from a final LP
/// with integer columns fixed, so duals describe that restricted LP.
pub fn solve_milp(model: &ModelIR, options: &MilpOptions) -> SolveResult {
    let n = model.num_vars();
    let int_tol = options.lp.tolerances.integrality;
    let ints: Vec<usize> = (0..n).filter(|&j| model.vars()[j].integer).collect();
    let root_lo: Vec<f64> = model
        .vars()
        .iter()
        .map(|v| if v.integer { v.lower.ceil() } else { v.lower })
        .collect();
    let root_up: Vec<f64> = model
        .vars()
        .iter()
        .map(|v| if v.integer { v.upper.floor() } else { v.upper })
        .collect();

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut heap = BinaryHeap::new();
    let mut dive: Vec<Node> = Vec::new();
    let mut next_id = 0usize;
    let mut nodes = 0usize;
    let mut iterations = 0usize;
    let mut unbounded = false;
    let mut hit_limit = false;

    dive.push(Node {
        id: next_id,
        bound: f64::NEG_INFINITY,
        lo: root_lo,
        up: root_up,
        basis: options.lp.warm_start.clone(),
    });
    next_id += 1;

    let cutoff = |inc: &Option<(f64, Vec<f64>)>| -> f64 {
        match inc {
            Some((v, _)) => v - options.abs_gap.max(options.rel_gap * v.abs()),
            None => f64::INFINITY,
        }
    };

    loop {
        let node = if incumbent.is_none() {
            dive.pop().or_else(|| heap.pop())
        } else {
            heap.extend(dive.drain(..));
            heap.pop()
        };
        let Some(node) = node else { break };
        if node.bound >= cutoff(&incumbent) {
            continue;
        }
        if nodes >= options.node_limit {
            heap.push(node);
            hit_limit = true;
            break;
        }
        nodes += 1;
        if node.lo.iter().zip(&node.up).any(|(l, u)| l > u) {
            continue;
        }
        let mut lp = options.lp.clone();
        lp.warm_start = node.basis.clone();
        let r = solve_lp_with_bounds(model, Some((&node.lo, &node.up)), &lp);
        iterations += r.iterations;
        match r.status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                unbounded = true;
                break;
            }
            SolveStatus::Limit => {
                hit_limit = true;
                continue;
            }
            SolveStatus::Optimal => {}
        }
        if r.objective >= cutoff(&incumbent) {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        for &j in &ints {
            let v = r.x[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > int_tol && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        let Some((j, _)) = branch else {
            let mut x = r.x.clone();
            for &k in &ints {
                x[k] = x[k].round();
            }
            incumbent = Some((r.objective, x));
            continue;
        };
        let v = r.x[j];
        let mut down = Node {
            id: 0,
            bound: r.objective,
            lo: node.lo.clone(),
            up: node.up.clone(),
            basis: r.basis.clone(),
        };
        down.up[j] = v.floor();
        let mut upn = Node {
            id: 0,
            bound: r.objective,
            lo: node.lo,
            up: node.up,
            basis: r.basis,
        };
        upn.lo[j] = v.ceil();
        // Push the preferred child last so the dive explores it first.
        let children = if v - v.floor() >= 0.5 {
            [down, upn]
        } else {
            [upn, down]
        };
        for mut c in children {
            c.id = next_id;
            next_id += 1;
            if incumbent.is_none() {
                dive.push(c);
            } else {
                heap.push(c);
            }
        }
    }

    let open_bound = heap
        .iter()
        .chain(dive.iter())
        .map(|n| n.bound)
        .fold(f64::INFINITY, f64::min);

    if unbounded {
        return empty(
            model,
            SolveStatus::Unbounded,
            f64::NEG_INFINITY,
            nodes,
            iterations,
        );
    }
    let Some((inc_obj, inc_x)) = incumbent else {
        let status = if hit_limit {
            SolveStatus::Limit
        } else {
            SolveStatus::Infeasible
        };
        return empty(model, status, f64::INFINITY, nodes, iterations);
    };

    let mut lo: Vec<f64> = model.vars().iter().map(|v| v.lower).collect();
    let mut up: Vec<f64> = model.vars().iter().map(|v| v.upper).collect();
    for &j in &ints {
        lo[j] = inc_x[j];
        up[j] = inc_x[j];
    }
    let mut fin = solve_lp_with_bounds(model, Some((&lo, &up)), &options.lp);
    if !fin.is_optimal() {
        fin.x = inc_x;
        fin.objective = inc_obj;
    }
    fin.status = if hit_limit {
        SolveStatus::Limit
    } else {
        SolveStatus::Optimal
    };
    fin.nodes = nodes;
    fin.iterations += iterations;
    fin.best_bound = open_bound.min(fin.objective);
    fin
}

fn empty(
    model: &ModelIR,
    status: SolveStatus,
    obj: f64,
    nodes: usize,
    iterations: usize,
) -> SolveResult {
    SolveResult {
        status,
        objective: obj,
        x: vec![0.0; model.num_vars()],
        duals: vec![0.0; model.num_rows()],
        reduced_costs: vec![0.0; model.num_vars()],
        row_tags: model.rows().iter().map(|r| r.tag.clone()).collect(),
        iterations,
        nodes,
        basis: None,
        best_bound: obj,
    }
}
