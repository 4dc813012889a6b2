//! Bounded-variable revised primal simplex.
//!
//! Rows are turned into equalities with one logical column each,
//! `A x - r = 0`, and the logical carries the row's bounds. Phase 1 minimizes
//! the sum of bound infeasibilities of basic variables (composite method), so
//! any basis, including a warm one, is a valid starting point. Pricing is
//! Dantzig's rule with a Harris ratio test; after a run of degenerate pivots
//! the solver falls back to Bland's rule until progress resumes.

use crate::lu::BasisFactor;
use crate::model::{ModelIR, Sense};
use crate::result::{Basis, SolveResult, SolveStatus, VarStatus};
use crate::Tolerances;

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 80;
const STALL_LIMIT: usize = 40;

#[derive(Debug, Clone)]
pub struct LpOptions {
    pub tolerances: Tolerances,
    pub max_iterations: usize,
    pub scaling: bool,
    pub warm_start: Option<Basis>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            max_iterations: 200_000,
            scaling: true,
            warm_start: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Nb {
    Lower,
    Upper,
    Zero,
}

struct Scaling {
    row: Vec<f64>,
    col: Vec<f64>,
}

impl Scaling {
    fn identity(m: usize, n: usize) -> Self {
        Self {
            row: vec![1.0; m],
            col: vec![1.0; n],
        }
    }

    /// Geometric-mean equilibration, rounded to powers of two.
    fn geometric(m: usize, n: usize, cols: &[Vec<(usize, f64)>]) -> Self {
        let mut s = Self::identity(m, n);
        for _ in 0..6 {
            let mut rmin = vec![f64::INFINITY; m];
            let mut rmax = vec![0.0f64; m];
            for (j, col) in cols.iter().enumerate() {
                for &(i, a) in col {
                    let v = (a * s.row[i] * s.col[j]).abs();
                    rmin[i] = rmin[i].min(v);
                    rmax[i] = rmax[i].max(v);
                }
            }
            for i in 0..m {
                if rmax[i] > 0.0 {
                    s.row[i] *= pow2(1.0 / (rmin[i] * rmax[i]).sqrt());
                }
            }
            for (j, col) in cols.iter().enumerate() {
                let mut cmin = f64::INFINITY;
                let mut cmax = 0.0f64;
                for &(i, a) in col {
                    let v = (a * s.row[i] * s.col[j]).abs();
                    cmin = cmin.min(v);
                    cmax = cmax.max(v);
                }
                if cmax > 0.0 {
                    s.col[j] *= pow2(1.0 / (cmin * cmax).sqrt());
                }
            }
        }
        s
    }
}

fn pow2(v: f64) -> f64 {
    if !v.is_finite() || v <= 0.0 {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

pub(crate) struct Simplex {
    n: usize,
    m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    nb: Vec<Nb>,
    factor: Option<BasisFactor>,
    scaling: Scaling,
    ftol: f64,
    dtol: f64,
    iterations: usize,
}

const NONE: usize = usize::MAX;

/// Solves the LP relaxation of `model` (integrality flags are ignored).
pub fn solve_lp(model: &ModelIR, options: &LpOptions) -> SolveResult {
    solve_lp_with_bounds(model, None, options)
}

/// Like [`solve_lp`] with column bounds replaced by `bounds`.
pub(crate) fn solve_lp_with_bounds(
    model: &ModelIR,
    bounds: Option<(&[f64], &[f64])>,
    options: &LpOptions,
) -> SolveResult {
    let mut s = Simplex::new(model, bounds, options);
    let status = s.run(options.max_iterations);
    s.into_result(model, status)
}

impl Simplex {
    fn new(model: &ModelIR, bounds: Option<(&[f64], &[f64])>, options: &LpOptions) -> Self {
        let n = model.num_vars();
        let m = model.num_rows();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in model.rows().iter().enumerate() {
            for &(v, a) in &row.coefs {
                cols[v.0].push((i, a));
            }
        }
        let scaling = if options.scaling {
            Scaling::geometric(m, n, &cols)
        } else {
            Scaling::identity(m, n)
        };
        for (j, col) in cols.iter_mut().enumerate() {
            for e in col.iter_mut() {
                e.1 *= scaling.row[e.0] * scaling.col[j];
            }
        }
        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        let mut cost = Vec::with_capacity(n + m);
        for (j, v) in model.vars().iter().enumerate() {
            let (l, u) = bounds.map_or((v.lower, v.upper), |(l, u)| (l[j], u[j]));
            lo.push(l / scaling.col[j]);
            up.push(u / scaling.col[j]);
            cost.push(v.cost * scaling.col[j]);
        }
        for (i, row) in model.rows().iter().enumerate() {
            let b = row.rhs * scaling.row[i];
            let (l, u) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, b),
                Sense::Ge => (b, f64::INFINITY),
                Sense::Eq => (b, b),
            };
            lo.push(l);
            up.push(u);
            cost.push(0.0);
        }
        let cmax = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let mut s = Self {
            n,
            m,
            cols,
            lo,
            up,
            cost,
            x: vec![0.0; n + m],
            basis: Vec::new(),
            pos_of: vec![NONE; n + m],
            nb: vec![Nb::Lower; n + m],
            factor: None,
            scaling,
            ftol: options.tolerances.feasibility,
            dtol: options.tolerances.optimality * cmax,
            iterations: 0,
        };
        let warm_ok = options
            .warm_start
            .as_ref()
            .map(|b| s.install_basis(b))
            .unwrap_or(false);
        if !warm_ok {
            s.slack_basis();
        }
        s
    }

    fn default_nb(&self, j: usize) -> Nb {
        if self.lo[j].is_finite() {
            Nb::Lower
        } else if self.up[j].is_finite() {
            Nb::Upper
        } else {
            Nb::Zero
        }
    }

    fn nb_value(&self, j: usize) -> f64 {
        match self.nb[j] {
            Nb::Lower if self.lo[j].is_finite() => self.lo[j],
            Nb::Upper if self.up[j].is_finite() => self.up[j],
            Nb::Lower | Nb::Upper | Nb::Zero => {
                if self.lo[j].is_finite() {
                    self.lo[j]
                } else if self.up[j].is_finite() {
                    self.up[j]
                } else {
                    0.0
                }
            }
        }
    }

    fn slack_basis(&mut self) {
        self.basis = (self.n..self.n + self.m).collect();
        self.pos_of = vec![NONE; self.n + self.m];
        for (p, &j) in self.basis.iter().enumerate() {
            self.pos_of[j] = p;
        }
        for j in 0..self.n {
            self.nb[j] = self.default_nb(j);
        }
        self.refactor();
    }

    fn install_basis(&mut self, warm: &Basis) -> bool {
        if warm.status.len() != self.n + self.m {
            return false;
        }
        let basics: Vec<usize> = (0..self.n + self.m)
            .filter(|&j| warm.status[j] == VarStatus::Basic)
            .collect();
        if basics.len() != self.m {
            return false;
        }
        self.basis = basics;
        self.pos_of = vec![NONE; self.n + self.m];
        for (p, &j) in self.basis.iter().enumerate() {
            self.pos_of[j] = p;
        }
        for j in 0..self.n + self.m {
            if self.pos_of[j] != NONE {
                continue;
            }
            self.nb[j] = match warm.status[j] {
                VarStatus::AtUpper if self.up[j].is_finite() => Nb::Upper,
                VarStatus::AtLower if self.lo[j].is_finite() => Nb::Lower,
                _ => self.default_nb(j),
            };
        }
        self.refactor();
        true
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.cols[j].clone()
        } else {
            vec![(j - self.n, -1.0)]
        }
    }

    /// Factorizes the current basis, repairing singularities with logicals,
    /// and recomputes basic values.
    fn refactor(&mut self) {
        loop {
            let cols: Vec<Vec<(usize, f64)>> = self.basis.iter().map(|&j| self.column(j)).collect();
            match BasisFactor::factorize(self.m, &cols) {
                Ok(f) => {
                    self.factor = Some(f);
                    break;
                }
                Err(sing) => {
                    for (&p, &r) in sing.positions.iter().zip(&sing.rows) {
                        let out = self.basis[p];
                        self.pos_of[out] = NONE;
                        self.nb[out] = self.default_nb(out);
                        let logical = self.n + r;
                        if self.pos_of[logical] != NONE {
                            continue;
                        }
                        self.basis[p] = logical;
                        self.pos_of[logical] = p;
                    }
                }
            }
        }
        self.compute_basic_values();
    }

    fn compute_basic_values(&mut self) {
        let mut rhs = vec![0.0; self.m];
        for j in 0..self.n + self.m {
            if self.pos_of[j] != NONE {
                continue;
            }
            let v = self.nb_value(j);
            self.x[j] = v;
            if v == 0.0 {
                continue;
            }
            if j < self.n {
                for &(i, a) in &self.cols[j] {
                    rhs[i] -= a * v;
                }
            } else {
                rhs[j - self.n] += v;
            }
        }
        self.factor.as_ref().unwrap().ftran(&mut rhs);
        for (p, &j) in self.basis.iter().enumerate() {
            self.x[j] = rhs[p];
        }
    }

    fn phase_costs(&self) -> Option<Vec<f64>> {
        let mut any = false;
        let mut c = vec![0.0; self.m];
        for (p, &j) in self.basis.iter().enumerate() {
            let v = self.x[j];
            if v < self.lo[j] - self.ftol {
                c[p] = -1.0;
                any = true;
            } else if v > self.up[j] + self.ftol {
                c[p] = 1.0;
                any = true;
            }
        }
        any.then_some(c)
    }

    fn duals(&self, basic_costs: &[f64]) -> Vec<f64> {
        let mut y = basic_costs.to_vec();
        self.factor.as_ref().unwrap().btran(&mut y);
        y
    }

    fn reduced_cost(&self, j: usize, y: &[f64], phase1: bool) -> f64 {
        let c = if phase1 { 0.0 } else { self.cost[j] };
        if j < self.n {
            c - self.cols[j].iter().map(|&(i, a)| a * y[i]).sum::<f64>()
        } else {
            c + y[j - self.n]
        }
    }

    fn run(&mut self, max_iterations: usize) -> SolveStatus {
        let mut stall = 0usize;
        let mut bland = false;
        let mut verified = false;
        loop {
            if self.iterations >= max_iterations {
                return SolveStatus::Limit;
            }
            if self.factor.as_ref().unwrap().num_etas() >= REFACTOR_EVERY {
                self.refactor();
            }
            let phase1_costs = self.phase_costs();
            let phase1 = phase1_costs.is_some();
            let basic_costs: Vec<f64> = match &phase1_costs {
                Some(c) => c.clone(),
                None => self.basis.iter().map(|&j| self.cost[j]).collect(),
            };
            let y = self.duals(&basic_costs);
            let tol = if phase1 { 1e-11 } else { self.dtol };

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None;
            for j in 0..self.n + self.m {
                if self.pos_of[j] != NONE || self.lo[j] == self.up[j] {
                    continue;
                }
                let d = self.reduced_cost(j, &y, phase1);
                let dir = match self.nb[j] {
                    Nb::Lower if self.lo[j].is_finite() && d < -tol => 1.0,
                    Nb::Upper if self.up[j].is_finite() && d > tol => -1.0,
                    Nb::Zero if d.abs() > tol => -d.signum(),
                    _ if !self.lo[j].is_finite() && !self.up[j].is_finite() && d.abs() > tol => {
                        -d.signum()
                    }
                    _ => continue,
                };
                if bland {
                    entering = Some((j, d, dir));
                    break;
                }
                if entering.is_none_or(|(_, bd, _)| d.abs() > bd.abs()) {
                    entering = Some((j, d, dir));
                }
            }

            let Some((q, _dq, dir)) = entering else {
                if phase1 {
                    // Confirm on a fresh factorization before declaring infeasibility.
                    if !verified {
                        verified = true;
                        self.refactor();
                        continue;
                    }
                    return SolveStatus::Infeasible;
                }
                if !verified {
                    verified = true;
                    self.refactor();
                    continue;
                }
                return SolveStatus::Optimal;
            };
            verified = false;

            let mut alpha = vec![0.0; self.m];
            for (i, a) in self.column(q) {
                alpha[i] = a;
            }
            self.factor.as_ref().unwrap().ftran(&mut alpha);

            // Ratio test: basic x_B[p] moves at rate -dir * alpha[p].
            let mut limits: Vec<(usize, f64, f64, bool)> = Vec::new(); // (pos, ratio, |alpha|, to_upper)
            for p in 0..self.m {
                let rate = -dir * alpha[p];
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let j = self.basis[p];
                let v = self.x[j];
                let (lo, up) = (self.lo[j], self.up[j]);
                if rate > 0.0 {
                    if phase1 && v < lo - self.ftol {
                        limits.push((p, (lo - v) / rate, rate.abs(), false));
                    } else if up.is_finite() && v <= up + self.ftol {
                        limits.push((p, ((up - v) / rate).max(0.0), rate.abs(), true));
                    }
                } else if phase1 && v > up + self.ftol {
                    limits.push((p, (v - up) / -rate, rate.abs(), true));
                } else if lo.is_finite() && v >= lo - self.ftol {
                    limits.push((p, ((v - lo) / -rate).max(0.0), rate.abs(), false));
                }
            }
            let flip = if self.lo[q].is_finite() && self.up[q].is_finite() {
                self.up[q] - self.lo[q]
            } else {
                f64::INFINITY
            };

            let chosen = if limits.is_empty() {
                None
            } else if bland {
                let tmin = limits.iter().map(|l| l.1).fold(f64::INFINITY, f64::min);
                limits
                    .iter()
                    .filter(|l| l.1 <= tmin + 1e-12)
                    .min_by_key(|l| self.basis[l.0])
                    .copied()
            } else {
                let relaxed = limits
                    .iter()
                    .map(|&(_, t, r, _)| t + self.ftol / r)
                    .fold(f64::INFINITY, f64::min);
                limits
                    .iter()
                    .filter(|l| l.1 <= relaxed)
                    .max_by(|a, b| a.2.total_cmp(&b.2).then(b.0.cmp(&a.0)))
                    .copied()
            };

            let step = chosen.map_or(f64::INFINITY, |c| c.1);
            if flip.is_finite() && flip <= step {
                // Bound flip, basis unchanged.
                self.iterations += 1;
                let t = flip;
                for p in 0..self.m {
                    let j = self.basis[p];
                    self.x[j] -= dir * t * alpha[p];
                }
                self.nb[q] = if dir > 0.0 { Nb::Upper } else { Nb::Lower };
                self.x[q] = self.nb_value(q);
                stall = 0;
                bland = false;
                continue;
            }
            let Some((p, t, _, to_upper)) = chosen else {
                if phase1 {
                    // Phase 1 is bounded below; an unblocked ray means drift.
                    self.refactor();
                    stall += 1;
                    if stall > 3 * STALL_LIMIT {
                        return SolveStatus::Infeasible;
                    }
                    continue;
                }
                return SolveStatus::Unbounded;
            };
            if alpha[p].abs() < 1e-7 && self.factor.as_ref().unwrap().num_etas() > 0 {
                // Tiny pivot on an updated factor: refresh and retry.
                self.refactor();
                continue;
            }
            self.iterations += 1;
            let t = t.max(0.0);
            if t <= 1e-12 {
                stall += 1;
                if stall > STALL_LIMIT {
                    bland = true;
                }
            } else {
                stall = 0;
                bland = false;
            }
            for pp in 0..self.m {
                let j = self.basis[pp];
                self.x[j] -= dir * t * alpha[pp];
            }
            self.x[q] += dir * t;
            let leaving = self.basis[p];
            self.nb[leaving] = if to_upper { Nb::Upper } else { Nb::Lower };
            self.x[leaving] = if to_upper {
                self.up[leaving]
            } else {
                self.lo[leaving]
            };
            self.pos_of[leaving] = NONE;
            self.basis[p] = q;
            self.pos_of[q] = p;
            self.factor.as_mut().unwrap().push_eta(p, &alpha);
        }
    }

    fn into_result(mut self, model: &ModelIR, status: SolveStatus) -> SolveResult {
        self.refactor();
        let basic_costs: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
        let y = self.duals(&basic_costs);
        let mut x = vec![0.0; self.n];
        let mut reduced = vec![0.0; self.n];
        for j in 0..self.n {
            x[j] = self.x[j] * self.scaling.col[j];
            let d = if self.pos_of[j] != NONE {
                0.0
            } else {
                self.reduced_cost(j, &y, false)
            };
            reduced[j] = d / self.scaling.col[j];
        }
        let duals: Vec<f64> = (0..self.m).map(|i| y[i] * self.scaling.row[i]).collect();
        let status_vec = (0..self.n + self.m)
            .map(|j| {
                if self.pos_of[j] != NONE {
                    VarStatus::Basic
                } else {
                    match self.nb[j] {
                        Nb::Lower => VarStatus::AtLower,
                        Nb::Upper => VarStatus::AtUpper,
                        Nb::Zero => VarStatus::Free,
                    }
                }
            })
            .collect();
        let objective = match status {
            SolveStatus::Optimal | SolveStatus::Limit => model.evaluate_objective(&x),
            SolveStatus::Infeasible => f64::INFINITY,
            SolveStatus::Unbounded => f64::NEG_INFINITY,
        };
        SolveResult {
            status,
            objective,
            x,
            duals,
            reduced_costs: reduced,
            row_tags: model.rows().iter().map(|r| r.tag.clone()).collect(),
            iterations: self.iterations,
            nodes: 0,
            basis: Some(Basis { status: status_vec }),
            best_bound: objective,
        }
    }
}
