//! LP/MILP modelling layer and a self-contained solver.
//!
//! Models are built as a [`ModelIR`] with tagged rows, then handed to a
//! [`Solver`]. The bundled [`SimplexSolver`] runs a bounded revised simplex for
//! LPs and branch-and-bound for models with integer columns.

pub mod lp_format;
mod lu;
pub mod milp;
pub mod model;
pub mod polygon;
mod result;
pub mod simplex;

pub use milp::{solve_milp, MilpOptions};
pub use model::{Constraint, ModelError, ModelIR, RowId, Sense, VarId, Variable};
pub use result::{Basis, SolveResult, SolveStatus, VarStatus};
pub use simplex::{solve_lp, LpOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub feasibility: f64,
    pub optimality: f64,
    pub integrality: f64,
    pub duality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            feasibility: 1e-9,
            optimality: 1e-9,
            integrality: 1e-6,
            duality: 1e-8,
        }
    }
}

/// Anything that can solve a [`ModelIR`].
pub trait Solver: Send + Sync {
    fn solve(&self, model: &ModelIR) -> SolveResult;

    /// Solves with a starting basis hint. Solvers without warm start support
    /// may ignore it.
    fn solve_warm(&self, model: &ModelIR, _basis: Option<&Basis>) -> SolveResult {
        self.solve(model)
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimplexSolver {
    pub lp: LpOptions,
    pub milp: MilpOptions,
}

impl Solver for SimplexSolver {
    fn solve(&self, model: &ModelIR) -> SolveResult {
        self.solve_warm(model, None)
    }

    fn solve_warm(&self, model: &ModelIR, basis: Option<&Basis>) -> SolveResult {
        if model.has_integers() {
            solve_milp(model, &self.milp)
        } else {
            let mut opts = self.lp.clone();
            opts.warm_start = basis.cloned();
            solve_lp(model, &opts)
        }
    }
}
