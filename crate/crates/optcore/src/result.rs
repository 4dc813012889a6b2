use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Iteration or node limit hit; the point, if any, is the best found.
    Limit,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Limit => "limit",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// Status of every structural column followed by one logical per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Basis {
    pub status: Vec<VarStatus>,
}

impl Basis {
    /// Adapts a basis from a model with `old_vars` columns to one with extra
    /// columns and rows appended. New columns start at their lower bound and
    /// new rows get a basic logical.
    pub fn extended(&self, old_vars: usize, new_vars: usize, new_rows: usize) -> Basis {
        let old_rows = self.status.len() - old_vars;
        let mut status = Vec::with_capacity(new_vars + new_rows);
        status.extend_from_slice(&self.status[..old_vars]);
        status.resize(new_vars, VarStatus::AtLower);
        status.extend_from_slice(&self.status[old_vars..]);
        status.resize(new_vars + new_rows.max(old_rows), VarStatus::Basic);
        status.truncate(new_vars + new_rows);
        Basis { status }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub x: Vec<f64>,
    /// Sensitivity of the optimal objective to each row's right-hand side.
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub row_tags: Vec<String>,
    pub iterations: usize,
    pub nodes: usize,
    pub basis: Option<Basis>,
    /// Proven lower bound (equal to `objective` for LPs).
    pub best_bound: f64,
}

impl SolveResult {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn dual_by_tag(&self, tag: &str) -> Option<f64> {
        self.row_tags
            .iter()
            .position(|t| t == tag)
            .map(|i| self.duals[i])
    }
}
