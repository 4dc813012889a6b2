use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Handle to a column of a [`ModelIR`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Handle to a row of a [`ModelIR`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub integer: bool,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub tag: String,
    pub coefs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("variable `{name}` has inconsistent bounds [{lower}, {upper}]")]
    InvalidBounds {
        name: String,
        lower: f64,
        upper: f64,
    },
    #[error("row `{tag}` references unknown variable index {index}")]
    UnknownVariable { tag: String, index: usize },
    #[error("duplicate row tag `{0}`")]
    DuplicateTag(String),
    #[error("non-finite coefficient in row `{0}`")]
    NonFinite(String),
}

/// Minimization LP/MILP in row form.
///
/// Rows carry unique string tags so that downstream code can map dual values
/// back to the constraint family that produced them.
#[derive(Debug, Clone, Default)]
pub struct ModelIR {
    vars: Vec<Variable>,
    rows: Vec<Constraint>,
    objective_offset: f64,
    tags: HashMap<String, RowId>,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.push_var(name.into(), lower, upper, false)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.push_var(name.into(), 0.0, 1.0, true)
    }

    pub fn add_integer(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.push_var(name.into(), lower, upper, true)
    }

    fn push_var(&mut self, name: String, lower: f64, upper: f64, integer: bool) -> VarId {
        let id = VarId(self.vars.len());
        self.vars.push(Variable {
            name,
            lower,
            upper,
            integer,
            cost: 0.0,
        });
        id
    }

    pub fn set_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost = cost;
    }

    pub fn add_cost(&mut self, var: VarId, cost: f64) {
        self.vars[var.0].cost += cost;
    }

    pub fn add_objective_offset(&mut self, value: f64) {
        self.objective_offset += value;
    }

    pub fn objective_offset(&self) -> f64 {
        self.objective_offset
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.vars[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn set_integer(&mut self, var: VarId, integer: bool) {
        self.vars[var.0].integer = integer;
    }

    /// Adds a row `sum(coefs) <sense> rhs`. Repeated variables are merged and
    /// exact zeros dropped.
    pub fn add_row(
        &mut self,
        tag: impl Into<String>,
        coefs: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId, ModelError> {
        let tag = tag.into();
        if self.tags.contains_key(&tag) {
            return Err(ModelError::DuplicateTag(tag));
        }
        let mut merged: Vec<(VarId, f64)> = Vec::new();
        for (v, c) in coefs {
            if v.0 >= self.vars.len() {
                return Err(ModelError::UnknownVariable { tag, index: v.0 });
            }
            if !c.is_finite() {
                return Err(ModelError::NonFinite(tag));
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(entry) => entry.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        if !rhs.is_finite() {
            return Err(ModelError::NonFinite(tag));
        }
        let id = RowId(self.rows.len());
        self.tags.insert(tag.clone(), id);
        self.rows.push(Constraint {
            tag,
            coefs: merged,
            sense,
            rhs,
        });
        Ok(id)
    }

    /// Adds `c * var` to an existing row.
    pub fn add_coef(&mut self, row: RowId, var: VarId, c: f64) {
        let coefs = &mut self.rows[row.0].coefs;
        match coefs.iter_mut().find(|(w, _)| *w == var) {
            Some(entry) => entry.1 += c,
            None => coefs.push((var, c)),
        }
        coefs.retain(|(_, c)| *c != 0.0);
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: f64) {
        self.rows[row.0].rhs = rhs;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id.0]
    }

    pub fn rows(&self) -> &[Constraint] {
        &self.rows
    }

    pub fn row(&self, id: RowId) -> &Constraint {
        &self.rows[id.0]
    }

    pub fn row_by_tag(&self, tag: &str) -> Option<RowId> {
        self.tags.get(tag).copied()
    }

    pub fn has_integers(&self) -> bool {
        self.vars.iter().any(|v| v.integer)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for v in &self.vars {
            if v.lower > v.upper || v.lower.is_nan() || v.upper.is_nan() || !v.cost.is_finite() {
                return Err(ModelError::InvalidBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        for r in &self.rows {
            for (v, _) in &r.coefs {
                if v.0 >= self.vars.len() {
                    return Err(ModelError::UnknownVariable {
                        tag: r.tag.clone(),
                        index: v.0,
                    });
                }
            }
        }
        Ok(())
    }

    /// Objective value of a primal point, including the constant offset.
    pub fn evaluate_objective(&self, x: &[f64]) -> f64 {
        self.objective_offset
            + self
                .vars
                .iter()
                .zip(x)
                .map(|(v, xi)| v.cost * xi)
                .sum::<f64>()
    }

    pub fn row_activity(&self, row: RowId, x: &[f64]) -> f64 {
        self.rows[row.0].coefs.iter().map(|(v, c)| c * x[v.0]).sum()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (v, xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lower - xi).max(xi - v.upper);
        }
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.row_activity(RowId(i), x);
            let viol = match r.sense {
                Sense::Le => act - r.rhs,
                Sense::Ge => r.rhs - act,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }
}
