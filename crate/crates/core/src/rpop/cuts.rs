//! Subgradient cuts on the recourse value.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use super::subproblem::{Subproblem, SubproblemSolution};
use super::MasterSolution;
use crate::lindistflow::XIdx;

/// `θ >= value + Σ g (x - x*)` for an optimality cut, `0 >= value + Σ g (x - x*)`
/// for a feasibility cut.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub value: f64,
    pub gradient: Vec<(XIdx, f64)>,
    /// `Σ g x*`
    pub anchor: f64,
    pub optimality: bool,
}

impl Cut {
    pub fn rhs(&self) -> f64 {
        self.value - self.anchor
    }

    /// Right-hand side of the cut evaluated at `x`.
    pub fn evaluate(&self, x: &MasterSolution) -> f64 {
        self.rhs()
            + self
                .gradient
                .iter()
                .map(|&(i, g)| g * x.value(i))
                .sum::<f64>()
    }
}

/// Builds a cut from the duals of the coupling rows. A row `a·y + c·x <= b`
/// was solved as `a·y <= b - c·x*`, so its contribution to `∂V/∂x` is `-π c`.
pub fn make_cut(
    sub: &Subproblem,
    sol: &SubproblemSolution,
    x_star: &MasterSolution,
    optimality: bool,
) -> Cut {
    let mut grad: BTreeMap<XIdx, f64> = BTreeMap::new();
    for row in &sub.coupling {
        let pi = sol.duals[row.row.0];
        if pi == 0.0 {
            continue;
        }
        for &(x, c) in &row.terms {
            *grad.entry(x).or_insert(0.0) -= pi * c;
        }
    }
    let gradient: Vec<(XIdx, f64)> = grad.into_iter().filter(|&(_, g)| g.abs() > 1e-12).collect();
    let anchor = gradient.iter().map(|&(i, g)| g * x_star.value(i)).sum();
    Cut {
        value: sol.objective,
        gradient,
        anchor,
        optimality,
    }
}
