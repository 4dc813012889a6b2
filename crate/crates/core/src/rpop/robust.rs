//! Monte Carlo feasibility of a fixed decision over random load draws.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MasterSolution, RpopConfig, RpopError};
use crate::lindistflow::{check_feasibility, Fidelity};
use crate::netmodel::{Network, UncertaintyModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub level: f64,
    pub clustered: bool,
    pub fidelity: Fidelity,
    pub seed: u64,
    pub samples: usize,
    pub feasible: usize,
    pub fraction: f64,
    /// Indices of infeasible draws.
    pub failures: Vec<u64>,
}

/// Draws `n_samples` scenarios at `level` (sample `i` uses stream `i` of
/// `seed`) and checks each against `x`.
#[allow(clippy::too_many_arguments)]
pub fn robust_feasibility_sample(
    net: &Network,
    x: &MasterSolution,
    level: f64,
    clustered: bool,
    n_samples: usize,
    seed: u64,
    fidelity: Fidelity,
    config: &RpopConfig,
) -> Result<SampleReport, RpopError> {
    if !(0.0..1.0).contains(&level) {
        return Err(RpopError::Config(format!(
            "sample level {level} outside [0, 1)"
        )));
    }
    let unc = UncertaintyModel::new(net, Some(level))?;
    let ok: Vec<bool> = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let s = unc.sample(level, clustered, seed, i);
            check_feasibility(net, x, &s, fidelity, config).feasible
        })
        .collect();
    let failures: Vec<u64> = ok
        .iter()
        .enumerate()
        .filter(|(_, f)| !**f)
        .map(|(i, _)| i as u64)
        .collect();
    let feasible = n_samples - failures.len();
    Ok(SampleReport {
        level,
        clustered,
        fidelity,
        seed,
        samples: n_samples,
        feasible,
        fraction: if n_samples == 0 {
            1.0
        } else {
            feasible as f64 / n_samples as f64
        },
        failures,
    })
}
