//! Load uncertainty: per-load boxes, clustered extremes and random samples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Network, PerPhase};

pub const DEFAULT_SCENARIO_CAP: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error(
        "{clusters} load clusters give 2^{clusters} extreme scenarios; the cap is {cap} clusters"
    )]
    TooManyClusters { clusters: usize, cap: usize },
    #[error("uncertainty level must be finite and nonnegative, got {0}")]
    BadLevel(f64),
}

/// One realization of every load, indexed like `Network::loads`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVector {
    pub p: Vec<PerPhase>,
    pub q: Vec<PerPhase>,
    /// `ζ⁺` per cluster (network cluster order) for extreme scenarios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta_plus: Option<Vec<bool>>,
}

impl ScenarioVector {
    pub fn total_p(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// Every load scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> ScenarioVector {
        let s = |v: &Vec<PerPhase>| v.iter().map(|x| x.map(|y| y * factor)).collect();
        ScenarioVector {
            p: s(&self.p),
            q: s(&self.q),
            zeta_plus: None,
        }
    }
}

/// Box uncertainty set with clusters.
#[derive(Debug, Clone)]
pub struct UncertaintyModel {
    pub level: f64,
    pub p_nominal: Vec<PerPhase>,
    pub q_nominal: Vec<PerPhase>,
    /// `[p_lo, p_hi, q_lo, q_hi]` per load.
    pub bounds: Vec<[PerPhase; 4]>,
    pub load_cluster: Vec<usize>,
    /// Cluster indices sorted by cluster id.
    pub cluster_order: Vec<usize>,
}

impl UncertaintyModel {
    /// Bounds default to `s0 (1 ± x)`; explicit per-load bounds in the file win.
    /// With `level = None` the file's level (or zero) is used.
    pub fn new(net: &Network, level: Option<f64>) -> Result<Self, ScenarioError> {
        let x = level.or(net.uncertainty).unwrap_or(0.0);
        if !(x.is_finite() && x >= 0.0) {
            return Err(ScenarioError::BadLevel(x));
        }
        let bounds = net
            .loads
            .iter()
            .map(|l| {
                l.bounds.unwrap_or_else(|| {
                    let lo = |v: &PerPhase| v.map(|s| (s * (1.0 - x)).min(s * (1.0 + x)));
                    let hi = |v: &PerPhase| v.map(|s| (s * (1.0 - x)).max(s * (1.0 + x)));
                    [
                        lo(&l.p_nominal),
                        hi(&l.p_nominal),
                        lo(&l.q_nominal),
                        hi(&l.q_nominal),
                    ]
                })
            })
            .collect();
        let mut cluster_order: Vec<usize> = (0..net.clusters.len()).collect();
        cluster_order.sort_by(|&a, &b| net.clusters[a].id.cmp(&net.clusters[b].id));
        Ok(Self {
            level: x,
            p_nominal: net.loads.iter().map(|l| l.p_nominal).collect(),
            q_nominal: net.loads.iter().map(|l| l.q_nominal).collect(),
            bounds,
            load_cluster: net.loads.iter().map(|l| l.cluster).collect(),
            cluster_order,
        })
    }

    pub fn num_clusters(&self) -> usize {
        self.cluster_order.len()
    }

    pub fn nominal(&self) -> ScenarioVector {
        ScenarioVector {
            p: self.p_nominal.clone(),
            q: self.q_nominal.clone(),
            zeta_plus: None,
        }
    }

    /// Corner where cluster `c` sits at its maximum iff `zeta_plus[c]`.
    pub fn corner(&self, zeta_plus: &[bool]) -> ScenarioVector {
        let mut p = Vec::with_capacity(self.bounds.len());
        let mut q = Vec::with_capacity(self.bounds.len());
        for (d, b) in self.bounds.iter().enumerate() {
            let up = zeta_plus[self.load_cluster[d]];
            p.push(if up { b[1] } else { b[0] });
            q.push(if up { b[3] } else { b[2] });
        }
        ScenarioVector {
            p,
            q,
            zeta_plus: Some(zeta_plus.to_vec()),
        }
    }

    pub fn all_max(&self) -> ScenarioVector {
        self.corner(&vec![true; self.num_clusters()])
    }

    pub fn all_min(&self) -> ScenarioVector {
        self.corner(&vec![false; self.num_clusters()])
    }

    /// `k`-th extreme: bit `j` of `k` set means the `j`-th cluster (by id) is at max.
    pub fn extreme(&self, k: usize) -> ScenarioVector {
        let mut zeta = vec![false; self.num_clusters()];
        for (j, &c) in self.cluster_order.iter().enumerate() {
            zeta[c] = k >> j & 1 == 1;
        }
        self.corner(&zeta)
    }

    /// All `2^|Γ|` cluster-wise corners in binary counting order.
    pub fn extremes(&self, cap: usize) -> Result<Vec<ScenarioVector>, ScenarioError> {
        let n = self.num_clusters();
        if n > cap || n >= usize::BITS as usize {
            return Err(ScenarioError::TooManyClusters { clusters: n, cap });
        }
        Ok((0..1usize << n).map(|k| self.extreme(k)).collect())
    }

    /// Random draw `s = s0 (1 + u)`, `u ~ U[-x, x]`, one factor per load or
    /// one per cluster. Sample `index` uses its own stream of `seed`.
    pub fn sample(&self, x: f64, clustered: bool, seed: u64, index: u64) -> ScenarioVector {
        if x == 0.0 {
            return self.nominal();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let factors: Vec<f64> = if clustered {
            let mut per_cluster = vec![0.0; self.num_clusters()];
            for &c in &self.cluster_order {
                per_cluster[c] = rng.random_range(-x..=x);
            }
            self.load_cluster.iter().map(|&c| per_cluster[c]).collect()
        } else {
            (0..self.p_nominal.len())
                .map(|_| rng.random_range(-x..=x))
                .collect()
        };
        let apply = |v: &[PerPhase]| -> Vec<PerPhase> {
            v.iter()
                .zip(&factors)
                .map(|(s, u)| s.map(|y| y * (1.0 + u)))
                .collect()
        };
        ScenarioVector {
            p: apply(&self.p_nominal),
            q: apply(&self.q_nominal),
            zeta_plus: None,
        }
    }

    pub fn contains(&self, s: &ScenarioVector, tol: f64) -> bool {
        self.bounds.iter().enumerate().all(|(d, b)| {
            (0..3).all(|ph| {
                s.p[d][ph] >= b[0][ph] - tol
                    && s.p[d][ph] <= b[1][ph] + tol
                    && s.q[d][ph] >= b[2][ph] - tol
                    && s.q[d][ph] <= b[3][ph] + tol
            })
        })
    }
}
