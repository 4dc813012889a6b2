//! Primal-dual building blocks: exploration, masks, constraint vector,
//! two-point gradient estimate and projected updates.

use serde::{Deserialize, Serialize};

use crate::lindistflow::Fidelity;

/// Sign of the constraint term in the dual update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualSign {
    /// `λ ← Proj{(1-αδ)λ - α ν⊙g}`
    AsPrinted,
    /// `λ ← Proj{(1-αδ)λ + α ν⊙g}`
    Ascent,
}

/// Normalization of the two-point estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientScale {
    /// `ξ/(2ε) · Δ`
    AsPrinted,
    /// `ξ/(2ε²) · Δ`, so that the estimate has the magnitude of the gradient.
    Normalized,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerConfig {
    /// Exploration amplitude (per unit).
    pub epsilon: f64,
    /// Base exploration frequency (rad/step).
    pub base_omega: f64,
    pub alpha: f64,
    pub rho: f64,
    pub delta: f64,
    pub lambda_max: f64,
    pub dual_sign: DualSign,
    pub gradient_scale: GradientScale,
    pub fidelity: Fidelity,
    /// Standard deviation of additive measurement noise; 0 disables it.
    pub noise_std: f64,
    /// Voltage bound overrides; bus limits otherwise.
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            base_omega: 0.4 * std::f64::consts::PI,
            alpha: 0.05,
            rho: 1e-3,
            delta: 1e-3,
            lambda_max: 100.0,
            dual_sign: DualSign::AsPrinted,
            gradient_scale: GradientScale::Normalized,
            fidelity: Fidelity::Linear,
            noise_std: 0.0,
            v_min: None,
            v_max: None,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<(), String> {
        let pos = [
            ("epsilon", self.epsilon),
            ("alpha", self.alpha),
            ("rho", self.rho),
            ("delta", self.delta),
            ("base_omega", self.base_omega),
            ("lambda_max", self.lambda_max),
        ];
        for (name, v) in pos {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.noise_std < 0.0 {
            return Err("noise_std must be >= 0".into());
        }
        Ok(())
    }
}

/// `ω_n = base (1 + n/N)` over `n = 0..N`.
pub fn assign_frequencies(n: usize, base: f64) -> Vec<f64> {
    (0..n).map(|i| base * (1.0 + i as f64 / n as f64)).collect()
}

/// `ξ_n(t) = ε cos(ω_n t)`
pub fn exploration_vector(t: f64, omega: &[f64], epsilon: f64) -> Vec<f64> {
    omega.iter().map(|w| epsilon * (w * t).cos()).collect()
}

/// Stacked `[v - v̄; v̲ - v]`.
pub fn constraint_g(v: &[f64], v_min: &[f64], v_max: &[f64]) -> Vec<f64> {
    let mut g: Vec<f64> = v.iter().zip(v_max).map(|(v, hi)| v - hi).collect();
    g.extend(v.iter().zip(v_min).map(|(v, lo)| lo - v));
    g
}

/// One 0/1 mask over the stacked constraint vector per component, from the
/// component index of each node.
pub fn cc_masks(node_cc: &[usize], num_ccs: usize) -> Vec<Vec<f64>> {
    (0..num_ccs)
        .map(|m| {
            let half: Vec<f64> = node_cc
                .iter()
                .map(|&c| if c == m { 1.0 } else { 0.0 })
                .collect();
            let mut nu = half.clone();
            nu.extend(half);
            nu
        })
        .collect()
}

/// Two-point estimate for one component. `xi` is the exploration restricted
/// to the component's controllable entries (zero elsewhere).
#[allow(clippy::too_many_arguments)]
pub fn approx_gradient(
    f_plus: f64,
    f_minus: f64,
    g_plus: &[f64],
    g_minus: &[f64],
    xi: &[f64],
    lambda: &[f64],
    nu: &[f64],
    epsilon: f64,
    scale: GradientScale,
) -> Vec<f64> {
    let penalty: f64 = (0..lambda.len())
        .map(|i| lambda[i] * nu[i] * (g_plus[i] - g_minus[i]))
        .sum();
    let k = match scale {
        GradientScale::AsPrinted => 1.0 / (2.0 * epsilon),
        GradientScale::Normalized => 1.0 / (2.0 * epsilon * epsilon),
    };
    let diff = f_plus - f_minus + penalty;
    xi.iter().map(|x| k * x * diff).collect()
}

/// `s ← clamp((1-αρ)s - α grad, lo, hi)`
pub fn primal_step(s: &mut [f64], grad: &[f64], lo: &[f64], hi: &[f64], alpha: f64, rho: f64) {
    for i in 0..s.len() {
        s[i] = ((1.0 - alpha * rho) * s[i] - alpha * grad[i]).clamp(lo[i], hi[i]);
    }
}

/// `λ ← clamp((1-αδ)λ ∓ α ν⊙g, 0, λ̄)`
pub fn dual_step(lambda: &mut [f64], g_mid: &[f64], nu: &[f64], config: &ControllerConfig) {
    let sign = match config.dual_sign {
        DualSign::AsPrinted => -1.0,
        DualSign::Ascent => 1.0,
    };
    for i in 0..lambda.len() {
        let v = (1.0 - config.alpha * config.delta) * lambda[i]
            + sign * config.alpha * nu[i] * g_mid[i];
        lambda[i] = v.clamp(0.0, config.lambda_max);
    }
}
