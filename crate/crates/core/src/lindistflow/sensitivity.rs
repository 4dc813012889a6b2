//! Linearized voltage-drop sensitivities of a three-phase segment.

use crate::netmodel::{LineSegment, PhaseSet};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `w_to = w_from - M_P p - M_Q q` with `p, q` measured at the sending end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VoltageSensitivity {
    pub mp: [[f64; 3]; 3],
    pub mq: [[f64; 3]; 3],
}

impl VoltageSensitivity {
    /// Voltage drop `M_P p + M_Q q` per phase.
    pub fn drop(&self, p: &[f64; 3], q: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate() {
            for b in 0..3 {
                *o += self.mp[a][b] * p[b] + self.mq[a][b] * q[b];
            }
        }
        out
    }
}

/// Builds `M_P = 2 Re(Γ ∘ Z*)` and `M_Q = -2 Im(Γ ∘ Z*)`, where `Γ` holds
/// the balanced voltage ratios `V_φ / V_ψ`.
pub fn voltage_sensitivity(line: &LineSegment) -> VoltageSensitivity {
    sensitivity_from(&line.r, &line.x, line.phases)
}

pub fn sensitivity_from(
    r: &[[f64; 3]; 3],
    x: &[[f64; 3]; 3],
    phases: PhaseSet,
) -> VoltageSensitivity {
    let mut mp = [[0.0; 3]; 3];
    let mut mq = [[0.0; 3]; 3];
    for a in phases.iter() {
        for b in phases.iter() {
            let (rr, xx) = (r[a][b], x[a][b]);
            if a == b {
                mp[a][b] = 2.0 * rr;
                mq[a][b] = 2.0 * xx;
            } else if (a + 1) % 3 == b {
                // (a,b), (b,c), (c,a)
                mp[a][b] = -rr + SQRT3 * xx;
                mq[a][b] = -xx - SQRT3 * rr;
            } else {
                mp[a][b] = -rr - SQRT3 * xx;
                mq[a][b] = -xx + SQRT3 * rr;
            }
        }
    }
    VoltageSensitivity { mp, mq }
}
