//! LP duality certificates and MILP enumeration on random instances.

use dnmg::optcore::{
    solve_lp, solve_milp, LpOptions, MilpOptions, ModelIR, Sense, SolveResult, VarId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::Outcome;

const TOL: f64 = 1e-8;

struct Lp {
    cost: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
}

/// Rows are built around an interior point so every instance is feasible,
/// and boxes keep it bounded.
fn random_lp(rng: &mut ChaCha8Rng) -> Lp {
    let n = rng.random_range(3..=12);
    let m = rng.random_range(2..=10);
    let lo: Vec<f64> = (0..n).map(|_| rng.random_range(-4..=0) as f64).collect();
    let up: Vec<f64> = lo
        .iter()
        .map(|l| l + rng.random_range(1..=6) as f64)
        .collect();
    let x0: Vec<f64> = (0..n)
        .map(|j| lo[j] + (up[j] - lo[j]) * rng.random_range(0.2..0.8))
        .collect();
    let mut rows = Vec::new();
    for _ in 0..m {
        let a: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random_bool(0.6) {
                    rng.random_range(-5..=5) as f64
                } else {
                    0.0
                }
            })
            .collect();
        let ax: f64 = a.iter().zip(&x0).map(|(p, q)| p * q).sum();
        let (sense, rhs) = match rng.random_range(0..4) {
            0 => (Sense::Eq, ax),
            1 => (Sense::Ge, ax - rng.random_range(0.0..2.0)),
            _ => (Sense::Le, ax + rng.random_range(0.0..2.0)),
        };
        rows.push((a, sense, rhs));
    }
    Lp {
        cost: (0..n).map(|_| rng.random_range(-10.0..10.0)).collect(),
        lo,
        up,
        rows,
    }
}

fn model(lp: &Lp, integer: &[bool]) -> ModelIR {
    let mut m = ModelIR::new();
    let v: Vec<VarId> = (0..lp.cost.len())
        .map(|j| {
            let id = if integer[j] {
                m.add_integer(format!("x{j}"), lp.lo[j], lp.up[j])
            } else {
                m.add_var(format!("x{j}"), lp.lo[j], lp.up[j])
            };
            m.set_cost(id, lp.cost[j]);
            id
        })
        .collect();
    for (i, (a, s, b)) in lp.rows.iter().enumerate() {
        let coefs = a
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (v[j], *c));
        m.add_row(format!("r{i}"), coefs, *s, *b).unwrap();
    }
    m
}

/// Worst residual among primal feasibility, dual sign, complementary
/// slackness and the primal-dual objective gap, with reduced costs recomputed
/// from the row duals.
fn certificate(lp: &Lp, r: &SolveResult) -> f64 {
    let n = lp.cost.len();
    let x = &r.x;
    let mut worst = 0.0f64;
    let mut d = lp.cost.clone();
    let mut dual_obj = 0.0;
    for (i, (a, s, b)) in lp.rows.iter().enumerate() {
        let y = r.duals[i];
        let act: f64 = a.iter().zip(x).map(|(p, q)| p * q).sum();
        let (viol, sign) = match s {
            Sense::Le => (act - b, y),
            Sense::Ge => (b - act, -y),
            Sense::Eq => ((act - b).abs(), 0.0),
        };
        worst = worst.max(viol).max(sign).max((y * (act - b)).abs());
        dual_obj += y * b;
        for j in 0..n {
            d[j] -= y * a[j];
        }
    }
    for j in 0..n {
        worst = worst.max(lp.lo[j] - x[j]).max(x[j] - lp.up[j]);
        // d_j > 0 only at the lower bound, d_j < 0 only at the upper bound.
        worst = worst.max((d[j].max(0.0) * (x[j] - lp.lo[j])).abs());
        worst = worst.max((d[j].min(0.0) * (lp.up[j] - x[j])).abs());
        dual_obj += if d[j] > 0.0 {
            d[j] * lp.lo[j]
        } else {
            d[j] * lp.up[j]
        };
    }
    worst.max((r.objective - dual_obj).abs() / (1.0 + r.objective.abs()))
}

/// Best objective over every integer point of the box, or None if none is feasible.
fn enumerate(lp: &Lp) -> Option<f64> {
    let n = lp.cost.len();
    let mut x: Vec<f64> = lp.lo.clone();
    let mut best: Option<f64> = None;
    loop {
        let ok = lp.rows.iter().all(|(a, s, b)| {
            let v: f64 = a.iter().zip(&x).map(|(p, q)| p * q).sum();
            match s {
                Sense::Le => v <= b + 1e-9,
                Sense::Ge => v >= b - 1e-9,
                Sense::Eq => (v - b).abs() <= 1e-9,
            }
        });
        if ok {
            let v: f64 = lp.cost.iter().zip(&x).map(|(c, y)| c * y).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        let mut j = 0;
        while j < n {
            x[j] += 1.0;
            if x[j] <= lp.up[j] {
                break;
            }
            x[j] = lp.lo[j];
            j += 1;
        }
        if j == n {
            return best;
        }
    }
}

fn random_milp(rng: &mut ChaCha8Rng, binary: bool) -> Lp {
    let n = if binary {
        rng.random_range(4..=12)
    } else {
        rng.random_range(3..=6)
    };
    let m = rng.random_range(1..=6);
    let up: Vec<f64> = (0..n)
        .map(|_| {
            if binary {
                1.0
            } else {
                rng.random_range(1..=3) as f64
            }
        })
        .collect();
    let rows = (0..m)
        .map(|_| {
            let a: Vec<f64> = (0..n)
                .map(|_| {
                    if rng.random_bool(0.7) {
                        rng.random_range(-6..=9) as f64
                    } else {
                        0.0
                    }
                })
                .collect();
            let s = match rng.random_range(0..5) {
                0 => Sense::Ge,
                1 => Sense::Eq,
                _ => Sense::Le,
            };
            let total: f64 = a.iter().map(|c| c.abs()).sum();
            (a, s, (rng.random_range(-0.1..0.6) * total).round())
        })
        .collect();
    Lp {
        cost: (0..n).map(|_| rng.random_range(-10..=10) as f64).collect(),
        lo: vec![0.0; n],
        up,
        rows,
    }
}

pub fn criterion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for k in 0..500 {
        let lp = random_lp(&mut rng);
        let r = solve_lp(
            &model(&lp, &vec![false; lp.cost.len()]),
            &LpOptions::default(),
        );
        if !r.is_optimal() {
            return Err(format!("LP {k}: status {}", r.status));
        }
        worst = worst.max(certificate(&lp, &r));
    }

    let mut mismatches = Vec::new();
    let mut infeasible = 0;
    for k in 0..100 {
        let lp = random_milp(&mut rng, k < 80);
        let r = solve_milp(
            &model(&lp, &vec![true; lp.cost.len()]),
            &MilpOptions::default(),
        );
        match enumerate(&lp) {
            None => {
                infeasible += 1;
                if r.is_optimal() {
                    mismatches.push(format!("MILP {k}: solver optimal, enumeration infeasible"));
                }
            }
            Some(v) => {
                if !r.is_optimal() || (r.objective - v).abs() > 1e-6 {
                    mismatches.push(format!("MILP {k}: {} {} vs {v}", r.status, r.objective));
                }
            }
        }
    }
    let detail = format!(
        "500 LPs worst KKT/duality residual {worst:.1e}; 100 MILPs ({infeasible} infeasible) {} mismatches",
        mismatches.len()
    );
    if worst <= TOL && mismatches.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}: {}", mismatches.join("; ")))
    }
}
