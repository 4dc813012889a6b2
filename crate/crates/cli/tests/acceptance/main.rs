//! Acceptance suite: one pass/fail line per criterion.

mod brute;
mod cuts;
mod determinism;
mod family;
mod fidelity;
mod mfrt;
mod robust;
mod solver;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

type Outcome = Result<String, String>;

fn run(n: usize, name: &str, f: fn() -> Outcome) -> bool {
    let t0 = Instant::now();
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let secs = t0.elapsed().as_secs_f64();
    match &out {
        Ok(d) => println!("criterion {n}: PASS {name}: {d} [{secs:.1}s]"),
        Err(d) => println!("criterion {n}: FAIL {name}: {d} [{secs:.1}s]"),
    }
    out.is_ok()
}

fn main() {
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let all: [(usize, &str, fn() -> Outcome); 11] = [
        (1, "brute-force equivalence", brute::criterion),
        (2, "robust feasibility", robust::feasibility),
        (3, "non-robust degradation", robust::degradation),
        (4, "monotone robustness cost", robust::monotone),
        (5, "topology invariants", family::criterion),
        (6, "cut correctness", cuts::criterion),
        (7, "linear flow fidelity", fidelity::criterion),
        (8, "load-step response", mfrt::load_step),
        (9, "stationarity oracle", mfrt::stationarity),
        (10, "determinism", determinism::criterion),
        (11, "solver soundness", solver::criterion),
    ];
    let mut failed = 0;
    for (n, name, f) in all {
        if only.is_some_and(|k| k != n) {
            continue;
        }
        if !run(n, name, f) {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
