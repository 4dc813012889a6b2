//! CPLEX LP text export, mainly for debugging with external solvers.

use std::fmt::Write;

use crate::model::{ModelIR, Sense};

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "_.[]".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn term(out: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else if first {
        let _ = write!(out, " {coef} {name}");
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

pub fn to_lp_string(model: &ModelIR) -> String {
    let names: Vec<String> = model
        .vars()
        .iter()
        .enumerate()
        .map(|(j, v)| format!("x{j}_{}", sanitize(&v.name)))
        .collect();
    let mut out = String::from("Minimize\n obj:");
    let mut first = true;
    for (j, v) in model.vars().iter().enumerate() {
        if v.cost != 0.0 {
            term(&mut out, v.cost, &names[j], first);
            first = false;
        }
    }
    if model.objective_offset() != 0.0 || first {
        let c = model.objective_offset();
        if c < 0.0 {
            let _ = write!(out, " - {}", -c);
        } else {
            let _ = write!(out, " + {c}");
        }
    }
    out.push_str("\nSubject To\n");
    for (i, r) in model.rows().iter().enumerate() {
        let _ = write!(out, " r{i}_{}:", sanitize(&r.tag));
        if r.coefs.is_empty() {
            out.push_str(" 0 ");
            out.push_str(names.first().map_or("x0", String::as_str));
        }
        for (k, (v, c)) in r.coefs.iter().enumerate() {
            term(&mut out, *c, &names[v.0], k == 0);
        }
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", r.rhs);
    }
    out.push_str("Bounds\n");
    for (j, v) in model.vars().iter().enumerate() {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (true, true) => {
                let _ = writeln!(out, " {} <= {} <= {}", v.lower, names[j], v.upper);
            }
            (true, false) => {
                let _ = writeln!(out, " {} >= {}", names[j], v.lower);
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {} <= {}", names[j], v.upper);
            }
            (false, false) => {
                let _ = writeln!(out, " {} free", names[j]);
            }
        }
    }
    let ints: Vec<&str> = model
        .vars()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.integer)
        .map(|(j, _)| names[j].as_str())
        .collect();
    if !ints.is_empty() {
        out.push_str("General\n");
        for n in ints {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}
