//! Every command run twice with the same inputs must write identical bytes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use dnmg::fixtures::TOYBAY_JSON;
use serde_json::json;

use crate::Outcome;

fn dnmg(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_dnmg"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!(
            "dnmg {}: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ))
    }
}

fn same_file(a: &Path, b: &Path) -> Result<(), String> {
    let x = fs::read(a).map_err(|e| format!("{}: {e}", a.display()))?;
    let y = fs::read(b).map_err(|e| format!("{}: {e}", b.display()))?;
    if x == y {
        Ok(())
    } else {
        Err(format!("{} and {} differ", a.display(), b.display()))
    }
}

fn same_dir(a: &Path, b: &Path) -> Result<usize, String> {
    let list = |d: &Path| -> Result<Vec<String>, String> {
        let mut v: Vec<String> = fs::read_dir(d)
            .map_err(|e| e.to_string())?
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        v.sort();
        Ok(v)
    };
    let (la, lb) = (list(a)?, list(b)?);
    if la != lb {
        return Err(format!(
            "report directories list different files: {la:?} vs {lb:?}"
        ));
    }
    for f in &la {
        same_file(&a.join(f), &b.join(f))?;
    }
    Ok(la.len())
}

pub fn criterion() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = tmp.path();
    let p = |name: &str| -> PathBuf { d.join(name) };
    let s = |path: &PathBuf| path.to_string_lossy().into_owned();
    let net = p("toybay.json");
    fs::write(&net, TOYBAY_JSON).map_err(|e| e.to_string())?;

    // partition, the second time on a different thread count
    let (r1, r2) = (p("r1.json"), p("r2.json"));
    dnmg(&[
        "partition",
        &s(&net),
        "--uncertainty",
        "0.1",
        "--seed",
        "5",
        "--out",
        &s(&r1),
    ])?;
    dnmg(&[
        "--jobs",
        "2",
        "partition",
        &s(&net),
        "--uncertainty",
        "0.1",
        "--seed",
        "5",
        "--out",
        &s(&r2),
    ])?;
    same_file(&r1, &r2)?;

    let sched = p("schedule.json");
    let doc = json!({"periods": [
        {"steps": 15, "result": "r1.json", "events": [{"step": 5, "scope": "global", "factor": 1.1}]},
        {"steps": 15, "result": "r1.json", "load_scale": 0.9}
    ]});
    fs::write(&sched, doc.to_string()).map_err(|e| e.to_string())?;
    let (t1, t2) = (p("t1.csv"), p("t2.csv"));
    let (m1, m2) = (p("t1.summary.json"), p("t2.summary.json"));
    for (t, m) in [(&t1, &m1), (&t2, &m2)] {
        dnmg(&[
            "simulate",
            &s(&net),
            "--schedule",
            &s(&sched),
            "--seed",
            "3",
            "--out",
            &s(t),
            "--summary",
            &s(m),
        ])?;
    }
    same_file(&t1, &t2)?;
    same_file(&m1, &m2)?;

    let (c1, c2) = (p("c1.json"), p("c2.json"));
    dnmg(&[
        "check",
        &s(&net),
        "--result",
        &s(&r1),
        "--samples",
        "200",
        "--seed",
        "9",
        "--out",
        &s(&c1),
    ])?;
    dnmg(&[
        "--jobs",
        "1",
        "check",
        &s(&net),
        "--result",
        &s(&r1),
        "--samples",
        "200",
        "--seed",
        "9",
        "--out",
        &s(&c2),
    ])?;
    same_file(&c1, &c2)?;

    let (d1, d2) = (p("report1"), p("report2"));
    dnmg(&["report", &s(&t1), "--out", &s(&d1)])?;
    dnmg(&["report", &s(&t1), "--out", &s(&d2)])?;
    let files = same_dir(&d1, &d2)?;

    Ok(format!(
        "partition, simulate (trajectory and summary), check and report ({files} files) byte-identical across reruns"
    ))
}
