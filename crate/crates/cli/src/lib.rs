//! `dnmg` commands: partition, simulate, check and report. Every command
//! writes a self-describing document carrying the schema version, tool
//! version, a digest of its inputs and configuration, and the seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use dnmg::lindistflow::Fidelity;
use dnmg::mfrt::{
    run_episode, ControllerConfig, EpisodeSchedule, LoadEvent, Period, TrajectoryLog,
};
use dnmg::netmodel::{Network, PHASE_NAMES};
use dnmg::rpop::{
    cutting_plane, robust_feasibility_sample, verify_topology_under, MasterSolution, RpopConfig,
    RpopError,
};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::NotConverged(_) => 2,
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl Fn(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

#[derive(Debug, Parser)]
#[command(
    name = "dnmg",
    version,
    about = "Robust partitioning and real-time operation of networked microgrids"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the robust cutting-plane partitioning.
    Partition(PartitionArgs),
    /// Run a real-time control episode on partitioned topologies.
    Simulate(SimulateArgs),
    /// Sample random loads and check a partition's feasibility.
    Check(CheckArgs),
    /// Split a trajectory into per-component series files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct NetworkArgs {
    /// Network file (JSON).
    pub network: PathBuf,
    /// Cluster override: JSON object mapping cluster id to load ids.
    #[arg(long)]
    pub clusters: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[arg(long)]
    pub uncertainty: Option<f64>,
    /// `block:<id>`, `switch:<id>` or `substation`; repeatable.
    #[arg(long)]
    pub contingency: Vec<String>,
    /// Solver configuration overrides (JSON, partial).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    /// Schedule document (JSON).
    #[arg(long)]
    pub schedule: PathBuf,
    /// Partition result used by periods that do not name their own.
    #[arg(long)]
    pub result: Option<PathBuf>,
    /// Controller configuration overrides (JSON, partial).
    #[arg(long)]
    pub controller: Option<PathBuf>,
    #[arg(long, value_parser = parse_fidelity)]
    pub fidelity: Option<Fidelity>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Trajectory CSV; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary document; `<out>.summary.json` when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub net: NetworkArgs,
    #[arg(long)]
    pub result: PathBuf,
    /// Sampling level; the partition's level when absent.
    #[arg(long)]
    pub uncertainty: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Restrict to one fidelity; both when absent.
    #[arg(long, value_parser = parse_fidelity)]
    pub fidelity: Option<Fidelity>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Trajectory CSV written by `simulate`.
    pub trajectory: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_fidelity(s: &str) -> Result<Fidelity, String> {
    s.parse::<Fidelity>().map_err(|e| e.to_string())
}

/// Envelope shared by every output document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub config_digest: String,
    /// SHA-256 of each input file.
    pub inputs: BTreeMap<String, String>,
    pub config: Value,
    pub result: Value,
}

impl Document {
    fn new(
        command: &str,
        seed: u64,
        inputs: BTreeMap<String, String>,
        config: Value,
        result: Value,
    ) -> Self {
        let digest = sha256_hex(
            &serde_json::to_vec(&json!({
                "command": command,
                "seed": seed,
                "inputs": inputs,
                "config": config,
            }))
            .expect("json"),
        );
        Document {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION.to_string(),
            command: command.to_string(),
            seed,
            config_digest: digest,
            inputs,
            config,
            result,
        }
    }

    fn read(path: &Path) -> Result<(Document, String), CliError> {
        let text = fs::read_to_string(path).map_err(input(&path.display().to_string()))?;
        let doc: Document =
            serde_json::from_str(&text).map_err(input(&path.display().to_string()))?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(CliError::Input(format!(
                "{}: schema version {} is not supported (expected {SCHEMA_VERSION})",
                path.display(),
                doc.schema_version
            )));
        }
        Ok((doc, sha256_hex(text.as_bytes())))
    }

    fn to_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("json");
        s.push('\n');
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(input(&p.display().to_string())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_network(
    args: &NetworkArgs,
    inputs: &mut BTreeMap<String, String>,
) -> Result<Network, CliError> {
    let path = args.network.display().to_string();
    let text = fs::read_to_string(&args.network).map_err(input(&path))?;
    inputs.insert("network".into(), sha256_hex(text.as_bytes()));
    let net = Network::from_json(&text).map_err(input(&path))?;
    match &args.clusters {
        None => Ok(net),
        Some(p) => {
            let ctx = p.display().to_string();
            let text = fs::read_to_string(p).map_err(input(&ctx))?;
            inputs.insert("clusters".into(), sha256_hex(text.as_bytes()));
            let map: BTreeMap<String, Vec<String>> =
                serde_json::from_str(&text).map_err(input(&ctx))?;
            net.with_clusters(&map).map_err(input(&ctx))
        }
    }
}

/// Overlays a partial JSON object on the serialized defaults.
fn merged<T: Serialize + for<'de> Deserialize<'de>>(
    base: &T,
    path: Option<&Path>,
) -> Result<T, CliError> {
    let Some(path) = path else {
        return serde_json::from_value(serde_json::to_value(base).expect("json"))
            .map_err(input("config"));
    };
    let ctx = path.display().to_string();
    let text = fs::read_to_string(path).map_err(input(&ctx))?;
    let over: Value = serde_json::from_str(&text).map_err(input(&ctx))?;
    let mut v = serde_json::to_value(base).expect("json");
    match (v.as_object_mut(), over.as_object()) {
        (Some(dst), Some(src)) => {
            for (k, x) in src {
                if !dst.contains_key(k) {
                    return Err(CliError::Input(format!("{ctx}: unknown key `{k}`")));
                }
                dst.insert(k.clone(), x.clone());
            }
        }
        _ => return Err(CliError::Input(format!("{ctx}: expected a JSON object"))),
    }
    serde_json::from_value(v).map_err(input(&ctx))
}

fn rpop_exit(e: RpopError) -> CliError {
    match e {
        RpopError::Contingency(_) | RpopError::Config(_) | RpopError::Scenario(_) => {
            CliError::Input(e.to_string())
        }
        _ => CliError::NotConverged(e.to_string()),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = cli.jobs {
            if n == 0 {
                return Err(CliError::Input("--jobs must be at least 1".into()));
            }
            b = b.num_threads(n);
        }
        b.build().map_err(input("thread pool"))?
    };
    pool.install(|| match &cli.command {
        Command::Partition(a) => cmd_partition(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Check(a) => cmd_check(a),
        Command::Report(a) => cmd_report(a),
    })
}

pub fn cmd_partition(a: &PartitionArgs) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    let net = load_network(&a.net, &mut inputs)?;
    let mut config: RpopConfig = merged(&RpopConfig::default(), a.config.as_deref())?;
    if let Some(x) = a.uncertainty {
        if !(0.0..1.0).contains(&x) {
            return Err(CliError::Input(format!("--uncertainty {x} outside [0, 1)")));
        }
        config.uncertainty = Some(x);
    }
    for item in &a.contingency {
        config
            .contingency
            .parse_item(&net, item)
            .map_err(rpop_exit)?;
    }
    let res = cutting_plane(&net, &config).map_err(rpop_exit)?;
    eprintln!(
        "partition: {} after {} iterations, objective {:.6} ({:.2} s)",
        if res.converged {
            "converged"
        } else {
            "not converged"
        },
        res.iterations.len(),
        res.objective,
        res.elapsed_s
    );

    let mut result = serde_json::to_value(&res).expect("json");
    result.as_object_mut().expect("object").remove("elapsed_s");
    let violations: Vec<String> = verify_topology_under(&net, &res.solution, &config.contingency)
        .iter()
        .map(|v| v.to_string())
        .collect();
    result["violations"] = json!(violations);
    result["level"] = json!(config.uncertainty.or(net.uncertainty).unwrap_or(0.0));
    let doc = Document::new(
        "partition",
        a.seed,
        inputs,
        serde_json::to_value(&config).expect("json"),
        result,
    );
    write_or_print(a.out.as_deref(), &doc.to_pretty())?;
    if res.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged(format!(
            "no convergence within {} iterations",
            config.max_iterations
        )))
    }
}

/// Solution, solver configuration and level stored in a partition document.
fn partition_of(
    doc: &Document,
    path: &Path,
) -> Result<(MasterSolution, RpopConfig, f64), CliError> {
    let ctx = path.display().to_string();
    if doc.command != "partition" {
        return Err(CliError::Input(format!("{ctx}: not a partition result")));
    }
    let sol: MasterSolution =
        serde_json::from_value(doc.result["solution"].clone()).map_err(input(&ctx))?;
    let config: RpopConfig = serde_json::from_value(doc.config.clone()).map_err(input(&ctx))?;
    let level = doc.result["level"].as_f64().unwrap_or(0.0);
    Ok((sol, config, level))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleDoc {
    periods: Vec<PeriodDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PeriodDoc {
    steps: usize,
    /// Partition result, relative to the schedule file.
    result: Option<PathBuf>,
    #[serde(default = "one")]
    load_scale: f64,
    #[serde(default)]
    events: Vec<LoadEvent>,
}

fn one() -> f64 {
    1.0
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    let net = load_network(&a.net, &mut inputs)?;
    let ctx = a.schedule.display().to_string();
    let text = fs::read_to_string(&a.schedule).map_err(input(&ctx))?;
    inputs.insert("schedule".into(), sha256_hex(text.as_bytes()));
    let sdoc: ScheduleDoc = serde_json::from_str(&text).map_err(input(&ctx))?;
    if sdoc.periods.is_empty() {
        return Err(CliError::Input(format!("{ctx}: schedule has no periods")));
    }
    let base = a.schedule.parent().unwrap_or(Path::new("."));
    let mut periods = Vec::with_capacity(sdoc.periods.len());
    for (k, p) in sdoc.periods.into_iter().enumerate() {
        let path = match (&p.result, &a.result) {
            (Some(r), _) => base.join(r),
            (None, Some(r)) => r.clone(),
            (None, None) => {
                return Err(CliError::Input(format!(
                    "{ctx}: period {} names no result and --result is absent",
                    k + 1
                )))
            }
        };
        let (doc, digest) = Document::read(&path)?;
        inputs.insert(format!("result:{}", k + 1), digest);
        let (solution, config, _) = partition_of(&doc, &path)?;
        periods.push(Period {
            steps: p.steps,
            solution,
            contingency: config.contingency,
            load_scale: p.load_scale,
            events: p.events,
        });
    }
    let schedule = EpisodeSchedule { periods };
    let mut cfg: ControllerConfig = merged(&ControllerConfig::default(), a.controller.as_deref())?;
    if let Some(f) = a.fidelity {
        cfg.fidelity = f;
    }
    cfg.validate().map_err(CliError::Input)?;
    let config = serde_json::to_value(&cfg).expect("json");
    let doc_stub = Document::new(
        "simulate",
        a.seed,
        inputs.clone(),
        config.clone(),
        Value::Null,
    );

    let log = run_episode(&net, &schedule, &cfg, a.seed).map_err(|e| match e {
        dnmg::mfrt::MfrtError::Plant(_) => CliError::NotConverged(e.to_string()),
        _ => CliError::Input(e.to_string()),
    })?;
    let csv = log.to_csv(&net).map_err(input("trajectory"))?;
    let header = format!(
        "# dnmg tool_version={TOOL_VERSION} schema_version={SCHEMA_VERSION} seed={} config_digest={}\n",
        a.seed, doc_stub.config_digest
    );
    write_or_print(a.out.as_deref(), &(header + &csv))?;

    let summary = Document::new(
        "simulate",
        a.seed,
        inputs,
        config,
        summarize(&net, &schedule, &log),
    );
    let spath = a.summary.clone().or_else(|| {
        a.out.as_ref().map(|o| {
            let mut s = o.as_os_str().to_owned();
            s.push(".summary.json");
            PathBuf::from(s)
        })
    });
    match spath {
        Some(p) => fs::write(&p, summary.to_pretty()).map_err(input(&p.display().to_string()))?,
        None => eprint!("{}", summary.to_pretty()),
    }
    Ok(())
}

fn summarize(net: &Network, schedule: &EpisodeSchedule, log: &TrajectoryLog) -> Value {
    let starts = schedule.starts();
    let mut topologies = Vec::new();
    for (k, p) in schedule.periods.iter().enumerate() {
        let ccs: Vec<String> = log
            .records
            .iter()
            .filter(|r| r.period == k + 1)
            .flat_map(|r| r.ccs.iter().map(|c| c.id.clone()))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let closed: Vec<&str> = p
            .solution
            .switches
            .iter()
            .enumerate()
            .filter(|(_, c)| **c)
            .map(|(s, _)| net.switches[s].id.as_str())
            .collect();
        topologies.push(json!({
            "period": k + 1,
            "first_step": starts[k],
            "steps": p.steps,
            "closed_switches": closed,
            "ccs": ccs,
        }));
    }
    // Last record of every (period, component).
    let mut last: BTreeMap<(usize, String), Value> = BTreeMap::new();
    for r in &log.records {
        for c in &r.ccs {
            let err = c
                .phases
                .iter()
                .map(|a| (c.slack_p[a] - c.reference_p[a]).abs())
                .fold(0.0, f64::max);
            last.insert(
                (r.period, c.id.clone()),
                json!({"period": r.period, "cc": c.id, "step": r.step, "tracking_error": err, "objective": c.objective}),
            );
        }
    }
    let max_violation = log
        .records
        .iter()
        .filter(|r| r.plant_ok)
        .map(|r| r.max_violation)
        .fold(f64::NEG_INFINITY, f64::max);
    json!({
        "steps": log.records.len(),
        "periods": schedule.periods.len(),
        "topology_swaps": schedule.periods.len(),
        "topologies": topologies,
        "plant_failures": log.records.iter().filter(|r| !r.plant_ok).count(),
        "max_violation": if max_violation.is_finite() { json!(max_violation) } else { Value::Null },
        "final": last.into_values().collect::<Vec<_>>(),
    })
}

pub fn cmd_check(a: &CheckArgs) -> Result<(), CliError> {
    let mut inputs = BTreeMap::new();
    let net = load_network(&a.net, &mut inputs)?;
    let (doc, digest) = Document::read(&a.result)?;
    inputs.insert("result".into(), digest);
    let (sol, config, own_level) = partition_of(&doc, &a.result)?;
    let level = a.uncertainty.unwrap_or(own_level);
    let fidelities = match a.fidelity {
        Some(f) => vec![f],
        None => vec![Fidelity::Linear, Fidelity::Ac],
    };
    let mut reports = Vec::new();
    for &f in &fidelities {
        for clustered in [true, false] {
            let r = robust_feasibility_sample(
                &net, &sol, level, clustered, a.samples, a.seed, f, &config,
            )
            .map_err(rpop_exit)?;
            eprintln!(
                "check: {} {} {}/{} feasible",
                serde_json::to_value(f)
                    .expect("json")
                    .as_str()
                    .unwrap_or(""),
                if clustered {
                    "clustered"
                } else {
                    "independent"
                },
                r.feasible,
                r.samples
            );
            reports.push(r);
        }
    }
    let cfg = json!({
        "level": level,
        "samples": a.samples,
        "fidelities": fidelities,
        "solver": doc.config,
    });
    let out = Document::new("check", a.seed, inputs, cfg, json!({ "reports": reports }));
    write_or_print(a.out.as_deref(), &out.to_pretty())
}

const REQUIRED: [&str; 10] = [
    "step",
    "period",
    "cc_id",
    "phase",
    "slack_p",
    "reference_p",
    "load_p",
    "min_v",
    "max_v",
    "objective",
];

#[derive(Default)]
struct Series {
    /// step -> (period, per-phase load, slack, reference, injections)
    rows: BTreeMap<
        usize,
        (
            usize,
            [Option<f64>; 3],
            [Option<(f64, f64)>; 3],
            Vec<String>,
        ),
    >,
}

pub fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    let ctx = a.trajectory.display().to_string();
    let text = fs::read_to_string(&a.trajectory).map_err(input(&ctx))?;
    let seed = text
        .lines()
        .next()
        .filter(|l| l.starts_with('#'))
        .and_then(|l| l.split_whitespace().find_map(|w| w.strip_prefix("seed=")))
        .and_then(|s| s.parse::<u64>().ok());
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(input(&ctx))?
        .iter()
        .map(String::from)
        .collect();
    let col = |name: &str| header.iter().position(|h| h == name);
    let mut idx = BTreeMap::new();
    for name in REQUIRED {
        let i =
            col(name).ok_or_else(|| CliError::Input(format!("{ctx}: missing column `{name}`")))?;
        idx.insert(name, i);
    }
    let inj: Vec<usize> = (0..header.len())
        .filter(|&i| header[i].starts_with("p_") || header[i].starts_with("q_"))
        .collect();
    let num = |rec: &csv::StringRecord, name: &str, line: usize| -> Result<f64, CliError> {
        rec[idx[name]]
            .parse::<f64>()
            .map_err(|e| CliError::Input(format!("{ctx}: row {line}, column `{name}`: {e}")))
    };

    let mut series: BTreeMap<String, Series> = BTreeMap::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(input(&ctx))?;
        let step = num(&rec, "step", line)? as usize;
        let period = num(&rec, "period", line)? as usize;
        let phase = PHASE_NAMES
            .iter()
            .position(|p| *p == &rec[idx["phase"]])
            .ok_or_else(|| {
                CliError::Input(format!(
                    "{ctx}: row {line}: bad phase `{}`",
                    &rec[idx["phase"]]
                ))
            })?;
        let s = series.entry(rec[idx["cc_id"]].to_string()).or_default();
        let row = s.rows.entry(step).or_insert_with(|| {
            (
                period,
                [None; 3],
                [None; 3],
                inj.iter().map(|&i| rec[i].to_string()).collect(),
            )
        });
        row.1[phase] = Some(num(&rec, "load_p", line)?);
        row.2[phase] = Some((num(&rec, "slack_p", line)?, num(&rec, "reference_p", line)?));
    }

    fs::create_dir_all(&a.out).map_err(input(&a.out.display().to_string()))?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut files = Vec::new();
    for (cc, s) in &series {
        let mut load = csv::Writer::from_writer(Vec::new());
        let mut slack = csv::Writer::from_writer(Vec::new());
        let mut injections = csv::Writer::from_writer(Vec::new());
        let w = |e: csv::Error| CliError::Input(format!("report: {e}"));
        load.write_record(["step", "period", "load_a", "load_b", "load_c"])
            .map_err(w)?;
        slack
            .write_record([
                "step",
                "period",
                "slack_a",
                "slack_b",
                "slack_c",
                "reference_a",
                "reference_b",
                "reference_c",
            ])
            .map_err(w)?;
        let mut ih = vec!["step".to_string(), "period".to_string()];
        ih.extend(inj.iter().map(|&i| header[i].clone()));
        injections.write_record(&ih).map_err(w)?;
        for (step, (period, l, sl, inj_vals)) in &s.rows {
            let mut r = vec![step.to_string(), period.to_string()];
            r.extend(l.iter().map(|v| opt(*v)));
            load.write_record(&r).map_err(w)?;
            let mut r = vec![step.to_string(), period.to_string()];
            r.extend(sl.iter().map(|v| opt(v.map(|x| x.0))));
            r.extend(sl.iter().map(|v| opt(v.map(|x| x.1))));
            slack.write_record(&r).map_err(w)?;
            let mut r = vec![step.to_string(), period.to_string()];
            r.extend(inj_vals.iter().cloned());
            injections.write_record(&r).map_err(w)?;
        }
        for (kind, wr) in [("load", load), ("slack", slack), ("injections", injections)] {
            let name = format!("{cc}_{kind}.csv");
            let bytes = wr
                .into_inner()
                .map_err(|e| CliError::Input(format!("report: {e}")))?;
            fs::write(a.out.join(&name), bytes).map_err(input(&name))?;
            files.push(json!({"cc": cc, "series": kind, "file": name, "rows": s.rows.len()}));
        }
    }
    let mut inputs = BTreeMap::new();
    inputs.insert("trajectory".to_string(), sha256_hex(text.as_bytes()));
    let doc = Document::new(
        "report",
        seed.unwrap_or(0),
        inputs,
        json!({}),
        json!({ "files": files }),
    );
    fs::write(a.out.join("report.json"), doc.to_pretty()).map_err(input("report.json"))
}

/// Parses `args` (without the program name) and runs the command; returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
