//! JSON document layout and the validating builder.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::blocks::compute_blocks;
use super::*;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub(crate) enum PerPhaseDoc {
    Scalar(f64),
    List(Vec<f64>),
}

impl PerPhaseDoc {
    fn expand(
        &self,
        phases: PhaseSet,
        kind: &'static str,
        id: &str,
        field: &str,
    ) -> Result<PerPhase, NetworkError> {
        let mut out = [0.0; 3];
        match self {
            PerPhaseDoc::Scalar(v) => {
                for p in phases.iter() {
                    out[p] = *v;
                }
            }
            PerPhaseDoc::List(v) if v.len() == phases.len() => {
                for (p, val) in phases.iter().zip(v) {
                    out[p] = *val;
                }
            }
            PerPhaseDoc::List(v) if v.len() == 3 => {
                for p in phases.iter() {
                    out[p] = v[p];
                }
            }
            PerPhaseDoc::List(v) => {
                return Err(NetworkError::Invalid {
                    kind,
                    id: id.to_string(),
                    msg: format!(
                        "`{field}` has {} entries for {} phases",
                        v.len(),
                        phases.len()
                    ),
                })
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(NetworkError::Invalid {
                kind,
                id: id.to_string(),
                msg: format!("`{field}` is not finite"),
            });
        }
        Ok(out)
    }

    fn compact(values: &PerPhase, phases: PhaseSet) -> PerPhaseDoc {
        let v: Vec<f64> = phases.iter().map(|p| values[p]).collect();
        if v.windows(2).all(|w| w[0] == w[1]) && !v.is_empty() {
            PerPhaseDoc::Scalar(v[0])
        } else {
            PerPhaseDoc::List(v)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BusDoc {
    pub id: String,
    pub phases: PhaseSet,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub voltage_level: Option<String>,
    /// `[g, b]` per listed phase.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shunt: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct LineDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub phases: PhaseSet,
    /// Square matrix of `[r, x]` over the listed phases, or full 3x3 over a, b, c.
    pub impedance: Vec<Vec<[f64; 2]>>,
    pub flow_limit: PerPhaseDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SwitchDoc {
    pub id: String,
    pub from: String,
    pub to: String,
    pub phases: PhaseSet,
    pub flow_limit: PerPhaseDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct TransformerDoc {
    pub id: String,
    pub kind: TransformerKind,
    pub from: String,
    pub to: String,
    pub phases: PhaseSet,
    pub tap_ratio: f64,
    pub flow_limit: PerPhaseDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct GeneratorDoc {
    pub id: String,
    pub bus: String,
    pub phases: PhaseSet,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<PerPhaseDoc>,
    pub p_max: PerPhaseDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_min: Option<PerPhaseDoc>,
    pub q_max: PerPhaseDoc,
    #[serde(default)]
    pub cost_linear: f64,
    #[serde(default)]
    pub cost_fixed: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_limit: Option<PerPhaseDoc>,
    #[serde(default)]
    pub substation: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_setpoint: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct LoadDoc {
    pub id: String,
    pub bus: String,
    pub phases: PhaseSet,
    pub p_nominal: PerPhaseDoc,
    pub q_nominal: PerPhaseDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min: Option<PerPhaseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_max: Option<PerPhaseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_min: Option<PerPhaseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_max: Option<PerPhaseDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<String>,
    #[serde(default = "default_priority")]
    pub priority: f64,
}

fn default_priority() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct ClusterDoc {
    pub id: String,
    #[serde(default)]
    pub loads: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct NetworkDoc {
    #[serde(default)]
    pub name: String,
    pub base_power_va: f64,
    pub base_voltage_v: BTreeMap<String, f64>,
    pub buses: Vec<BusDoc>,
    #[serde(default)]
    pub lines: Vec<LineDoc>,
    #[serde(default)]
    pub switches: Vec<SwitchDoc>,
    #[serde(default)]
    pub transformers: Vec<TransformerDoc>,
    #[serde(default)]
    pub generators: Vec<GeneratorDoc>,
    #[serde(default)]
    pub loads: Vec<LoadDoc>,
    #[serde(default)]
    pub clusters: Vec<ClusterDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<f64>,
}

pub(crate) fn parse(text: &str) -> Result<Network, NetworkError> {
    let doc: NetworkDoc =
        serde_json::from_str(text).map_err(|e| NetworkError::Schema(e.to_string()))?;
    build(doc)
}

fn invalid(kind: &'static str, id: &str, msg: impl Into<String>) -> NetworkError {
    NetworkError::Invalid {
        kind,
        id: id.to_string(),
        msg: msg.into(),
    }
}

fn check_unique<'a>(
    kind: &'static str,
    ids: impl Iterator<Item = &'a String>,
) -> Result<(), NetworkError> {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(NetworkError::Duplicate {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

pub(crate) fn build(doc: NetworkDoc) -> Result<Network, NetworkError> {
    if !(doc.base_power_va > 0.0) {
        return Err(NetworkError::Schema(
            "base_power_va must be positive".into(),
        ));
    }
    if doc.base_voltage_v.is_empty() || doc.base_voltage_v.values().any(|v| !(*v > 0.0)) {
        return Err(NetworkError::Schema(
            "base_voltage_v needs at least one positive level".into(),
        ));
    }
    check_unique("bus", doc.buses.iter().map(|b| &b.id))?;
    check_unique("line", doc.lines.iter().map(|b| &b.id))?;
    check_unique("switch", doc.switches.iter().map(|b| &b.id))?;
    check_unique("transformer", doc.transformers.iter().map(|b| &b.id))?;
    check_unique("generator", doc.generators.iter().map(|b| &b.id))?;
    check_unique("load", doc.loads.iter().map(|b| &b.id))?;
    check_unique("cluster", doc.clusters.iter().map(|b| &b.id))?;
    if doc.buses.is_empty() {
        return Err(NetworkError::Schema("network has no buses".into()));
    }

    let bus_index: HashMap<String, usize> = doc
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| (b.id.clone(), i))
        .collect();
    let mut buses = Vec::with_capacity(doc.buses.len());
    for b in &doc.buses {
        if b.phases.is_empty() {
            return Err(invalid("bus", &b.id, "no phases"));
        }
        if !(b.v_min > 0.0 && b.v_min < b.v_max) {
            return Err(invalid(
                "bus",
                &b.id,
                "voltage bounds must satisfy 0 < v_min < v_max",
            ));
        }
        if let Some(level) = &b.voltage_level {
            if !doc.base_voltage_v.contains_key(level) {
                return Err(NetworkError::Referential {
                    kind: "bus",
                    id: b.id.clone(),
                    target: "voltage level",
                    name: level.clone(),
                });
            }
        }
        let mut g = [0.0; 3];
        let mut bb = [0.0; 3];
        if let Some(sh) = &b.shunt {
            if sh.len() != b.phases.len() {
                return Err(invalid(
                    "bus",
                    &b.id,
                    "shunt needs one [g, b] pair per phase",
                ));
            }
            for (p, pair) in b.phases.iter().zip(sh) {
                g[p] = pair[0];
                bb[p] = pair[1];
            }
        }
        buses.push(Bus {
            id: b.id.clone(),
            phases: b.phases,
            v_min: b.v_min,
            v_max: b.v_max,
            voltage_level: b.voltage_level.clone(),
            shunt_g: g,
            shunt_b: bb,
        });
    }

    let endpoint = |kind: &'static str, id: &str, name: &str| -> Result<usize, NetworkError> {
        bus_index
            .get(name)
            .copied()
            .ok_or_else(|| NetworkError::Referential {
                kind,
                id: id.to_string(),
                target: "bus",
                name: name.to_string(),
            })
    };
    let phase_check = |kind: &'static str, id: &str, phases: PhaseSet, a: usize, b: usize| {
        if phases.is_empty() {
            return Err(invalid(kind, id, "no phases"));
        }
        if !phases.is_subset(buses[a].phases) || !phases.is_subset(buses[b].phases) {
            return Err(invalid(kind, id, "phases not present at both endpoints"));
        }
        if a == b {
            return Err(invalid(kind, id, "both endpoints are the same bus"));
        }
        Ok(())
    };
    let limits = |kind: &'static str, id: &str, doc: &PerPhaseDoc, phases: PhaseSet| {
        let v = doc.expand(phases, kind, id, "flow_limit")?;
        if phases.iter().any(|p| !(v[p] > 0.0)) {
            return Err(invalid(kind, id, "flow_limit must be positive"));
        }
        Ok(v)
    };

    let mut lines = Vec::new();
    for l in &doc.lines {
        let from = endpoint("line", &l.id, &l.from)?;
        let to = endpoint("line", &l.id, &l.to)?;
        phase_check("line", &l.id, l.phases, from, to)?;
        let (r, x) = expand_impedance(&l.id, &l.impedance, l.phases)?;
        for p in l.phases.iter() {
            if r[p][p] < 0.0 {
                return Err(invalid("line", &l.id, "negative self resistance"));
            }
        }
        lines.push(LineSegment {
            id: l.id.clone(),
            from,
            to,
            phases: l.phases,
            r,
            x,
            flow_limit: limits("line", &l.id, &l.flow_limit, l.phases)?,
        });
    }
    let mut switches = Vec::new();
    for s in &doc.switches {
        let from = endpoint("switch", &s.id, &s.from)?;
        let to = endpoint("switch", &s.id, &s.to)?;
        phase_check("switch", &s.id, s.phases, from, to)?;
        switches.push(Switch {
            id: s.id.clone(),
            from,
            to,
            phases: s.phases,
            flow_limit: limits("switch", &s.id, &s.flow_limit, s.phases)?,
        });
    }
    let mut transformers = Vec::new();
    for t in &doc.transformers {
        let from = endpoint("transformer", &t.id, &t.from)?;
        let to = endpoint("transformer", &t.id, &t.to)?;
        phase_check("transformer", &t.id, t.phases, from, to)?;
        if !(t.tap_ratio > 0.0) {
            return Err(invalid("transformer", &t.id, "tap_ratio must be positive"));
        }
        if t.kind == TransformerKind::Delta && t.phases != PhaseSet::ABC {
            return Err(invalid(
                "transformer",
                &t.id,
                "delta connection needs all three phases",
            ));
        }
        transformers.push(Transformer {
            id: t.id.clone(),
            kind: t.kind,
            from,
            to,
            phases: t.phases,
            tap_ratio: t.tap_ratio,
            flow_limit: limits("transformer", &t.id, &t.flow_limit, t.phases)?,
        });
    }

    let mut generators = Vec::new();
    for g in &doc.generators {
        let bus = endpoint("generator", &g.id, &g.bus)?;
        if g.phases.is_empty() || !g.phases.is_subset(buses[bus].phases) {
            return Err(invalid("generator", &g.id, "phases not present at its bus"));
        }
        let zero = PerPhaseDoc::Scalar(0.0);
        let p_max = g.p_max.expand(g.phases, "generator", &g.id, "p_max")?;
        let q_max = g.q_max.expand(g.phases, "generator", &g.id, "q_max")?;
        let p_min =
            g.p_min
                .as_ref()
                .unwrap_or(&zero)
                .expand(g.phases, "generator", &g.id, "p_min")?;
        let q_min =
            g.q_min
                .as_ref()
                .unwrap_or(&zero)
                .expand(g.phases, "generator", &g.id, "q_min")?;
        let mut ramp = [0.0; 3];
        match &g.ramp_limit {
            Some(r) => ramp = r.expand(g.phases, "generator", &g.id, "ramp_limit")?,
            None => {
                for p in g.phases.iter() {
                    ramp[p] = (p_max[p] - p_min[p]).max(q_max[p] - q_min[p]);
                }
            }
        }
        for p in g.phases.iter() {
            if p_min[p] > p_max[p] || q_min[p] > q_max[p] {
                return Err(invalid(
                    "generator",
                    &g.id,
                    "lower power bound exceeds upper bound",
                ));
            }
            if ramp[p] < 0.0 {
                return Err(invalid("generator", &g.id, "negative ramp_limit"));
            }
        }
        let v_setpoint = g.v_setpoint.unwrap_or(1.0);
        if !(v_setpoint > 0.0) {
            return Err(invalid("generator", &g.id, "v_setpoint must be positive"));
        }
        generators.push(Generator {
            id: g.id.clone(),
            bus,
            phases: g.phases,
            p_min,
            p_max,
            q_min,
            q_max,
            cost_linear: g.cost_linear,
            cost_fixed: g.cost_fixed,
            ramp_limit: ramp,
            substation: g.substation,
            v_setpoint,
        });
    }
    if generators.iter().filter(|g| g.substation).count() > 1 {
        return Err(NetworkError::Schema(
            "at most one substation generator is supported".into(),
        ));
    }

    // Cluster membership may come from the cluster list or the load entries.
    let cluster_index: HashMap<String, usize> = doc
        .clusters
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.clone(), i))
        .collect();
    let mut load_cluster: HashMap<&str, usize> = HashMap::new();
    for (ci, c) in doc.clusters.iter().enumerate() {
        for lid in &c.loads {
            if !doc.loads.iter().any(|l| &l.id == lid) {
                return Err(NetworkError::Referential {
                    kind: "cluster",
                    id: c.id.clone(),
                    target: "load",
                    name: lid.clone(),
                });
            }
            if let Some(prev) = load_cluster.insert(lid.as_str(), ci) {
                if prev != ci {
                    return Err(invalid("load", lid, "listed in two clusters"));
                }
            }
        }
    }
    let mut loads = Vec::new();
    for l in &doc.loads {
        let bus = endpoint("load", &l.id, &l.bus)?;
        if l.phases.is_empty() || !l.phases.is_subset(buses[bus].phases) {
            return Err(invalid("load", &l.id, "phases not present at its bus"));
        }
        let p0 = l.p_nominal.expand(l.phases, "load", &l.id, "p_nominal")?;
        let q0 = l.q_nominal.expand(l.phases, "load", &l.id, "q_nominal")?;
        let given = [&l.p_min, &l.p_max, &l.q_min, &l.q_max];
        let bounds = if given.iter().all(|b| b.is_some()) {
            let mut out = [[0.0; 3]; 4];
            for (k, (b, name)) in given
                .iter()
                .zip(["p_min", "p_max", "q_min", "q_max"])
                .enumerate()
            {
                out[k] = b.as_ref().unwrap().expand(l.phases, "load", &l.id, name)?;
            }
            for p in l.phases.iter() {
                if !(out[0][p] <= p0[p]
                    && p0[p] <= out[1][p]
                    && out[2][p] <= q0[p]
                    && q0[p] <= out[3][p])
                {
                    return Err(invalid("load", &l.id, "nominal power outside its bounds"));
                }
            }
            Some(out)
        } else if given.iter().any(|b| b.is_some()) {
            return Err(invalid(
                "load",
                &l.id,
                "give all of p_min, p_max, q_min, q_max or none",
            ));
        } else {
            None
        };
        let cluster = match (&l.cluster, load_cluster.get(l.id.as_str())) {
            (Some(name), listed) => {
                let ci = *cluster_index
                    .get(name)
                    .ok_or_else(|| NetworkError::Referential {
                        kind: "load",
                        id: l.id.clone(),
                        target: "cluster",
                        name: name.clone(),
                    })?;
                if listed.is_some_and(|x| *x != ci) {
                    return Err(invalid(
                        "load",
                        &l.id,
                        "cluster field disagrees with cluster list",
                    ));
                }
                ci
            }
            (None, Some(ci)) => *ci,
            (None, None) => return Err(invalid("load", &l.id, "not assigned to any cluster")),
        };
        if !(l.priority >= 0.0) {
            return Err(invalid("load", &l.id, "priority must be nonnegative"));
        }
        loads.push(LoadPoint {
            id: l.id.clone(),
            bus,
            phases: l.phases,
            p_nominal: p0,
            q_nominal: q0,
            bounds,
            cluster,
            priority: l.priority,
        });
    }
    let mut clusters: Vec<Cluster> = doc
        .clusters
        .iter()
        .map(|c| Cluster {
            id: c.id.clone(),
            loads: Vec::new(),
        })
        .collect();
    for (d, l) in loads.iter().enumerate() {
        clusters[l.cluster].loads.push(d);
    }
    if let Some(u) = doc.uncertainty {
        if !(0.0..1.0).contains(&u) {
            return Err(NetworkError::Schema(
                "uncertainty level must be in [0, 1)".into(),
            ));
        }
    }

    let mut net = Network {
        name: doc.name.clone(),
        base_power_va: doc.base_power_va,
        base_voltage_v: doc.base_voltage_v.clone(),
        buses,
        lines,
        switches,
        transformers,
        generators,
        loads,
        clusters,
        uncertainty: doc.uncertainty,
        blocks: Vec::new(),
        block_of_bus: Vec::new(),
        bus_index,
    };
    check_connected(&net)?;
    let (blocks, block_of_bus) = compute_blocks(&net);
    net.blocks = blocks;
    net.block_of_bus = block_of_bus;
    for (s, sw) in net.switches.iter().enumerate() {
        let (a, b) = net.switch_blocks(s);
        if a == b {
            return Err(invalid(
                "switch",
                &sw.id,
                "both endpoints lie in the same block",
            ));
        }
    }
    for b in &net.blocks {
        let mut seen: Option<usize> = None;
        for &d in &b.loads {
            let c = net.loads[d].cluster;
            match seen {
                Some(prev) if prev != c => {
                    return Err(NetworkError::MixedClusters {
                        block: b.id.clone(),
                        a: net.clusters[prev].id.clone(),
                        b: net.clusters[c].id.clone(),
                    })
                }
                _ => seen = Some(c),
            }
        }
    }
    for b in net.blocks.iter_mut() {
        b.cluster = b.loads.first().map(|&d| net.loads[d].cluster);
    }
    Ok(net)
}

fn expand_impedance(
    id: &str,
    m: &[Vec<[f64; 2]>],
    phases: PhaseSet,
) -> Result<([[f64; 3]; 3], [[f64; 3]; 3]), NetworkError> {
    let mut r = [[0.0; 3]; 3];
    let mut x = [[0.0; 3]; 3];
    let n = m.len();
    if m.iter().any(|row| row.len() != n) {
        return Err(invalid("line", id, "impedance must be square"));
    }
    if n == phases.len() {
        let idx: Vec<usize> = phases.iter().collect();
        for (a, row) in m.iter().enumerate() {
            for (b, e) in row.iter().enumerate() {
                r[idx[a]][idx[b]] = e[0];
                x[idx[a]][idx[b]] = e[1];
            }
        }
    } else if n == 3 {
        for a in 0..3 {
            for b in 0..3 {
                let e = m[a][b];
                if (!phases.contains(a) || !phases.contains(b)) && (e[0] != 0.0 || e[1] != 0.0) {
                    return Err(invalid("line", id, "impedance entry on an absent phase"));
                }
                r[a][b] = e[0];
                x[a][b] = e[1];
            }
        }
    } else {
        return Err(invalid("line", id, "impedance size does not match phases"));
    }
    if r.iter().chain(x.iter()).flatten().any(|v| !v.is_finite()) {
        return Err(invalid("line", id, "impedance is not finite"));
    }
    Ok((r, x))
}

fn check_connected(net: &Network) -> Result<(), NetworkError> {
    let n = net.buses.len();
    let mut adj = vec![Vec::new(); n];
    let edges = net
        .lines
        .iter()
        .map(|l| (l.from, l.to))
        .chain(net.switches.iter().map(|s| (s.from, s.to)))
        .chain(net.transformers.iter().map(|t| (t.from, t.to)));
    for (a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    match seen.iter().position(|s| !s) {
        Some(i) => Err(NetworkError::Disconnected(net.buses[i].id.clone())),
        None => Ok(()),
    }
}

pub(crate) fn to_document(net: &Network) -> NetworkDoc {
    let bus_id = |i: usize| net.buses[i].id.clone();
    let pp = |v: &PerPhase, ph: PhaseSet| PerPhaseDoc::compact(v, ph);
    NetworkDoc {
        name: net.name.clone(),
        base_power_va: net.base_power_va,
        base_voltage_v: net.base_voltage_v.clone(),
        buses: net
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id.clone(),
                phases: b.phases,
                v_min: b.v_min,
                v_max: b.v_max,
                voltage_level: b.voltage_level.clone(),
                shunt: if b.shunt_g.iter().chain(&b.shunt_b).any(|v| *v != 0.0) {
                    Some(
                        b.phases
                            .iter()
                            .map(|p| [b.shunt_g[p], b.shunt_b[p]])
                            .collect(),
                    )
                } else {
                    None
                },
            })
            .collect(),
        lines: net
            .lines
            .iter()
            .map(|l| {
                let idx: Vec<usize> = l.phases.iter().collect();
                LineDoc {
                    id: l.id.clone(),
                    from: bus_id(l.from),
                    to: bus_id(l.to),
                    phases: l.phases,
                    impedance: idx
                        .iter()
                        .map(|&a| idx.iter().map(|&b| [l.r[a][b], l.x[a][b]]).collect())
                        .collect(),
                    flow_limit: pp(&l.flow_limit, l.phases),
                }
            })
            .collect(),
        switches: net
            .switches
            .iter()
            .map(|s| SwitchDoc {
                id: s.id.clone(),
                from: bus_id(s.from),
                to: bus_id(s.to),
                phases: s.phases,
                flow_limit: pp(&s.flow_limit, s.phases),
            })
            .collect(),
        transformers: net
            .transformers
            .iter()
            .map(|t| TransformerDoc {
                id: t.id.clone(),
                kind: t.kind,
                from: bus_id(t.from),
                to: bus_id(t.to),
                phases: t.phases,
                tap_ratio: t.tap_ratio,
                flow_limit: pp(&t.flow_limit, t.phases),
            })
            .collect(),
        generators: net
            .generators
            .iter()
            .map(|g| GeneratorDoc {
                id: g.id.clone(),
                bus: bus_id(g.bus),
                phases: g.phases,
                p_min: Some(pp(&g.p_min, g.phases)),
                p_max: pp(&g.p_max, g.phases),
                q_min: Some(pp(&g.q_min, g.phases)),
                q_max: pp(&g.q_max, g.phases),
                cost_linear: g.cost_linear,
                cost_fixed: g.cost_fixed,
                ramp_limit: Some(pp(&g.ramp_limit, g.phases)),
                substation: g.substation,
                v_setpoint: Some(g.v_setpoint),
            })
            .collect(),
        loads: net
            .loads
            .iter()
            .map(|l| {
                let b = l.bounds.map(|b| b.map(|v| pp(&v, l.phases)));
                LoadDoc {
                    id: l.id.clone(),
                    bus: bus_id(l.bus),
                    phases: l.phases,
                    p_nominal: pp(&l.p_nominal, l.phases),
                    q_nominal: pp(&l.q_nominal, l.phases),
                    p_min: b.as_ref().map(|b| b[0].clone()),
                    p_max: b.as_ref().map(|b| b[1].clone()),
                    q_min: b.as_ref().map(|b| b[2].clone()),
                    q_max: b.as_ref().map(|b| b[3].clone()),
                    cluster: Some(net.clusters[l.cluster].id.clone()),
                    priority: l.priority,
                }
            })
            .collect(),
        clusters: net
            .clusters
            .iter()
            .map(|c| ClusterDoc {
                id: c.id.clone(),
                loads: Vec::new(),
            })
            .collect(),
        uncertainty: net.uncertainty,
    }
}
