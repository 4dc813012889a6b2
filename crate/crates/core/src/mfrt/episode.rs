//! Scheduled episodes: topology periods, load events and the control loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::controller::{
    approx_gradient, assign_frequencies, cc_masks, constraint_g, dual_step, exploration_vector,
    primal_step, ControllerConfig,
};
use super::plant::{plant_measure, PlantMeasurement};
use super::MfrtError;
use crate::lindistflow::{energized_ccs, Dispatch, PlantCc, Topology};
use crate::netmodel::{Network, PerPhase, PhaseSet, ScenarioVector, UncertaintyModel, PHASE_NAMES};
use crate::rpop::{verify_topology_under, Contingency, MasterSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventScope {
    Global,
    /// Loads of one component, by id (`CC-<block>`).
    Cc(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadEvent {
    /// Global 1-based step at which the factor takes effect.
    pub step: usize,
    pub scope: EventScope,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub steps: usize,
    pub solution: MasterSolution,
    #[serde(default)]
    pub contingency: Contingency,
    #[serde(default = "one")]
    pub load_scale: f64,
    #[serde(default)]
    pub events: Vec<LoadEvent>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSchedule {
    pub periods: Vec<Period>,
}

impl EpisodeSchedule {
    /// First global step of each period.
    pub fn starts(&self) -> Vec<usize> {
        let mut t = 1;
        self.periods
            .iter()
            .map(|p| {
                let s = t;
                t += p.steps;
                s
            })
            .collect()
    }

    pub fn total_steps(&self) -> usize {
        self.periods.iter().map(|p| p.steps).sum()
    }

    pub fn validate(&self, net: &Network) -> Result<(), MfrtError> {
        for (k, (p, start)) in self.periods.iter().zip(self.starts()).enumerate() {
            let end = start + p.steps;
            for e in &p.events {
                if e.step < start || e.step >= end {
                    return Err(MfrtError::Schedule(format!(
                        "period {} covers steps {start}..{}, event at step {}",
                        k + 1,
                        end - 1,
                        e.step
                    )));
                }
                if !(e.factor > 0.0 && e.factor.is_finite()) {
                    return Err(MfrtError::Schedule(format!(
                        "event factor {} must be positive",
                        e.factor
                    )));
                }
            }
            let sol = &p.solution;
            if sol.blocks.len() != net.blocks.len()
                || sol.switches.len() != net.switches.len()
                || sol.inverters.len() != net.generators.len()
            {
                return Err(MfrtError::Schedule(format!(
                    "period {}: topology does not match the network",
                    k + 1
                )));
            }
            let bad: Vec<String> = verify_topology_under(net, sol, &p.contingency)
                .into_iter()
                .filter(|v| !v.is_warning())
                .map(|v| v.to_string())
                .collect();
            if !bad.is_empty() {
                return Err(MfrtError::Schedule(format!(
                    "period {}: {}",
                    k + 1,
                    bad.join("; ")
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcRecord {
    pub id: String,
    pub phases: PhaseSet,
    pub slack_p: PerPhase,
    pub reference_p: PerPhase,
    pub load_p: PerPhase,
    pub min_v: f64,
    pub max_v: f64,
    pub objective: f64,
    pub lambda_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub period: usize,
    pub p: Vec<PerPhase>,
    pub q: Vec<PerPhase>,
    pub ccs: Vec<CcRecord>,
    /// Largest voltage bound violation at the midpoint measurement.
    pub max_violation: f64,
    /// False when the plant could not be evaluated; the state was held.
    pub plant_ok: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryLog {
    pub generators: Vec<String>,
    pub records: Vec<StepRecord>,
}

/// Index of one controllable scalar: generator, phase, reactive.
type ControlVar = (usize, usize, bool);

fn control_vars(net: &Network) -> Vec<ControlVar> {
    let mut out = Vec::new();
    for (g, gen) in net.generators.iter().enumerate() {
        for a in gen.phases.iter() {
            out.push((g, a, false));
            out.push((g, a, true));
        }
    }
    out
}

fn to_dispatch(net: &Network, vars: &[ControlVar], s: &[f64]) -> Dispatch {
    let mut d = Dispatch::zeros(net);
    for (&(g, a, r), &v) in vars.iter().zip(s) {
        if r {
            d.q[g][a] = v;
        } else {
            d.p[g][a] = v;
        }
    }
    d
}

/// Loads at a step: nominal times the period scale times every event factor
/// already in effect.
fn loads_at(
    net: &Network,
    nominal: &ScenarioVector,
    period: &Period,
    ccs: &[PlantCc],
    step: usize,
) -> Result<ScenarioVector, MfrtError> {
    let mut s = nominal.scaled(period.load_scale);
    for e in period.events.iter().filter(|e| e.step <= step) {
        let buses: Option<&[usize]> = match &e.scope {
            EventScope::Global => None,
            EventScope::Cc(id) => Some(
                &ccs.iter()
                    .find(|c| &c.id == id)
                    .ok_or_else(|| {
                        MfrtError::Schedule(format!("event refers to unknown component {id}"))
                    })?
                    .buses,
            ),
        };
        for (d, l) in net.loads.iter().enumerate() {
            if buses.is_none_or(|b| b.binary_search(&l.bus).is_ok()) {
                s.p[d] = s.p[d].map(|x| x * e.factor);
                s.q[d] = s.q[d].map(|x| x * e.factor);
            }
        }
    }
    Ok(s)
}

fn tracking(slack: &PerPhase, reference: &PerPhase, phases: PhaseSet) -> f64 {
    phases
        .iter()
        .map(|a| (slack[a] - reference[a]).powi(2))
        .sum()
}

/// Runs the controller over every period of the schedule.
pub fn run_episode(
    net: &Network,
    schedule: &EpisodeSchedule,
    config: &ControllerConfig,
    seed: u64,
) -> Result<TrajectoryLog, MfrtError> {
    config.validate().map_err(MfrtError::Config)?;
    schedule.validate(net)?;
    let vars = control_vars(net);
    let omega = assign_frequencies(vars.len(), config.base_omega);
    let nominal = UncertaintyModel::new(net, Some(0.0))?.nominal();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if config.noise_std > 0.0 {
        Some(Normal::new(0.0, config.noise_std).map_err(|e| MfrtError::Config(e.to_string()))?)
    } else {
        None
    };
    let mut measure = |topo: &Topology, ccs: &[PlantCc], s: &[f64], loads: &ScenarioVector| {
        let mut m = plant_measure(
            net,
            topo,
            ccs,
            &to_dispatch(net, &vars, s),
            loads,
            config.fidelity,
        )?;
        if let Some(n) = &noise {
            for p in m.slack_p.iter_mut() {
                for x in p.iter_mut() {
                    *x += n.sample(&mut rng);
                }
            }
            for v in m.v.iter_mut() {
                *v += n.sample(&mut rng);
            }
        }
        Ok::<PlantMeasurement, MfrtError>(m)
    };

    let mut log = TrajectoryLog {
        generators: net.generators.iter().map(|g| g.id.clone()).collect(),
        records: Vec::with_capacity(schedule.total_steps()),
    };
    for (pi, (period, start)) in schedule.periods.iter().zip(schedule.starts()).enumerate() {
        let topo = period.solution.topology();
        let ccs = energized_ccs(net, &topo)?;
        let cc_phases: Vec<PhaseSet> = ccs
            .iter()
            .map(|c| {
                c.buses
                    .iter()
                    .fold(PhaseSet::EMPTY, |acc, &b| acc.union(net.buses[b].phases))
            })
            .collect();
        let gen_cc: Vec<Option<usize>> = net
            .generators
            .iter()
            .map(|g| {
                ccs.iter()
                    .position(|c| c.buses.binary_search(&g.bus).is_ok())
            })
            .collect();
        let slack: Vec<bool> = (0..net.generators.len())
            .map(|g| ccs.iter().any(|c| c.slack_gen == g))
            .collect();

        // Controllable entries and their box; de-energized generators are pinned at 0.
        let mut s = vec![0.0; vars.len()];
        let mut lo = vec![0.0; vars.len()];
        let mut hi = vec![0.0; vars.len()];
        let mut owner: Vec<Option<usize>> = vec![None; vars.len()];
        for (i, &(g, a, r)) in vars.iter().enumerate() {
            let gen = &net.generators[g];
            let set = if r {
                period.solution.q[g][a]
            } else {
                period.solution.p[g][a]
            };
            match gen_cc[g] {
                Some(m) if !slack[g] => {
                    hi[i] = if r { gen.q_max[a] } else { gen.p_max[a] }.max(0.0);
                    s[i] = set.clamp(0.0, hi[i]);
                    owner[i] = Some(m);
                }
                Some(_) => {
                    s[i] = set;
                    lo[i] = set;
                    hi[i] = set;
                }
                None => {}
            }
        }

        let first = measure(
            &topo,
            &ccs,
            &s,
            &loads_at(net, &nominal, period, &ccs, start.saturating_sub(1))?,
        )?;
        let reference = first.slack_p.clone();
        let nu = cc_masks(&first.node_cc, ccs.len());
        let bound = |f: Option<f64>, k: usize, upper: bool| {
            let b = &net.buses[first.nodes[k].0];
            f.unwrap_or(if upper { b.v_max } else { b.v_min })
        };
        let v_min: Vec<f64> = (0..first.nodes.len())
            .map(|k| bound(config.v_min, k, false))
            .collect();
        let v_max: Vec<f64> = (0..first.nodes.len())
            .map(|k| bound(config.v_max, k, true))
            .collect();
        let mut lambda = vec![vec![0.0; 2 * first.nodes.len()]; ccs.len()];

        for t in start..start + period.steps {
            let loads = loads_at(net, &nominal, period, &ccs, t)?;
            let xi_all = exploration_vector(t as f64, &omega, config.epsilon);
            let xi: Vec<f64> = xi_all
                .iter()
                .zip(&owner)
                .map(|(x, o)| if o.is_some() { *x } else { 0.0 })
                .collect();
            let plus: Vec<f64> = s.iter().zip(&xi).map(|(a, b)| a + b).collect();
            let minus: Vec<f64> = s.iter().zip(&xi).map(|(a, b)| a - b).collect();
            let (yp, ym) = match (
                measure(&topo, &ccs, &plus, &loads),
                measure(&topo, &ccs, &minus, &loads),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                _ => {
                    log.records.push(StepRecord {
                        step: t,
                        period: pi + 1,
                        p: to_dispatch(net, &vars, &s).p,
                        q: to_dispatch(net, &vars, &s).q,
                        ccs: Vec::new(),
                        max_violation: f64::NAN,
                        plant_ok: false,
                    });
                    continue;
                }
            };
            let mid = PlantMeasurement::midpoint(&yp, &ym);
            let gp = constraint_g(&yp.v, &v_min, &v_max);
            let gm = constraint_g(&ym.v, &v_min, &v_max);
            let g_mid = constraint_g(&mid.v, &v_min, &v_max);

            let mut grad = vec![0.0; vars.len()];
            for m in 0..ccs.len() {
                let xi_m: Vec<f64> = xi
                    .iter()
                    .zip(&owner)
                    .map(|(x, o)| if *o == Some(m) { *x } else { 0.0 })
                    .collect();
                let fp = tracking(&yp.slack_p[m], &reference[m], cc_phases[m]);
                let fm = tracking(&ym.slack_p[m], &reference[m], cc_phases[m]);
                let gm_ = approx_gradient(
                    fp,
                    fm,
                    &gp,
                    &gm,
                    &xi_m,
                    &lambda[m],
                    &nu[m],
                    config.epsilon,
                    config.gradient_scale,
                );
                grad.iter_mut().zip(gm_).for_each(|(a, b)| *a += b);
            }

            let dispatch = to_dispatch(net, &vars, &s);
            let ccs_rec: Vec<CcRecord> = ccs
                .iter()
                .enumerate()
                .map(|(m, cc)| {
                    let vs: Vec<f64> = (0..mid.nodes.len())
                        .filter(|&k| mid.node_cc[k] == m)
                        .map(|k| mid.v[k])
                        .collect();
                    let mut load_p = [0.0; 3];
                    for (d, l) in net.loads.iter().enumerate() {
                        if cc.buses.binary_search(&l.bus).is_ok() {
                            for a in l.phases.iter() {
                                load_p[a] += loads.p[d][a];
                            }
                        }
                    }
                    CcRecord {
                        id: cc.id.clone(),
                        phases: cc_phases[m],
                        slack_p: mid.slack_p[m],
                        reference_p: reference[m],
                        load_p,
                        min_v: vs.iter().copied().fold(f64::INFINITY, f64::min),
                        max_v: vs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        objective: tracking(&mid.slack_p[m], &reference[m], cc_phases[m]),
                        lambda_norm: lambda[m].iter().map(|x| x * x).sum::<f64>().sqrt(),
                    }
                })
                .collect();
            log.records.push(StepRecord {
                step: t,
                period: pi + 1,
                p: dispatch.p,
                q: dispatch.q,
                ccs: ccs_rec,
                max_violation: g_mid.iter().copied().fold(0.0, f64::max),
                plant_ok: true,
            });

            primal_step(&mut s, &grad, &lo, &hi, config.alpha, config.rho);
            for m in 0..ccs.len() {
                dual_step(&mut lambda[m], &g_mid, &nu[m], config);
            }
        }
    }
    Ok(log)
}

impl TrajectoryLog {
    /// One row per step, component and phase.
    pub fn to_csv(&self, net: &Network) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<String> = [
            "step",
            "period",
            "cc_id",
            "phase",
            "slack_p",
            "reference_p",
            "load_p",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        let mut cols = Vec::new();
        for (g, gen) in net.generators.iter().enumerate() {
            for a in gen.phases.iter() {
                cols.push((g, a));
            }
        }
        for kind in ["p", "q"] {
            for &(g, a) in &cols {
                header.push(format!(
                    "{kind}_{}_{}",
                    net.generators[g].id, PHASE_NAMES[a]
                ));
            }
        }
        header.extend(["min_v", "max_v", "objective"].map(String::from));
        w.write_record(&header)?;
        for r in &self.records {
            for cc in &r.ccs {
                for a in cc.phases.iter() {
                    let mut row = vec![
                        r.step.to_string(),
                        r.period.to_string(),
                        cc.id.clone(),
                        PHASE_NAMES[a].to_string(),
                        cc.slack_p[a].to_string(),
                        cc.reference_p[a].to_string(),
                        cc.load_p[a].to_string(),
                    ];
                    row.extend(cols.iter().map(|&(g, b)| r.p[g][b].to_string()));
                    row.extend(cols.iter().map(|&(g, b)| r.q[g][b].to_string()));
                    row.extend([
                        cc.min_v.to_string(),
                        cc.max_v.to_string(),
                        cc.objective.to_string(),
                    ]);
                    w.write_record(&row)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
