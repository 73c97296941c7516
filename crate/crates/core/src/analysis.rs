//! Service metrics, dominant topologies, parameter sweeps and CSV reports.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::feeder::{DerKind, FeederModel, LsgIx, NodeIx, SwitchIx};
use crate::formulation::{FormulationError, ScenarioConfig, ScenarioData, SolutionView, Symbol, VarKey};
use crate::milp::{Solution, SolveParams, SolveStatus, SolverBackend};
use crate::pipeline::{self, PipelineError, Run};
use crate::profile::Profile;
use crate::validation::TopologySnapshot;

/// Steps a topology must be held to count as dominant (2.5 h at 30-minute steps).
pub const DOMINANCE_THRESHOLD_STEPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    pub served_demand_kwh: f64,
    /// Hours each critical node is served, by node id.
    pub served_hours_per_critical_node: BTreeMap<String, f64>,
    /// Load nodes served during at least one step of each preferred window, by window label.
    pub nodes_served_in_window: BTreeMap<String, usize>,
    pub switching_actions: usize,
    /// `[lsg][t - 1]`.
    pub lsg_served_timeline: Vec<Vec<bool>>,
}

pub fn compute_metrics(solution: &Solution, feeder: &FeederModel, scenario: &ScenarioConfig, data: &ScenarioData) -> Metrics {
    let view = SolutionView::new(solution);
    let steps = scenario.steps;
    let dt = scenario.dt_hours();
    let timeline: Vec<Vec<bool>> = (0..feeder.lsgs.len())
        .map(|m| (1..=steps).map(|t| view.is_on(VarKey::ulsg(LsgIx(m), t))).collect())
        .collect();
    let served = |i: NodeIx, t: usize| timeline[feeder.lsg_of(i).0][t - 1];

    let mut served_demand_kwh = 0.0;
    for i in 0..feeder.nodes.len() {
        for t in 1..=steps {
            if served(NodeIx(i), t) {
                served_demand_kwh += data.load(NodeIx(i), t) * dt;
            }
        }
    }
    let served_hours_per_critical_node = feeder
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.is_critical)
        .map(|(i, n)| (n.id.clone(), (1..=steps).filter(|&t| served(NodeIx(i), t)).count() as f64 * dt))
        .collect();
    let nodes_served_in_window = scenario
        .windows
        .iter()
        .map(|w| {
            let count = feeder
                .nodes
                .iter()
                .enumerate()
                .filter(|(_, n)| n.is_load())
                .filter(|(_, n)| w.nodes.as_ref().map_or(true, |ids| ids.contains(&n.id)))
                .filter(|&(i, _)| (w.window.start_step..=w.window.end_step).any(|t| served(NodeIx(i), t)))
                .count();
            (w.window.label.clone(), count)
        })
        .collect();
    let mut switching_actions = 0;
    for n in 0..feeder.switches.len() {
        let mut before = false;
        for t in 1..=steps {
            let now = view.is_on(VarKey::usw(SwitchIx(n), t));
            switching_actions += usize::from(now != before);
            before = now;
        }
    }
    Metrics {
        served_demand_kwh,
        served_hours_per_critical_node,
        nodes_served_in_window,
        switching_actions,
        lsg_served_timeline: timeline,
    }
}

/// A closed-switch set with its root set, in one-based ordinals.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct TopologyKey {
    pub closed_switches: Vec<usize>,
    pub roots: Vec<usize>,
}

impl TopologyKey {
    pub fn of(snapshot: &TopologySnapshot) -> Self {
        let (closed_switches, roots) = snapshot.canonical();
        Self { closed_switches, roots }
    }

    pub fn label(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        format!("S[{}] R[{}]", join(&self.closed_switches), join(&self.roots))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DominantTopology {
    pub topology: TopologyKey,
    pub occupancy_steps: usize,
}

/// Steps spent in each distinct topology, most occupied first.
pub fn topology_occupancy(snapshots: &[TopologySnapshot]) -> Vec<DominantTopology> {
    let mut counts: BTreeMap<TopologyKey, usize> = BTreeMap::new();
    for s in snapshots {
        *counts.entry(TopologyKey::of(s)).or_default() += 1;
    }
    let mut out: Vec<_> = counts.into_iter().map(|(topology, occupancy_steps)| DominantTopology { topology, occupancy_steps }).collect();
    out.sort_by(|a, b| b.occupancy_steps.cmp(&a.occupancy_steps).then_with(|| a.topology.cmp(&b.topology)));
    out
}

/// Topologies held for at least `threshold_steps` steps in total.
pub fn find_dominant_topologies(snapshots: &[TopologySnapshot], threshold_steps: usize) -> Vec<DominantTopology> {
    topology_occupancy(snapshots).into_iter().filter(|d| d.occupancy_steps >= threshold_steps).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    MsdHours,
    PvScale,
}

impl SweepAxis {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepAxis::MsdHours => vec![0.5, 1.0, 2.0, 3.0],
            SweepAxis::PvScale => vec![0.5, 1.0, 1.5, 2.0],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::MsdHours => "msd_hours",
            SweepAxis::PvScale => "pv_scale",
        }
    }

    pub fn apply(self, scenario: &ScenarioConfig, value: f64) -> Result<ScenarioConfig, FormulationError> {
        match self {
            SweepAxis::MsdHours => scenario.with_msd_hours(value),
            SweepAxis::PvScale => scenario.with_pv_scale(value),
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "msd" | "msd_hours" => Ok(SweepAxis::MsdHours),
            "pv" | "pv_scale" => Ok(SweepAxis::PvScale),
            other => Err(format!("unknown sweep axis `{other}` (expected msd or pv)")),
        }
    }
}

#[derive(Debug)]
pub struct SweepRun {
    pub value: f64,
    pub scenario: ScenarioConfig,
    pub data: ScenarioData,
    /// `Err` when the scenario could not be built or validated.
    pub outcome: Result<Run, PipelineError>,
}

impl SweepRun {
    pub fn status(&self) -> Option<SolveStatus> {
        self.outcome.as_ref().ok().map(Run::status)
    }

    pub fn metrics(&self, feeder: &FeederModel) -> Option<Metrics> {
        let run = self.outcome.as_ref().ok()?;
        run.status().has_solution().then(|| compute_metrics(&run.solution, feeder, &self.scenario, &self.data))
    }

    pub fn snapshots(&self) -> &[TopologySnapshot] {
        match &self.outcome {
            Ok(Run { validated: Some(v), .. }) => &v.snapshots,
            _ => &[],
        }
    }
}

#[derive(Debug)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub runs: Vec<SweepRun>,
}

/// One pipeline run per axis value; failed runs are recorded and the sweep continues.
pub fn run_sweep(
    feeder: &FeederModel,
    base: &ScenarioConfig,
    profiles: &BTreeMap<String, Profile>,
    axis: SweepAxis,
    values: &[f64],
    backend: &dyn SolverBackend,
    params: &SolveParams,
) -> SweepReport {
    let runs = values
        .iter()
        .map(|&value| {
            let prepared = axis
                .apply(base, value)
                .and_then(|s| ScenarioData::from_profiles(feeder, &s, profiles).map(|d| (s, d)));
            match prepared {
                Ok((scenario, data)) => {
                    let outcome = pipeline::run(feeder, &scenario, &data, backend, params);
                    SweepRun { value, scenario, data, outcome }
                }
                Err(e) => SweepRun {
                    value,
                    scenario: base.clone(),
                    data: ScenarioData::zeros(feeder, base.steps),
                    outcome: Err(e.into()),
                },
            }
        })
        .collect();
    SweepReport { axis, runs }
}

fn fmt(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

/// One column of the metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub status: String,
    pub metrics: Option<Metrics>,
}

impl SweepReport {
    pub fn summaries(&self, feeder: &FeederModel) -> Vec<RunSummary> {
        self.runs
            .iter()
            .map(|r| RunSummary {
                label: format!("{}={}", self.axis.as_str(), fmt(r.value)),
                status: r.status().map_or("error", SolveStatus::as_str).to_string(),
                metrics: r.metrics(feeder),
            })
            .collect()
    }

    pub fn window_labels(&self) -> Vec<String> {
        self.runs.first().map_or(Vec::new(), |r| r.scenario.windows.iter().map(|w| w.window.label.clone()).collect())
    }
}

/// One row per metric and one column per run: served demand, service hours of each critical
/// node, load nodes served in each preferred window and switching actions.
pub fn write_metrics_table<W: Write>(runs: &[RunSummary], feeder: &FeederModel, window_labels: &[String], sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["metric".to_string()];
    header.extend(runs.iter().map(|r| r.label.clone()));
    w.write_record(&header)?;
    let mut row = |name: String, cell: &dyn Fn(&Metrics) -> String| -> csv::Result<()> {
        let mut record = vec![name];
        record.extend(runs.iter().map(|r| r.metrics.as_ref().map_or(String::new(), cell)));
        w.write_record(&record)
    };
    row("served_demand_kwh".into(), &|m| fmt(m.served_demand_kwh))?;
    for n in feeder.nodes.iter().filter(|n| n.is_critical) {
        row(format!("served_hours_node_{}", n.id), &|m| fmt(m.served_hours_per_critical_node[&n.id]))?;
    }
    for label in window_labels {
        row(format!("nodes_served_{label}"), &|m| m.nodes_served_in_window.get(label).copied().unwrap_or(0).to_string())?;
    }
    row("switching_actions".into(), &|m| m.switching_actions.to_string())?;
    let mut status = vec!["status".to_string()];
    status.extend(runs.iter().map(|r| r.status.clone()));
    w.write_record(&status)?;
    w.flush()?;
    Ok(())
}

/// Occupancy of every topology that is dominant in at least one run, one column per run.
pub fn write_topology_table<W: Write>(report: &SweepReport, threshold_steps: usize, sink: W) -> csv::Result<()> {
    let occupancy: Vec<BTreeMap<TopologyKey, usize>> = report
        .runs
        .iter()
        .map(|r| topology_occupancy(r.snapshots()).into_iter().map(|d| (d.topology, d.occupancy_steps)).collect())
        .collect();
    let mut keys: Vec<TopologyKey> = occupancy
        .iter()
        .flat_map(|o| o.iter().filter(|(_, &n)| n >= threshold_steps).map(|(k, _)| k.clone()))
        .collect();
    keys.sort();
    keys.dedup();
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["topology".to_string(), "closed_switches".to_string(), "roots".to_string()];
    header.extend(report.runs.iter().map(|r| format!("{}={}", report.axis.as_str(), fmt(r.value))));
    w.write_record(&header)?;
    for (k, key) in keys.iter().enumerate() {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let mut row = vec![format!("T{}", k + 1), join(&key.closed_switches), join(&key.roots)];
        row.extend(occupancy.iter().map(|o| o.get(key).copied().unwrap_or(0).to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// LSG × step matrix of served flags.
pub fn write_timeline<W: Write>(metrics: &Metrics, feeder: &FeederModel, sink: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let steps = metrics.lsg_served_timeline.first().map_or(0, Vec::len);
    let mut header = vec!["lsg".to_string()];
    header.extend((1..=steps).map(|t| format!("t{t}")));
    w.write_record(&header)?;
    for (m, row) in metrics.lsg_served_timeline.iter().enumerate() {
        let mut record = vec![feeder.lsgs[m].id.clone()];
        record.extend(row.iter().map(|&on| u8::from(on).to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step state of charge of every battery, in kWh.
pub fn write_soc<W: Write>(solution: &Solution, feeder: &FeederModel, scenario: &ScenarioConfig, sink: W) -> csv::Result<()> {
    let view = SolutionView::new(solution);
    let bess: Vec<usize> = feeder.ders.iter().enumerate().filter(|(_, d)| matches!(d.kind, DerKind::Bess(_))).map(|(k, _)| k).collect();
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["t".to_string(), "timestamp".to_string()];
    header.extend(bess.iter().map(|&k| format!("{}_soc_kwh", feeder.ders[k].id)));
    w.write_record(&header)?;
    let horizon = scenario.horizon();
    for t in 1..=scenario.steps {
        let mut row = vec![t.to_string(), horizon.step_start(t).format("%Y-%m-%dT%H:%M").to_string()];
        row.extend(bess.iter().map(|&k| fmt(view.physical(feeder, VarKey::new(Symbol::Soc, k, t)))));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-step active output of every DER (battery as discharge minus charge) and served load, in kW.
pub fn write_dispatch<W: Write>(
    solution: &Solution,
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
    sink: W,
) -> csv::Result<()> {
    let view = SolutionView::new(solution);
    let mut w = csv::Writer::from_writer(sink);
    let mut header = vec!["t".to_string(), "timestamp".to_string()];
    header.extend(feeder.ders.iter().map(|d| format!("{}_kw", d.id)));
    header.push("served_load_kw".to_string());
    w.write_record(&header)?;
    let horizon = scenario.horizon();
    for t in 1..=scenario.steps {
        let mut row = vec![t.to_string(), horizon.step_start(t).format("%Y-%m-%dT%H:%M").to_string()];
        for (k, d) in feeder.ders.iter().enumerate() {
            let p = |s| view.physical(feeder, VarKey::new(s, k, t));
            let kw = match d.kind {
                DerKind::PvFarm => p(Symbol::Ppv),
                DerKind::Bess(_) => p(Symbol::Pdis) - p(Symbol::Pch),
                DerKind::Dg { .. } => p(Symbol::Pdg),
            };
            row.push(fmt(kw));
        }
        let load: f64 = (0..feeder.lsgs.len())
            .filter(|&m| view.is_on(VarKey::ulsg(LsgIx(m), t)))
            .map(|m| data.lsg_load(feeder, LsgIx(m), t))
            .sum();
        row.push(fmt(load));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;

    fn one_lsg() -> (FeederModel, ScenarioConfig, ScenarioData) {
        let f = FeederModel::from_json(
            r#"{"base_kv": 4.16, "base_kva": 1000.0,
                "nodes": [{"id": "n", "peak_kw": 10.0, "critical": true, "priority_weight": 2.0}],
                "lsgs": [{"id": "L", "nodes": ["n"]}],
                "ders": [{"id": "pv", "node": "n", "kind": "pv-farm", "rated_kw": 50.0}]}"#,
        )
        .unwrap();
        let s = ScenarioConfig::from_json(
            r#"{"start": "2021-07-15T07:00", "steps": 2, "msd_hours": 0.5,
                "preferred_windows": [{"label": "am", "start": "07:30", "end": "08:00", "weight": 1.5}]}"#,
        )
        .unwrap();
        let mut data = ScenarioData::zeros(&f, 2);
        data.load_kw[0] = vec![10.0, 10.0];
        (f, s, data)
    }

    fn solution(values: &[(&str, f64)]) -> Solution {
        Solution {
            status: SolveStatus::Optimal,
            objective_value: None,
            values: values.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            diagnostic: None,
        }
    }

    #[test]
    fn all_off_metrics_are_zero() {
        let (f, s, data) = one_lsg();
        let m = compute_metrics(&solution(&[]), &f, &s, &data);
        assert_eq!(m.served_demand_kwh, 0.0);
        assert_eq!(m.switching_actions, 0);
        assert_eq!(m.served_hours_per_critical_node["n"], 0.0);
        assert_eq!(m.nodes_served_in_window["am"], 0);
    }

    #[test]
    fn two_step_service_is_ten_kwh() {
        let (f, s, data) = one_lsg();
        let m = compute_metrics(&solution(&[("ULSG.1.1", 1.0), ("ULSG.1.2", 1.0)]), &f, &s, &data);
        assert!((m.served_demand_kwh - 10.0 * 0.5 * 2.0).abs() < 1e-12);
        assert_eq!(m.served_hours_per_critical_node["n"], 1.0);
        assert_eq!(m.nodes_served_in_window["am"], 1);
        assert_eq!(m.lsg_served_timeline, vec![vec![true, true]]);
    }

    #[test]
    fn switching_actions_count_state_changes() {
        let f = FeederModel::from_path(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/radial.feeder.json")).unwrap();
        let s = ScenarioConfig::from_json(r#"{"start": "2021-07-15T00:00", "steps": 4, "msd_hours": 0.5}"#).unwrap();
        let states = [[1.0, 1.0, 0.0, 1.0], [0.0, 1.0, 1.0, 1.0]];
        let mut values = Vec::new();
        for (n, row) in states.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                values.push((format!("USW.{}.{}", n + 1, t + 1), v));
            }
        }
        let sol = Solution {
            status: SolveStatus::Optimal,
            objective_value: None,
            values: values.into_iter().collect(),
            diagnostic: None,
        };
        let m = compute_metrics(&sol, &f, &s, &ScenarioData::zeros(&f, 4));
        // independent recount: Σ |Δ| with an all-open start
        let expected: f64 = states
            .iter()
            .map(|row| std::iter::once(0.0).chain(row.iter().copied()).collect::<Vec<_>>().windows(2).map(|w| (w[1] - w[0]).abs()).sum::<f64>())
            .sum();
        assert_eq!(m.switching_actions as f64, expected);
    }

    fn snap(closed: &[usize], roots: &[usize]) -> TopologySnapshot {
        TopologySnapshot {
            closed_switches: closed.iter().map(|&n| SwitchIx(n)).collect(),
            roots: roots.iter().map(|&m| LsgIx(m)).collect::<BTreeSet<_>>(),
            ..TopologySnapshot::default()
        }
    }

    #[test]
    fn metrics_table_has_one_column_per_run() {
        let (f, s, data) = one_lsg();
        let served = compute_metrics(&solution(&[("ULSG.1.1", 1.0)]), &f, &s, &data);
        let runs = [
            RunSummary { label: "a".into(), status: "optimal".into(), metrics: Some(served) },
            RunSummary { label: "b".into(), status: "infeasible".into(), metrics: None },
        ];
        let mut out = Vec::new();
        write_metrics_table(&runs, &f, &["am".to_string()], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "metric,a,b\nserved_demand_kwh,5.000,\nserved_hours_node_n,0.500,\nnodes_served_am,0,\nswitching_actions,0,\nstatus,optimal,infeasible\n"
        );
    }

    #[test]
    fn constant_topology_is_dominant() {
        let snaps = vec![snap(&[0, 2], &[0]); 48];
        let d = find_dominant_topologies(&snaps, DOMINANCE_THRESHOLD_STEPS);
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].occupancy_steps, 48);
        assert_eq!(d[0].topology.label(), "S[1 3] R[1]");
    }

    #[test]
    fn alternating_topology_is_not_dominant_at_five() {
        let snaps: Vec<_> = (0..8).map(|t| if t % 2 == 0 { snap(&[0], &[0]) } else { snap(&[1], &[0]) }).collect();
        assert!(find_dominant_topologies(&snaps, 5).is_empty());
        let total: usize = topology_occupancy(&snaps).iter().map(|d| d.occupancy_steps).sum();
        assert_eq!(total, 8);
    }
}
