//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lsgems::analysis::{self, SweepAxis};
use lsgems::feeder::{DerIx, DerKind, FeederModel, LsgIx, LsgKind, NodeIx, SwitchIx};
use lsgems::formulation::{assemble_model, assemble_topology_model, Mode, ScenarioConfig, ScenarioData, SolutionView, Symbol, VarKey};
use lsgems::milp::enumerate::enumerate_binary_points;
use lsgems::milp::{verify_feasibility, HighsBackend, Solution, SolveParams, SolveStatus, VarId};
use lsgems::pipeline::{self, Run};
use lsgems::profile::{load_profiles, Profile};
use lsgems::validation::brute_force_topology_oracle;

const LOOP_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_LIMIT: Duration = Duration::from_secs(300);
const ORACLE_RANDOM_GRAPHS: usize = 25;
const ORACLE_SEED: u64 = 33;
const OBJECTIVE_ABS_TOL: f64 = 1e-6;
const V_MIN: f64 = 0.95;
const V_MAX: f64 = 1.05;
const VOLTAGE_TOL: f64 = 1e-6;
const ANCHOR_TOL: f64 = 1e-4;
const SOC_TOL_KWH: f64 = 1e-6;
const EFFICIENCY: f64 = 0.95;
const DT_HOURS: f64 = 0.5;
const OBJECTIVE_REL_TOL: f64 = 1e-6;
const MSD_SWEEP: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
const TRUNCATED_STEPS: usize = 12;
const TRUNCATED_GAP: f64 = 0.01;
const IEEE33_LIMIT: Duration = Duration::from_secs(120);
const FIG1_LIMIT: Duration = Duration::from_secs(60);
const EXACT: SolveParams = SolveParams { relative_gap: 0.0, time_limit_s: 300.0, feasibility_tolerance: None, verbose: false };

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn feeder(name: &str) -> FeederModel {
    FeederModel::from_path(fixture(name)).expect("fixture feeder parses")
}

fn scenario(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_path(fixture(name)).expect("fixture scenario parses")
}

fn profiles(name: &str, s: &ScenarioConfig) -> BTreeMap<String, Profile> {
    load_profiles(File::open(fixture(name)).expect("profile fixture"), &s.horizon()).expect("profiles parse")
}

/// A solved scenario kept for the invariant checks.
struct Solved {
    label: String,
    feeder: FeederModel,
    scenario: ScenarioConfig,
    data: ScenarioData,
    run: Run,
}

#[derive(Default)]
struct Outcome {
    lines: Vec<String>,
    failed: usize,
}

impl Outcome {
    fn record(&mut self, n: usize, title: &str, ok: bool, detail: String) {
        let line = format!("criterion {n:>2} [{}] {title}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.failed += usize::from(!ok);
        self.lines.push(line);
    }
}

fn criterion_1() -> (bool, String) {
    let start = Instant::now();
    let listing = match lsgems_cli::cmd_loops(&fixture("ieee33.feeder.json")) {
        Ok(text) => text,
        Err(e) => return (false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let head = listing.lines().next().unwrap_or_default().to_string();
    let listed = listing.lines().count() - 1;
    (head == "21 loops" && listed == 21 && elapsed < LOOP_LIMIT, format!("`{head}`, {listed} listed, {elapsed:.2?} (limit {LOOP_LIMIT:?})"))
}

fn random_feeder(rng: &mut ChaCha8Rng) -> FeederModel {
    let lsgs = rng.gen_range(2..=8);
    let switches = rng.gen_range(lsgs - 1..=10);
    let mut edges = Vec::new();
    for m in 1..lsgs {
        edges.push((rng.gen_range(0..m), m));
    }
    while edges.len() < switches {
        let a = rng.gen_range(0..lsgs);
        let b = rng.gen_range(0..lsgs);
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    let candidates = rng.gen_range(1..=3.min(lsgs));
    let mut roots: Vec<usize> = (0..lsgs).collect();
    for k in 0..candidates {
        let j = rng.gen_range(k..lsgs);
        roots.swap(k, j);
    }
    let def = serde_json::json!({
        "name": "random",
        "base_kv": 4.16,
        "base_kva": 1000.0,
        "nodes": (0..lsgs).map(|m| serde_json::json!({"id": format!("n{m}"), "peak_kw": 10.0})).collect::<Vec<_>>(),
        "switches": edges.iter().enumerate().map(|(k, (a, b))| serde_json::json!({
            "id": format!("s{k}"), "from": format!("n{a}"), "to": format!("n{b}"),
            "r_ohm": 0.1, "x_ohm": 0.1, "capacity_kva": 1000.0
        })).collect::<Vec<_>>(),
        "lsgs": (0..lsgs).map(|m| serde_json::json!({"id": format!("L{m}"), "nodes": [format!("n{m}")]})).collect::<Vec<_>>(),
        "ders": roots[..candidates].iter().map(|m| serde_json::json!({
            "id": format!("dg{m}"), "node": format!("n{m}"), "kind": "dg", "rated_kw": 100.0
        })).collect::<Vec<_>>(),
    });
    FeederModel::from_json(&def.to_string()).expect("random feeder builds")
}

/// Single-step integer points of the flexible topology rows against the brute-force oracle.
fn oracle_matches(f: &FeederModel) -> Result<(bool, usize), String> {
    let topo = assemble_topology_model(f, Mode::Flexible, 1).map_err(|e| e.to_string())?;
    let mut projection: Vec<VarId> = (0..f.switches.len()).map(|n| topo.index.id(VarKey::usw(SwitchIx(n), 1))).collect();
    projection.extend((0..f.lsgs.len()).map(|m| topo.index.id(VarKey::ulsg(LsgIx(m), 1))));
    projection.extend(f.root_candidates().iter().map(|&m| topo.index.id(VarKey::ur(m, 1))));
    let model_set = enumerate_binary_points(&topo.model, &projection, 5_000_000).map_err(|e| e.to_string())?;
    let oracle: BTreeSet<Vec<bool>> =
        brute_force_topology_oracle(&f.graph).map_err(|e| e.to_string())?.iter().map(|c| c.status_bits(&f.graph)).collect();
    Ok((model_set == oracle, oracle.len()))
}

fn criterion_2() -> (bool, String) {
    let start = Instant::now();
    let mut instances = vec![feeder("fig1.feeder.json")];
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    instances.extend((0..ORACLE_RANDOM_GRAPHS).map(|_| random_feeder(&mut rng)));
    let mut mismatched = Vec::new();
    let mut configs = 0;
    for (k, f) in instances.iter().enumerate() {
        match oracle_matches(f) {
            Ok((true, n)) => configs += n,
            Ok((false, _)) => mismatched.push(format!("instance {k}")),
            Err(e) => mismatched.push(format!("instance {k}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    let ok = mismatched.is_empty() && elapsed < ORACLE_LIMIT;
    let detail = format!(
        "{} graphs, {configs} configurations, {} mismatched{}, {elapsed:.1?} (limit {ORACLE_LIMIT:?})",
        instances.len(),
        mismatched.len(),
        if mismatched.is_empty() { String::new() } else { format!(" ({})", mismatched.join(", ")) }
    );
    (ok, detail)
}

fn solve_exact(f: &FeederModel, s: &ScenarioConfig, data: &ScenarioData) -> Result<Solution, String> {
    let form = assemble_model(f, s, data).map_err(|e| e.to_string())?;
    let sol = lsgems::milp::solve(&form.model, &HighsBackend, &EXACT);
    if sol.status != SolveStatus::Optimal {
        return Err(format!("{} mode: {} {:?}", s.mode.as_str(), sol.status.as_str(), sol.diagnostic));
    }
    Ok(sol)
}

/// Union-find component of each LSG under the closed switches at step `t`.
fn components(f: &FeederModel, view: &SolutionView, t: usize) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..f.lsgs.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        if p[x] != x {
            let r = find(p, p[x]);
            p[x] = r;
        }
        p[x]
    }
    for (n, sw) in f.switches.iter().enumerate() {
        if view.is_on(VarKey::usw(SwitchIx(n), t)) {
            let (a, b) = (find(&mut parent, sw.from_lsg.0), find(&mut parent, sw.to_lsg.0));
            parent[a] = b;
        }
    }
    (0..f.lsgs.len()).map(|m| find(&mut parent, m)).collect()
}

fn criterion_3() -> (bool, String) {
    let mut details = Vec::new();
    let mut ok = true;
    let crafted_f = feeder("crafted.feeder.json");
    let crafted_s = scenario("crafted.scenario.json");
    let crafted_d = ScenarioData::from_profiles(&crafted_f, &crafted_s, &profiles("crafted.profiles.csv", &crafted_s)).unwrap();
    let fig1_f = feeder("fig1.feeder.json");
    let fig1_s = scenario("fig1.scenario.json").truncated(TRUNCATED_STEPS).unwrap();
    let fig1_d = ScenarioData::from_profiles(&fig1_f, &fig1_s, &profiles("fig1.profiles.csv", &fig1_s)).unwrap();
    let radial_f = feeder("radial.feeder.json");
    let radial_s = ScenarioConfig::from_json(r#"{"start": "2021-07-15T00:00", "steps": 4, "msd_hours": 1.0}"#).unwrap();
    let mut radial_d = ScenarioData::zeros(&radial_f, 4);
    for i in 0..radial_f.nodes.len() {
        radial_d.load_kw[i] = vec![radial_f.nodes[i].peak_kw; 4];
    }
    let instances = [("crafted", &crafted_f, &crafted_s, &crafted_d), ("fig1 T=12", &fig1_f, &fig1_s, &fig1_d), ("radial", &radial_f, &radial_s, &radial_d)];
    for (label, f, s, d) in instances {
        let flexible = solve_exact(f, &s.with_mode(Mode::Flexible), d);
        let legacy = solve_exact(f, &s.with_mode(Mode::Legacy), d);
        let (flexible, legacy) = match (flexible, legacy) {
            (Ok(a), Ok(b)) => (a, b),
            (a, b) => {
                ok = false;
                details.push(format!("{label}: {:?} {:?}", a.err(), b.err()));
                continue;
            }
        };
        let (fo, lo) = (flexible.objective_value.unwrap(), legacy.objective_value.unwrap());
        let holds = fo <= lo + OBJECTIVE_ABS_TOL;
        // every legacy schedule is also a flexible one
        let embeds = assemble_model(f, &s.with_mode(Mode::Flexible), d)
            .ok()
            .and_then(|m| verify_feasibility(&m.model, &legacy, 1e-6).ok())
            .is_some_and(|v| v.is_empty());
        ok &= holds && embeds;
        let mut detail = format!("{label}: flexible {fo:.3} <= legacy {lo:.3} {holds}, legacy point flexible-feasible {embeds}");
        if label == "crafted" {
            let strict = fo < lo - OBJECTIVE_ABS_TOL;
            let view = SolutionView::new(&flexible);
            let shared = (1..=s.steps).find(|&t| {
                let cand = f.root_candidates();
                let comp = components(f, &view, t);
                cand.iter().all(|&m| view.is_on(VarKey::ulsg(m, t)))
                    && cand.iter().all(|&m| comp[m.0] == comp[cand[0].0])
                    && (0..f.lsgs.len()).filter(|&m| comp[m] == comp[cand[0].0] && view.is_on(VarKey::ur(LsgIx(m), t))).count() == 1
            });
            ok &= strict && shared.is_some();
            detail += &format!(", strict {strict}, shared microgrid at step {shared:?}");
        }
        details.push(detail);
    }
    (ok, details.join("; "))
}

/// Independent radiality: forest, one root per energized component, count identity.
fn radiality_violations(r: &Solved) -> usize {
    let (f, view) = (&r.feeder, SolutionView::new(&r.run.solution));
    let mut bad = 0;
    for t in 1..=r.scenario.steps {
        let comp = components(f, &view, t);
        let on: Vec<bool> = (0..f.lsgs.len()).map(|m| view.is_on(VarKey::ulsg(LsgIx(m), t))).collect();
        let closed: Vec<usize> = (0..f.switches.len()).filter(|&n| view.is_on(VarKey::usw(SwitchIx(n), t))).collect();
        let roots: Vec<usize> = (0..f.lsgs.len()).filter(|&m| view.is_on(VarKey::ur(LsgIx(m), t))).collect();
        let energized = on.iter().filter(|&&b| b).count();
        let groups: BTreeSet<usize> = (0..f.lsgs.len()).filter(|&m| on[m]).map(|m| comp[m]).collect();
        // a forest on k vertices with c trees has k − c edges
        let forest = closed.len() == energized - groups.len();
        let one_root = groups.iter().all(|&g| roots.iter().filter(|&&m| comp[m] == g).count() == 1);
        let identity = closed.len() + roots.len() == energized;
        let live_ends = closed.iter().all(|&n| on[f.switches[n].from_lsg.0] && on[f.switches[n].to_lsg.0]);
        bad += usize::from(!(forest && one_root && identity && live_ends));
    }
    let reported = r.run.validated.as_ref().map_or(1, |v| v.radiality.violations.len());
    bad + reported
}

fn msd_violations(r: &Solved) -> usize {
    let k = (r.scenario.msd_hours / DT_HOURS).round() as usize;
    let view = SolutionView::new(&r.run.solution);
    let steps = r.scenario.steps;
    let mut bad = 0;
    for m in 0..r.feeder.lsgs.len() {
        let on: Vec<bool> = (1..=steps).map(|t| view.is_on(VarKey::ulsg(LsgIx(m), t))).collect();
        let mut t = 0;
        while t < steps {
            if on[t] && (t == 0 || !on[t - 1]) {
                let len = on[t..].iter().take_while(|&&b| b).count();
                bad += usize::from(len < k.min(steps - t));
                t += len;
            } else {
                t += 1;
            }
        }
    }
    bad
}

fn voltage_violations(r: &Solved) -> usize {
    let (f, view) = (&r.feeder, SolutionView::new(&r.run.solution));
    let mut bad = 0;
    for t in 1..=r.scenario.steps {
        for (i, node) in f.nodes.iter().enumerate() {
            if !view.is_on(VarKey::ulsg(node.lsg, t)) {
                continue;
            }
            let v = view.or_zero(VarKey::voltage(NodeIx(i), t)).max(0.0).sqrt();
            bad += usize::from(v < V_MIN - VOLTAGE_TOL || v > V_MAX + VOLTAGE_TOL);
        }
        for (m, lsg) in f.lsgs.iter().enumerate() {
            if lsg.kind == LsgKind::PvPlant && view.is_on(VarKey::ulsg(LsgIx(m), t)) {
                let anchor = f.anchor_node(LsgIx(m)).expect("PV plant has an anchor");
                let v = view.or_zero(VarKey::voltage(anchor, t)).max(0.0).sqrt();
                bad += usize::from((v - 1.0).abs() > ANCHOR_TOL);
            }
        }
    }
    bad
}

fn soc_violations(r: &Solved) -> usize {
    let (f, view) = (&r.feeder, SolutionView::new(&r.run.solution));
    let mut bad = 0;
    for (k, der) in f.ders.iter().enumerate() {
        let DerKind::Bess(spec) = der.kind else { continue };
        let e = spec.energy_kwh;
        let mut soc = e;
        for t in 1..=r.scenario.steps {
            let key = |s| VarKey::der(s, DerIx(k), t);
            let ch = view.physical(f, key(Symbol::Pch));
            let dis = view.physical(f, key(Symbol::Pdis));
            soc += EFFICIENCY * DT_HOURS * ch - DT_HOURS / EFFICIENCY * dis;
            let reported = view.physical(f, key(Symbol::Soc));
            bad += usize::from((reported - soc).abs() > SOC_TOL_KWH);
            bad += usize::from(reported < 0.2 * e - SOC_TOL_KWH || reported > e + SOC_TOL_KWH);
            soc = reported;
        }
    }
    bad
}

/// Objective rebuilt from loads, weights and switch states against the backend's value.
fn objective_error(r: &Solved) -> f64 {
    let (f, s, view) = (&r.feeder, &r.scenario, SolutionView::new(&r.run.solution));
    let mut total = 0.0;
    for t in 1..=s.steps {
        for (i, node) in f.nodes.iter().enumerate() {
            if !view.is_on(VarKey::ulsg(node.lsg, t)) {
                continue;
            }
            let window = s
                .windows
                .iter()
                .filter(|w| w.nodes.as_ref().map_or(true, |ids| ids.contains(&node.id)))
                .find(|w| (w.window.start_step..=w.window.end_step).contains(&t))
                .map_or(1.0, |w| w.window.weight);
            total -= node.priority_weight * window * r.data.load(NodeIx(i), t) * s.dt_hours();
        }
        for n in 0..f.switches.len() {
            let before = t > 1 && view.is_on(VarKey::usw(SwitchIx(n), t - 1));
            total += s.k1 * f64::from(u8::from(view.is_on(VarKey::usw(SwitchIx(n), t)) != before));
        }
    }
    let reported = r.run.solution.objective_value.unwrap_or(f64::NAN);
    let audited = r.run.validated.as_ref().map_or(f64::INFINITY, |v| v.objective.relative_error());
    ((reported - total).abs() / total.abs().max(1.0)).max(audited)
}

fn solved_runs(label: &str, f: &FeederModel, report: analysis::SweepReport, out: &mut Vec<Solved>, failures: &mut Vec<String>) -> BTreeMap<String, usize> {
    let mut switching = BTreeMap::new();
    for sr in report.runs {
        let tag = format!("{label} {}={}", report.axis.as_str(), sr.value);
        match sr.outcome {
            Ok(run) if run.validated.is_some() => {
                switching.insert(format!("{}", sr.value), analysis::compute_metrics(&run.solution, f, &sr.scenario, &sr.data).switching_actions);
                out.push(Solved { label: tag, feeder: f.clone(), scenario: sr.scenario, data: sr.data, run });
            }
            Ok(run) => failures.push(format!("{tag}: {} {:?}", run.status().as_str(), run.solution.diagnostic)),
            Err(e) => failures.push(format!("{tag}: {e}")),
        }
    }
    switching
}

fn run_one(label: &str, f: &FeederModel, s: &ScenarioConfig, data: ScenarioData, params: &SolveParams) -> Result<(Solved, Duration), String> {
    let start = Instant::now();
    let run = pipeline::run(f, s, &data, &HighsBackend, params).map_err(|e| format!("{label}: {e}"))?;
    let elapsed = start.elapsed();
    if run.validated.is_none() {
        return Err(format!("{label}: {} {:?}", run.status().as_str(), run.solution.diagnostic));
    }
    Ok((Solved { label: label.to_string(), feeder: f.clone(), scenario: s.clone(), data, run }, elapsed))
}

fn invariant(n: usize, title: &str, runs: &[Solved], failures: &[String], count: impl Fn(&Solved) -> usize, out: &mut Outcome) {
    let bad: Vec<String> = runs.iter().filter_map(|r| Some(count(r)).filter(|&c| c > 0).map(|c| format!("{}: {c}", r.label))).collect();
    let ok = bad.is_empty() && failures.is_empty() && !runs.is_empty();
    let mut detail = format!("{} solved scenarios, {} with violations", runs.len(), bad.len());
    if !bad.is_empty() {
        detail += &format!(" ({})", bad.join(", "));
    }
    if !failures.is_empty() {
        detail += &format!("; unsolved: {}", failures.join("; "));
    }
    out.record(n, title, ok, detail);
}

fn criterion_11() -> (bool, String) {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, e.to_string()),
    };
    let args = |out: &Path| lsgems_cli::SolveArgs {
        input: lsgems_cli::InputArgs {
            feeder: fixture("fig1.feeder.json"),
            scenario: fixture("fig1.scenario.json"),
            profiles: vec![fixture("fig1.profiles.csv")],
            seed: lsgems_cli::DEFAULT_SEED,
            mode: None,
        },
        solver: lsgems_cli::SolverArgs { backend: "highs".into(), gap: None, time_limit: None },
        out: out.to_path_buf(),
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        if let Err(e) = lsgems_cli::cmd_solve(&args(out)) {
            return (false, format!("solve failed: {e}"));
        }
    }
    let same = |name: &str| std::fs::read(a.join(name)).ok().zip(std::fs::read(b.join(name)).ok()).is_some_and(|(x, y)| x == y);
    let model = same("model.mps") && same("model.names");
    let size = std::fs::metadata(a.join("model.mps")).map_or(0, |m| m.len());
    (model, format!("model.mps ({size} bytes) and name map identical {model}; metrics.csv identical {}", same("metrics.csv")))
}

fn main() -> ExitCode {
    let mut out = Outcome::default();

    let (ok, detail) = criterion_1();
    out.record(1, "loop count", ok, detail);
    let (ok, detail) = criterion_2();
    out.record(2, "oracle equivalence", ok, detail);
    let (ok, detail) = criterion_3();
    out.record(3, "mode dominance", ok, detail);

    let mut runs = Vec::new();
    let mut failures = Vec::new();
    let f33 = feeder("ieee33.feeder.json");
    let s33 = scenario("ieee33.scenario.json");
    let p33 = profiles("ieee33.profiles.csv", &s33);
    let sweep_start = Instant::now();
    let report = analysis::run_sweep(&f33, &s33, &p33, SweepAxis::MsdHours, &MSD_SWEEP, &HighsBackend, &s33.solve_params());
    let switching = solved_runs("ieee33", &f33, report, &mut runs, &mut failures);
    println!("  (33-bus msd sweep took {:.1?})", sweep_start.elapsed());

    let fig1_f = feeder("fig1.feeder.json");
    let fig1_s = scenario("fig1.scenario.json");
    let fig1_data = ScenarioData::from_profiles(&fig1_f, &fig1_s, &profiles("fig1.profiles.csv", &fig1_s)).unwrap();
    let fig1 = run_one("fig1 T=48", &fig1_f, &fig1_s, fig1_data, &fig1_s.solve_params());
    let s12 = s33.truncated(TRUNCATED_STEPS).unwrap();
    let d12 = ScenarioData::from_profiles(&f33, &s12, &p33).unwrap();
    let params12 = SolveParams { relative_gap: TRUNCATED_GAP, ..s12.solve_params() };
    let t12 = run_one("ieee33 T=12", &f33, &s12, d12, &params12);
    let mut timing = Vec::new();
    for (result, limit) in [(t12, IEEE33_LIMIT), (fig1, FIG1_LIMIT)] {
        match result {
            Ok((solved, elapsed)) => {
                let within = solved.run.status() == SolveStatus::Optimal && elapsed < limit;
                timing.push((within, format!("{} {} in {elapsed:.1?} (limit {limit:?})", solved.label, solved.run.status().as_str())));
                runs.push(solved);
            }
            Err(e) => {
                timing.push((false, e.clone()));
                failures.push(e);
            }
        }
    }

    invariant(4, "radiality invariant", &runs, &failures, radiality_violations, &mut out);
    let msd_runs: Vec<&Solved> = runs.iter().filter(|r| r.label.starts_with("ieee33 msd")).collect();
    let mut msd_failures = failures.clone();
    if msd_runs.len() != MSD_SWEEP.len() {
        msd_failures.push("not every msd value solved".to_string());
    }
    invariant(5, "MSD invariant", &runs, &msd_failures, msd_violations, &mut out);
    invariant(6, "voltage limits", &runs, &failures, voltage_violations, &mut out);
    invariant(7, "SOC conservation", &runs, &failures, soc_violations, &mut out);
    invariant(8, "objective self-consistency", &runs, &failures, |r| usize::from(objective_error(r) > OBJECTIVE_REL_TOL), &mut out);

    match (switching.get("0.5"), switching.get("3")) {
        (Some(&low), Some(&high)) => out.record(9, "switching trend", high <= low, format!("msd 3 h: {high} actions, msd 0.5 h: {low} actions; all {switching:?}")),
        _ => out.record(9, "switching trend", false, format!("missing sweep runs: {switching:?}")),
    }
    let ok = timing.iter().all(|(ok, _)| *ok);
    out.record(10, "desk-scale runtime", ok, timing.into_iter().map(|(_, d)| d).collect::<Vec<_>>().join("; "));
    let (ok, detail) = criterion_11();
    out.record(11, "determinism", ok, detail);

    println!("{} of {} criteria passed", out.lines.len() - out.failed, out.lines.len());
    if out.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
