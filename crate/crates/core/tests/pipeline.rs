use lsgems::feeder::FeederModel;
use lsgems::formulation::{assemble_model, ScenarioConfig, ScenarioData, SolutionView, VarKey};
use lsgems::milp::{HighsBackend, SolveParams, SolveStatus};
use lsgems::pipeline::{block_start, run};
use lsgems::profile::load_profiles;

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn fig1(steps: usize, msd_hours: f64) -> (FeederModel, ScenarioConfig, ScenarioData) {
    let f = FeederModel::from_path(fixture("fig1.feeder.json")).unwrap();
    let s = ScenarioConfig::from_path(fixture("fig1.scenario.json"))
        .unwrap()
        .truncated(steps)
        .unwrap()
        .with_msd_hours(msd_hours)
        .unwrap();
    let csv = std::fs::read(fixture("fig1.profiles.csv")).unwrap();
    let profiles = load_profiles(csv.as_slice(), &s.horizon()).unwrap();
    let data = ScenarioData::from_profiles(&f, &s, &profiles).unwrap();
    (f, s, data)
}

#[test]
fn block_seed_holds_topology_per_block() {
    let (f, s, data) = fig1(12, 1.5);
    let formulation = assemble_model(&f, &s, &data).unwrap();
    let params = SolveParams { time_limit_s: 60.0, ..SolveParams::default() };
    let start = block_start(&formulation, 3, &HighsBackend, &params).expect("block seed");
    let value = |key: VarKey| {
        let id = formulation.index.id(key);
        start.iter().find(|(v, _)| *v == id).map(|(_, x)| *x).unwrap()
    };
    for (m, _) in f.lsgs.iter().enumerate() {
        for t in 1..=s.steps {
            let lead = t - (t - 1) % 3;
            let key = VarKey::ulsg(lsgems::feeder::LsgIx(m), t);
            assert_eq!(value(key), value(VarKey { t: lead, ..key }), "LSG {m} step {t}");
        }
    }
}

#[test]
fn seeded_run_is_validated_and_no_worse_than_dark() {
    let (f, s, data) = fig1(12, 1.0);
    let params = SolveParams { relative_gap: 0.0, time_limit_s: 60.0, ..SolveParams::default() };
    let result = run(&f, &s, &data, &HighsBackend, &params).unwrap();
    assert_eq!(result.status(), SolveStatus::Optimal);
    let validated = result.validated.as_ref().unwrap();
    assert!(validated.passed());
    assert!(result.solution.objective_value.unwrap() < 0.0);
    let served = (0..f.lsgs.len())
        .flat_map(|m| (1..=s.steps).map(move |t| VarKey::ulsg(lsgems::feeder::LsgIx(m), t)))
        .filter(|&k| SolutionView::new(&result.solution).or_zero(k) > 0.5)
        .count();
    assert!(served > 0);
}
