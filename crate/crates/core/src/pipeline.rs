//! Solve, clean up and validate one scenario.

use std::time::Instant;

use serde::Serialize;

use crate::feeder::{FeederModel, LsgIx, SwitchIx};
use crate::formulation::{assemble_model, Formulation, FormulationError, ScenarioConfig, ScenarioData, SolutionView, Symbol, VarKey};
use crate::milp::{
    polish, recompute_objective, solve, verify_feasibility, LinearConstraint, MilpModel, Sense, Solution, SolveParams, SolveStatus, SolverBackend, VarId,
    VarKind, FEASIBILITY_TOLERANCE,
};
use crate::validation::{check_operational, check_radiality, extract_snapshots, Report, TopologySnapshot, ValidationError};

/// Backend objective against the one recomputed from the final values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveAudit {
    pub reported: f64,
    pub recomputed: f64,
}

impl ObjectiveAudit {
    pub fn relative_error(&self) -> f64 {
        (self.reported - self.recomputed).abs() / self.recomputed.abs().max(1.0)
    }
}

#[derive(Debug, Clone)]
pub struct Validated {
    pub snapshots: Vec<TopologySnapshot>,
    pub radiality: Report,
    pub operational: Report,
    /// Model rows and bounds checked at the final values.
    pub model_rows: Report,
    pub objective: ObjectiveAudit,
}

impl Validated {
    pub fn passed(&self) -> bool {
        self.radiality.passed() && self.operational.passed() && self.model_rows.passed() && self.objective.relative_error() <= 1e-6
    }
}

#[derive(Debug, Clone)]
pub struct Run {
    pub formulation: Formulation,
    pub solution: Solution,
    /// Absent when the backend returned no solution.
    pub validated: Option<Validated>,
}

/// Set every `USO` to `|USW_t − USW_{t−1}|`, the smallest value its rows allow.
pub fn normalize_switching(solution: &mut Solution, feeder: &FeederModel, steps: usize) {
    for n in 0..feeder.switches.len() {
        let mut before = 0.0;
        for t in 1..=steps {
            let now = SolutionView::new(solution).or_zero(VarKey::usw(SwitchIx(n), t));
            solution.values.insert(VarKey::uso(SwitchIx(n), t).name(), (now - before).abs());
            before = now;
        }
    }
}

/// Check a solution of `formulation` without consulting any backend.
pub fn validate(
    formulation: &Formulation,
    solution: &Solution,
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
) -> Result<Validated, ValidationError> {
    let snapshots = extract_snapshots(solution, feeder, scenario.steps)?;
    let mut radiality = Report::default();
    for s in &snapshots {
        radiality.merge(check_radiality(s, &feeder.graph));
    }
    let operational = check_operational(solution, feeder, scenario, data)?;
    let rows = verify_feasibility(&formulation.model, solution, FEASIBILITY_TOLERANCE)
        .map_err(|e| ValidationError::Model(e.to_string()))?;
    let model_rows = Report {
        checks: formulation.model.variables().len() + formulation.model.constraints().len(),
        violations: rows
            .into_iter()
            .map(|v| crate::validation::Violation { code: "model-row", t: None, subject: v.subject, message: v.detail })
            .collect(),
    };
    let recomputed = recompute_objective(&formulation.model, solution).map_err(|e| ValidationError::Model(e.to_string()))?;
    let reported = solution.objective_value.unwrap_or(f64::NAN);
    Ok(Validated { snapshots, radiality, operational, model_rows, objective: ObjectiveAudit { reported, recomputed } })
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

/// Assemble, solve, polish the continuous part, normalize switching actions and validate.
pub fn run(
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
    backend: &dyn SolverBackend,
    params: &SolveParams,
) -> Result<Run, PipelineError> {
    let formulation = assemble_model(feeder, scenario, data)?;
    run_formulation(formulation, feeder, scenario, data, backend, params)
}

/// Share of the time limit given to each block-constant pre-solve and to the switching
/// refinement, capped at [`STAGE_MAX_S`].
pub const STAGE_TIME_SHARE: f64 = 0.1;
pub const STAGE_MAX_S: f64 = 30.0;

/// Shortest block of the block-constant seed, in steps.
pub const SEED_MIN_BLOCK: usize = 6;

/// Topology symbols held constant within a block by [`block_start`].
const BLOCK_SYMBOLS: [Symbol; 5] = [Symbol::Ulsg, Symbol::Usw, Symbol::Ur, Symbol::BetaFwd, Symbol::BetaBwd];

fn binary_values(model: &MilpModel, solution: &Solution) -> Vec<(VarId, f64)> {
    model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(k, v)| (VarId(k), solution.values.get(&v.name).copied().unwrap_or(0.0).round()))
        .collect()
}

/// Binary values of the best schedule whose topology only changes every `block` steps.
///
/// With `block` no shorter than the minimum service duration, every such schedule meets the service
/// duration rows, and the restricted problem has a fraction of the topology decisions.
pub fn block_start(formulation: &Formulation, block: usize, backend: &dyn SolverBackend, params: &SolveParams) -> Option<Vec<(VarId, f64)>> {
    let mut model = formulation.model.clone();
    let mut rows = Vec::new();
    for v in model.variables() {
        let Some(key) = VarKey::parse(&v.name) else { continue };
        if !BLOCK_SYMBOLS.contains(&key.symbol) || (key.t - 1) % block == 0 {
            continue;
        }
        let first = VarKey { t: key.t - (key.t - 1) % block, ..key };
        let (this, lead) = (formulation.index.id(key), formulation.index.id(first));
        rows.push(LinearConstraint::new(format!("block.{}", v.name), [(this, 1.0), (lead, -1.0)], Sense::Eq, 0.0));
    }
    for row in rows {
        model.add_constraint(row).ok()?;
    }
    let seed = solve(&model, backend, &SolveParams { relative_gap: 1e-3, ..*params });
    seed.status.has_solution().then(|| binary_values(&model, &seed))
}

/// Re-solve with the LSG service schedule of `solution` held fixed, which leaves only the
/// switching term of the objective free. Returns the result when it is no worse than `solution`.
pub fn refine_switching(
    formulation: &Formulation,
    solution: &Solution,
    feeder: &FeederModel,
    steps: usize,
    backend: &dyn SolverBackend,
    params: &SolveParams,
) -> Option<Solution> {
    let mut model = formulation.model.clone();
    for m in 0..feeder.lsgs.len() {
        for t in 1..=steps {
            let key = VarKey::ulsg(LsgIx(m), t);
            let v = SolutionView::new(solution).or_zero(key).round();
            model.set_bounds(formulation.index.id(key), v, v);
        }
    }
    let start = binary_values(&model, solution);
    model.set_start(start);
    let refined = solve(&model, backend, &SolveParams { relative_gap: 0.0, ..*params });
    let better = refined.status.has_solution() && refined.objective_value? <= solution.objective_value? + 1e-9;
    better.then(|| Solution { status: solution.status, ..refined })
}

pub fn run_formulation(
    mut formulation: Formulation,
    feeder: &FeederModel,
    scenario: &ScenarioConfig,
    data: &ScenarioData,
    backend: &dyn SolverBackend,
    params: &SolveParams,
) -> Result<Run, PipelineError> {
    let started = Instant::now();
    let total = params.time_limit_s;
    let stage = (total * STAGE_TIME_SHARE).min(STAGE_MAX_S);
    let staged = backend.uses_start() && !formulation.model.start().is_empty();
    if staged {
        let k = scenario.k_msd()?;
        let coarse = k.max(SEED_MIN_BLOCK);
        let fine = (k.max(2)..=coarse).find(|d| coarse % d == 0).unwrap_or(coarse);
        let mut blocks = vec![coarse, fine];
        blocks.dedup();
        for block in blocks {
            if let Some(start) = block_start(&formulation, block, backend, &SolveParams { time_limit_s: stage, ..*params }) {
                formulation.model.set_start(start);
            }
        }
    }
    let reserve = if staged { stage } else { 0.0 };
    let main = SolveParams { time_limit_s: (total - reserve - started.elapsed().as_secs_f64()).max(1.0), ..*params };
    let mut raw = solve(&formulation.model, backend, &main);
    if staged && raw.status.has_solution() {
        let limit = (total - started.elapsed().as_secs_f64()).clamp(1.0, stage.max(1.0));
        if let Some(refined) = refine_switching(&formulation, &raw, feeder, scenario.steps, backend, &SolveParams { time_limit_s: limit, ..*params }) {
            raw = refined;
        }
    }
    if !raw.status.has_solution() {
        return Ok(Run { formulation, solution: raw, validated: None });
    }
    let mut solution = polish(&formulation.model, &raw, backend, params);
    normalize_switching(&mut solution, feeder, scenario.steps);
    let validated = validate(&formulation, &solution, feeder, scenario, data)?;
    Ok(Run { formulation, solution, validated: Some(validated) })
}

impl Run {
    pub fn status(&self) -> SolveStatus {
        self.solution.status
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::HighsBackend;
    use crate::profile::load_profiles;

    fn fixture(name: &str) -> String {
        format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
    }

    fn crafted() -> (FeederModel, ScenarioConfig, ScenarioData) {
        let f = FeederModel::from_path(fixture("crafted.feeder.json")).unwrap();
        let s = ScenarioConfig::from_path(fixture("crafted.scenario.json")).unwrap();
        let csv = std::fs::read(fixture("crafted.profiles.csv")).unwrap();
        let profiles = load_profiles(csv.as_slice(), &s.horizon()).unwrap();
        let data = ScenarioData::from_profiles(&f, &s, &profiles).unwrap();
        (f, s, data)
    }

    fn params() -> SolveParams {
        SolveParams { relative_gap: 0.0, time_limit_s: 60.0, ..SolveParams::default() }
    }

    #[test]
    fn solved_fixture_validates() {
        let (f, s, data) = crafted();
        let run = run(&f, &s, &data, &HighsBackend, &params()).unwrap();
        assert_eq!(run.status(), SolveStatus::Optimal);
        let v = run.validated.as_ref().unwrap();
        assert!(v.passed(), "{:?} {:?} {:?}", v.radiality.violations, v.operational.violations, v.model_rows.violations);
        assert_eq!(v.snapshots.len(), s.steps);
        assert!(v.objective.relative_error() <= 1e-6);
    }

    #[test]
    fn fractional_status_is_rejected() {
        let (f, s, data) = crafted();
        let run = run(&f, &s, &data, &HighsBackend, &params()).unwrap();
        let mut tampered = run.solution.clone();
        tampered.values.insert("ULSG.1.2".into(), 0.5);
        let err = validate(&run.formulation, &tampered, &f, &s, &data).unwrap_err();
        assert!(matches!(err, ValidationError::NonIntegral { .. }), "{err:?}");
    }

    #[test]
    fn flipped_status_breaks_model_rows() {
        let (f, s, data) = crafted();
        let run = run(&f, &s, &data, &HighsBackend, &params()).unwrap();
        let mut tampered = run.solution.clone();
        let name = VarKey::ulsg(f.lsg_by_id("LOAD").unwrap(), 2).name();
        let flipped = 1.0 - tampered.values[&name];
        tampered.values.insert(name, flipped);
        let outcome = validate(&run.formulation, &tampered, &f, &s, &data);
        assert!(outcome.map_or(true, |v| !v.passed()));
    }

    #[test]
    fn switching_actions_follow_switch_states() {
        let f = FeederModel::from_path(fixture("radial.feeder.json")).unwrap();
        let mut sol = Solution::failed(SolveStatus::Feasible, "");
        for (t, v) in [1.0, 1.0, 0.0, 1.0].into_iter().enumerate() {
            sol.values.insert(VarKey::usw(SwitchIx(0), t + 1).name(), v);
        }
        normalize_switching(&mut sol, &f, 4);
        let uso: Vec<f64> = (1..=4).map(|t| sol.values[&VarKey::uso(SwitchIx(0), t).name()]).collect();
        assert_eq!(uso, vec![1.0, 0.0, 1.0, 1.0]);
        let idle: Vec<f64> = (1..=4).map(|t| sol.values[&VarKey::uso(SwitchIx(1), t).name()]).collect();
        assert_eq!(idle, vec![0.0; 4]);
    }
}
