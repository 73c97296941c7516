//! Command-line driver: solve, validate, sweep, list loops and synthesize profiles.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use lsgems::analysis::{self, RunSummary, SweepAxis, DOMINANCE_THRESHOLD_STEPS};
use lsgems::feeder::{enumerate_loops, validate_feeder, FeederModel};
use lsgems::formulation::{assemble_model, Formulation, Mode, ScenarioConfig, ScenarioData};
use lsgems::milp::{emit_model_file, read_solution_doc, write_solution_doc, ExternalBackend, HighsBackend, Solution, SolveParams, SolveStatus, SolverBackend};
use lsgems::pipeline::{self, Run, Validated};
use lsgems::profile::{load_profiles, resample, synthesize_profiles, write_profiles_csv, Profile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;
pub const EXIT_BACKEND: u8 = 5;

pub const DEFAULT_SEED: u64 = 2021;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn with(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "lsgems", version, about = "Microgrid energy management scheduler for load switching groups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, solve and validate one scenario and write its artifacts.
    Solve(SolveArgs),
    /// Re-check a solution file against a feeder and scenario.
    Validate(ValidateArgs),
    /// Solve one scenario per value of a parameter and write comparison tables.
    Sweep(SweepArgs),
    /// List the simple loops of a feeder's LSG graph.
    Loops {
        #[arg(long)]
        feeder: PathBuf,
    },
    /// Write seeded synthetic load and PV profiles for a feeder.
    SynthProfiles {
        #[arg(long)]
        feeder: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub feeder: PathBuf,
    #[arg(long)]
    pub scenario: PathBuf,
    /// Profile CSV files; synthetic profiles from `--seed` are used when none is given.
    #[arg(long, num_args = 1..)]
    pub profiles: Vec<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_parser = ["flexible", "legacy"])]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// `highs` (in process) or `external` (executable from LSGEMS_SOLVER).
    #[arg(long, default_value = "highs")]
    pub backend: String,
    #[arg(long)]
    pub gap: Option<f64>,
    #[arg(long)]
    pub time_limit: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub solution: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// `msd=0.5,1,2,3`, `pv=0.5,1,1.5,2`, or a bare axis name for its default values.
    #[arg(long)]
    pub axis: String,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything a run reads, as recorded next to its artifacts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub feeder: PathBuf,
    pub scenario: PathBuf,
    pub profiles: Vec<PathBuf>,
    pub backend: String,
    pub out: PathBuf,
    pub seed: u64,
}

pub struct Inputs {
    pub feeder: FeederModel,
    pub scenario: ScenarioConfig,
    pub profiles: BTreeMap<String, Profile>,
}

impl Inputs {
    pub fn data(&self) -> CliResult<ScenarioData> {
        ScenarioData::from_profiles(&self.feeder, &self.scenario, &self.profiles).map_err(|e| CliError::input(e.to_string()))
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::input(format!("{what} file not found: {}", path.display())))
    }
}

pub fn load_feeder(path: &Path) -> CliResult<FeederModel> {
    require_file(path, "feeder")?;
    let feeder = FeederModel::from_path(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let report = validate_feeder(&feeder);
    if report.has_errors() {
        let lines: Vec<String> = report.findings.iter().map(|f| format!("  {}: {}", f.code, f.message)).collect();
        return Err(CliError::input(format!("{}: invalid feeder\n{}", path.display(), lines.join("\n"))));
    }
    Ok(feeder)
}

pub fn load_inputs(args: &InputArgs) -> CliResult<Inputs> {
    let feeder = load_feeder(&args.feeder)?;
    require_file(&args.scenario, "scenario")?;
    let mut scenario = ScenarioConfig::from_path(&args.scenario).map_err(|e| CliError::input(format!("{}: {e}", args.scenario.display())))?;
    if let Some(mode) = &args.mode {
        scenario = scenario.with_mode(mode.parse::<Mode>().map_err(CliError::input)?);
    }
    let horizon = scenario.horizon();
    let mut profiles = BTreeMap::new();
    if args.profiles.is_empty() {
        for p in synthesize_profiles(&feeder, &horizon, args.seed) {
            let p = resample(&p, horizon.step_minutes).map_err(|e| CliError::input(e.to_string()))?;
            profiles.insert(p.subject_id.clone(), p);
        }
    }
    for path in &args.profiles {
        require_file(path, "profile")?;
        let file = File::open(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        let loaded = load_profiles(file, &horizon).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        for (id, p) in loaded {
            if profiles.insert(id.clone(), p).is_some() {
                return Err(CliError::input(format!("{}: subject `{id}` appears in more than one profile file", path.display())));
            }
        }
    }
    Ok(Inputs { feeder, scenario, profiles })
}

pub fn backend(name: &str) -> CliResult<Box<dyn SolverBackend>> {
    match name {
        "highs" => Ok(Box::new(HighsBackend)),
        "external" => ExternalBackend::from_env().map(|b| Box::new(b) as Box<dyn SolverBackend>).map_err(|e| CliError::with(EXIT_BACKEND, e.to_string())),
        other => Err(CliError::input(format!("unknown backend `{other}` (expected highs or external)"))),
    }
}

fn solve_params(scenario: &ScenarioConfig, solver: &SolverArgs) -> SolveParams {
    let mut params = scenario.solve_params();
    if let Some(gap) = solver.gap {
        params.relative_gap = gap;
    }
    if let Some(limit) = solver.time_limit {
        params.time_limit_s = limit;
    }
    params
}

fn io_error(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn csv_out(path: &Path, result: csv::Result<()>) -> CliResult<()> {
    result.map_err(|e| io_error(path, e))
}

/// Model file and name sidecar for an assembled formulation.
pub fn write_model(formulation: &Formulation, out: &Path) -> CliResult<()> {
    let doc = emit_model_file(&formulation.model);
    write_text(&out.join("model.mps"), &doc.text)?;
    write_text(&out.join("model.names"), &doc.sidecar())
}

pub fn write_solution(solution: &Solution, path: &Path) -> CliResult<()> {
    let text = write_solution_doc(solution.status, solution.objective_value, solution.values.iter().map(|(k, &v)| (k.as_str(), v)));
    write_text(path, &text)
}

pub fn read_solution(path: &Path) -> CliResult<Solution> {
    require_file(path, "solution")?;
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let (status, objective_value, values) = read_solution_doc(&text).map_err(|e| io_error(path, e))?;
    Ok(Solution { status, objective_value, values, diagnostic: None })
}

#[derive(Serialize)]
struct ValidationDoc<'a> {
    passed: bool,
    objective_reported: f64,
    objective_recomputed: f64,
    objective_relative_error: f64,
    radiality: &'a lsgems::validation::Report,
    operational: &'a lsgems::validation::Report,
    model_rows: &'a lsgems::validation::Report,
}

pub fn write_validation(validated: &Validated, path: &Path) -> CliResult<()> {
    let doc = ValidationDoc {
        passed: validated.passed(),
        objective_reported: validated.objective.reported,
        objective_recomputed: validated.objective.recomputed,
        objective_relative_error: validated.objective.relative_error(),
        radiality: &validated.radiality,
        operational: &validated.operational,
        model_rows: &validated.model_rows,
    };
    let text = serde_json::to_string_pretty(&doc).map_err(|e| io_error(path, e))?;
    write_text(path, &(text + "\n"))
}

fn violation_summary(validated: &Validated) -> String {
    let mut lines: Vec<String> = [&validated.radiality, &validated.operational, &validated.model_rows]
        .iter()
        .flat_map(|r| r.violations.iter())
        .take(10)
        .map(|v| format!("  [{}] {}: {}", v.code, v.subject, v.message))
        .collect();
    if validated.objective.relative_error() > 1e-6 {
        lines.push(format!(
            "  objective mismatch: reported {} recomputed {}",
            validated.objective.reported, validated.objective.recomputed
        ));
    }
    lines.join("\n")
}

fn status_error(run: &Run) -> CliError {
    let detail = run.solution.diagnostic.clone().unwrap_or_default();
    match run.status() {
        SolveStatus::Infeasible => CliError::with(EXIT_INFEASIBLE, format!("infeasible: {detail}").trim_end_matches([' ', ':']).to_string()),
        _ => CliError::with(EXIT_BACKEND, format!("backend failure: {detail}")),
    }
}

/// Per-run reports for a solved scenario.
fn write_reports(run: &Run, inputs: &Inputs, data: &ScenarioData, out: &Path) -> CliResult<()> {
    let (feeder, scenario) = (&inputs.feeder, &inputs.scenario);
    let metrics = analysis::compute_metrics(&run.solution, feeder, scenario, data);
    let windows: Vec<String> = scenario.windows.iter().map(|w| w.window.label.clone()).collect();
    let summary = RunSummary { label: scenario.name.clone(), status: run.status().as_str().to_string(), metrics: Some(metrics.clone()) };
    let path = out.join("metrics.csv");
    csv_out(&path, analysis::write_metrics_table(&[summary], feeder, &windows, create(&path)?))?;
    let path = out.join("timeline.csv");
    csv_out(&path, analysis::write_timeline(&metrics, feeder, create(&path)?))?;
    let path = out.join("soc.csv");
    csv_out(&path, analysis::write_soc(&run.solution, feeder, scenario, create(&path)?))?;
    let path = out.join("dispatch.csv");
    csv_out(&path, analysis::write_dispatch(&run.solution, feeder, scenario, data, create(&path)?))?;
    Ok(())
}

pub fn manifest(input: &InputArgs, backend: &str, out: &Path) -> RunManifest {
    RunManifest {
        feeder: input.feeder.clone(),
        scenario: input.scenario.clone(),
        profiles: input.profiles.clone(),
        backend: backend.to_string(),
        out: out.to_path_buf(),
        seed: input.seed,
    }
}

pub fn cmd_solve(args: &SolveArgs) -> CliResult<String> {
    let inputs = load_inputs(&args.input)?;
    let data = inputs.data()?;
    let backend = backend(&args.solver.backend)?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let m = manifest(&args.input, &args.solver.backend, &args.out);
    write_text(&args.out.join("manifest.json"), &(serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n"))?;

    let formulation = assemble_model(&inputs.feeder, &inputs.scenario, &data).map_err(|e| CliError::input(e.to_string()))?;
    write_model(&formulation, &args.out)?;
    let params = solve_params(&inputs.scenario, &args.solver);
    let run = pipeline::run_formulation(formulation, &inputs.feeder, &inputs.scenario, &data, backend.as_ref(), &params)
        .map_err(|e| CliError::with(EXIT_VALIDATION, e.to_string()))?;
    let Some(validated) = &run.validated else {
        return Err(status_error(&run));
    };
    write_solution(&run.solution, &args.out.join("solution.sol"))?;
    write_validation(validated, &args.out.join("validation.json"))?;
    write_reports(&run, &inputs, &data, &args.out)?;
    if !validated.passed() {
        return Err(CliError::with(EXIT_VALIDATION, format!("validation failed\n{}", violation_summary(validated))));
    }
    Ok(format!(
        "{} objective {:.3} ({} steps, {} variables, {} rows); artifacts in {}",
        run.status().as_str(),
        validated.objective.recomputed,
        inputs.scenario.steps,
        run.formulation.model.variables().len(),
        run.formulation.model.constraints().len(),
        args.out.display()
    ))
}

pub fn cmd_validate(args: &ValidateArgs) -> CliResult<String> {
    let inputs = load_inputs(&args.input)?;
    let data = inputs.data()?;
    let solution = read_solution(&args.solution)?;
    let formulation = assemble_model(&inputs.feeder, &inputs.scenario, &data).map_err(|e| CliError::input(e.to_string()))?;
    let model_names: Vec<&str> = formulation.model.variables().iter().map(|v| v.name.as_str()).collect();
    let missing = model_names.iter().filter(|n| !solution.values.contains_key(**n)).count();
    let unknown = solution.values.keys().filter(|k| formulation.model.var_id(k).is_none()).count();
    if missing + unknown > 0 {
        return Err(CliError::with(
            EXIT_VALIDATION,
            format!("index mismatch: {missing} model variables missing from the solution, {unknown} solution values unknown to the model"),
        ));
    }
    let validated = pipeline::validate(&formulation, &solution, &inputs.feeder, &inputs.scenario, &data)
        .map_err(|e| CliError::with(EXIT_VALIDATION, format!("validation failed: {e}")))?;
    if !validated.passed() {
        return Err(CliError::with(EXIT_VALIDATION, format!("validation failed\n{}", violation_summary(&validated))));
    }
    let checks = validated.radiality.checks + validated.operational.checks + validated.model_rows.checks;
    Ok(format!("valid: {checks} checks passed, objective {:.3}", validated.objective.recomputed))
}

/// Parse `axis[=v1,v2,...]`.
pub fn parse_axis(spec: &str) -> CliResult<(SweepAxis, Vec<f64>)> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(CliError::input("empty --axis (expected msd=0.5,1,2,3 or pv=0.5,1,1.5,2)"));
    }
    let (name, values) = match spec.split_once('=') {
        Some((name, values)) => (name, Some(values)),
        None => (spec, None),
    };
    let axis: SweepAxis = name.trim().parse().map_err(CliError::input)?;
    let values = match values {
        None => axis.default_values(),
        Some(list) => list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| CliError::input(format!("bad axis value `{v}`"))))
            .collect::<CliResult<Vec<_>>>()?,
    };
    if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(CliError::input(format!("axis `{spec}` needs positive values")));
    }
    Ok((axis, values))
}

pub fn cmd_sweep(args: &SweepArgs) -> CliResult<String> {
    let (axis, values) = parse_axis(&args.axis)?;
    let inputs = load_inputs(&args.input)?;
    let backend = backend(&args.solver.backend)?;
    fs::create_dir_all(&args.out).map_err(|e| io_error(&args.out, e))?;
    let params = solve_params(&inputs.scenario, &args.solver);
    let report = analysis::run_sweep(&inputs.feeder, &inputs.scenario, &inputs.profiles, axis, &values, backend.as_ref(), &params);
    let path = args.out.join("table_metrics.csv");
    csv_out(&path, analysis::write_metrics_table(&report.summaries(&inputs.feeder), &inputs.feeder, &report.window_labels(), create(&path)?))?;
    let path = args.out.join("table_topologies.csv");
    csv_out(&path, analysis::write_topology_table(&report, DOMINANCE_THRESHOLD_STEPS, create(&path)?))?;
    let mut lines = Vec::new();
    for run in &report.runs {
        let state = match &run.outcome {
            Ok(r) => match &r.validated {
                Some(v) if v.passed() => format!("{} objective {:.3}", r.status().as_str(), v.objective.recomputed),
                Some(_) => "validation failed".to_string(),
                None => r.status().as_str().to_string(),
            },
            Err(e) => format!("error: {e}"),
        };
        lines.push(format!("{}={}: {state}", axis.as_str(), run.value));
    }
    lines.push(format!("tables in {}", args.out.display()));
    Ok(lines.join("\n"))
}

pub fn cmd_loops(feeder: &Path) -> CliResult<String> {
    let feeder = load_feeder(feeder)?;
    let loops = enumerate_loops(&feeder.graph);
    let mut out = vec![format!("{} {}", loops.len(), if loops.len() == 1 { "loop" } else { "loops" })];
    for (k, l) in loops.loops.iter().enumerate() {
        let ids: Vec<&str> = l.iter().map(|&n| feeder.switches[n.0].id.as_str()).collect();
        out.push(format!("{:>3}: {}", k + 1, ids.join(" ")));
    }
    Ok(out.join("\n"))
}

pub fn cmd_synth_profiles(feeder: &Path, scenario: &Path, seed: u64, out: &Path) -> CliResult<String> {
    let feeder = load_feeder(feeder)?;
    require_file(scenario, "scenario")?;
    let scenario = ScenarioConfig::from_path(scenario).map_err(|e| CliError::input(format!("{}: {e}", scenario.display())))?;
    let profiles = synthesize_profiles(&feeder, &scenario.horizon(), seed);
    csv_out(out, write_profiles_csv(&profiles, create(out)?))?;
    Ok(format!("{} profiles written to {}", profiles.len(), out.display()))
}

pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Loops { feeder } => cmd_loops(feeder),
        Command::SynthProfiles { feeder, scenario, seed, out } => cmd_synth_profiles(feeder, scenario, *seed, out),
    }
}

pub fn main_with(cli: &Cli) -> ExitCode {
    match execute(cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_specs() {
        assert_eq!(parse_axis("msd=0.5,1,2,3").unwrap(), (SweepAxis::MsdHours, vec![0.5, 1.0, 2.0, 3.0]));
        assert_eq!(parse_axis("pv").unwrap(), (SweepAxis::PvScale, vec![0.5, 1.0, 1.5, 2.0]));
        assert_eq!(parse_axis("").unwrap_err().code, EXIT_INPUT);
        assert_eq!(parse_axis("msd=").unwrap_err().code, EXIT_INPUT);
        assert_eq!(parse_axis("speed=1").unwrap_err().code, EXIT_INPUT);
    }
}
