//! Solver-agnostic MILP representation.
//!
//! A [`MilpModel`] holds named variables, linear rows and a linear objective (always
//! minimised). Backends implement [`SolverBackend`]; [`solve`] wraps a backend call with the
//! binary-integrality check and rounding, [`polish`] re-solves the continuous part with all
//! binaries fixed, and [`verify_feasibility`] checks a solution against every row without
//! consulting the backend.

pub mod enumerate;
mod external;
mod highs;
mod mps;
mod solution_doc;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

pub use external::{ExternalBackend, SOLVER_ENV_VAR};
pub use highs::{read_mps_dimensions, solve_mps_file, HighsBackend, MpsDimensions};
pub use mps::{emit_model_file, MpsDocument, MAX_NAME_LEN};
pub use solution_doc::{read_solution_doc, write_solution_doc};

/// Largest distance from {0, 1} a binary may have before rounding is refused.
pub const BINARY_TOLERANCE: f64 = 1e-5;
/// Absolute tolerance of [`verify_feasibility`].
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate constraint name `{0}`")]
    DuplicateConstraint(String),
    #[error("variable `{name}` has invalid bounds [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite coefficient in `{0}`")]
    NonFinite(String),
    #[error("solution has no value for variable `{0}`")]
    MissingValue(String),
    #[error("solver backend failure: {0}")]
    Backend(String),
    #[error("malformed solution document: {0}")]
    SolutionDocument(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("model is not pure binary: `{0}` is continuous")]
    NotPureBinary(String),
    #[error("enumeration exceeded {0} points")]
    EnumerationLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    /// Build a row, summing repeated variables and dropping zero coefficients.
    pub fn new(name: impl Into<String>, terms: impl IntoIterator<Item = (VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { name: name.into(), terms: merge_terms(terms), sense, rhs }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `activity` violates the row; zero or negative when satisfied.
    pub fn excess(&self, activity: f64) -> f64 {
        match self.sense {
            Sense::Le => activity - self.rhs,
            Sense::Ge => self.rhs - activity,
            Sense::Eq => (activity - self.rhs).abs(),
        }
    }
}

fn merge_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut merged: Vec<(VarId, f64)> = Vec::new();
    let mut slot: HashMap<VarId, usize> = HashMap::new();
    for (v, c) in terms {
        match slot.get(&v) {
            Some(&k) => merged[k].1 += c,
            None => {
                slot.insert(v, merged.len());
                merged.push((v, c));
            }
        }
    }
    merged.retain(|&(_, c)| c != 0.0);
    merged
}

#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    var_lookup: HashMap<String, VarId>,
    constraints: Vec<LinearConstraint>,
    constraint_names: HashMap<String, usize>,
    objective: Vec<(VarId, f64)>,
    start: Vec<(VarId, f64)>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId, MilpError> {
        self.add_variable(name, VarKind::Continuous, lower, upper)
    }

    pub fn add_variable(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> Result<VarId, MilpError> {
        let name = name.into();
        let bad_binary = kind == VarKind::Binary && !(lower == 0.0 && upper == 1.0);
        if lower.is_nan() || upper.is_nan() || lower > upper || lower == f64::INFINITY || upper == f64::NEG_INFINITY || bad_binary {
            return Err(MilpError::InvalidBounds { name, lower, upper });
        }
        if self.var_lookup.contains_key(&name) {
            return Err(MilpError::DuplicateVariable(name));
        }
        let id = VarId(self.variables.len());
        self.var_lookup.insert(name.clone(), id);
        self.variables.push(Variable { name, kind, lower, upper });
        Ok(id)
    }

    pub fn add_constraint(&mut self, row: LinearConstraint) -> Result<usize, MilpError> {
        if !row.rhs.is_finite() || row.terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(MilpError::NonFinite(row.name));
        }
        if self.constraint_names.contains_key(&row.name) {
            return Err(MilpError::DuplicateConstraint(row.name));
        }
        let k = self.constraints.len();
        self.constraint_names.insert(row.name.clone(), k);
        self.constraints.push(row);
        Ok(k)
    }

    /// Add `coefficient · var` to the objective.
    pub fn add_objective_term(&mut self, var: VarId, coefficient: f64) {
        self.objective.push((var, coefficient));
    }

    /// Objective terms with repeated variables summed.
    pub fn objective(&self) -> Vec<(VarId, f64)> {
        merge_terms(self.objective.iter().copied())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.var_lookup.get(name).copied()
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    pub fn constraint(&self, name: &str) -> Option<&LinearConstraint> {
        self.constraint_names.get(name).map(|&k| &self.constraints[k])
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[id.0];
        v.lower = lower;
        v.upper = upper;
    }

    /// Values in variable order, looked up by name.
    pub fn values_of(&self, solution: &Solution) -> Result<Vec<f64>, MilpError> {
        self.variables
            .iter()
            .map(|v| solution.values.get(&v.name).copied().ok_or_else(|| MilpError::MissingValue(v.name.clone())))
            .collect()
    }

    /// Partial assignment a backend may use as its first incumbent. Not part of the model file.
    pub fn set_start(&mut self, values: Vec<(VarId, f64)>) {
        self.start = values;
    }

    pub fn start(&self) -> &[(VarId, f64)] {
        &self.start
    }

    /// Replace every objective term.
    pub fn clear_objective(&mut self) {
        self.objective.clear();
    }

    /// Copy of this model with the given binaries turned into fixed continuous columns.
    fn with_fixed_binaries(&self, values: &[f64]) -> MilpModel {
        let mut lp = self.clone();
        lp.start.clear();
        for (k, v) in lp.variables.iter_mut().enumerate() {
            if v.kind == VarKind::Binary {
                v.kind = VarKind::Continuous;
                v.lower = values[k];
                v.upper = values[k];
            }
        }
        lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Error,
}

impl SolveStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Feasible)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Error => "error",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "optimal" => SolveStatus::Optimal,
            "feasible" => SolveStatus::Feasible,
            "infeasible" => SolveStatus::Infeasible,
            "error" => SolveStatus::Error,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub objective_value: Option<f64>,
    pub values: BTreeMap<String, f64>,
    pub diagnostic: Option<String>,
}

impl Solution {
    pub fn failed(status: SolveStatus, diagnostic: impl Into<String>) -> Self {
        Self { status, objective_value: None, values: BTreeMap::new(), diagnostic: Some(diagnostic.into()) }
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveParams {
    /// Relative MIP gap at which the backend may stop.
    pub relative_gap: f64,
    /// Wall-clock limit in seconds.
    pub time_limit_s: f64,
    /// Override of the backend's primal feasibility tolerance.
    pub feasibility_tolerance: Option<f64>,
    pub verbose: bool,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { relative_gap: 1e-4, time_limit_s: 600.0, feasibility_tolerance: None, verbose: false }
    }
}

/// Raw backend answer; values are indexed by [`VarId`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub status: SolveStatus,
    pub objective_value: Option<f64>,
    pub values: Vec<f64>,
    pub diagnostic: Option<String>,
}

pub trait SolverBackend: Send + Sync {
    fn name(&self) -> &str;

    fn solve_raw(&self, model: &MilpModel, params: &SolveParams) -> Result<RawSolution, MilpError>;

    /// Whether [`MilpModel::start`] reaches the solver.
    fn uses_start(&self) -> bool {
        false
    }
}

/// Solve with `backend`, then check and round the binaries.
///
/// Backend failures come back as a [`SolveStatus::Error`] solution carrying the diagnostic.
pub fn solve(model: &MilpModel, backend: &dyn SolverBackend, params: &SolveParams) -> Solution {
    let raw = match backend.solve_raw(model, params) {
        Ok(raw) => raw,
        Err(e) => return Solution::failed(SolveStatus::Error, e.to_string()),
    };
    if !raw.status.has_solution() {
        return Solution {
            status: raw.status,
            objective_value: None,
            values: BTreeMap::new(),
            diagnostic: raw.diagnostic,
        };
    }
    if raw.values.len() != model.variables.len() {
        return Solution::failed(
            SolveStatus::Error,
            format!("backend returned {} values for {} variables", raw.values.len(), model.variables.len()),
        );
    }
    let mut values = BTreeMap::new();
    for (v, &x) in model.variables.iter().zip(&raw.values) {
        let x = match v.kind {
            VarKind::Binary => {
                let rounded = x.round();
                if (x - rounded).abs() > BINARY_TOLERANCE || !(rounded == 0.0 || rounded == 1.0) {
                    return Solution::failed(SolveStatus::Error, format!("binary `{}` has non-integral value {x}", v.name));
                }
                rounded
            }
            VarKind::Continuous => x,
        };
        values.insert(v.name.clone(), x);
    }
    Solution { status: raw.status, objective_value: raw.objective_value, values, diagnostic: raw.diagnostic }
}

/// Re-solve the continuous part of `solution` with every binary fixed at its value.
///
/// Returns the polished solution, keeping the original status; if the LP fails the input
/// solution is returned unchanged.
pub fn polish(model: &MilpModel, solution: &Solution, backend: &dyn SolverBackend, params: &SolveParams) -> Solution {
    if !solution.status.has_solution() || model.num_binaries() == 0 {
        return solution.clone();
    }
    let Ok(values) = model.values_of(solution) else {
        return solution.clone();
    };
    let lp = model.with_fixed_binaries(&values);
    let lp_params = SolveParams { feasibility_tolerance: Some(1e-9), ..*params };
    match backend.solve_raw(&lp, &lp_params) {
        Ok(raw) if raw.status == SolveStatus::Optimal && raw.values.len() == values.len() => {
            let mut polished = solution.clone();
            for (v, (&x, &fixed)) in model.variables.iter().zip(raw.values.iter().zip(&values)) {
                let x = if v.kind == VarKind::Binary { fixed } else { x };
                polished.values.insert(v.name.clone(), x);
            }
            polished.objective_value = raw.objective_value;
            polished
        }
        _ => solution.clone(),
    }
}

/// Σ cᵢ·xᵢ over the objective terms.
pub fn recompute_objective(model: &MilpModel, solution: &Solution) -> Result<f64, MilpError> {
    model
        .objective()
        .iter()
        .map(|&(v, c)| {
            let name = &model.variables[v.0].name;
            solution.value(name).map(|x| c * x).ok_or_else(|| MilpError::MissingValue(name.clone()))
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FeasibilityViolation {
    /// Row or variable name.
    pub subject: String,
    pub detail: String,
    pub excess: f64,
}

/// Check every bound and every row of `model` at `solution`, independent of any backend.
pub fn verify_feasibility(model: &MilpModel, solution: &Solution, tolerance: f64) -> Result<Vec<FeasibilityViolation>, MilpError> {
    let values = model.values_of(solution)?;
    let mut out = Vec::new();
    for (v, &x) in model.variables.iter().zip(&values) {
        let excess = (v.lower - x).max(x - v.upper);
        if excess > tolerance || !x.is_finite() {
            out.push(FeasibilityViolation {
                subject: v.name.clone(),
                detail: format!("value {x} outside [{}, {}]", v.lower, v.upper),
                excess,
            });
        }
        if v.kind == VarKind::Binary && x != 0.0 && x != 1.0 {
            out.push(FeasibilityViolation { subject: v.name.clone(), detail: format!("binary value {x}"), excess: 0.5 });
        }
    }
    for row in &model.constraints {
        let activity = row.activity(&values);
        let excess = row.excess(activity);
        if excess > tolerance {
            out.push(FeasibilityViolation {
                subject: row.name.clone(),
                detail: format!("activity {activity} {} {}", row.sense, row.rhs),
                excess,
            });
        }
    }
    Ok(out)
}
