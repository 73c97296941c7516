//! In-process HiGHS backend over the raw C API.

use std::ffi::{c_void, CStr, CString};
use std::os::raw::c_char;
use std::path::Path;

use highs_sys::*;

use super::{MilpError, MilpModel, RawSolution, Sense, SolveParams, SolveStatus, SolverBackend, VarKind};

/// Owned `Highs` instance.
struct Highs(*mut c_void);

impl Drop for Highs {
    fn drop(&mut self) {
        unsafe { Highs_destroy(self.0) }
    }
}

fn cstring(s: &str) -> CString {
    CString::new(s).expect("option names contain no NUL")
}

fn check(status: HighsInt, what: &str) -> Result<(), MilpError> {
    if status == STATUS_ERROR {
        Err(MilpError::Backend(format!("HiGHS call {what} failed")))
    } else {
        Ok(())
    }
}

impl Highs {
    fn new() -> Self {
        Self(unsafe { Highs_create() })
    }

    fn set_bool(&mut self, option: &str, value: bool) -> Result<(), MilpError> {
        let name = cstring(option);
        check(unsafe { Highs_setBoolOptionValue(self.0, name.as_ptr(), HighsInt::from(value)) }, option)
    }

    fn set_double(&mut self, option: &str, value: f64) -> Result<(), MilpError> {
        let name = cstring(option);
        check(unsafe { Highs_setDoubleOptionValue(self.0, name.as_ptr(), value) }, option)
    }

    fn configure(&mut self, params: &SolveParams) -> Result<(), MilpError> {
        self.set_bool("output_flag", params.verbose)?;
        self.set_double("mip_rel_gap", params.relative_gap)?;
        self.set_double("time_limit", params.time_limit_s)?;
        if let Some(tol) = params.feasibility_tolerance {
            self.set_double("primal_feasibility_tolerance", tol)?;
            self.set_double("mip_feasibility_tolerance", tol.max(1e-9))?;
        }
        Ok(())
    }

    fn pass_model(&mut self, model: &MilpModel) -> Result<(), MilpError> {
        let vars = model.variables();
        let mut cost = vec![0.0; vars.len()];
        for (v, c) in model.objective() {
            cost[v.0] = c;
        }
        let col_lower: Vec<f64> = vars.iter().map(|v| v.lower).collect();
        let col_upper: Vec<f64> = vars.iter().map(|v| v.upper).collect();
        let integrality: Vec<HighsInt> = vars
            .iter()
            .map(|v| if v.kind == VarKind::Binary { VAR_TYPE_INTEGER } else { VAR_TYPE_CONTINUOUS })
            .collect();
        let rows = model.constraints();
        let mut row_lower = Vec::with_capacity(rows.len());
        let mut row_upper = Vec::with_capacity(rows.len());
        let mut start = Vec::with_capacity(rows.len());
        let mut index = Vec::new();
        let mut value = Vec::new();
        for row in rows {
            let (lo, up) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            row_lower.push(lo);
            row_upper.push(up);
            start.push(index.len() as HighsInt);
            for &(v, c) in &row.terms {
                index.push(v.0 as HighsInt);
                value.push(c);
            }
        }
        let status = unsafe {
            Highs_passMip(
                self.0,
                vars.len() as HighsInt,
                rows.len() as HighsInt,
                index.len() as HighsInt,
                MATRIX_FORMAT_ROW_WISE,
                OBJECTIVE_SENSE_MINIMIZE,
                0.0,
                cost.as_ptr(),
                col_lower.as_ptr(),
                col_upper.as_ptr(),
                row_lower.as_ptr(),
                row_upper.as_ptr(),
                start.as_ptr(),
                index.as_ptr(),
                value.as_ptr(),
                integrality.as_ptr(),
            )
        };
        check(status, "Highs_passMip")
    }

    fn pass_start(&mut self, model: &MilpModel) -> Result<(), MilpError> {
        let start = model.start();
        if start.is_empty() {
            return Ok(());
        }
        let index: Vec<HighsInt> = start.iter().map(|(v, _)| v.0 as HighsInt).collect();
        let value: Vec<f64> = start.iter().map(|&(_, x)| x).collect();
        let status = unsafe { Highs_setSparseSolution(self.0, index.len() as HighsInt, index.as_ptr(), value.as_ptr()) };
        check(status, "Highs_setSparseSolution")
    }

    fn read_model(&mut self, path: &Path) -> Result<(), MilpError> {
        let c_path = cstring(&path.to_string_lossy());
        check(unsafe { Highs_readModel(self.0, c_path.as_ptr()) }, "Highs_readModel")
    }

    fn num_cols(&self) -> usize {
        unsafe { Highs_getNumCol(self.0) as usize }
    }

    fn num_rows(&self) -> usize {
        unsafe { Highs_getNumRow(self.0) as usize }
    }

    fn col_name(&self, col: usize) -> String {
        // HiGHS caps names at kHighsMaximumStringLength (512) bytes.
        let mut buf = vec![0 as c_char; 1024];
        unsafe {
            Highs_getColName(self.0, col as HighsInt, buf.as_mut_ptr());
            CStr::from_ptr(buf.as_ptr()).to_string_lossy().into_owned()
        }
    }

    fn run(&mut self) -> Result<RawSolution, MilpError> {
        let run_status = unsafe { Highs_run(self.0) };
        check(run_status, "Highs_run")?;
        let model_status = unsafe { Highs_getModelStatus(self.0) };
        let mut primal_status: HighsInt = 0;
        let key = cstring("primal_solution_status");
        unsafe { Highs_getIntInfoValue(self.0, key.as_ptr(), &mut primal_status) };
        let has_primal = primal_status == SOLUTION_STATUS_FEASIBLE;

        let status = match model_status {
            s if s == MODEL_STATUS_OPTIMAL => SolveStatus::Optimal,
            s if s == MODEL_STATUS_MODEL_EMPTY => SolveStatus::Optimal,
            s if s == MODEL_STATUS_INFEASIBLE || s == MODEL_STATUS_UNBOUNDED_OR_INFEASIBLE => {
                SolveStatus::Infeasible
            }
            s if (s == MODEL_STATUS_REACHED_TIME_LIMIT
                || s == MODEL_STATUS_REACHED_ITERATION_LIMIT
                || s == MODEL_STATUS_REACHED_SOLUTION_LIMIT
                || s == MODEL_STATUS_REACHED_INTERRUPT
                || s == MODEL_STATUS_OBJECTIVE_BOUND
                || s == MODEL_STATUS_OBJECTIVE_TARGET
                || s == MODEL_STATUS_UNKNOWN)
                && has_primal =>
            {
                SolveStatus::Feasible
            }
            other => {
                return Ok(RawSolution {
                    status: SolveStatus::Error,
                    objective_value: None,
                    values: Vec::new(),
                    diagnostic: Some(format!("HiGHS model status {other} without a usable primal solution")),
                })
            }
        };
        if !status.has_solution() {
            return Ok(RawSolution { status, objective_value: None, values: Vec::new(), diagnostic: None });
        }
        let n = self.num_cols();
        let m = self.num_rows();
        let mut col_value = vec![0.0; n];
        let mut col_dual = vec![0.0; n];
        let mut row_value = vec![0.0; m];
        let mut row_dual = vec![0.0; m];
        unsafe {
            Highs_getSolution(
                self.0,
                col_value.as_mut_ptr(),
                col_dual.as_mut_ptr(),
                row_value.as_mut_ptr(),
                row_dual.as_mut_ptr(),
            );
        }
        let objective = unsafe { Highs_getObjectiveValue(self.0) };
        let diagnostic = (status == SolveStatus::Feasible).then(|| format!("stopped early (HiGHS model status {model_status})"));
        Ok(RawSolution { status, objective_value: Some(objective), values: col_value, diagnostic })
    }
}

/// HiGHS linked into the process.
#[derive(Debug, Clone, Copy, Default)]
pub struct HighsBackend;

impl SolverBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn uses_start(&self) -> bool {
        true
    }

    fn solve_raw(&self, model: &MilpModel, params: &SolveParams) -> Result<RawSolution, MilpError> {
        let mut highs = Highs::new();
        highs.configure(params)?;
        if model.variables().is_empty() {
            return Ok(RawSolution { status: SolveStatus::Optimal, objective_value: Some(0.0), values: Vec::new(), diagnostic: None });
        }
        highs.pass_model(model)?;
        highs.pass_start(model)?;
        highs.run()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MpsDimensions {
    pub columns: usize,
    pub rows: usize,
    pub integer_columns: usize,
}

/// Parse an MPS file with HiGHS' reader and report its dimensions.
pub fn read_mps_dimensions(path: &Path) -> Result<MpsDimensions, MilpError> {
    let mut highs = Highs::new();
    highs.set_bool("output_flag", false)?;
    highs.read_model(path)?;
    let columns = highs.num_cols();
    let mut integrality = vec![0 as HighsInt; columns];
    let mut integer_columns = 0;
    if columns > 0 {
        for (k, slot) in integrality.iter_mut().enumerate() {
            unsafe { Highs_getColIntegrality(highs.0, k as HighsInt, slot) };
            if *slot == VAR_TYPE_INTEGER {
                integer_columns += 1;
            }
        }
    }
    Ok(MpsDimensions { columns, rows: highs.num_rows(), integer_columns })
}

/// Solve an MPS file with HiGHS; values are paired with the column names read from the file.
pub fn solve_mps_file(path: &Path, params: &SolveParams) -> Result<(RawSolution, Vec<String>), MilpError> {
    let mut highs = Highs::new();
    highs.configure(params)?;
    highs.read_model(path)?;
    let names = (0..highs.num_cols()).map(|k| highs.col_name(k)).collect();
    let raw = highs.run()?;
    Ok((raw, names))
}
