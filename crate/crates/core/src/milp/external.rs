//! Backend that shells out to a solver executable.
//!
//! The executable is called as
//! `<exe> --model model.mps --solution out.sol --gap <g> --time-limit <s>` and must write a
//! solution document (see [`super::read_solution_doc`]) keyed by the column names used in the
//! MPS file.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use super::{emit_model_file, read_solution_doc, MilpError, MilpModel, RawSolution, SolveParams, SolverBackend};

/// Environment variable naming the solver executable.
pub const SOLVER_ENV_VAR: &str = "LSGEMS_SOLVER";

const REFERENCE_SOLVER: &str = "lsgems-highs";

#[derive(Debug, Clone)]
pub struct ExternalBackend {
    executable: PathBuf,
}

impl ExternalBackend {
    pub fn new(executable: impl Into<PathBuf>) -> Self {
        Self { executable: executable.into() }
    }

    /// Executable from [`SOLVER_ENV_VAR`], else the bundled reference solver next to the
    /// running binary.
    pub fn from_env() -> Result<Self, MilpError> {
        if let Some(path) = std::env::var_os(SOLVER_ENV_VAR) {
            return Ok(Self::new(path));
        }
        locate_reference_solver().map(Self::new).ok_or_else(|| {
            MilpError::Backend(format!("{SOLVER_ENV_VAR} is not set and `{REFERENCE_SOLVER}` was not found"))
        })
    }

    pub fn executable(&self) -> &Path {
        &self.executable
    }
}

fn locate_reference_solver() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let file = format!("{REFERENCE_SOLVER}{}", std::env::consts::EXE_SUFFIX);
    // test binaries live one level down, in deps/
    exe.ancestors().skip(1).take(2).map(|dir| dir.join(&file)).find(|p| p.is_file())
}

impl SolverBackend for ExternalBackend {
    fn name(&self) -> &str {
        "external"
    }

    fn solve_raw(&self, model: &MilpModel, params: &SolveParams) -> Result<RawSolution, MilpError> {
        let dir = tempfile::tempdir()?;
        let model_path = dir.path().join("model.mps");
        let solution_path = dir.path().join("solution.sol");
        let doc = emit_model_file(model);
        std::fs::write(&model_path, &doc.text)?;

        let output = Command::new(&self.executable)
            .arg("--model")
            .arg(&model_path)
            .arg("--solution")
            .arg(&solution_path)
            .arg("--gap")
            .arg(params.relative_gap.to_string())
            .arg("--time-limit")
            .arg(params.time_limit_s.to_string())
            .output()
            .map_err(|e| MilpError::Backend(format!("cannot run {}: {e}", self.executable.display())))?;
        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            return Err(MilpError::Backend(format!(
                "{} exited with {}: {}",
                self.executable.display(),
                output.status,
                stderr.trim()
            )));
        }
        let text = std::fs::read_to_string(&solution_path)
            .map_err(|e| MilpError::Backend(format!("solver wrote no solution document: {e}")))?;
        let (status, objective_value, named) = read_solution_doc(&text)?;
        if !status.has_solution() {
            return Ok(RawSolution { status, objective_value: None, values: Vec::new(), diagnostic: None });
        }
        let column_of: HashMap<&str, usize> =
            doc.column_names.iter().enumerate().map(|(k, n)| (n.as_str(), k)).collect();
        let mut values = vec![f64::NAN; model.variables().len()];
        for (name, v) in &named {
            let k = column_of
                .get(name.as_str())
                .ok_or_else(|| MilpError::SolutionDocument(format!("unknown column `{name}`")))?;
            values[*k] = *v;
        }
        if let Some(k) = values.iter().position(|v| v.is_nan()) {
            return Err(MilpError::MissingValue(model.variables()[k].name.clone()));
        }
        Ok(RawSolution { status, objective_value, values, diagnostic: None })
    }
}
