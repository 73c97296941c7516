//! Plain-text solution documents exchanged with external solver executables.
//!
//! ```text
//! # lsgems solution v1
//! status optimal
//! objective -12.5
//! x 1
//! y 0.25
//! ```

use std::collections::BTreeMap;
use std::fmt::Write;

use super::{MilpError, SolveStatus};

const HEADER: &str = "# lsgems solution v1";

/// Render a status, optional objective and named values.
pub fn write_solution_doc<'a>(
    status: SolveStatus,
    objective: Option<f64>,
    values: impl IntoIterator<Item = (&'a str, f64)>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "status {}", status.as_str());
    match objective {
        Some(v) => {
            let _ = writeln!(out, "objective {v:?}");
        }
        None => out.push_str("objective none\n"),
    }
    for (name, v) in values {
        let _ = writeln!(out, "{name} {v:?}");
    }
    out
}

type ParsedDoc = (SolveStatus, Option<f64>, BTreeMap<String, f64>);

/// Parse a document produced by [`write_solution_doc`].
pub fn read_solution_doc(text: &str) -> Result<ParsedDoc, MilpError> {
    let bad = |msg: String| MilpError::SolutionDocument(msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(HEADER) {
        return Err(bad("missing header line".into()));
    }
    let status_line = lines.next().ok_or_else(|| bad("missing status line".into()))?;
    let status = status_line
        .strip_prefix("status ")
        .and_then(|s| SolveStatus::parse(s.trim()))
        .ok_or_else(|| bad(format!("bad status line `{status_line}`")))?;
    let objective_line = lines.next().ok_or_else(|| bad("missing objective line".into()))?;
    let objective = match objective_line.strip_prefix("objective ").map(str::trim) {
        Some("none") => None,
        Some(v) => Some(v.parse::<f64>().map_err(|_| bad(format!("bad objective `{v}`")))?),
        None => return Err(bad(format!("bad objective line `{objective_line}`"))),
    };
    let mut values = BTreeMap::new();
    for line in lines {
        let (name, v) = line.trim().rsplit_once(' ').ok_or_else(|| bad(format!("bad value line `{line}`")))?;
        let v: f64 = v.parse().map_err(|_| bad(format!("bad value in `{line}`")))?;
        if values.insert(name.to_string(), v).is_some() {
            return Err(bad(format!("duplicate value for `{name}`")));
        }
    }
    Ok((status, objective, values))
}
