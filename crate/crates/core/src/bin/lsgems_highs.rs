//! Reference external solver: reads an MPS file, solves it with HiGHS and writes a solution
//! document.

use std::path::PathBuf;
use std::process::ExitCode;

use lsgems::milp::{solve_mps_file, write_solution_doc, SolveParams};

const USAGE: &str = "usage: lsgems-highs --model FILE --solution FILE [--gap G] [--time-limit S]";

fn run() -> Result<(), String> {
    let mut model = None;
    let mut solution = None;
    let mut params = SolveParams::default();
    let mut args = std::env::args().skip(1);
    while let Some(flag) = args.next() {
        let mut value = || args.next().ok_or_else(|| format!("{flag} needs a value\n{USAGE}"));
        match flag.as_str() {
            "--model" => model = Some(PathBuf::from(value()?)),
            "--solution" => solution = Some(PathBuf::from(value()?)),
            "--gap" => params.relative_gap = value()?.parse().map_err(|e| format!("--gap: {e}"))?,
            "--time-limit" => params.time_limit_s = value()?.parse().map_err(|e| format!("--time-limit: {e}"))?,
            _ => return Err(format!("unknown argument `{flag}`\n{USAGE}")),
        }
    }
    let model = model.ok_or(USAGE)?;
    let solution = solution.ok_or(USAGE)?;
    let (raw, names) = solve_mps_file(&model, &params).map_err(|e| e.to_string())?;
    let pairs = names.iter().map(String::as_str).zip(raw.values.iter().copied());
    let text = write_solution_doc(raw.status, raw.objective_value, pairs);
    std::fs::write(&solution, text).map_err(|e| format!("{}: {e}", solution.display()))
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::FAILURE
        }
    }
}
