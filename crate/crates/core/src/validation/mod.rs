//! Backend-independent checks of solved schedules.
//!
//! [`extract_snapshots`] turns a solution into per-step [`TopologySnapshot`]s,
//! [`check_radiality`] verifies each one by connected-component analysis, and
//! [`check_operational`] recomputes balance, drops, voltage, storage, reserve, DG and
//! minimum-service rules from the raw values. [`brute_force_topology_oracle`] enumerates every
//! valid single-step configuration of a small LSG graph.

mod operational;
mod oracle;
mod snapshot;

use serde::Serialize;
use thiserror::Error;

pub use operational::check_operational;
pub use oracle::{brute_force_topology_oracle, TopologyConfig, ORACLE_MAX_LSGS, ORACLE_MAX_SWITCHES};
pub use snapshot::{check_radiality, extract_snapshots, TopologySnapshot};

#[derive(Debug, Error, PartialEq)]
pub enum ValidationError {
    #[error("solution has no value for `{0}`")]
    MissingValue(String),
    #[error("binary `{name}` has non-integral value {value}")]
    NonIntegral { name: String, value: f64 },
    #[error("step {t}: {message}")]
    Inconsistent { t: usize, message: String },
    #[error("model check failed: {0}")]
    Model(String),
    #[error("oracle limited to {max_lsgs} LSGs and {max_switches} switches, got {lsgs} and {switches}")]
    TooLarge { lsgs: usize, switches: usize, max_lsgs: usize, max_switches: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Machine-readable code, e.g. `cycle` or `soc-floor`.
    pub code: &'static str,
    pub t: Option<usize>,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    pub checks: usize,
    pub violations: Vec<Violation>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: Report) {
        self.checks += other.checks;
        self.violations.extend(other.violations);
    }

    pub fn with_code<'a>(&'a self, code: &'a str) -> impl Iterator<Item = &'a Violation> + 'a {
        self.violations.iter().filter(move |v| v.code == code)
    }

    fn check(&mut self, ok: bool, code: &'static str, t: Option<usize>, subject: impl Into<String>, message: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.violations.push(Violation { code, t, subject: subject.into(), message: message() });
        }
    }
}
