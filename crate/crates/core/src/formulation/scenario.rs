//! Scenario configuration: horizon, weights, limits, operating mode and solver settings.

use std::path::Path;

use chrono::{NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use super::FormulationError;
use crate::milp::SolveParams;
use crate::profile::{parse_timestamp, Horizon, PreferenceSchedule, PreferenceWindow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Root-candidate LSGs may join another microgrid instead of forming their own.
    Flexible,
    /// Every energized root candidate forms its own microgrid.
    Legacy,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Flexible => "flexible",
            Mode::Legacy => "legacy",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flexible" => Ok(Mode::Flexible),
            "legacy" => Ok(Mode::Legacy),
            other => Err(format!("unknown mode `{other}` (expected flexible or legacy)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowRecord {
    #[serde(default)]
    pub label: String,
    /// Clock time `HH:MM` at which the window opens.
    pub start: String,
    /// Clock time `HH:MM` at which the window closes.
    pub end: String,
    pub weight: f64,
    /// Nodes the window applies to; all nodes when absent.
    #[serde(default)]
    pub nodes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverRecord {
    #[serde(default = "default_gap")]
    pub gap: f64,
    #[serde(default = "default_time_limit")]
    pub time_limit_s: f64,
}

impl Default for SolverRecord {
    fn default() -> Self {
        Self { gap: default_gap(), time_limit_s: default_time_limit() }
    }
}

fn default_gap() -> f64 {
    1e-4
}
fn default_time_limit() -> f64 {
    600.0
}
fn default_steps() -> usize {
    48
}
fn default_step_minutes() -> u32 {
    30
}
fn default_k1() -> f64 {
    1.0
}
fn default_msd() -> f64 {
    2.0
}
fn default_vmin() -> f64 {
    0.95
}
fn default_vmax() -> f64 {
    1.05
}
fn default_vrate() -> f64 {
    1.0
}
fn default_reserve() -> f64 {
    0.15
}
fn default_big_m_voltage() -> f64 {
    2.0
}
fn default_mode() -> Mode {
    Mode::Flexible
}
fn default_scale() -> f64 {
    1.0
}

/// Scenario file as written on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRecord {
    #[serde(default)]
    pub name: String,
    /// Start of the first step, ISO 8601.
    pub start: String,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_minutes")]
    pub step_minutes: u32,
    #[serde(default = "default_k1")]
    pub k1: f64,
    #[serde(default = "default_msd")]
    pub msd_hours: f64,
    #[serde(default = "default_vmin")]
    pub v_min_pu: f64,
    #[serde(default = "default_vmax")]
    pub v_max_pu: f64,
    #[serde(default = "default_vrate")]
    pub v_rate_pu: f64,
    #[serde(default = "default_reserve")]
    pub reserve_fraction: f64,
    #[serde(default = "default_big_m_voltage")]
    pub big_m_voltage: f64,
    /// Cap on every flow magnitude in kW/kvar, applied on top of element capacities.
    #[serde(default)]
    pub big_m_flow_kw: Option<f64>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    /// Multiplier on every PV farm rating and forecast.
    #[serde(default = "default_scale")]
    pub pv_scale: f64,
    #[serde(default)]
    pub preferred_windows: Vec<WindowRecord>,
    /// LSG ids that must be energized at every step.
    #[serde(default)]
    pub must_serve_lsgs: Vec<String>,
    #[serde(default)]
    pub solver: SolverRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScopedWindow {
    pub window: PreferenceWindow,
    pub nodes: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub start: NaiveDateTime,
    pub steps: usize,
    pub step_minutes: u32,
    pub k1: f64,
    pub msd_hours: f64,
    pub v_min_pu: f64,
    pub v_max_pu: f64,
    pub v_rate_pu: f64,
    pub reserve_fraction: f64,
    pub big_m_voltage: f64,
    pub big_m_flow_kw: Option<f64>,
    pub mode: Mode,
    pub pv_scale: f64,
    pub windows: Vec<ScopedWindow>,
    pub must_serve_lsgs: Vec<String>,
    pub gap: f64,
    pub time_limit_s: f64,
    #[serde(skip)]
    window_records: Vec<WindowRecord>,
}

fn parse_clock(s: &str) -> Option<NaiveTime> {
    NaiveTime::parse_from_str(s, "%H:%M").ok().or_else(|| NaiveTime::parse_from_str(s, "%H:%M:%S").ok())
}

fn bad(message: impl Into<String>) -> FormulationError {
    FormulationError::Scenario(message.into())
}

/// Steps `[first, last]` (one-based, inclusive) whose intervals lie inside the clock range.
fn window_steps(start: NaiveDateTime, step_minutes: u32, steps: usize, w: &WindowRecord) -> Result<(usize, usize), FormulationError> {
    let open = parse_clock(&w.start).ok_or_else(|| bad(format!("window `{}`: bad start time `{}`", w.label, w.start)))?;
    let close = parse_clock(&w.end).ok_or_else(|| bad(format!("window `{}`: bad end time `{}`", w.label, w.end)))?;
    let minute_of_day = |t: NaiveTime| i64::from(t.num_seconds_from_midnight()) / 60;
    let origin = minute_of_day(start.time());
    let day = 24 * 60;
    let offset_open = (minute_of_day(open) - origin).rem_euclid(day);
    let mut offset_close = (minute_of_day(close) - origin).rem_euclid(day);
    if offset_close <= offset_open {
        offset_close += day;
    }
    let step = i64::from(step_minutes);
    if offset_open % step != 0 || offset_close % step != 0 {
        return Err(bad(format!("window `{}` does not align with the {step_minutes}-minute grid", w.label)));
    }
    let first = (offset_open / step) as usize + 1;
    let last = (offset_close / step) as usize;
    if last > steps {
        return Err(bad(format!("window `{}` ends after the horizon", w.label)));
    }
    Ok((first, last))
}

impl ScenarioConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, FormulationError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, FormulationError> {
        let record: ScenarioRecord = serde_json::from_str(text).map_err(|e| bad(format!("invalid scenario document: {e}")))?;
        Self::from_record(record)
    }

    pub fn from_record(r: ScenarioRecord) -> Result<Self, FormulationError> {
        let start = parse_timestamp(&r.start).ok_or_else(|| bad(format!("bad start timestamp `{}`", r.start)))?;
        let mut config = Self {
            name: r.name,
            start,
            steps: r.steps,
            step_minutes: r.step_minutes,
            k1: r.k1,
            msd_hours: r.msd_hours,
            v_min_pu: r.v_min_pu,
            v_max_pu: r.v_max_pu,
            v_rate_pu: r.v_rate_pu,
            reserve_fraction: r.reserve_fraction,
            big_m_voltage: r.big_m_voltage,
            big_m_flow_kw: r.big_m_flow_kw,
            mode: r.mode,
            pv_scale: r.pv_scale,
            windows: Vec::new(),
            must_serve_lsgs: r.must_serve_lsgs,
            gap: r.solver.gap,
            time_limit_s: r.solver.time_limit_s,
            window_records: r.preferred_windows,
        };
        config.resolve()?;
        Ok(config)
    }

    /// Recompute derived fields and re-check invariants after any edit.
    fn resolve(&mut self) -> Result<(), FormulationError> {
        if self.steps == 0 {
            return Err(bad("steps must be at least 1"));
        }
        if self.step_minutes == 0 {
            return Err(bad("step_minutes must be positive"));
        }
        if !(0.0 < self.v_min_pu && self.v_min_pu < self.v_rate_pu && self.v_rate_pu < self.v_max_pu) {
            return Err(bad("voltage limits must satisfy 0 < v_min < v_rate < v_max"));
        }
        if !(self.k1 >= 0.0 && self.k1.is_finite()) {
            return Err(bad("k1 must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.reserve_fraction) {
            return Err(bad("reserve_fraction must lie in [0, 1)"));
        }
        if !(self.big_m_voltage > 0.0) || self.big_m_flow_kw.is_some_and(|m| !(m > 0.0)) {
            return Err(bad("big-M constants must be positive"));
        }
        if !(self.pv_scale >= 0.0 && self.pv_scale.is_finite()) {
            return Err(bad("pv_scale must be non-negative"));
        }
        if !(self.gap >= 0.0) || !(self.time_limit_s > 0.0) {
            return Err(bad("solver gap must be >= 0 and time limit > 0"));
        }
        self.k_msd()?;
        let mut windows = Vec::new();
        for (k, w) in self.window_records.iter().enumerate() {
            let (start_step, end_step) = window_steps(self.start, self.step_minutes, self.steps, w)?;
            let label = if w.label.is_empty() { format!("window{}", k + 1) } else { w.label.clone() };
            windows.push(ScopedWindow {
                window: PreferenceWindow { label, start_step, end_step, weight: w.weight },
                nodes: w.nodes.clone(),
            });
        }
        PreferenceSchedule::new(windows.iter().map(|w| w.window.clone()).collect(), self.steps).map_err(bad)?;
        self.windows = windows;
        Ok(())
    }

    pub fn dt_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }

    pub fn horizon(&self) -> Horizon {
        Horizon { start: self.start, steps: self.steps, step_minutes: self.step_minutes }
    }

    /// Minimum service duration in steps.
    pub fn k_msd(&self) -> Result<usize, FormulationError> {
        let k = self.msd_hours / self.dt_hours();
        if !(k >= 1.0 - 1e-9) || (k - k.round()).abs() > 1e-9 {
            return Err(bad(format!(
                "msd_hours {} must be a positive whole number of {}-minute steps",
                self.msd_hours, self.step_minutes
            )));
        }
        Ok(k.round() as usize)
    }

    /// Preference weight of `node_id` at one-based step `t`.
    pub fn preference_weight(&self, node_id: &str, t: usize) -> f64 {
        self.windows
            .iter()
            .filter(|w| w.nodes.as_ref().map_or(true, |ns| ns.iter().any(|n| n == node_id)))
            .find(|w| w.window.contains(t))
            .map_or(1.0, |w| w.window.weight)
    }

    pub fn solve_params(&self) -> SolveParams {
        SolveParams { relative_gap: self.gap, time_limit_s: self.time_limit_s, ..SolveParams::default() }
    }

    pub fn with_mode(&self, mode: Mode) -> Self {
        Self { mode, ..self.clone() }
    }

    pub fn with_msd_hours(&self, msd_hours: f64) -> Result<Self, FormulationError> {
        let mut s = Self { msd_hours, ..self.clone() };
        s.resolve()?;
        Ok(s)
    }

    pub fn with_pv_scale(&self, pv_scale: f64) -> Result<Self, FormulationError> {
        let mut s = Self { pv_scale, ..self.clone() };
        s.resolve()?;
        Ok(s)
    }

    /// The same scenario cut to its first `steps` steps; windows past the cut are dropped.
    pub fn truncated(&self, steps: usize) -> Result<Self, FormulationError> {
        let mut s = Self { steps, ..self.clone() };
        s.window_records.retain(|w| window_steps(s.start, s.step_minutes, steps, w).is_ok());
        s.resolve()?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "start": "2021-07-15T00:00",
            "preferred_windows": [
                {"label": "morning", "start": "07:00", "end": "09:00", "weight": 1.5},
                {"label": "evening", "start": "18:00", "end": "20:00", "weight": 1.5}
            ]
        })
    }

    #[test]
    fn defaults_and_window_steps() {
        let s = ScenarioConfig::from_json(&base().to_string()).unwrap();
        assert_eq!((s.steps, s.step_minutes, s.k_msd().unwrap()), (48, 30, 4));
        assert_eq!(s.mode, Mode::Flexible);
        assert_eq!((s.windows[0].window.start_step, s.windows[0].window.end_step), (15, 18));
        assert_eq!((s.windows[1].window.start_step, s.windows[1].window.end_step), (37, 40));
        assert_eq!(s.preference_weight("any", 15), 1.5);
        assert_eq!(s.preference_weight("any", 18), 1.5);
        assert_eq!(s.preference_weight("any", 19), 1.0);
    }

    #[test]
    fn scoped_window_only_applies_to_listed_nodes() {
        let mut v = base();
        v["preferred_windows"][0]["nodes"] = serde_json::json!(["5"]);
        let s = ScenarioConfig::from_json(&v.to_string()).unwrap();
        assert_eq!(s.preference_weight("5", 16), 1.5);
        assert_eq!(s.preference_weight("6", 16), 1.0);
        assert_eq!(s.preference_weight("6", 38), 1.5);
    }

    #[test]
    fn rejects_fractional_msd_and_bad_voltages() {
        let mut v = base();
        v["msd_hours"] = serde_json::json!(0.75);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let mut v = base();
        v["v_min_pu"] = serde_json::json!(1.01);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
        let mut v = base();
        v["surprise"] = serde_json::json!(1);
        assert!(ScenarioConfig::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn truncation_drops_late_windows() {
        let s = ScenarioConfig::from_json(&base().to_string()).unwrap().truncated(12).unwrap();
        assert_eq!(s.steps, 12);
        assert!(s.windows.is_empty());
    }

    #[test]
    fn sweep_edits_revalidate() {
        let s = ScenarioConfig::from_json(&base().to_string()).unwrap();
        assert_eq!(s.with_msd_hours(3.0).unwrap().k_msd().unwrap(), 6);
        assert!(s.with_msd_hours(0.2).is_err());
        assert_eq!(s.with_mode(Mode::Legacy).mode, Mode::Legacy);
    }
}
