//! Load and PV time series: CSV ingestion, resampling onto the scheduling grid, and
//! customer preference windows.

mod synthetic;

use std::collections::BTreeMap;
use std::io::Read;

use chrono::{DateTime, Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use synthetic::{synthesize_profiles, write_profiles_csv};

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("profile CSV row {row}: cannot parse timestamp `{value}`")]
    Timestamp { row: usize, value: String },
    #[error("profile `{subject}`: negative power {value} kW at {timestamp}")]
    NegativePower { subject: String, value: f64, timestamp: String },
    #[error("profile `{subject}`: gap at step {step}")]
    Gap { subject: String, step: usize },
    #[error("profile `{subject}`: timestamps are not strictly increasing at step {step}")]
    NonMonotone { subject: String, step: usize },
    #[error("profile `{subject}`: target step {target} min is not an integer multiple of source step {source_step} min")]
    NonIntegerRatio { subject: String, source_step: u32, target: u32 },
    #[error("profile `{subject}`: {message}")]
    Coverage { subject: String, message: String },
    #[error("missing profile for subject `{0}`")]
    MissingSubject(String),
}

/// Scheduling grid: `steps` intervals of `step_minutes` starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Horizon {
    pub start: NaiveDateTime,
    pub steps: usize,
    pub step_minutes: u32,
}

impl Horizon {
    pub fn dt_hours(&self) -> f64 {
        f64::from(self.step_minutes) / 60.0
    }

    pub fn step_start(&self, step: usize) -> NaiveDateTime {
        self.start + Duration::minutes(i64::from(self.step_minutes) * (step as i64 - 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub subject_id: String,
    pub start_time: NaiveDateTime,
    pub step_minutes: u32,
    pub values_kw: Vec<f64>,
}

impl Profile {
    /// Σ kW·Δt over the profile.
    pub fn energy_kwh(&self) -> f64 {
        self.values_kw.iter().sum::<f64>() * f64::from(self.step_minutes) / 60.0
    }

    /// Value at one-based step `t`.
    pub fn at(&self, t: usize) -> f64 {
        self.values_kw[t - 1]
    }
}

/// Average consecutive blocks of a profile onto a coarser step.
pub fn resample(profile: &Profile, target_step_minutes: u32) -> Result<Profile, ProfileError> {
    let source = profile.step_minutes;
    if source == 0 || target_step_minutes == 0 || target_step_minutes % source != 0 {
        return Err(ProfileError::NonIntegerRatio {
            subject: profile.subject_id.clone(),
            source_step: source,
            target: target_step_minutes,
        });
    }
    let ratio = (target_step_minutes / source) as usize;
    if profile.values_kw.len() % ratio != 0 {
        return Err(ProfileError::Coverage {
            subject: profile.subject_id.clone(),
            message: format!(
                "{} samples do not fill whole {target_step_minutes}-minute intervals",
                profile.values_kw.len()
            ),
        });
    }
    let values_kw = profile
        .values_kw
        .chunks(ratio)
        .map(|block| block.iter().sum::<f64>() / ratio as f64)
        .collect();
    Ok(Profile {
        subject_id: profile.subject_id.clone(),
        start_time: profile.start_time,
        step_minutes: target_step_minutes,
        values_kw,
    })
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    subject_id: String,
    timestamp_iso8601: String,
    kw: f64,
}

pub fn parse_timestamp(value: &str) -> Option<NaiveDateTime> {
    let value = value.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(value) {
        return Some(dt.naive_local());
    }
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(value, fmt).ok())
}

/// Read a `subject_id,timestamp_iso8601,kw` CSV and align every subject onto `horizon`.
///
/// Each subject may use its own source resolution as long as the scheduling step is an integer
/// multiple of it. The returned profiles have exactly `horizon.steps` values.
pub fn load_profiles<R: Read>(source: R, horizon: &Horizon) -> Result<BTreeMap<String, Profile>, ProfileError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let mut series: BTreeMap<String, Vec<(NaiveDateTime, f64)>> = BTreeMap::new();
    for (row, record) in reader.deserialize::<CsvRow>().enumerate() {
        let record = record?;
        let ts = parse_timestamp(&record.timestamp_iso8601)
            .ok_or_else(|| ProfileError::Timestamp { row: row + 1, value: record.timestamp_iso8601.clone() })?;
        if !(record.kw >= 0.0) {
            return Err(ProfileError::NegativePower {
                subject: record.subject_id,
                value: record.kw,
                timestamp: record.timestamp_iso8601,
            });
        }
        series.entry(record.subject_id).or_default().push((ts, record.kw));
    }

    let mut out = BTreeMap::new();
    for (subject, samples) in series {
        let raw = regular_profile(&subject, &samples, horizon)?;
        let aligned = align(&raw, horizon)?;
        out.insert(subject, aligned);
    }
    Ok(out)
}

/// Check timestamps form a gap-free regular grid and wrap them as a [`Profile`].
fn regular_profile(subject: &str, samples: &[(NaiveDateTime, f64)], horizon: &Horizon) -> Result<Profile, ProfileError> {
    let step_minutes = match samples {
        [] => unreachable!("subjects are only created with a sample"),
        [_] => horizon.step_minutes,
        [a, b, ..] => {
            let minutes = (b.0 - a.0).num_minutes();
            if minutes <= 0 {
                return Err(ProfileError::NonMonotone { subject: subject.to_string(), step: 2 });
            }
            minutes as u32
        }
    };
    let step = Duration::minutes(i64::from(step_minutes));
    for (k, pair) in samples.windows(2).enumerate() {
        let delta = pair[1].0 - pair[0].0;
        if delta <= Duration::zero() {
            return Err(ProfileError::NonMonotone { subject: subject.to_string(), step: k + 2 });
        }
        if delta != step {
            return Err(ProfileError::Gap { subject: subject.to_string(), step: k + 2 });
        }
    }
    Ok(Profile {
        subject_id: subject.to_string(),
        start_time: samples[0].0,
        step_minutes,
        values_kw: samples.iter().map(|s| s.1).collect(),
    })
}

fn align(raw: &Profile, horizon: &Horizon) -> Result<Profile, ProfileError> {
    let subject = raw.subject_id.clone();
    if horizon.step_minutes % raw.step_minutes != 0 {
        return Err(ProfileError::NonIntegerRatio { subject, source_step: raw.step_minutes, target: horizon.step_minutes });
    }
    let offset = (horizon.start - raw.start_time).num_minutes();
    if offset < 0 || offset % i64::from(raw.step_minutes) != 0 {
        return Err(ProfileError::Coverage {
            subject,
            message: format!("series starting {} does not cover the horizon start {}", raw.start_time, horizon.start),
        });
    }
    let skip = (offset / i64::from(raw.step_minutes)) as usize;
    let needed = horizon.steps * (horizon.step_minutes / raw.step_minutes) as usize;
    if raw.values_kw.len() < skip + needed {
        return Err(ProfileError::Coverage {
            subject,
            message: format!(
                "series covers {} of the {} source intervals required",
                raw.values_kw.len().saturating_sub(skip),
                needed
            ),
        });
    }
    let window = Profile {
        subject_id: raw.subject_id.clone(),
        start_time: horizon.start,
        step_minutes: raw.step_minutes,
        values_kw: raw.values_kw[skip..skip + needed].to_vec(),
    };
    resample(&window, horizon.step_minutes)
}

/// Fail with [`ProfileError::MissingSubject`] for the first required subject without a profile.
pub fn require_subjects<'a>(
    profiles: &BTreeMap<String, Profile>,
    required: impl IntoIterator<Item = &'a str>,
) -> Result<(), ProfileError> {
    for subject in required {
        if !profiles.contains_key(subject) {
            return Err(ProfileError::MissingSubject(subject.to_string()));
        }
    }
    Ok(())
}

/// A preferred-service window in step space, inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceWindow {
    pub label: String,
    pub start_step: usize,
    pub end_step: usize,
    pub weight: f64,
}

impl PreferenceWindow {
    pub fn contains(&self, t: usize) -> bool {
        (self.start_step..=self.end_step).contains(&t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreferenceSchedule {
    pub windows: Vec<PreferenceWindow>,
    pub default_weight: f64,
}

impl Default for PreferenceSchedule {
    fn default() -> Self {
        Self { windows: Vec::new(), default_weight: 1.0 }
    }
}

impl PreferenceSchedule {
    pub fn new(mut windows: Vec<PreferenceWindow>, steps: usize) -> Result<Self, String> {
        windows.sort_by_key(|w| w.start_step);
        for w in &windows {
            if !(w.weight >= 1.0) {
                return Err(format!("window `{}` has weight {} < 1", w.label, w.weight));
            }
            if w.start_step < 1 || w.start_step > w.end_step || w.end_step > steps {
                return Err(format!(
                    "window `{}` spans steps {}..={} outside the horizon 1..={steps}",
                    w.label, w.start_step, w.end_step
                ));
            }
        }
        for pair in windows.windows(2) {
            if pair[1].start_step <= pair[0].end_step {
                return Err(format!("windows `{}` and `{}` overlap", pair[0].label, pair[1].label));
            }
        }
        Ok(Self { windows, default_weight: 1.0 })
    }
}

/// Preference weight at one-based step `t`.
pub fn preference_weight(schedule: &PreferenceSchedule, t: usize) -> f64 {
    schedule
        .windows
        .iter()
        .find(|w| w.contains(t))
        .map_or(schedule.default_weight, |w| w.weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn start() -> NaiveDateTime {
        parse_timestamp("2021-07-15T00:00:00").unwrap()
    }

    fn horizon(steps: usize) -> Horizon {
        Horizon { start: start(), steps, step_minutes: 30 }
    }

    fn csv_rows(subject: &str, step_minutes: i64, values: &[f64]) -> String {
        let mut s = String::new();
        for (k, v) in values.iter().enumerate() {
            let ts = start() + Duration::minutes(step_minutes * k as i64);
            s.push_str(&format!("{subject},{},{v}\n", ts.format("%Y-%m-%dT%H:%M:%S")));
        }
        s
    }

    #[test]
    fn resample_two_quarter_hours_to_mean() {
        let p = Profile { subject_id: "n".into(), start_time: start(), step_minutes: 15, values_kw: vec![10.0, 20.0] };
        let r = resample(&p, 30).unwrap();
        assert_eq!(r.values_kw, vec![15.0]);
        assert_eq!(r.step_minutes, 30);
    }

    #[test]
    fn resample_constant_is_identity() {
        let p = Profile { subject_id: "n".into(), start_time: start(), step_minutes: 15, values_kw: vec![7.5; 96] };
        assert_eq!(resample(&p, 30).unwrap().values_kw, vec![7.5; 48]);
    }

    #[test]
    fn resample_rejects_non_integer_ratio() {
        let p = Profile { subject_id: "n".into(), start_time: start(), step_minutes: 20, values_kw: vec![1.0; 3] };
        assert!(matches!(resample(&p, 30), Err(ProfileError::NonIntegerRatio { .. })));
    }

    #[test]
    fn aligned_half_hour_rows_load_directly() {
        let values: Vec<f64> = (0..48).map(f64::from).collect();
        let text = format!("subject_id,timestamp_iso8601,kw\n{}", csv_rows("n1", 30, &values));
        let profiles = load_profiles(text.as_bytes(), &horizon(48)).unwrap();
        assert_eq!(profiles["n1"].values_kw, values);
    }

    #[test]
    fn quarter_hour_rows_are_downsampled() {
        let values: Vec<f64> = (0..96).map(|k| f64::from(k % 7)).collect();
        let text = format!("subject_id,timestamp_iso8601,kw\n{}", csv_rows("n1", 15, &values));
        let p = &load_profiles(text.as_bytes(), &horizon(48)).unwrap()["n1"];
        assert_eq!(p.values_kw.len(), 48);
        assert_eq!(p.values_kw[0], 0.5);
        assert_eq!(p.values_kw[3], f64::from(6 % 7 + 7 % 7) / 2.0);
    }

    #[test]
    fn missing_interval_is_reported_as_gap() {
        let values = vec![1.0; 48];
        let rows = csv_rows("n1", 30, &values);
        let kept: Vec<&str> = rows.lines().enumerate().filter(|(k, _)| *k != 5).map(|(_, l)| l).collect();
        let text = format!("subject_id,timestamp_iso8601,kw\n{}\n", kept.join("\n"));
        let err = load_profiles(text.as_bytes(), &horizon(48)).unwrap_err();
        assert_eq!(err.to_string(), "profile `n1`: gap at step 6");
    }

    #[test]
    fn negative_power_is_rejected() {
        let text = format!("subject_id,timestamp_iso8601,kw\n{}", csv_rows("n1", 30, &[1.0, -2.0]));
        assert!(matches!(load_profiles(text.as_bytes(), &horizon(2)), Err(ProfileError::NegativePower { .. })));
    }

    #[test]
    fn short_series_fails_coverage() {
        let text = format!("subject_id,timestamp_iso8601,kw\n{}", csv_rows("n1", 30, &[1.0; 10]));
        assert!(matches!(load_profiles(text.as_bytes(), &horizon(48)), Err(ProfileError::Coverage { .. })));
    }

    #[test]
    fn missing_subject_is_reported() {
        let profiles = BTreeMap::new();
        let err = require_subjects(&profiles, ["n7"]).unwrap_err();
        assert_eq!(err.to_string(), "missing profile for subject `n7`");
    }

    fn schedule() -> PreferenceSchedule {
        PreferenceSchedule::new(
            vec![PreferenceWindow { label: "07:00-09:00".into(), start_step: 15, end_step: 18, weight: 1.5 }],
            48,
        )
        .unwrap()
    }

    #[test]
    fn preference_weight_inside_and_outside() {
        let s = schedule();
        assert_eq!(preference_weight(&s, 16), 1.5);
        assert_eq!(preference_weight(&s, 30), 1.0);
    }

    #[test]
    fn preference_window_is_inclusive_at_both_ends() {
        let s = schedule();
        assert_eq!(preference_weight(&s, 15), 1.5);
        assert_eq!(preference_weight(&s, 18), 1.5);
        assert_eq!(preference_weight(&s, 14), 1.0);
        assert_eq!(preference_weight(&s, 19), 1.0);
    }

    #[test]
    fn overlapping_windows_are_rejected() {
        let w = |a, b| PreferenceWindow { label: format!("{a}-{b}"), start_step: a, end_step: b, weight: 1.5 };
        assert!(PreferenceSchedule::new(vec![w(3, 6), w(6, 8)], 48).is_err());
        assert!(PreferenceSchedule::new(vec![w(3, 6), w(7, 8)], 48).is_ok());
        assert!(PreferenceSchedule::new(vec![w(40, 50)], 48).is_err());
    }

    proptest! {
        #[test]
        fn resampling_conserves_energy(
            values in prop::collection::vec(0.0f64..5000.0, 1..24),
            ratio in 1u32..=6,
        ) {
            let mut series = Vec::new();
            for _ in 0..ratio { series.extend_from_slice(&values); }
            let p = Profile { subject_id: "x".into(), start_time: start(), step_minutes: 5, values_kw: series };
            let r = resample(&p, 5 * ratio).unwrap();
            // direct summation oracle
            let before: f64 = p.values_kw.iter().map(|v| v * 5.0 / 60.0).sum();
            let after = r.energy_kwh();
            prop_assert!((before - after).abs() <= 1e-9 * before.abs().max(1.0));
        }

        #[test]
        fn preference_weight_is_at_least_one(t in 1usize..=48, w in 1.0f64..3.0) {
            let s = PreferenceSchedule::new(
                vec![PreferenceWindow { label: "w".into(), start_step: 10, end_step: 20, weight: w }], 48).unwrap();
            prop_assert!(preference_weight(&s, t) >= 1.0);
        }
    }
}
