//! Seeded synthetic load and PV series for the bundled fixtures.
//!
//! Residential nodes get a morning and an evening peak, critical nodes a flatter commercial
//! shape at 15-minute resolution, and PV farms a clear-sky bell with passing clouds. Every load
//! node peaks at 110% of its nominal `peak_kw`.

use std::io::Write;

use chrono::{Duration, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Horizon, Profile};
use crate::feeder::{DerKind, FeederModel};

const PEAK_MARGIN: f64 = 1.1;

fn bump(hour: f64, centre: f64, width: f64) -> f64 {
    (-((hour - centre) / width).powi(2)).exp()
}

fn residential(hour: f64, morning: f64, evening: f64, evening_gain: f64) -> f64 {
    0.3 + 0.35 * bump(hour, morning, 1.3) + evening_gain * bump(hour, evening, 2.0) + 0.1 * bump(hour, 13.0, 3.0)
}

fn commercial(hour: f64) -> f64 {
    0.45 + 0.55 * bump(hour, 12.5, 4.0)
}

fn solar(hour: f64) -> f64 {
    if !(6.0..=19.5).contains(&hour) {
        return 0.0;
    }
    (std::f64::consts::PI * (hour - 6.0) / 13.5).sin().powf(1.4)
}

fn scale_to_peak(values: &mut [f64], peak: f64) {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        values.iter_mut().for_each(|v| *v *= peak / max);
    }
}

/// Generate one profile per load node and per PV farm, covering `horizon`.
pub fn synthesize_profiles(feeder: &FeederModel, horizon: &Horizon, seed: u64) -> Vec<Profile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let hour_of = |step_start: chrono::NaiveDateTime| {
        f64::from(step_start.hour()) + f64::from(step_start.minute()) / 60.0
    };

    for node in feeder.nodes.iter().filter(|n| n.is_load()) {
        let step_minutes = if node.is_critical { 15 } else { horizon.step_minutes };
        let samples = horizon.steps * (horizon.step_minutes / step_minutes) as usize;
        let morning = rng.gen_range(6.5..8.5);
        let evening = rng.gen_range(18.0..20.0);
        let gain = rng.gen_range(0.5..0.8);
        let mut values: Vec<f64> = (0..samples)
            .map(|k| {
                let ts = horizon.start + Duration::minutes(i64::from(step_minutes) * k as i64);
                let mid = hour_of(ts) + f64::from(step_minutes) / 120.0;
                let shape = if node.is_critical { commercial(mid) } else { residential(mid, morning, evening, gain) };
                shape * (1.0 + rng.gen_range(-0.06..0.06))
            })
            .collect();
        scale_to_peak(&mut values, PEAK_MARGIN * node.peak_kw);
        out.push(Profile { subject_id: node.id.clone(), start_time: horizon.start, step_minutes, values_kw: values });
    }

    for der in feeder.ders.iter().filter(|d| matches!(d.kind, DerKind::PvFarm)) {
        let mut cloud = 1.0;
        let values = (0..horizon.steps)
            .map(|k| {
                let ts = horizon.start + Duration::minutes(i64::from(horizon.step_minutes) * k as i64);
                let mid = hour_of(ts) + f64::from(horizon.step_minutes) / 120.0;
                cloud = (0.7 * cloud + 0.3 * rng.gen_range(0.75..1.0_f64)).min(1.0);
                0.88 * der.rated_kw * solar(mid) * cloud
            })
            .collect();
        out.push(Profile {
            subject_id: der.id.clone(),
            start_time: horizon.start,
            step_minutes: horizon.step_minutes,
            values_kw: values,
        });
    }
    out
}

/// Write profiles in the `subject_id,timestamp_iso8601,kw` layout read by [`super::load_profiles`].
pub fn write_profiles_csv<W: Write>(profiles: &[Profile], sink: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["subject_id", "timestamp_iso8601", "kw"])?;
    for p in profiles {
        for (k, v) in p.values_kw.iter().enumerate() {
            let ts = p.start_time + Duration::minutes(i64::from(p.step_minutes) * k as i64);
            writer.write_record([
                p.subject_id.as_str(),
                &ts.format("%Y-%m-%dT%H:%M:%S").to_string(),
                &format!("{v:.3}"),
            ])?;
        }
    }
    writer.flush()?;
    Ok(())
}
