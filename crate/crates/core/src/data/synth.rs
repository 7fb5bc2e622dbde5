//! Synthetic ICU cohort generator.
//!
//! Each patient has a latent acuity that follows a mean-reverting walk
//! around a patient-level set point. Every channel reads out
//! `baseline + scale * (loading * acuity + circadian + noise)`, is measured
//! at each hour with a patient- and channel-specific probability, and is
//! sometimes measured twice within the hour. Mortality is drawn with a
//! probability that increases with the mean acuity over the stay.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::records::{CareUnit, RawEvent, StayMeta};
use crate::activation::sigmoid;
use crate::error::{Error, Result};
use crate::NUM_FEATURES;

/// `(baseline, scale, acuity loading, circadian amplitude)` per channel, in
/// the order of the default feature schema.
const CHANNELS: [(f64, f64, f64, f64); NUM_FEATURES] = [
    (85.0, 14.0, 1.0, 0.4),
    (120.0, 16.0, -0.8, 0.3),
    (65.0, 9.0, -0.6, 0.3),
    (82.0, 11.0, -0.7, 0.3),
    (18.0, 4.0, 0.9, 0.2),
    (37.0, 0.6, 0.5, 0.4),
    (97.0, 1.8, -0.7, 0.1),
    (0.40, 0.12, 0.8, 0.0),
    (13.0, 2.2, -0.9, 0.1),
    (135.0, 35.0, 0.4, 0.3),
    (4.1, 0.45, 0.3, 0.1),
    (139.0, 3.5, 0.2, 0.0),
    (104.0, 3.5, 0.2, 0.0),
    (24.0, 3.5, -0.6, 0.0),
    (25.0, 12.0, 0.6, 0.0),
    (1.2, 0.6, 0.6, 0.0),
    (10.5, 1.6, -0.4, 0.0),
    (31.0, 4.5, -0.4, 0.0),
    (11.0, 4.0, 0.6, 0.1),
    (220.0, 70.0, -0.4, 0.0),
    (1.8, 0.9, 0.9, 0.1),
    (7.38, 0.05, -0.6, 0.0),
    (110.0, 30.0, -0.3, 0.1),
    (40.0, 6.0, 0.3, 0.1),
    (2.0, 0.25, 0.1, 0.0),
    (8.5, 0.6, -0.3, 0.0),
    (3.5, 0.9, 0.4, 0.0),
    (1.0, 0.9, 0.5, 0.0),
    (80.0, 35.0, -0.7, 0.4),
    (2.5, 1.6, 0.2, 0.3),
];

/// Acuity set point offset per care unit, indexed like [`CareUnit::ALL`].
const UNIT_OFFSET: [f64; 5] = [0.3, 0.1, -0.2, 0.0, 0.2];

const FIRST_STAY_ID: u64 = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    /// Multiplies the per-measurement noise; 0 gives noise-free readings.
    pub noise_scale: f64,
    /// Per-channel missingness is drawn uniformly from this range.
    pub missing_low: f64,
    pub missing_high: f64,
    /// Chance that an observed hour carries a second measurement.
    pub duplicate_prob: f64,
    /// Stay length is log-uniform on this range, in hours.
    pub min_stay_hours: f64,
    pub max_stay_hours: f64,
    pub acuity_reversion: f64,
    pub acuity_volatility: f64,
    pub mortality_intercept: f64,
    pub mortality_slope: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            noise_scale: 1.0,
            missing_low: 0.2,
            missing_high: 0.8,
            duplicate_prob: 0.1,
            min_stay_hours: 12.0,
            max_stay_hours: 2000.0,
            acuity_reversion: 0.1,
            acuity_volatility: 0.25,
            mortality_intercept: -2.2,
            mortality_slope: 1.2,
        }
    }
}

const NOISE_STD: f64 = 0.3;

impl GeneratorParams {
    /// Every channel observed exactly once per hour without noise.
    pub fn noise_free() -> Self {
        Self {
            noise_scale: 0.0,
            missing_low: 0.0,
            missing_high: 0.0,
            duplicate_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.noise_scale >= 0.0
            && (0.0..=1.0).contains(&self.missing_low)
            && (self.missing_low..=1.0).contains(&self.missing_high)
            && (0.0..=1.0).contains(&self.duplicate_prob)
            && self.min_stay_hours > 0.0
            && self.max_stay_hours >= self.min_stay_hours
            && (0.0..=1.0).contains(&self.acuity_reversion)
            && self.acuity_volatility >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid generator parameters {self:?}"
            )))
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let p = 10f64.powi(decimals);
    (x * p).round() / p
}

/// Patient `index` of the cohort drawn with `seed`. Patients use independent
/// random streams, so any one can be regenerated on its own.
pub fn generate_patient(
    index: u64,
    seed: u64,
    params: &GeneratorParams,
) -> (StayMeta, Vec<RawEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let stay_id = FIRST_STAY_ID + index;

    let unit = rng.random_range(0..CareUnit::ALL.len());
    let age = round_to(rng.random_range(16.0..90.0), 1);
    let (lo, hi) = (params.min_stay_hours.ln(), params.max_stay_hours.ln());
    let stay_hours = if hi > lo {
        round_to(rng.random_range(lo..hi).exp(), 2)
    } else {
        params.min_stay_hours
    }
    .clamp(params.min_stay_hours, params.max_stay_hours);
    let true_hours = (stay_hours.ceil() as usize).max(1);

    let set_point = UNIT_OFFSET[unit] + 0.6 * normal(&mut rng);
    let mut acuity = Vec::with_capacity(true_hours);
    let mut a = set_point + 0.5 * normal(&mut rng);
    for _ in 0..true_hours {
        acuity.push(a);
        a +=
            params.acuity_reversion * (set_point - a) + params.acuity_volatility * normal(&mut rng);
    }
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let missing: Vec<f64> = (0..NUM_FEATURES)
        .map(|_| {
            if params.missing_high > params.missing_low {
                rng.random_range(params.missing_low..params.missing_high)
            } else {
                params.missing_low
            }
        })
        .collect();

    let mut events = Vec::new();
    for (h, &a) in acuity.iter().enumerate() {
        let circadian = (std::f64::consts::TAU * h as f64 / 24.0 + phase).sin();
        // Offsets stay inside the window that rounds to hour h and before
        // discharge.
        let earliest = (h as f64 - 0.5).max(0.0);
        let latest = (h as f64 + 0.499).min(stay_hours);
        for (f, &(base, scale, load, amp)) in CHANNELS.iter().enumerate() {
            if rng.random::<f64>() < missing[f] {
                continue;
            }
            let copies = if rng.random::<f64>() < params.duplicate_prob {
                2
            } else {
                1
            };
            for _ in 0..copies {
                let t = if latest > earliest {
                    round_to(rng.random_range(earliest..=latest), 3)
                } else {
                    earliest
                };
                let noise = params.noise_scale * NOISE_STD * normal(&mut rng);
                let v = base + scale * (load * a + amp * circadian + noise);
                events.push(RawEvent {
                    stay_id,
                    feature_id: f,
                    time_offset: t,
                    value: round_to(v.max(0.0), 4),
                });
            }
        }
    }

    let mean_acuity = acuity.iter().sum::<f64>() / acuity.len() as f64;
    let p_death = sigmoid(params.mortality_intercept + params.mortality_slope * mean_acuity);
    let meta = StayMeta {
        stay_id,
        age,
        care_unit: CareUnit::ALL[unit],
        stay_hours,
        first_icu_stay: true,
        in_hospital_mortality: rng.random::<f64>() < p_death,
    };
    (meta, events)
}

/// Calls `visit` for patients `0..n_patients` in order.
pub fn for_each_patient(
    n_patients: usize,
    seed: u64,
    params: &GeneratorParams,
    mut visit: impl FnMut(StayMeta, Vec<RawEvent>) -> Result<()>,
) -> Result<()> {
    if n_patients == 0 {
        return Err(Error::Domain(
            "the cohort needs at least one patient".into(),
        ));
    }
    params.validate()?;
    for i in 0..n_patients {
        let (meta, events) = generate_patient(i as u64, seed, params);
        visit(meta, events)?;
    }
    Ok(())
}

pub fn generate_synthetic_cohort(
    n_patients: usize,
    seed: u64,
    params: &GeneratorParams,
) -> Result<(Vec<RawEvent>, Vec<StayMeta>)> {
    let mut events = Vec::new();
    let mut stays = Vec::with_capacity(n_patients);
    for_each_patient(n_patients, seed, params, |meta, ev| {
        stays.push(meta);
        events.extend(ev);
        Ok(())
    })?;
    Ok((events, stays))
}
