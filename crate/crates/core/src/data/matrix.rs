//! Per-stay hourly grids and the transformations applied to them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::records::RawEvent;
use crate::error::{Error, Result};
use crate::NUM_FEATURES;

/// An `hours x 30` grid for one stay. Missing cells hold NaN and have a
/// `false` observed flag.
#[derive(Debug, Clone)]
pub struct PatientMatrix {
    pub stay_id: u64,
    /// Rows of the full stay, which may exceed `hours()` after truncation.
    pub true_hours: usize,
    grid: Vec<f64>,
    observed: Vec<bool>,
}

/// Cells compare by bit pattern, so missing cells are equal to each other.
impl PartialEq for PatientMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.stay_id == other.stay_id
            && self.true_hours == other.true_hours
            && self.observed == other.observed
            && self.grid.len() == other.grid.len()
            && self
                .grid
                .iter()
                .zip(&other.grid)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl PatientMatrix {
    pub fn empty(stay_id: u64, true_hours: usize) -> Self {
        Self {
            stay_id,
            true_hours,
            grid: vec![f64::NAN; true_hours * NUM_FEATURES],
            observed: vec![false; true_hours * NUM_FEATURES],
        }
    }

    /// Builds a matrix from a dense grid; NaN cells are treated as missing.
    pub fn from_grid(stay_id: u64, rows: &[[f64; NUM_FEATURES]]) -> Self {
        let grid: Vec<f64> = rows.iter().flatten().copied().collect();
        let observed = grid.iter().map(|v| !v.is_nan()).collect();
        Self {
            stay_id,
            true_hours: rows.len(),
            grid,
            observed,
        }
    }

    /// Rows held in memory.
    pub fn hours(&self) -> usize {
        self.grid.len() / NUM_FEATURES
    }

    pub fn get(&self, hour: usize, feature: usize) -> f64 {
        self.grid[hour * NUM_FEATURES + feature]
    }

    pub fn is_observed(&self, hour: usize, feature: usize) -> bool {
        self.observed[hour * NUM_FEATURES + feature]
    }

    pub fn row(&self, hour: usize) -> &[f64] {
        &self.grid[hour * NUM_FEATURES..(hour + 1) * NUM_FEATURES]
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    pub fn has_missing(&self) -> bool {
        self.grid.iter().any(|v| v.is_nan())
    }

    /// Drops rows beyond `hours`; `true_hours` keeps the full stay length.
    pub fn truncate(&mut self, hours: usize) {
        let cells = hours.min(self.hours()) * NUM_FEATURES;
        self.grid.truncate(cells);
        self.grid.shrink_to_fit();
        self.observed.truncate(cells);
        self.observed.shrink_to_fit();
    }
}

/// Hour a timestamp falls into: nearest integer hour, halves rounding up.
pub fn hour_of(time_offset: f64) -> usize {
    (time_offset + 0.5).floor() as usize
}

/// Places events on the hourly grid. Each event goes to `hour_of` its offset,
/// clamped to the last row; values sharing a cell are averaged.
pub fn bucket_hourly<'a>(
    stay_id: u64,
    events: impl IntoIterator<Item = &'a RawEvent>,
    true_hours: usize,
) -> Result<PatientMatrix> {
    if true_hours == 0 {
        return Err(Error::Domain(format!("stay {stay_id} has zero hours")));
    }
    let cells = true_hours * NUM_FEATURES;
    let mut sums = vec![0.0; cells];
    let mut counts = vec![0u32; cells];
    for e in events {
        if e.stay_id != stay_id {
            return Err(Error::Domain(format!(
                "event for stay {} passed while bucketing stay {stay_id}",
                e.stay_id
            )));
        }
        let hour = hour_of(e.time_offset).min(true_hours - 1);
        let i = hour * NUM_FEATURES + e.feature_id;
        sums[i] += e.value;
        counts[i] += 1;
    }
    let mut m = PatientMatrix::empty(stay_id, true_hours);
    for i in 0..cells {
        if counts[i] > 0 {
            m.grid[i] = sums[i] / f64::from(counts[i]);
            m.observed[i] = true;
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    /// Mean of observed cells, in raw units.
    pub mean: Vec<f64>,
    /// Clamp bounds: 1st and 99th percentiles of observed cells.
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub const CLAMP_LOW_QUANTILE: f64 = 0.01;
pub const CLAMP_HIGH_QUANTILE: f64 = 0.99;

/// Per-feature statistics over the observed cells of `matrices`. A feature
/// whose clamp range collapses to a point gets the range `value +- 0.5`.
pub fn compute_stats<'a>(
    matrices: impl IntoIterator<Item = &'a PatientMatrix>,
) -> Result<NormalizationStats> {
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); NUM_FEATURES];
    for m in matrices {
        for (i, (&v, &obs)) in m.grid.iter().zip(&m.observed).enumerate() {
            if obs {
                values[i % NUM_FEATURES].push(v);
            }
        }
    }
    let unobserved: Vec<String> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_empty())
        .map(|(f, _)| f.to_string())
        .collect();
    if !unobserved.is_empty() {
        return Err(Error::Config(format!(
            "features never observed in the training split: {}",
            unobserved.join(", ")
        )));
    }
    let mut stats = NormalizationStats {
        mean: Vec::with_capacity(NUM_FEATURES),
        low: Vec::with_capacity(NUM_FEATURES),
        high: Vec::with_capacity(NUM_FEATURES),
    };
    for mut v in values {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.sort_unstable_by(f64::total_cmp);
        let mut low = percentile(&v, CLAMP_LOW_QUANTILE);
        let mut high = percentile(&v, CLAMP_HIGH_QUANTILE);
        if high - low <= 0.0 {
            let centre = 0.5 * (low + high);
            low = centre - 0.5;
            high = centre + 0.5;
        }
        stats.mean.push(mean);
        stats.low.push(low);
        stats.high.push(high);
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ImputeMode {
    /// Each gap takes the next later observation; gaps after the last one
    /// take the population mean.
    #[default]
    Backward,
    /// Each gap takes the previous observation; gaps before the first one
    /// take the population mean.
    Forward,
}

impl fmt::Display for ImputeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImputeMode::Backward => "backward",
            ImputeMode::Forward => "forward",
        })
    }
}

impl FromStr for ImputeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "backward" => Ok(ImputeMode::Backward),
            "forward" => Ok(ImputeMode::Forward),
            other => Err(Error::Config(format!(
                "unknown imputation {other:?} (expected backward or forward)"
            ))),
        }
    }
}

/// Fills every missing cell. The observed mask is left untouched.
pub fn impute(
    matrix: &PatientMatrix,
    stats: &NormalizationStats,
    mode: ImputeMode,
) -> PatientMatrix {
    let mut out = matrix.clone();
    let hours = out.hours();
    for f in 0..NUM_FEATURES {
        let mut carry: Option<f64> = None;
        let mut fill = |h: usize| {
            let i = h * NUM_FEATURES + f;
            if out.observed[i] {
                carry = Some(out.grid[i]);
            } else {
                out.grid[i] = carry.unwrap_or(stats.mean[f]);
            }
        };
        match mode {
            ImputeMode::Backward => (0..hours).rev().for_each(&mut fill),
            ImputeMode::Forward => (0..hours).for_each(&mut fill),
        }
    }
    out
}

fn scale(x: f64, low: f64, high: f64) -> f64 {
    (x.clamp(low, high) - low) / (high - low)
}

/// Clamps each feature to `[low, high]` and maps it linearly onto `[0, 1]`.
pub fn normalize(matrix: &PatientMatrix, stats: &NormalizationStats) -> PatientMatrix {
    let mut out = matrix.clone();
    for (i, v) in out.grid.iter_mut().enumerate() {
        let f = i % NUM_FEATURES;
        *v = scale(*v, stats.low[f], stats.high[f]);
    }
    out
}

pub fn normalize_value(x: f64, feature: usize, stats: &NormalizationStats) -> f64 {
    scale(x, stats.low[feature], stats.high[feature])
}

/// Inverse of [`normalize_value`] on `[0, 1]`.
pub fn denormalize_value(y: f64, feature: usize, stats: &NormalizationStats) -> f64 {
    stats.low[feature] + y * (stats.high[feature] - stats.low[feature])
}

/// A fixed-length window in both shapes: `seq()[h][f] == flat()[h * 30 + f]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    values: Vec<f64>,
    /// Hours taken from the stay; the rest is padding.
    pub true_len: usize,
}

impl Window {
    pub fn flat(&self) -> &[f64] {
        &self.values
    }

    pub fn into_flat(self) -> Vec<f64> {
        self.values
    }

    pub fn seq(&self) -> Vec<&[f64]> {
        self.values.chunks(NUM_FEATURES).collect()
    }
}

/// First `interval_hours` hours of the stay, zero-padded at the end.
pub fn window_and_pad(matrix: &PatientMatrix, interval_hours: usize) -> Result<Window> {
    if interval_hours == 0 {
        return Err(Error::Domain("interval must be at least one hour".into()));
    }
    let true_len = interval_hours.min(matrix.true_hours);
    if true_len > matrix.hours() {
        return Err(Error::Domain(format!(
            "stay {} holds {} hours but the window needs {true_len}",
            matrix.stay_id,
            matrix.hours()
        )));
    }
    let mut values = vec![0.0; interval_hours * NUM_FEATURES];
    values[..true_len * NUM_FEATURES].copy_from_slice(&matrix.grid[..true_len * NUM_FEATURES]);
    Ok(Window { values, true_len })
}
