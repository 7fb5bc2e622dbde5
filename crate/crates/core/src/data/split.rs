use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::records::StayMeta;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown split {s:?} (expected train, validation or test)"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub validation: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.70,
            validation: 0.15,
        }
    }
}

pub type SplitAssignment = BTreeMap<u64, Split>;

/// Splits each mortality stratum separately: stays are ordered by id,
/// shuffled with a seeded generator, and cut into `round(train * n)`,
/// `round(validation * n)` and the remainder.
pub fn split_stratified(
    stays: &[StayMeta],
    ratios: SplitRatios,
    seed: u64,
) -> Result<SplitAssignment> {
    if stays.is_empty() {
        return Err(Error::Config("cannot split an empty cohort".into()));
    }
    if !(ratios.train >= 0.0 && ratios.validation >= 0.0 && ratios.train + ratios.validation <= 1.0)
    {
        return Err(Error::Config(format!("invalid split ratios {ratios:?}")));
    }
    let mut assignment = SplitAssignment::new();
    for (stream, died) in [false, true].into_iter().enumerate() {
        let mut ids: Vec<u64> = stays
            .iter()
            .filter(|s| s.in_hospital_mortality == died)
            .map(|s| s.stay_id)
            .collect();
        ids.sort_unstable();
        let n = ids.len();
        if n == 0 {
            continue;
        }
        if n < 3 {
            log::warn!(
                "mortality={} stratum has only {n} stays; some splits get none of them",
                u8::from(died)
            );
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        ids.shuffle(&mut rng);
        let n_train = ((ratios.train * n as f64).round() as usize).min(n);
        let n_val = ((ratios.validation * n as f64).round() as usize).min(n - n_train);
        for (i, id) in ids.into_iter().enumerate() {
            let split = if i < n_train {
                Split::Train
            } else if i < n_train + n_val {
                Split::Validation
            } else {
                Split::Test
            };
            if assignment.insert(id, split).is_some() {
                return Err(Error::Config(format!("duplicate stay_id {id}")));
            }
        }
    }
    Ok(assignment)
}
