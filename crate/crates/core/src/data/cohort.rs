use serde::{Deserialize, Serialize};

use super::records::StayMeta;

pub const MIN_AGE_EXCLUSIVE: f64 = 15.0;
pub const MIN_STAY_HOURS: f64 = 12.0;
pub const MAX_STAY_HOURS: f64 = 2000.0;

/// Stays removed by each filter, counted in the order the filters apply.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterCounts {
    pub input: usize,
    pub dropped_age: usize,
    pub dropped_stay_length: usize,
    pub dropped_not_first_stay: usize,
    pub kept: usize,
}

pub fn passes_filters(s: &StayMeta) -> bool {
    s.age > MIN_AGE_EXCLUSIVE
        && (MIN_STAY_HOURS..=MAX_STAY_HOURS).contains(&s.stay_hours)
        && s.first_icu_stay
}

/// Keeps adults older than 15 on their first ICU stay lasting between 12 and
/// 2000 hours inclusive. Every [`super::CareUnit`] is one of the five study
/// units, so unit membership holds by construction.
pub fn apply_cohort_filters(stays: &[StayMeta]) -> (Vec<StayMeta>, FilterCounts) {
    let mut counts = FilterCounts {
        input: stays.len(),
        ..FilterCounts::default()
    };
    let mut kept = Vec::with_capacity(stays.len());
    for s in stays {
        if s.age <= MIN_AGE_EXCLUSIVE {
            counts.dropped_age += 1;
        } else if !(MIN_STAY_HOURS..=MAX_STAY_HOURS).contains(&s.stay_hours) {
            counts.dropped_stay_length += 1;
        } else if !s.first_icu_stay {
            counts.dropped_not_first_stay += 1;
        } else {
            kept.push(*s);
        }
    }
    counts.kept = kept.len();
    (kept, counts)
}
