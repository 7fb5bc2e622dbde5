//! Raw events to normalized, zero-padded windows.
//!
//! Stays are filtered, split by mortality stratum, bucketed onto an hourly
//! grid, imputed, clamped and min-max scaled with statistics fitted on the
//! training split, and finally cut into fixed-length windows anchored at
//! admission.

pub mod cohort;
pub mod dataset;
pub mod matrix;
pub mod records;
pub mod schema;
pub mod split;
pub mod synth;

pub use cohort::{apply_cohort_filters, passes_filters, FilterCounts};
pub use dataset::{
    container_sha256, prepare_cohort, read_stamp, sha256_hex, stamp_line, stats_sha256,
    CohortSummary, DatasetManifest, HashingReader, PrepareOptions, PreparedCohort, PreparedStay,
    ProcessedDataset, SourceHashes, SplitData,
};
pub use matrix::{
    bucket_hourly, compute_stats, denormalize_value, hour_of, impute, normalize, normalize_value,
    window_and_pad, ImputeMode, NormalizationStats, PatientMatrix, Window,
};
pub use records::{
    load_events, read_events, read_stays, write_events, write_stays, CareUnit, RawEvent, StayMeta,
};
pub use schema::{Feature, FeatureSchema};
pub use split::{split_stratified, Split, SplitAssignment, SplitRatios};
pub use synth::{for_each_patient, generate_patient, generate_synthetic_cohort, GeneratorParams};
