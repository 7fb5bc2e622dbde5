//! End-to-end preparation and the on-disk processed dataset.
//!
//! A processed dataset is a directory:
//!
//! ```text
//! manifest.json     DatasetManifest
//! train.csv         # manifest_sha256=<hash of manifest.json>
//!                   stay_id,care_unit,mortality,true_hours,h0_f0,...,h{T-1}_f29
//! validation.csv
//! test.csv
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cohort::{apply_cohort_filters, FilterCounts};
use super::matrix::{
    bucket_hourly, compute_stats, impute, normalize, window_and_pad, ImputeMode,
    NormalizationStats, PatientMatrix,
};
use super::records::{CareUnit, RawEvent, StayMeta};
use super::schema::{Feature, FeatureSchema};
use super::split::{split_stratified, Split, SplitRatios};
use crate::error::{Error, Result};
use crate::model::SeqBatch;
use crate::tensor::Tensor2D;
use crate::NUM_FEATURES;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn stats_sha256(stats: &NormalizationStats) -> String {
    sha256_hex(&serde_json::to_vec(stats).expect("stats serialize"))
}

pub const STAMP_PREFIX: &str = "# manifest_sha256=";

/// First line of every CSV written on behalf of a manifest.
pub fn stamp_line(manifest_sha256: &str) -> String {
    format!("{STAMP_PREFIX}{manifest_sha256}\n")
}

/// Hash recorded in a leading stamp line, if present.
pub fn read_stamp(text: &str) -> Option<&str> {
    text.lines()
        .next()?
        .strip_prefix(STAMP_PREFIX)
        .map(str::trim)
}

/// Passes bytes through while hashing them.
pub struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
}

impl<R: Read> HashingReader<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            hasher: Sha256::new(),
        }
    }

    pub fn finish(self) -> String {
        hex::encode(self.hasher.finalize())
    }
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> std::io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepareOptions {
    pub seed: u64,
    pub ratios: SplitRatios,
    pub imputation: ImputeMode,
    /// Restricts the cohort to one care unit before splitting.
    pub care_unit: Option<CareUnit>,
    /// Hours kept per stay after normalization; windows up to this length
    /// can be cut from the result.
    pub keep_hours: usize,
}

impl Default for PrepareOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            ratios: SplitRatios::default(),
            imputation: ImputeMode::Backward,
            care_unit: None,
            keep_hours: 64,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CohortSummary {
    pub filters: FilterCounts,
    pub dropped_care_unit: usize,
    /// Stays per unit after filtering, listing all five units.
    pub per_unit: BTreeMap<CareUnit, usize>,
    pub split_sizes: BTreeMap<Split, usize>,
    pub split_deaths: BTreeMap<Split, usize>,
    /// Events whose stay is absent from the stays table.
    pub orphan_events: usize,
}

impl CohortSummary {
    pub fn render(&self) -> String {
        let f = &self.filters;
        let mut out = String::new();
        let _ = writeln!(out, "stays read: {}", f.input);
        let _ = writeln!(out, "dropped (age <= 15): {}", f.dropped_age);
        let _ = writeln!(
            out,
            "dropped (stay outside 12-2000 h): {}",
            f.dropped_stay_length
        );
        let _ = writeln!(
            out,
            "dropped (not first ICU stay): {}",
            f.dropped_not_first_stay
        );
        if self.dropped_care_unit > 0 {
            let _ = writeln!(
                out,
                "dropped (other care units): {}",
                self.dropped_care_unit
            );
        }
        let kept: usize = self.per_unit.values().sum();
        let _ = writeln!(out, "kept: {kept}");
        for (unit, n) in &self.per_unit {
            let _ = writeln!(out, "  {unit}: {n}");
        }
        for (split, n) in &self.split_sizes {
            let deaths = self.split_deaths.get(split).copied().unwrap_or(0);
            let _ = writeln!(out, "{split}: {n} stays, {deaths} deaths");
        }
        if self.orphan_events > 0 {
            let _ = writeln!(out, "events without a stay record: {}", self.orphan_events);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedStay {
    pub meta: StayMeta,
    pub split: Split,
    /// Imputed and normalized, truncated to `keep_hours` rows.
    pub matrix: PatientMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedCohort {
    pub options: PrepareOptions,
    pub stats: NormalizationStats,
    pub summary: CohortSummary,
    /// Ordered by stay id.
    pub stays: Vec<PreparedStay>,
}

/// Filters, splits, buckets, fits statistics on the training split, then
/// imputes and normalizes every stay.
///
/// The split comes before the statistics so that nothing outside the training
/// split influences the population means or clamp bounds.
pub fn prepare_cohort(
    stays: &[StayMeta],
    events: impl IntoIterator<Item = RawEvent>,
    options: &PrepareOptions,
) -> Result<PreparedCohort> {
    if options.keep_hours == 0 {
        return Err(Error::Config("keep_hours must be at least 1".into()));
    }
    let (mut kept, filters) = apply_cohort_filters(stays);
    let mut summary = CohortSummary {
        filters,
        ..CohortSummary::default()
    };
    if let Some(unit) = options.care_unit {
        let before = kept.len();
        kept.retain(|s| s.care_unit == unit);
        summary.dropped_care_unit = before - kept.len();
    }
    if kept.is_empty() {
        return Err(Error::Config("cohort filters: no stays left".into()));
    }
    kept.sort_by_key(|s| s.stay_id);
    if kept.windows(2).any(|w| w[0].stay_id == w[1].stay_id) {
        return Err(Error::Config(
            "cohort filters: duplicate stay_id in the stays table".into(),
        ));
    }
    summary.per_unit = CareUnit::ALL.into_iter().map(|u| (u, 0)).collect();
    for s in &kept {
        *summary.per_unit.entry(s.care_unit).or_default() += 1;
    }

    let assignment = split_stratified(&kept, options.ratios, options.seed)
        .map_err(|e| e.with_context("split"))?;
    for split in Split::ALL {
        summary.split_sizes.insert(split, 0);
        summary.split_deaths.insert(split, 0);
    }
    for s in &kept {
        let split = assignment[&s.stay_id];
        *summary
            .split_sizes
            .get_mut(&split)
            .expect("all splits listed") += 1;
        if s.in_hospital_mortality {
            *summary
                .split_deaths
                .get_mut(&split)
                .expect("all splits listed") += 1;
        }
    }

    let known: HashMap<u64, usize> = stays
        .iter()
        .enumerate()
        .map(|(i, s)| (s.stay_id, i))
        .collect();
    let mut grouped: HashMap<u64, Vec<RawEvent>> =
        kept.iter().map(|s| (s.stay_id, Vec::new())).collect();
    for e in events {
        match grouped.get_mut(&e.stay_id) {
            Some(list) => list.push(e),
            None if !known.contains_key(&e.stay_id) => summary.orphan_events += 1,
            None => {}
        }
    }
    if summary.orphan_events > 0 {
        log::warn!(
            "{} events reference stays missing from the stays table",
            summary.orphan_events
        );
    }

    let mut matrices = Vec::with_capacity(kept.len());
    for s in &kept {
        let events = grouped.remove(&s.stay_id).unwrap_or_default();
        let m = bucket_hourly(s.stay_id, &events, s.true_hours())
            .map_err(|e| e.with_context("bucketing"))?;
        matrices.push(m);
    }

    let stats = compute_stats(
        kept.iter()
            .zip(&matrices)
            .filter(|(s, _)| assignment[&s.stay_id] == Split::Train)
            .map(|(_, m)| m),
    )
    .map_err(|e| e.with_context("statistics"))?;

    let stays = kept
        .into_iter()
        .zip(matrices)
        .map(|(meta, raw)| {
            let mut matrix = normalize(&impute(&raw, &stats, options.imputation), &stats);
            matrix.truncate(options.keep_hours);
            PreparedStay {
                split: assignment[&meta.stay_id],
                meta,
                matrix,
            }
        })
        .collect();
    Ok(PreparedCohort {
        options: options.clone(),
        stats,
        summary,
        stays,
    })
}

/// One split of windowed samples, in stay-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub stay_ids: Vec<u64>,
    pub care_units: Vec<CareUnit>,
    pub mortality: Vec<bool>,
    /// Full stay length in hours, before windowing.
    pub true_hours: Vec<usize>,
    pub batch: SeqBatch,
}

impl SplitData {
    pub fn len(&self) -> usize {
        self.stay_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stay_ids.is_empty()
    }

    pub fn position(&self, stay_id: u64) -> Option<usize> {
        self.stay_ids.iter().position(|&id| id == stay_id)
    }

    pub fn select(&self, indices: &[usize]) -> SplitData {
        SplitData {
            stay_ids: indices.iter().map(|&i| self.stay_ids[i]).collect(),
            care_units: indices.iter().map(|&i| self.care_units[i]).collect(),
            mortality: indices.iter().map(|&i| self.mortality[i]).collect(),
            true_hours: indices.iter().map(|&i| self.true_hours[i]).collect(),
            batch: self.batch.select(indices),
        }
    }

    pub fn care_unit_subset(&self, unit: CareUnit) -> SplitData {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.care_units[i] == unit)
            .collect();
        self.select(&idx)
    }

    fn from_stays(stays: &[&PreparedStay], interval: usize) -> Result<Self> {
        let mut values = Tensor2D::zeros(stays.len(), interval * NUM_FEATURES);
        let mut lengths = Vec::with_capacity(stays.len());
        for (r, s) in stays.iter().enumerate() {
            let w = window_and_pad(&s.matrix, interval)?;
            values.row_mut(r).copy_from_slice(w.flat());
            lengths.push(w.true_len);
        }
        Ok(SplitData {
            stay_ids: stays.iter().map(|s| s.meta.stay_id).collect(),
            care_units: stays.iter().map(|s| s.meta.care_unit).collect(),
            mortality: stays.iter().map(|s| s.meta.in_hospital_mortality).collect(),
            true_hours: stays.iter().map(|s| s.meta.true_hours()).collect(),
            batch: SeqBatch::new(values, interval, NUM_FEATURES, lengths)?,
        })
    }

    fn to_csv(&self, manifest_sha256: &str) -> String {
        let width = self.batch.width();
        let mut out = String::with_capacity(self.len() * width * 8 + 128);
        out.push_str(&stamp_line(manifest_sha256));
        out.push_str("stay_id,care_unit,mortality,true_hours");
        for h in 0..self.batch.steps() {
            for f in 0..NUM_FEATURES {
                let _ = write!(out, ",h{h}_f{f}");
            }
        }
        out.push('\n');
        for i in 0..self.len() {
            let _ = write!(
                out,
                "{},{},{},{}",
                self.stay_ids[i],
                self.care_units[i],
                u8::from(self.mortality[i]),
                self.true_hours[i]
            );
            for v in self.batch.values().row(i) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    fn from_csv(text: &str, interval: usize, path: &Path) -> Result<Self> {
        let width = interval * NUM_FEATURES;
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: line as u64,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.starts_with('#'));
        match lines.next() {
            Some((_, header))
                if header.split(',').count() == width + 4 && header.starts_with("stay_id,") => {}
            _ => {
                return Err(err(
                    1,
                    format!("header does not describe {width} window values"),
                ))
            }
        }
        let mut ids = Vec::new();
        let mut units = Vec::new();
        let mut mortality = Vec::new();
        let mut true_hours = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines {
            let lineno = i + 1;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != width + 4 {
                return Err(err(
                    lineno,
                    format!("expected {} fields, found {}", width + 4, fields.len()),
                ));
            }
            ids.push(
                fields[0]
                    .parse::<u64>()
                    .map_err(|e| err(lineno, format!("stay_id: {e}")))?,
            );
            units.push(
                fields[1]
                    .parse::<CareUnit>()
                    .map_err(|e| err(lineno, e.to_string()))?,
            );
            mortality.push(match fields[2] {
                "1" => true,
                "0" => false,
                other => return Err(err(lineno, format!("mortality {other:?}"))),
            });
            true_hours.push(
                fields[3]
                    .parse::<usize>()
                    .map_err(|e| err(lineno, format!("true_hours: {e}")))?,
            );
            for v in &fields[4..] {
                data.push(
                    v.parse::<f64>()
                        .map_err(|e| err(lineno, format!("value {v:?}: {e}")))?,
                );
            }
        }
        let lengths = true_hours.iter().map(|&h| h.min(interval)).collect();
        let values = Tensor2D::new(ids.len(), width, data)?;
        let batch = SeqBatch::new(values, interval, NUM_FEATURES, lengths)
            .map_err(|e| err(0, e.to_string()))?;
        Ok(SplitData {
            stay_ids: ids,
            care_units: units,
            mortality,
            true_hours,
            batch,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceHashes {
    pub events_sha256: String,
    pub stays_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub interval_hours: usize,
    pub features: usize,
    pub flat_width: usize,
    pub seed: u64,
    pub ratios: SplitRatios,
    pub imputation: ImputeMode,
    pub care_unit_filter: Option<CareUnit>,
    pub schema: Vec<Feature>,
    pub schema_sha256: String,
    pub stats: NormalizationStats,
    pub stats_sha256: String,
    pub summary: CohortSummary,
    pub source: Option<SourceHashes>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedDataset {
    pub manifest: DatasetManifest,
    pub train: SplitData,
    pub validation: SplitData,
    pub test: SplitData,
}

impl PreparedCohort {
    /// Windows every stay at `interval_hours` and groups them by split.
    pub fn dataset(
        &self,
        interval_hours: usize,
        schema: &FeatureSchema,
    ) -> Result<ProcessedDataset> {
        if interval_hours == 0 || interval_hours > self.options.keep_hours {
            return Err(Error::Config(format!(
                "interval {interval_hours} h is outside 1..={} h kept during preparation",
                self.options.keep_hours
            )));
        }
        let pick = |split: Split| -> Result<SplitData> {
            let stays: Vec<&PreparedStay> =
                self.stays.iter().filter(|s| s.split == split).collect();
            SplitData::from_stays(&stays, interval_hours)
                .map_err(|e| e.with_context(format!("windowing {split}")))
        };
        let manifest = DatasetManifest {
            format_version: FORMAT_VERSION,
            interval_hours,
            features: NUM_FEATURES,
            flat_width: interval_hours * NUM_FEATURES,
            seed: self.options.seed,
            ratios: self.options.ratios,
            imputation: self.options.imputation,
            care_unit_filter: self.options.care_unit,
            schema: schema.features().to_vec(),
            schema_sha256: schema.sha256(),
            stats: self.stats.clone(),
            stats_sha256: stats_sha256(&self.stats),
            summary: self.summary.clone(),
            source: None,
        };
        Ok(ProcessedDataset {
            manifest,
            train: pick(Split::Train)?,
            validation: pick(Split::Validation)?,
            test: pick(Split::Test)?,
        })
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

impl ProcessedDataset {
    pub fn split(&self, split: Split) -> &SplitData {
        match split {
            Split::Train => &self.train,
            Split::Validation => &self.validation,
            Split::Test => &self.test,
        }
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        FeatureSchema::new(self.manifest.schema.clone())
    }

    /// Writes the container and returns the manifest hash.
    pub fn write(&self, dir: &Path) -> Result<String> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = self.manifest_json();
        let hash = sha256_hex(json.as_bytes());
        write_file(&dir.join(MANIFEST_FILE), json.as_bytes())?;
        for split in Split::ALL {
            let text = self.split(split).to_csv(&hash);
            write_file(&dir.join(format!("{split}.csv")), text.as_bytes())?;
        }
        Ok(hash)
    }

    pub fn manifest_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        json.push('\n');
        json
    }

    pub fn manifest_sha256(&self) -> String {
        sha256_hex(self.manifest_json().as_bytes())
    }

    /// Reads only the manifest and its hash.
    pub fn read_manifest(dir: &Path) -> Result<(DatasetManifest, String)> {
        let path = dir.join(MANIFEST_FILE);
        let bytes = read_file(&path)?;
        let manifest: DatasetManifest =
            serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
                path: path.clone(),
                line: e.line() as u64,
                msg: e.to_string(),
            })?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "{}: unsupported dataset format {}",
                path.display(),
                manifest.format_version
            )));
        }
        if manifest.features != NUM_FEATURES
            || manifest.flat_width != manifest.interval_hours * NUM_FEATURES
        {
            return Err(Error::Config(format!(
                "{}: inconsistent window shape",
                path.display()
            )));
        }
        Ok((manifest, sha256_hex(&bytes)))
    }

    /// Loads a container. Every split file must carry the stamp of the
    /// manifest next to it. Returns the dataset and the manifest hash.
    pub fn read(dir: &Path) -> Result<(Self, String)> {
        let (manifest, hash) = Self::read_manifest(dir)?;
        let mut splits = Vec::with_capacity(3);
        for split in Split::ALL {
            let path = dir.join(format!("{split}.csv"));
            let bytes = read_file(&path)?;
            let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
                path: path.clone(),
                line: 0,
                msg: e.to_string(),
            })?;
            if read_stamp(&text) != Some(hash.as_str()) {
                return Err(Error::Config(format!(
                    "{} was not written with {}",
                    path.display(),
                    dir.join(MANIFEST_FILE).display()
                )));
            }
            splits.push(SplitData::from_csv(&text, manifest.interval_hours, &path)?);
        }
        let test = splits.pop().expect("three splits");
        let validation = splits.pop().expect("three splits");
        let train = splits.pop().expect("three splits");
        Ok((
            Self {
                manifest,
                train,
                validation,
                test,
            },
            hash,
        ))
    }
}

/// Hash over the manifest and the three split files of a written container.
pub fn container_sha256(dir: &Path) -> Result<String> {
    let mut hasher = Sha256::new();
    for name in [MANIFEST_FILE, "train.csv", "validation.csv", "test.csv"] {
        hasher.update(read_file(&dir.join(name))?);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth::{generate_synthetic_cohort, GeneratorParams};

    fn cohort(n: usize, seed: u64) -> (Vec<RawEvent>, Vec<StayMeta>) {
        let params = GeneratorParams {
            max_stay_hours: 150.0,
            ..GeneratorParams::default()
        };
        generate_synthetic_cohort(n, seed, &params).unwrap()
    }

    #[test]
    fn prepare_is_idempotent_and_bounded() {
        let (events, stays) = cohort(60, 1);
        let opts = PrepareOptions::default();
        let a = prepare_cohort(&stays, events.clone(), &opts).unwrap();
        let b = prepare_cohort(&stays, events, &opts).unwrap();
        assert_eq!(a, b);
        for s in &a.stays {
            assert!(!s.matrix.has_missing());
            assert!(s.matrix.grid().iter().all(|v| (0.0..=1.0).contains(v)));
            assert!(s.matrix.hours() <= 64);
        }
        assert_eq!(a.summary.per_unit.len(), 5);
        assert_eq!(a.summary.split_sizes.values().sum::<usize>(), 60);
    }

    #[test]
    fn stats_ignore_non_training_stays() {
        let (mut events, stays) = cohort(60, 2);
        let opts = PrepareOptions::default();
        let base = prepare_cohort(&stays, events.clone(), &opts).unwrap();
        let test_id = base
            .stays
            .iter()
            .find(|s| s.split == Split::Test)
            .unwrap()
            .meta
            .stay_id;
        for e in events.iter_mut().filter(|e| e.stay_id == test_id) {
            e.value += 1e6;
        }
        let perturbed = prepare_cohort(&stays, events, &opts).unwrap();
        assert_eq!(base.stats, perturbed.stats);
        let a = base
            .stays
            .iter()
            .find(|s| s.meta.stay_id == test_id)
            .unwrap();
        let b = perturbed
            .stays
            .iter()
            .find(|s| s.meta.stay_id == test_id)
            .unwrap();
        assert_ne!(a.matrix, b.matrix);
    }

    #[test]
    fn care_unit_filter_and_orphans() {
        let (mut events, stays) = cohort(50, 3);
        events.push(RawEvent {
            stay_id: 1,
            feature_id: 0,
            time_offset: 0.0,
            value: 1.0,
        });
        let opts = PrepareOptions {
            care_unit: Some(CareUnit::CCU),
            ..PrepareOptions::default()
        };
        let p = prepare_cohort(&stays, events, &opts).unwrap();
        assert!(p.stays.iter().all(|s| s.meta.care_unit == CareUnit::CCU));
        assert_eq!(p.summary.orphan_events, 1);
        assert_eq!(p.summary.dropped_care_unit + p.stays.len(), 50);
    }

    #[test]
    fn container_round_trip_and_hash() {
        let (events, stays) = cohort(40, 4);
        let p = prepare_cohort(&stays, events, &PrepareOptions::default()).unwrap();
        let schema = FeatureSchema::default();
        let ds = p.dataset(16, &schema).unwrap();
        assert_eq!(ds.manifest.flat_width, 480);
        let dir = tempfile::tempdir().unwrap();
        let hash = ds.write(dir.path()).unwrap();
        assert_eq!(hash, ds.manifest_sha256());
        let (back, read_hash) = ProcessedDataset::read(dir.path()).unwrap();
        assert_eq!(hash, read_hash);
        assert_eq!(back, ds);
        let other = tempfile::tempdir().unwrap();
        let again = p.dataset(16, &schema).unwrap();
        assert_eq!(again.write(other.path()).unwrap(), hash);
        assert_eq!(
            container_sha256(dir.path()).unwrap(),
            container_sha256(other.path()).unwrap()
        );
        std::fs::write(dir.path().join("test.csv"), "tampered").unwrap();
        assert!(matches!(
            ProcessedDataset::read(dir.path()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn windows_match_matrices() {
        let (events, stays) = cohort(30, 5);
        let p = prepare_cohort(&stays, events, &PrepareOptions::default()).unwrap();
        let ds = p.dataset(32, &FeatureSchema::default()).unwrap();
        assert!(p.dataset(65, &FeatureSchema::default()).is_err());
        let s = &ds.train;
        let i = 0;
        let stay = p
            .stays
            .iter()
            .find(|x| x.meta.stay_id == s.stay_ids[i])
            .unwrap();
        let row = s.batch.values().row(i);
        for h in 0..32 {
            for f in 0..NUM_FEATURES {
                let want = if h < stay.meta.true_hours() {
                    stay.matrix.get(h, f)
                } else {
                    0.0
                };
                assert_eq!(row[h * NUM_FEATURES + f], want);
            }
        }
        let ccu = ds.test.care_unit_subset(CareUnit::CCU);
        assert!(ccu.care_units.iter().all(|&u| u == CareUnit::CCU));
    }
}
