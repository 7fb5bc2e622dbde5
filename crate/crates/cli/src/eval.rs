//! Reconstruction error per checkpoint, overall and per care unit, plus the
//! model-by-interval and model-by-unit tables derived from it.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use icuae_core::data::{CareUnit, ProcessedDataset, Split, SplitData};
use icuae_core::{evaluate, load_checkpoint, AnyModel, CheckpointHeader, ModelKind};
use serde::Serialize;

use crate::config::ConfigFile;
use crate::error::CliError;
use crate::output::{create_dir, file_sha256, num, write_manifest, StampedCsv};
use crate::EvalArgs;

pub const REPORT_FILE: &str = "report.csv";
pub const FIGURE2_FILE: &str = "figure2.csv";
pub const FIGURE3_FILE: &str = "figure3.csv";
pub const TIMING_FILE: &str = "timing.csv";
pub const EVAL_MANIFEST: &str = "eval.json";

/// Interval preferred for the per-unit table when it was evaluated.
pub const FIGURE3_INTERVAL: usize = 32;

const MODEL_COLUMNS: [ModelKind; 3] = [ModelKind::Dense1, ModelKind::Dense2, ModelKind::Seq];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub model: ModelKind,
    pub interval_hours: usize,
    /// Care unit the model was trained on, `None` for the whole cohort.
    pub trained_on: Option<CareUnit>,
    /// Care unit the error is measured on, `None` for the whole split.
    pub subset: Option<CareUnit>,
    pub samples: usize,
    pub mse: f64,
    pub checkpoint_sha256: String,
}

struct Loaded {
    sha256: String,
    model: AnyModel,
    header: CheckpointHeader,
    trained_on: Option<CareUnit>,
}

#[derive(Serialize)]
struct CheckpointEntry {
    sha256: String,
    model: ModelKind,
    interval_hours: usize,
    trained_on: Option<CareUnit>,
    dataset_manifest_sha256: String,
}

#[derive(Serialize)]
struct EvalManifest {
    command: &'static str,
    split: Split,
    checkpoints: Vec<CheckpointEntry>,
}

fn label(unit: Option<CareUnit>) -> String {
    unit.map_or("all".to_string(), |u| u.to_string())
}

fn load(path: &Path) -> Result<Loaded, CliError> {
    let sha256 = file_sha256(path)?;
    let (model, header) = load_checkpoint(path)?;
    let trained_on = header
        .meta
        .care_unit
        .as_deref()
        .map(str::parse::<CareUnit>)
        .transpose()
        .map_err(|e| e.with_context(path.display().to_string()))?;
    Ok(Loaded {
        sha256,
        model,
        header,
        trained_on,
    })
}

/// A dataset can score a checkpoint when its windows have the checkpoint's
/// length and it shares the schema and normalization statistics the model
/// was trained under.
pub fn compatible(header: &CheckpointHeader, manifest: &icuae_core::data::DatasetManifest) -> bool {
    let meta = &header.meta;
    meta.interval_hours == manifest.interval_hours
        && meta.features == manifest.features
        && meta
            .schema_sha256
            .as_deref()
            .is_none_or(|s| s == manifest.schema_sha256)
        && meta
            .stats_sha256
            .as_deref()
            .is_none_or(|s| s == manifest.stats_sha256)
}

/// Index of the dataset to score `header` on: the one it was trained on if
/// present, otherwise the first compatible one.
fn match_dataset(
    header: &CheckpointHeader,
    datasets: &[(ProcessedDataset, String)],
) -> Option<usize> {
    let exact = header
        .meta
        .dataset_hash
        .as_deref()
        .and_then(|h| datasets.iter().position(|(_, hash)| hash == h));
    exact.or_else(|| {
        datasets
            .iter()
            .position(|(ds, _)| compatible(header, &ds.manifest))
    })
}

fn score(
    ckpt: &Loaded,
    data: &SplitData,
    subset: Option<CareUnit>,
) -> Result<Option<EvalRow>, CliError> {
    let data = match subset {
        Some(unit) => data.care_unit_subset(unit),
        None => data.clone(),
    };
    if data.is_empty() {
        return Ok(None);
    }
    let mse = evaluate(&ckpt.model, &data.batch, ckpt.header.meta.mask_padding).map_err(|e| {
        e.with_context(format!(
            "{} interval {}",
            ckpt.header.kind, ckpt.header.meta.interval_hours
        ))
    })?;
    Ok(Some(EvalRow {
        model: ckpt.header.kind,
        interval_hours: ckpt.header.meta.interval_hours,
        trained_on: ckpt.trained_on,
        subset,
        samples: data.len(),
        mse,
        checkpoint_sha256: ckpt.sha256.clone(),
    }))
}

/// Whole-split errors of whole-cohort models, keyed by (interval, model).
pub fn figure2(rows: &[EvalRow]) -> Result<BTreeMap<(usize, ModelKind), f64>, CliError> {
    let mut table = BTreeMap::new();
    for r in rows
        .iter()
        .filter(|r| r.trained_on.is_none() && r.subset.is_none())
    {
        if table.insert((r.interval_hours, r.model), r.mse).is_some() {
            return Err(CliError::Usage(format!(
                "several whole-cohort {} checkpoints at interval {}; evaluate them separately",
                r.model, r.interval_hours
            )));
        }
    }
    Ok(table)
}

/// Interval used for the per-unit table.
pub fn figure3_interval(rows: &[EvalRow]) -> Option<usize> {
    if rows.iter().any(|r| r.interval_hours == FIGURE3_INTERVAL) {
        Some(FIGURE3_INTERVAL)
    } else {
        rows.iter().map(|r| r.interval_hours).max()
    }
}

/// Per-unit errors at `interval`, keyed by (unit, model). A model trained on
/// the unit itself takes precedence over the whole-cohort model scored on
/// that unit's stays.
pub fn figure3(rows: &[EvalRow], interval: usize) -> BTreeMap<(CareUnit, ModelKind), (f64, usize)> {
    let mut table = BTreeMap::new();
    let at_interval = rows.iter().filter(|r| r.interval_hours == interval);
    for r in at_interval.clone().filter(|r| r.trained_on.is_none()) {
        if let Some(unit) = r.subset {
            table.entry((unit, r.model)).or_insert((r.mse, r.samples));
        }
    }
    for r in at_interval.filter(|r| r.trained_on.is_some() && r.trained_on == r.subset) {
        table.insert((r.subset.expect("filtered"), r.model), (r.mse, r.samples));
    }
    table
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let mut split = args.split;
    if let Some(path) = &args.config {
        let cfg = ConfigFile::load(path)?;
        cfg.check_keys(&["split"])?;
        cfg.apply("split", &mut split)?;
    }

    let checkpoints = args
        .checkpoints
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>, _>>()?;
    let mut datasets = Vec::with_capacity(args.datasets.len());
    for dir in &args.datasets {
        datasets.push(ProcessedDataset::read(dir)?);
    }
    let assignment = checkpoints
        .iter()
        .zip(&args.checkpoints)
        .map(|(c, path)| {
            match_dataset(&c.header, &datasets).ok_or_else(|| {
                CliError::Core(icuae_core::Error::Config(format!(
                    "{}: no dataset matches its interval ({} h), schema and normalization statistics",
                    path.display(),
                    c.header.meta.interval_hours
                )))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for (ckpt, &d) in checkpoints.iter().zip(&assignment) {
        let data = datasets[d].0.split(split);
        let started = Instant::now();
        for subset in std::iter::once(None).chain(CareUnit::ALL.iter().copied().map(Some)) {
            rows.extend(score(ckpt, data, subset)?);
        }
        timings.push((ckpt, started.elapsed().as_secs_f64()));
    }

    create_dir(&args.out)?;
    let manifest = EvalManifest {
        command: "eval",
        split,
        checkpoints: checkpoints
            .iter()
            .zip(&assignment)
            .map(|(c, &d)| CheckpointEntry {
                sha256: c.sha256.clone(),
                model: c.header.kind,
                interval_hours: c.header.meta.interval_hours,
                trained_on: c.trained_on,
                dataset_manifest_sha256: datasets[d].1.clone(),
            })
            .collect(),
    };
    let hash = write_manifest(&args.out.join(EVAL_MANIFEST), &manifest)?;
    write_report(&args.out.join(REPORT_FILE), &hash, &rows)?;
    write_figure2(&args.out.join(FIGURE2_FILE), &hash, &figure2(&rows)?)?;
    write_figure3(&args.out.join(FIGURE3_FILE), &hash, &rows)?;

    let mut csv = StampedCsv::with_header(
        &args.out.join(TIMING_FILE),
        &hash,
        "model,interval,trained_on,seconds",
    )?;
    for (c, secs) in timings {
        csv.line(&format!(
            "{},{},{},{secs:.3}",
            c.header.kind,
            c.header.meta.interval_hours,
            label(c.trained_on)
        ))?;
    }
    csv.finish()?;

    for r in rows.iter().filter(|r| r.subset.is_none()) {
        println!(
            "{} interval {} trained on {}: {split} mse {} (n={})",
            r.model,
            r.interval_hours,
            label(r.trained_on),
            num(r.mse),
            r.samples
        );
    }
    println!("eval_manifest_sha256={hash}");
    Ok(())
}

fn write_report(path: &Path, hash: &str, rows: &[EvalRow]) -> Result<(), CliError> {
    let mut csv = StampedCsv::with_header(
        path,
        hash,
        "model,interval,trained_on,subset,n,mse,checkpoint_sha256",
    )?;
    for r in rows {
        csv.line(&format!(
            "{},{},{},{},{},{},{}",
            r.model,
            r.interval_hours,
            label(r.trained_on),
            label(r.subset),
            r.samples,
            num(r.mse),
            r.checkpoint_sha256
        ))?;
    }
    csv.finish()
}

fn cell(value: Option<f64>) -> String {
    value.map_or(String::new(), num)
}

fn write_figure2(
    path: &Path,
    hash: &str,
    table: &BTreeMap<(usize, ModelKind), f64>,
) -> Result<(), CliError> {
    let mut csv = StampedCsv::with_header(path, hash, "interval,dense1,dense2,seq")?;
    let mut intervals: Vec<usize> = table.keys().map(|k| k.0).collect();
    intervals.dedup();
    for interval in intervals {
        let cells: Vec<String> = MODEL_COLUMNS
            .iter()
            .map(|&m| cell(table.get(&(interval, m)).copied()))
            .collect();
        csv.line(&format!("{interval},{}", cells.join(",")))?;
    }
    csv.finish()
}

fn write_figure3(path: &Path, hash: &str, rows: &[EvalRow]) -> Result<(), CliError> {
    let mut csv = StampedCsv::with_header(path, hash, "care_unit,interval,n,dense1,dense2,seq")?;
    if let Some(interval) = figure3_interval(rows) {
        let table = figure3(rows, interval);
        for unit in CareUnit::ALL {
            let n = MODEL_COLUMNS
                .iter()
                .find_map(|&m| table.get(&(unit, m)).map(|v| v.1))
                .unwrap_or(0);
            let cells: Vec<String> = MODEL_COLUMNS
                .iter()
                .map(|&m| cell(table.get(&(unit, m)).map(|v| v.0)))
                .collect();
            csv.line(&format!("{unit},{interval},{n},{}", cells.join(",")))?;
        }
    }
    csv.finish()
}
