use std::path::Path;
use std::time::Instant;

use icuae_core::data::{ProcessedDataset, SplitData};
use icuae_core::{build_model, save_checkpoint, CheckpointMeta, ModelKind, TrainConfig};
use serde::Serialize;

use crate::config::{render, ConfigFile};
use crate::error::CliError;
use crate::output::{create_dir, write_manifest, StampedCsv};
use crate::TrainArgs;

pub const RUN_MANIFEST: &str = "run.json";
pub const RUN_CONFIG: &str = "run.cfg";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const HISTORY_FILE: &str = "history.csv";

const CONFIG_KEYS: &[&str] = &[
    "model",
    "interval",
    "care_unit",
    "seed",
    "mask_padding",
    "batch_size",
    "max_epochs",
    "patience",
    "learning_rate",
    "optimizer",
    "clip_norm",
];

/// Everything that determines the trained weights. Paths and timings are
/// left out so identical runs produce identical manifests.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    command: &'static str,
    model: ModelKind,
    interval_hours: usize,
    care_unit: Option<String>,
    dataset_manifest_sha256: &'a str,
    train_samples: usize,
    validation_samples: usize,
    config: &'a TrainConfig,
}

fn parse_clip(text: &str) -> Result<Option<f64>, CliError> {
    if text.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    text.parse::<f64>().map(Some).map_err(|_| {
        CliError::Usage(format!(
            "clip_norm: expected a number or \"none\", got {text:?}"
        ))
    })
}

fn restrict(
    data: &SplitData,
    args_unit: Option<icuae_core::data::CareUnit>,
    name: &str,
) -> Result<SplitData, CliError> {
    let Some(unit) = args_unit else {
        return Ok(data.clone());
    };
    let subset = data.care_unit_subset(unit);
    if subset.is_empty() {
        return Err(icuae_core::Error::Config(format!("{name} split has no {unit} stays")).into());
    }
    Ok(subset)
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    let mut model = args.model;
    let mut interval = args.interval;
    let mut care_unit = args.care_unit;
    let mut clip = args.clip_norm.clone();
    let mut config = TrainConfig {
        batch_size: args.batch_size,
        max_epochs: args.max_epochs,
        patience: args.patience,
        learning_rate: args.learning_rate,
        optimizer: args.optimizer,
        seed: args.seed,
        mask_padding: args.mask_padding,
        clip_norm: None,
    };
    if let Some(path) = &args.config {
        let cfg = ConfigFile::load(path)?;
        cfg.check_keys(CONFIG_KEYS)?;
        cfg.apply_opt("model", &mut model)?;
        cfg.apply_opt("interval", &mut interval)?;
        cfg.apply_opt("care_unit", &mut care_unit)?;
        cfg.apply("seed", &mut config.seed)?;
        cfg.apply("mask_padding", &mut config.mask_padding)?;
        cfg.apply("batch_size", &mut config.batch_size)?;
        cfg.apply("max_epochs", &mut config.max_epochs)?;
        cfg.apply("patience", &mut config.patience)?;
        cfg.apply("learning_rate", &mut config.learning_rate)?;
        cfg.apply("optimizer", &mut config.optimizer)?;
        cfg.apply("clip_norm", &mut clip)?;
    }
    config.clip_norm = parse_clip(&clip)?;
    let model_kind = model.ok_or_else(|| CliError::Usage("--model is required".into()))?;
    config
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;

    let (manifest, _) = ProcessedDataset::read_manifest(&args.data)?;
    if let Some(requested) = interval {
        if requested != manifest.interval_hours {
            return Err(CliError::Usage(format!(
                "--interval {requested} conflicts with the dataset's {}-hour windows",
                manifest.interval_hours
            )));
        }
    }
    let interval = manifest.interval_hours;

    let (dataset, dataset_hash) = ProcessedDataset::read(&args.data)?;
    let train_set = restrict(&dataset.train, care_unit, "train")?;
    let validation_set = restrict(&dataset.validation, care_unit, "validation")?;

    create_dir(&args.out)?;
    let run = RunManifest {
        command: "train",
        model: model_kind,
        interval_hours: interval,
        care_unit: care_unit.map(|u| u.to_string()),
        dataset_manifest_sha256: &dataset_hash,
        train_samples: train_set.len(),
        validation_samples: validation_set.len(),
        config: &config,
    };
    let run_hash = write_manifest(&args.out.join(RUN_MANIFEST), &run)?;
    write_run_config(
        &args.out.join(RUN_CONFIG),
        model_kind,
        interval,
        care_unit,
        &config,
    )?;

    let initial = build_model(model_kind, interval, config.seed)?;
    let started = Instant::now();
    let (trained, history) =
        icuae_core::train(initial, &train_set.batch, &validation_set.batch, &config)?;
    let elapsed = started.elapsed();

    let meta = CheckpointMeta {
        interval_hours: interval,
        features: manifest.features,
        dataset_hash: Some(dataset_hash.clone()),
        schema_sha256: Some(manifest.schema_sha256.clone()),
        stats_sha256: Some(manifest.stats_sha256.clone()),
        care_unit: care_unit.map(|u| u.to_string()),
        mask_padding: config.mask_padding,
    };
    save_checkpoint(&args.out.join(CHECKPOINT_FILE), &trained, &meta)?;

    let mut csv = StampedCsv::create(&args.out.join(HISTORY_FILE), &run_hash)?;
    csv.raw(&history.to_csv())?;
    csv.finish()?;

    let best = history.best().copied();
    println!(
        "{model_kind} interval {interval}: {} epochs{}, best epoch {} (val_mse {})",
        history.epochs.len(),
        if history.stopped_early {
            " (early stop)"
        } else {
            ""
        },
        history.best_epoch,
        best.map_or(f64::NAN, |b| b.val_mse)
    );
    println!("run_manifest_sha256={run_hash}");
    log::info!("training took {:.2?}", elapsed);
    Ok(())
}

fn write_run_config(
    path: &Path,
    model: ModelKind,
    interval: usize,
    care_unit: Option<icuae_core::data::CareUnit>,
    config: &TrainConfig,
) -> Result<(), CliError> {
    let text = render(&[
        ("model", model.to_string()),
        ("interval", interval.to_string()),
        (
            "care_unit",
            care_unit.map_or("none".to_string(), |u| u.to_string()),
        ),
        ("seed", config.seed.to_string()),
        ("mask_padding", config.mask_padding.to_string()),
        ("batch_size", config.batch_size.to_string()),
        ("max_epochs", config.max_epochs.to_string()),
        ("patience", config.patience.to_string()),
        ("learning_rate", config.learning_rate.to_string()),
        ("optimizer", config.optimizer.to_string()),
        (
            "clip_norm",
            config
                .clip_norm
                .map_or("none".to_string(), |c| c.to_string()),
        ),
    ]);
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
