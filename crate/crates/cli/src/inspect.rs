//! Per-stay reconstructions and per-split embeddings.

use std::path::Path;

use icuae_core::data::{ProcessedDataset, Split, SplitData};
use icuae_core::{load_checkpoint, AnyModel, Autoencoder, CheckpointHeader, ModelKind};
use serde::Serialize;

use crate::error::CliError;
use crate::eval::compatible;
use crate::output::{file_sha256, num, sidecar_manifest_path, write_manifest, StampedCsv};
use crate::{EmbedArgs, ReconstructArgs};

const EMBED_CHUNK: usize = 256;

#[derive(Serialize)]
struct InspectManifest {
    command: &'static str,
    checkpoint_sha256: String,
    model: ModelKind,
    interval_hours: usize,
    dataset_manifest_sha256: String,
    split: Split,
    stay_id: Option<u64>,
}

/// Loads a checkpoint and a dataset that can feed it.
fn load_pair(
    checkpoint: &Path,
    data: &Path,
) -> Result<(AnyModel, CheckpointHeader, String, ProcessedDataset, String), CliError> {
    let ckpt_sha = file_sha256(checkpoint)?;
    let (model, header) = load_checkpoint(checkpoint)?;
    let (manifest, _) = ProcessedDataset::read_manifest(data)?;
    if !compatible(&header, &manifest) {
        return Err(icuae_core::Error::Config(format!(
            "{} ({} h windows) does not match dataset {} ({} h windows) or its normalization",
            checkpoint.display(),
            header.meta.interval_hours,
            data.display(),
            manifest.interval_hours
        ))
        .into());
    }
    let (dataset, data_sha) = ProcessedDataset::read(data)?;
    Ok((model, header, ckpt_sha, dataset, data_sha))
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<(), CliError> {
    let (model, header, ckpt_sha, dataset, data_sha) = load_pair(&args.checkpoint, &args.data)?;
    let (split, data, row) = Split::ALL
        .iter()
        .find_map(|&s| {
            let d = dataset.split(s);
            d.position(args.stay_id).map(|i| (s, d, i))
        })
        .ok_or_else(|| {
            CliError::Core(icuae_core::Error::Lookup(format!(
                "stay {} is not in {}",
                args.stay_id,
                args.data.display()
            )))
        })?;
    let schema = dataset.schema()?;
    let one = data.batch.select(&[row]);
    let recon = model.reconstruct(&one)?;
    let real_hours = one.true_lengths()[0];

    let hash = write_manifest(
        &sidecar_manifest_path(&args.out),
        &InspectManifest {
            command: "reconstruct",
            checkpoint_sha256: ckpt_sha,
            model: header.kind,
            interval_hours: header.meta.interval_hours,
            dataset_manifest_sha256: data_sha,
            split,
            stay_id: Some(args.stay_id),
        },
    )?;
    let mut csv = StampedCsv::with_header(
        &args.out,
        &hash,
        "hour,feature,true_value,reconstructed_value,padding",
    )?;
    let features = one.features();
    let truth = one.values().row(0);
    let predicted = recon.row(0);
    for hour in 0..one.steps() {
        for f in 0..features {
            let i = hour * features + f;
            csv.line(&format!(
                "{hour},{},{},{},{}",
                schema.name(f),
                num(truth[i]),
                num(predicted[i]),
                u8::from(hour >= real_hours)
            ))?;
        }
    }
    csv.finish()
}

fn embed_split(model: &AnyModel, data: &SplitData) -> Result<Vec<Vec<f64>>, CliError> {
    let mut out = Vec::with_capacity(data.len());
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EMBED_CHUNK) {
        let emb = model.embed(&data.batch.select(chunk))?;
        out.extend((0..emb.rows()).map(|r| emb.row(r).to_vec()));
    }
    Ok(out)
}

pub fn embed(args: &EmbedArgs) -> Result<(), CliError> {
    let (model, header, ckpt_sha, dataset, data_sha) = load_pair(&args.checkpoint, &args.data)?;
    let data = dataset.split(args.split);
    let embeddings = embed_split(&model, data)?;

    let hash = write_manifest(
        &sidecar_manifest_path(&args.out),
        &InspectManifest {
            command: "embed",
            checkpoint_sha256: ckpt_sha,
            model: header.kind,
            interval_hours: header.meta.interval_hours,
            dataset_manifest_sha256: data_sha,
            split: args.split,
            stay_id: None,
        },
    )?;
    let dims: Vec<String> = (0..model.embedding_dim())
        .map(|i| format!("e{i}"))
        .collect();
    let mut csv = StampedCsv::with_header(
        &args.out,
        &hash,
        &format!("stay_id,split,care_unit,{}", dims.join(",")),
    )?;
    for (i, e) in embeddings.iter().enumerate() {
        let values: Vec<String> = e.iter().map(|&v| num(v)).collect();
        csv.line(&format!(
            "{},{},{},{}",
            data.stay_ids[i],
            args.split,
            data.care_units[i],
            values.join(",")
        ))?;
    }
    csv.finish()?;
    println!(
        "{} embeddings of width {}",
        embeddings.len(),
        model.embedding_dim()
    );
    Ok(())
}
