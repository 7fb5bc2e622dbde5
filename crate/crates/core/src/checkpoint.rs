//! Model checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic       8 bytes   b"ICUAECKP"
//! version     u32       1
//! header_len  u32       length of the JSON header in bytes
//! header      JSON      CheckpointHeader
//! count       u64       number of parameters
//! params      f64 x count, in the model's `params()` order
//! ```
//!
//! Parameters are stored as raw IEEE-754 bits, so a save/load round trip is
//! bit-exact.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::dense::{DenseAutoencoder, DenseLayer};
use crate::error::{Error, Result};
use crate::lstm::LstmCellParams;
use crate::model::{AnyModel, Autoencoder, ModelKind};
use crate::seq::SeqAutoencoder;
use crate::tensor::Tensor2D;

const MAGIC: &[u8; 8] = b"ICUAECKP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: ActivationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Architecture {
    Dense {
        input_dim: usize,
        layers: Vec<LayerSpec>,
        embedding_index: usize,
    },
    Seq {
        features: usize,
        hidden_dim: usize,
        length_aware: bool,
    },
}

/// Context recorded next to the weights so a checkpoint can be matched
/// against the dataset it is evaluated on.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub interval_hours: usize,
    pub features: usize,
    /// Hash of the processed-dataset manifest the model was trained on.
    pub dataset_hash: Option<String>,
    /// Hashes of the feature schema and normalization statistics; a dataset
    /// sharing both feeds the model inputs on the same scale.
    pub schema_sha256: Option<String>,
    pub stats_sha256: Option<String>,
    /// Care unit the training cohort was restricted to, if any.
    pub care_unit: Option<String>,
    pub mask_padding: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub kind: ModelKind,
    pub seed: u64,
    pub architecture: Architecture,
    pub meta: CheckpointMeta,
}

fn describe(model: &AnyModel) -> Architecture {
    match model {
        AnyModel::Dense(m) => Architecture::Dense {
            input_dim: m.input_dim(),
            layers: m
                .layers()
                .iter()
                .map(|l| LayerSpec {
                    in_dim: l.in_dim(),
                    out_dim: l.out_dim(),
                    activation: l.activation,
                })
                .collect(),
            embedding_index: m.embedding_index(),
        },
        AnyModel::Seq(m) => Architecture::Seq {
            features: m.features(),
            hidden_dim: m.hidden_dim(),
            length_aware: m.length_aware(),
        },
    }
}

/// Builds a zero-initialized model with the described shape.
fn skeleton(arch: &Architecture, seed: u64) -> Result<AnyModel> {
    match arch {
        Architecture::Dense {
            input_dim,
            layers,
            embedding_index,
        } => {
            if layers.first().map(|l| l.in_dim) != Some(*input_dim) {
                return Err(Error::Checkpoint(
                    "first layer does not take the input width".into(),
                ));
            }
            let layers = layers
                .iter()
                .map(|l| {
                    DenseLayer::new(
                        Tensor2D::zeros(l.in_dim, l.out_dim),
                        vec![0.0; l.out_dim],
                        l.activation,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let model = DenseAutoencoder::from_layers(layers, *embedding_index, seed)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            Ok(AnyModel::Dense(model))
        }
        Architecture::Seq {
            features,
            hidden_dim,
            length_aware,
        } => {
            let proj = DenseLayer::new(
                Tensor2D::zeros(*hidden_dim, *features),
                vec![0.0; *features],
                ActivationKind::Sigmoid,
            )?;
            let mut model = SeqAutoencoder::from_parts(
                LstmCellParams::zeros(*features, *hidden_dim),
                LstmCellParams::zeros(*hidden_dim, *hidden_dim),
                proj,
                seed,
            )
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
            model.set_length_aware(*length_aware);
            Ok(AnyModel::Seq(model))
        }
    }
}

fn seed_of(model: &AnyModel) -> u64 {
    match model {
        AnyModel::Dense(m) => m.seed(),
        AnyModel::Seq(m) => m.seed(),
    }
}

pub fn to_bytes(model: &AnyModel, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    let header = CheckpointHeader {
        kind: model.kind(),
        seed: seed_of(model),
        architecture: describe(model),
        meta: meta.clone(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let params = model.flat_params();
    let mut out = Vec::with_capacity(24 + json.len() + params.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize, what: &str) -> Result<&'a [u8]> {
    if bytes.len() < n {
        return Err(Error::Checkpoint(format!("truncated while reading {what}")));
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn from_bytes(mut bytes: &[u8]) -> Result<(AnyModel, CheckpointHeader)> {
    let cursor = &mut bytes;
    if take(cursor, 8, "magic")? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = u32::from_le_bytes(take(cursor, 4, "version")?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let header_len = u32::from_le_bytes(
        take(cursor, 4, "header length")?
            .try_into()
            .expect("4 bytes"),
    );
    let header: CheckpointHeader =
        serde_json::from_slice(take(cursor, header_len as usize, "header")?)
            .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    let count = u64::from_le_bytes(
        take(cursor, 8, "parameter count")?
            .try_into()
            .expect("8 bytes"),
    ) as usize;
    let raw = take(
        cursor,
        count
            .checked_mul(8)
            .ok_or_else(|| Error::Checkpoint("count overflow".into()))?,
        "parameters",
    )?;
    if !cursor.is_empty() {
        return Err(Error::Checkpoint(format!(
            "{} trailing bytes",
            cursor.len()
        )));
    }
    let params: Vec<f64> = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut model = skeleton(&header.architecture, header.seed)?;
    if model.kind() != header.kind {
        return Err(Error::Checkpoint(format!(
            "header says {} but the architecture is {}",
            header.kind,
            model.kind()
        )));
    }
    model.set_flat_params(&params).map_err(|_| {
        Error::Checkpoint(format!("{count} parameters do not fit the architecture"))
    })?;
    Ok((model, header))
}

pub fn save_checkpoint(path: &Path, model: &AnyModel, meta: &CheckpointMeta) -> Result<()> {
    let bytes = to_bytes(model, meta)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<(AnyModel, CheckpointHeader)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CheckpointMeta {
        CheckpointMeta {
            interval_hours: 4,
            features: 30,
            dataset_hash: Some("abc".into()),
            schema_sha256: None,
            stats_sha256: Some("def".into()),
            care_unit: None,
            mask_padding: false,
        }
    }

    #[test]
    fn round_trips_every_kind_bit_exactly() {
        let models = [
            AnyModel::Dense(DenseAutoencoder::init(120, &[12], 5).unwrap()),
            AnyModel::Dense(DenseAutoencoder::init(120, &[48, 12], 6).unwrap()),
            AnyModel::Seq(SeqAutoencoder::init(30, 12, 7).unwrap()),
        ];
        for model in models {
            let bytes = to_bytes(&model, &meta()).unwrap();
            let (back, header) = from_bytes(&bytes).unwrap();
            assert_eq!(header.kind, model.kind());
            assert_eq!(header.meta, meta());
            let a: Vec<u64> = model.flat_params().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = back.flat_params().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
            assert_eq!(back, model);
            assert_eq!(to_bytes(&back, &meta()).unwrap(), bytes);
        }
    }

    #[test]
    fn keeps_length_awareness() {
        let mut m = SeqAutoencoder::init(3, 2, 1).unwrap();
        m.set_length_aware(true);
        let (back, _) = from_bytes(&to_bytes(&AnyModel::Seq(m), &meta()).unwrap()).unwrap();
        match back {
            AnyModel::Seq(s) => assert!(s.length_aware()),
            _ => panic!("wrong family"),
        }
    }

    #[test]
    fn rejects_corruption() {
        let model = AnyModel::Dense(DenseAutoencoder::init(20, &[2], 5).unwrap());
        let bytes = to_bytes(&model, &meta()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(from_bytes(&bad), Err(Error::Checkpoint(_))));
        assert!(matches!(
            from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Checkpoint(_))
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(from_bytes(&extra), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let model = AnyModel::Seq(SeqAutoencoder::init(4, 3, 2).unwrap());
        save_checkpoint(&path, &model, &meta()).unwrap();
        let (back, _) = load_checkpoint(&path).unwrap();
        assert_eq!(back, model);
        assert!(matches!(
            load_checkpoint(&dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }
}
