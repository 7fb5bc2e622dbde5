//! Shared model surface used by the trainer, checkpoints and the CLI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dense::DenseAutoencoder;
use crate::error::{Error, Result};
use crate::seq::SeqAutoencoder;
use crate::tensor::Tensor2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dense1,
    Dense2,
    Seq,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Dense1, ModelKind::Dense2, ModelKind::Seq];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Dense1 => "dense1",
            ModelKind::Dense2 => "dense2",
            ModelKind::Seq => "seq",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dense1" => Ok(ModelKind::Dense1),
            "dense2" => Ok(ModelKind::Dense2),
            "seq" => Ok(ModelKind::Seq),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?} (expected dense1, dense2 or seq)"
            ))),
        }
    }
}

/// A set of fixed-length windows, flattened hour-major.
///
/// Row `b` holds sample `b`: hour 0 features `0..features`, then hour 1, and
/// so on. Cells at hours `>= true_lengths[b]` are zero padding. The same
/// container serves as a whole dataset split and as a minibatch.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqBatch {
    values: Tensor2D,
    steps: usize,
    features: usize,
    true_lengths: Vec<usize>,
}

impl SeqBatch {
    pub fn new(
        values: Tensor2D,
        steps: usize,
        features: usize,
        true_lengths: Vec<usize>,
    ) -> Result<Self> {
        if values.cols() != steps * features {
            return Err(Error::shape(
                "SeqBatch::new",
                values.shape(),
                (values.rows(), steps * features),
            ));
        }
        if true_lengths.len() != values.rows() {
            return Err(Error::shape(
                "SeqBatch::new lengths",
                values.shape(),
                (true_lengths.len(), 1),
            ));
        }
        for (b, &len) in true_lengths.iter().enumerate() {
            if len > steps {
                return Err(Error::Domain(format!(
                    "sample {b} has true length {len} > {steps} steps"
                )));
            }
            let row = values.row(b);
            if row[len * features..].iter().any(|&v| v != 0.0) {
                return Err(Error::Domain(format!("sample {b} has non-zero padding")));
            }
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Domain(format!(
                    "sample {b} has values outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            values,
            steps,
            features,
            true_lengths,
        })
    }

    /// Every sample treated as fully observed.
    pub fn unpadded(values: Tensor2D, steps: usize, features: usize) -> Result<Self> {
        let n = values.rows();
        Self::new(values, steps, features, vec![steps; n])
    }

    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn width(&self) -> usize {
        self.steps * self.features
    }

    pub fn values(&self) -> &Tensor2D {
        &self.values
    }

    pub fn true_lengths(&self) -> &[usize] {
        &self.true_lengths
    }

    /// Features at hour `t` for every sample, `len x features`.
    pub fn step(&self, t: usize) -> Tensor2D {
        self.values.column_block(t * self.features, self.features)
    }

    /// 1 where a cell lies within the sample's true length, else 0.
    pub fn padding_mask(&self) -> Tensor2D {
        let mut mask = Tensor2D::zeros(self.len(), self.width());
        for (b, &len) in self.true_lengths.iter().enumerate() {
            mask.row_mut(b)[..len * self.features].fill(1.0);
        }
        mask
    }

    pub fn select(&self, indices: &[usize]) -> SeqBatch {
        SeqBatch {
            values: self.values.select_rows(indices),
            steps: self.steps,
            features: self.features,
            true_lengths: indices.iter().map(|&i| self.true_lengths[i]).collect(),
        }
    }

    /// Keeps only the first `steps` hours of every sample.
    pub fn truncate(&self, steps: usize) -> SeqBatch {
        let steps = steps.min(self.steps);
        SeqBatch {
            values: self.values.column_block(0, steps * self.features),
            steps,
            features: self.features,
            true_lengths: self.true_lengths.iter().map(|&l| l.min(steps)).collect(),
        }
    }
}

/// Gradients laid out exactly like the owning model's `params()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads(pub Vec<Vec<f64>>);

impl Grads {
    pub fn zeros_like(params: &[&[f64]]) -> Self {
        Grads(params.iter().map(|p| vec![0.0; p.len()]).collect())
    }

    pub fn global_norm(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|g| g.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.0 {
            for v in g.iter_mut() {
                *v *= factor;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.0.iter().flat_map(|g| g.iter().copied()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|g| g.iter().all(|v| v.is_finite()))
    }
}

pub trait Autoencoder: Clone {
    fn kind(&self) -> ModelKind;

    /// Width of the embedding produced by `embed`.
    fn embedding_dim(&self) -> usize;

    fn params(&self) -> Vec<&[f64]>;

    fn params_mut(&mut self) -> Vec<&mut [f64]>;

    /// Reconstruction loss on `batch` and its gradient w.r.t. `params()`.
    /// With `mask_padding` the loss averages over real hours only.
    fn loss_and_grads(&self, batch: &SeqBatch, mask_padding: bool) -> Result<(f64, Grads)>;

    /// Reconstruction in the batch's flattened layout.
    fn reconstruct(&self, batch: &SeqBatch) -> Result<Tensor2D>;

    fn embed(&self, batch: &SeqBatch) -> Result<Tensor2D>;

    /// Tells the model whether it is being trained with padded cells masked
    /// out, for models whose inference depends on it.
    fn set_padding_mode(&mut self, _mask_padding: bool) {}

    fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    fn flat_params(&self) -> Vec<f64> {
        self.params()
            .iter()
            .flat_map(|p| p.iter().copied())
            .collect()
    }

    fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total = self.num_params();
        if flat.len() != total {
            return Err(Error::shape("set_flat_params", (flat.len(), 1), (total, 1)));
        }
        let mut offset = 0;
        for p in self.params_mut() {
            let n = p.len();
            p.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}

/// Either model family, for code paths that pick the kind at runtime.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Dense(DenseAutoencoder),
    Seq(SeqAutoencoder),
}

/// Width of dense2's outer hidden layer as a multiple of the embedding width.
pub const DENSE2_HIDDEN_MULTIPLIER: usize = 4;

/// Freshly initialized model of `kind` for windows of `interval_hours` hours
/// of `NUM_FEATURES` channels. The embedding width is
/// `ceil(interval_hours * 30 / 10)` for every kind; the seq model uses it as
/// its LSTM hidden width.
pub fn build_model(kind: ModelKind, interval_hours: usize, seed: u64) -> Result<AnyModel> {
    let input = interval_hours * crate::NUM_FEATURES;
    let e = crate::dense::embedding_dim(interval_hours, crate::NUM_FEATURES)?;
    Ok(match kind {
        ModelKind::Dense1 => AnyModel::Dense(DenseAutoencoder::init(input, &[e], seed)?),
        ModelKind::Dense2 => AnyModel::Dense(DenseAutoencoder::init(
            input,
            &[DENSE2_HIDDEN_MULTIPLIER * e, e],
            seed,
        )?),
        ModelKind::Seq => AnyModel::Seq(SeqAutoencoder::init(crate::NUM_FEATURES, e, seed)?),
    })
}

impl Autoencoder for AnyModel {
    fn kind(&self) -> ModelKind {
        match self {
            AnyModel::Dense(m) => m.kind(),
            AnyModel::Seq(m) => m.kind(),
        }
    }

    fn embedding_dim(&self) -> usize {
        match self {
            AnyModel::Dense(m) => m.embedding_dim(),
            AnyModel::Seq(m) => m.embedding_dim(),
        }
    }

    fn params(&self) -> Vec<&[f64]> {
        match self {
            AnyModel::Dense(m) => m.params(),
            AnyModel::Seq(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            AnyModel::Dense(m) => m.params_mut(),
            AnyModel::Seq(m) => m.params_mut(),
        }
    }

    fn loss_and_grads(&self, batch: &SeqBatch, mask_padding: bool) -> Result<(f64, Grads)> {
        match self {
            AnyModel::Dense(m) => m.loss_and_grads(batch, mask_padding),
            AnyModel::Seq(m) => m.loss_and_grads(batch, mask_padding),
        }
    }

    fn reconstruct(&self, batch: &SeqBatch) -> Result<Tensor2D> {
        match self {
            AnyModel::Dense(m) => m.reconstruct(batch),
            AnyModel::Seq(m) => m.reconstruct(batch),
        }
    }

    fn embed(&self, batch: &SeqBatch) -> Result<Tensor2D> {
        match self {
            AnyModel::Dense(m) => m.embed(batch),
            AnyModel::Seq(m) => m.embed(batch),
        }
    }

    fn set_padding_mode(&mut self, mask_padding: bool) {
        match self {
            AnyModel::Dense(m) => m.set_padding_mode(mask_padding),
            AnyModel::Seq(m) => m.set_padding_mode(mask_padding),
        }
    }
}

/// Loss-gradient seed `d loss / d pred` for mean squared error, optionally
/// restricted to the cells where `mask` is 1. Returns `(loss, dpred)`.
pub(crate) fn mse_seed(
    pred: &Tensor2D,
    target: &Tensor2D,
    mask: Option<&Tensor2D>,
) -> Result<(f64, Tensor2D)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse", pred.shape(), target.shape()));
    }
    let mut d = pred.zip_map(target, |p, t| p - t)?;
    let (sse, count) = match mask {
        Some(mask) => {
            if mask.shape() != pred.shape() {
                return Err(Error::shape("mse mask", pred.shape(), mask.shape()));
            }
            let mut sse = 0.0;
            let mut count = 0usize;
            for (v, m) in d.data_mut().iter_mut().zip(mask.data()) {
                if *m != 0.0 {
                    sse += *v * *v;
                    count += 1;
                } else {
                    *v = 0.0;
                }
            }
            (sse, count)
        }
        None => (d.data().iter().map(|v| v * v).sum(), d.data().len()),
    };
    if count == 0 {
        return Ok((0.0, Tensor2D::zeros(pred.rows(), pred.cols())));
    }
    let loss = sse / count as f64;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite reconstruction loss {loss}"
        )));
    }
    let scale = 2.0 / count as f64;
    for v in d.data_mut() {
        *v *= scale;
    }
    Ok((loss, d))
}
