//! Minibatch training with early stopping on validation reconstruction error.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::masked_sse;
use crate::model::{Autoencoder, SeqBatch};
use crate::optim::{clip_global_norm, OptimizerKind, OptimizerState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub mask_padding: bool,
    /// Global gradient-norm bound; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            max_epochs: 100,
            patience: 5,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            mask_padding: false,
            clip_norm: Some(5.0),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        // A zero rate is accepted: it freezes the model, which is useful as a
        // baseline run.
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return Err(Error::Config(format!(
                    "clip_norm must be positive, got {c}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch with the lowest validation error; 0 before any epoch.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    pub fn push(&mut self, train_mse: f64, val_mse: f64) {
        let epoch = self.epochs.len() + 1;
        let improved = self.best().is_none_or(|best| val_mse < best.val_mse);
        self.epochs.push(EpochRecord {
            epoch,
            train_mse,
            val_mse,
        });
        if improved {
            self.best_epoch = epoch;
        }
    }

    pub fn best(&self) -> Option<&EpochRecord> {
        self.best_epoch
            .checked_sub(1)
            .and_then(|i| self.epochs.get(i))
    }

    /// `epoch,train_mse,val_mse` rows with a header. Floats use the shortest
    /// representation that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_mse,val_mse\n");
        for r in &self.epochs {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_mse, r.val_mse));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop,
}

/// Stop once validation error has gone `patience` consecutive epochs without
/// a strict improvement over the best epoch.
pub fn early_stop_check(history: &TrainHistory, patience: usize) -> StopDecision {
    if history.epochs.is_empty() {
        return StopDecision::Continue;
    }
    let since_best = history.epochs.len() - history.best_epoch;
    if since_best >= patience {
        StopDecision::Stop
    } else {
        StopDecision::Continue
    }
}

/// Shuffled partition of `0..dataset_size` into batches of `batch_size`; the
/// last batch may be smaller. Fully determined by `(seed, epoch)`.
pub fn minibatch_iter(
    dataset_size: usize,
    batch_size: usize,
    seed: u64,
    epoch: u64,
) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..dataset_size).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    order.shuffle(&mut rng);
    order
        .chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect()
}

const EVAL_CHUNK: usize = 256;

/// Reconstruction MSE over a whole split, padding included unless
/// `mask_padding`.
pub fn evaluate<M: Autoencoder>(model: &M, data: &SeqBatch, mask_padding: bool) -> Result<f64> {
    let mut sse = 0.0;
    let mut count = 0usize;
    let indices: Vec<usize> = (0..data.len()).collect();
    for chunk in indices.chunks(EVAL_CHUNK) {
        let batch = data.select(chunk);
        let recon = model.reconstruct(&batch)?;
        let mask = if mask_padding {
            batch.padding_mask()
        } else {
            crate::tensor::Tensor2D::filled(batch.len(), batch.width(), 1.0)
        };
        let (s, c) = masked_sse(&recon, batch.values(), &mask)?;
        sse += s;
        count += c;
    }
    if count == 0 {
        return Ok(0.0);
    }
    let mse = sse / count as f64;
    if !mse.is_finite() {
        return Err(Error::Numeric(format!("non-finite evaluation error {mse}")));
    }
    Ok(mse)
}

/// Trains `model` and returns the parameters from the epoch with the lowest
/// validation error, together with the per-epoch history.
pub fn train<M: Autoencoder>(
    mut model: M,
    train_set: &SeqBatch,
    validation_set: &SeqBatch,
    config: &TrainConfig,
) -> Result<(M, TrainHistory)> {
    config.validate()?;
    if train_set.is_empty() || validation_set.is_empty() {
        return Err(Error::Config(
            "training and validation sets must be nonempty".into(),
        ));
    }
    model.set_padding_mode(config.mask_padding);
    let mut optimizer = OptimizerState::new(config.optimizer, &model.params());
    let mut history = TrainHistory::default();
    let mut best_params = model.flat_params();

    for epoch in 1..=config.max_epochs {
        let batches = minibatch_iter(
            train_set.len(),
            config.batch_size,
            config.seed,
            epoch as u64 - 1,
        );
        let mut loss_sum = 0.0;
        for (b, indices) in batches.iter().enumerate() {
            let context = || format!("epoch {epoch}, batch {}", b + 1);
            let batch = train_set.select(indices);
            let (loss, mut grads) = model
                .loss_and_grads(&batch, config.mask_padding)
                .map_err(|e| e.with_context(context()))?;
            if let Some(max_norm) = config.clip_norm {
                clip_global_norm(&mut grads, max_norm);
            }
            optimizer
                .update(&mut model.params_mut(), &grads, config.learning_rate)
                .map_err(|e| e.with_context(context()))?;
            if model
                .params()
                .iter()
                .any(|p| p.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::Numeric(format!(
                    "{}: parameters became non-finite",
                    context()
                )));
            }
            loss_sum += loss * indices.len() as f64;
        }
        let train_mse = loss_sum / train_set.len() as f64;
        let val_mse = evaluate(&model, validation_set, config.mask_padding)
            .map_err(|e| e.with_context(format!("epoch {epoch}, validation")))?;
        history.push(train_mse, val_mse);
        log::info!("epoch {epoch}: train_mse {train_mse:.6} val_mse {val_mse:.6}");
        if history.best_epoch == epoch {
            best_params = model.flat_params();
        }
        if early_stop_check(&history, config.patience) == StopDecision::Stop {
            history.stopped_early = epoch < config.max_epochs;
            break;
        }
    }
    model.set_flat_params(&best_params)?;
    Ok((model, history))
}
