//! Sequence-to-sequence LSTM autoencoder.
//!
//! The encoder LSTM reads a window one hour at a time; its hidden state after
//! the last hour is the embedding. The decoder LSTM starts from a zero state
//! and receives the embedding as its input at every step; a sigmoid
//! projection maps each decoder hidden state back to the feature space. The
//! reconstruction is emitted in the original temporal order.
//!
//! By default the encoder also consumes the zero padding after a short stay
//! and the embedding is its state after the last window hour. A
//! length-aware model instead takes the embedding at each sample's true
//! length, which pairs with a loss that ignores padded cells.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::activation::ActivationKind;
use crate::dense::{glorot, DenseLayer};
use crate::error::{Error, Result};
use crate::lstm::{step_backward, LstmCellParams, StepCache};
use crate::model::{mse_seed, Autoencoder, Grads, ModelKind, SeqBatch};
use crate::tensor::{gemm, Tensor2D};

pub const FORGET_BIAS_INIT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SeqAutoencoder {
    encoder: LstmCellParams,
    decoder: LstmCellParams,
    out_proj: DenseLayer,
    seed: u64,
    length_aware: bool,
}

/// Per-step state kept by a forward pass for backpropagation through time.
struct Trace {
    encoder: Vec<StepCache>,
    decoder: Vec<StepCache>,
    /// Decoder outputs, one `B x features` matrix per step.
    outputs: Vec<Tensor2D>,
    embedding: Tensor2D,
}

/// Picks each sample's embedding out of the encoder states: the final step,
/// or the step at its true length when `length_aware`.
fn gather_embedding(steps: &[StepCache], lengths: &[usize], length_aware: bool) -> Tensor2D {
    let last = &steps.last().expect("T >= 1").h;
    if !length_aware {
        return last.clone();
    }
    let mut out = Tensor2D::zeros(last.rows(), last.cols());
    for (b, &len) in lengths.iter().enumerate() {
        if len > 0 {
            out.row_mut(b).copy_from_slice(steps[len - 1].h.row(b));
        }
    }
    out
}

impl SeqAutoencoder {
    pub fn init(features: usize, hidden_dim: usize, seed: u64) -> Result<Self> {
        if features == 0 || hidden_dim == 0 {
            return Err(Error::Config(
                "sequence autoencoder needs positive widths".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let encoder = LstmCellParams::glorot(features, hidden_dim, FORGET_BIAS_INIT, &mut rng);
        let decoder = LstmCellParams::glorot(hidden_dim, hidden_dim, FORGET_BIAS_INIT, &mut rng);
        let out_proj = DenseLayer::new(
            glorot(hidden_dim, features, hidden_dim, features, &mut rng),
            vec![0.0; features],
            ActivationKind::Sigmoid,
        )?;
        Ok(Self {
            encoder,
            decoder,
            out_proj,
            seed,
            length_aware: false,
        })
    }

    pub fn from_parts(
        encoder: LstmCellParams,
        decoder: LstmCellParams,
        out_proj: DenseLayer,
        seed: u64,
    ) -> Result<Self> {
        let h = encoder.hidden_dim();
        if decoder.hidden_dim() != h || decoder.input_dim() != h || out_proj.in_dim() != h {
            return Err(Error::Config(format!(
                "encoder hidden {h}, decoder {}x{}, projection input {} must agree",
                decoder.input_dim(),
                decoder.hidden_dim(),
                out_proj.in_dim()
            )));
        }
        if out_proj.out_dim() != encoder.input_dim() {
            return Err(Error::Config(
                "projection must map back to the input features".into(),
            ));
        }
        if out_proj.activation != ActivationKind::Sigmoid {
            return Err(Error::Config(
                "projection activation must be sigmoid".into(),
            ));
        }
        Ok(Self {
            encoder,
            decoder,
            out_proj,
            seed,
            length_aware: false,
        })
    }

    /// Whether inference stops reading each sample at its true length.
    pub fn length_aware(&self) -> bool {
        self.length_aware
    }

    pub fn set_length_aware(&mut self, on: bool) {
        self.length_aware = on;
    }

    pub fn encoder(&self) -> &LstmCellParams {
        &self.encoder
    }

    pub fn decoder(&self) -> &LstmCellParams {
        &self.decoder
    }

    pub fn out_proj(&self) -> &DenseLayer {
        &self.out_proj
    }

    pub fn hidden_dim(&self) -> usize {
        self.encoder.hidden_dim()
    }

    pub fn features(&self) -> usize {
        self.encoder.input_dim()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn check_batch(&self, batch: &SeqBatch) -> Result<()> {
        if batch.steps() == 0 {
            return Err(Error::Domain("sequence length must be at least 1".into()));
        }
        if batch.features() != self.features() {
            return Err(Error::shape(
                "seq input",
                (batch.len(), batch.features()),
                (batch.len(), self.features()),
            ));
        }
        Ok(())
    }

    fn run_encoder(&self, batch: &SeqBatch) -> Result<Vec<StepCache>> {
        self.check_batch(batch)?;
        let rows = batch.len();
        let hd = self.hidden_dim();
        let mut steps: Vec<StepCache> = Vec::with_capacity(batch.steps());
        let zero = Tensor2D::zeros(rows, hd);
        for t in 0..batch.steps() {
            let zx = self.encoder.input_projection(&batch.step(t))?;
            let (h, c) = match steps.last() {
                Some(prev) => (&prev.h, &prev.c),
                None => (&zero, &zero),
            };
            let next = self.encoder.step_batch(zx, h, c)?;
            steps.push(next);
        }
        Ok(steps)
    }

    fn run_decoder(
        &self,
        embedding: &Tensor2D,
        steps: usize,
    ) -> Result<(Vec<StepCache>, Vec<Tensor2D>)> {
        if steps == 0 {
            return Err(Error::Domain("sequence length must be at least 1".into()));
        }
        let hd = self.hidden_dim();
        if embedding.cols() != hd {
            return Err(Error::shape(
                "decode embedding",
                embedding.shape(),
                (embedding.rows(), hd),
            ));
        }
        let rows = embedding.rows();
        // The decoder input never changes, so its projection is computed once.
        let zx = self.decoder.input_projection(embedding)?;
        let zero = Tensor2D::zeros(rows, hd);
        let mut cells: Vec<StepCache> = Vec::with_capacity(steps);
        let mut outputs = Vec::with_capacity(steps);
        for _ in 0..steps {
            let (h, c) = match cells.last() {
                Some(prev) => (&prev.h, &prev.c),
                None => (&zero, &zero),
            };
            let next = self.decoder.step_batch(zx.clone(), h, c)?;
            outputs.push(self.out_proj.forward(&next.h)?);
            cells.push(next);
        }
        Ok((cells, outputs))
    }

    fn trace(&self, batch: &SeqBatch, length_aware: bool) -> Result<Trace> {
        let encoder = self.run_encoder(batch)?;
        let embedding = gather_embedding(&encoder, batch.true_lengths(), length_aware);
        let (decoder, outputs) = self.run_decoder(&embedding, batch.steps())?;
        Ok(Trace {
            encoder,
            decoder,
            outputs,
            embedding,
        })
    }

    fn grads_zero(&self) -> Grads {
        Grads::zeros_like(&self.params())
    }
}

fn stack_steps(outputs: &[Tensor2D], features: usize) -> Tensor2D {
    let rows = outputs.first().map_or(0, Tensor2D::rows);
    let mut out = Tensor2D::zeros(rows, outputs.len() * features);
    for (t, y) in outputs.iter().enumerate() {
        out.set_column_block(t * features, y);
    }
    out
}

fn add_into(acc: &mut [f64], src: &[f64]) {
    for (a, s) in acc.iter_mut().zip(src) {
        *a += s;
    }
}

/// Embedding: encoder hidden state after the final step (or after each
/// sample's true length for a length-aware model).
pub fn encode(model: &SeqAutoencoder, batch: &SeqBatch) -> Result<Tensor2D> {
    let steps = model.run_encoder(batch)?;
    Ok(gather_embedding(
        &steps,
        batch.true_lengths(),
        model.length_aware,
    ))
}

/// Reconstruction of `steps` hours from an embedding, flattened hour-major.
pub fn decode(model: &SeqAutoencoder, embedding: &Tensor2D, steps: usize) -> Result<Tensor2D> {
    let (_, outputs) = model.run_decoder(embedding, steps)?;
    Ok(stack_steps(&outputs, model.features()))
}

/// Reconstruction loss and its gradient by full backpropagation through time
/// across the projection, the decoder, the embedding and the encoder.
///
/// With `mask_padding` false every cell counts, padding included, and the
/// embedding is the encoder state after the last hour. With it true only
/// cells within each sample's true length contribute and the embedding is
/// taken at the true length, so padding has no influence at all.
pub fn seq_forward_backward(
    model: &SeqAutoencoder,
    batch: &SeqBatch,
    mask_padding: bool,
) -> Result<(f64, Grads)> {
    forward_backward_to(model, batch, batch.values(), mask_padding)
}

/// As `seq_forward_backward`, but reconstructing towards `target` instead of
/// the input itself.
pub(crate) fn forward_backward_to(
    model: &SeqAutoencoder,
    batch: &SeqBatch,
    target: &Tensor2D,
    mask_padding: bool,
) -> Result<(f64, Grads)> {
    let trace = model.trace(batch, mask_padding)?;
    let features = model.features();
    let hd = model.hidden_dim();
    let rows = batch.len();
    let steps = batch.steps();

    let pred = stack_steps(&trace.outputs, features);
    let mask = mask_padding.then(|| batch.padding_mask());
    let (loss, dpred) = mse_seed(&pred, target, mask.as_ref())?;

    let mut grads = model.grads_zero();
    // Layout: encoder w, u, b; decoder w, u, b; projection w, b.
    let mut d_enc_w = Tensor2D::zeros(model.encoder.input_dim(), 4 * hd);
    let mut d_enc_u = Tensor2D::zeros(hd, 4 * hd);
    let mut d_dec_u = Tensor2D::zeros(hd, 4 * hd);
    let mut d_proj_w = Tensor2D::zeros(hd, features);
    let mut d_zx_dec = Tensor2D::zeros(rows, 4 * hd);

    let zero = Tensor2D::zeros(rows, hd);
    let mut dh = Tensor2D::zeros(rows, hd);
    let mut dc = Tensor2D::zeros(rows, hd);
    for s in (0..steps).rev() {
        let y = &trace.outputs[s];
        let mut dpre = dpred.column_block(s * features, features);
        for (d, yv) in dpre.data_mut().iter_mut().zip(y.data()) {
            *d *= yv * (1.0 - yv);
        }
        let cell = &trace.decoder[s];
        gemm(1.0, &cell.h, true, &dpre, false, 1.0, &mut d_proj_w)?;
        add_into(&mut grads.0[7], &dpre.col_sums());
        gemm(
            1.0,
            &dpre,
            false,
            &model.out_proj.weights,
            true,
            1.0,
            &mut dh,
        )?;

        let (h_prev, c_prev) = if s > 0 {
            (&trace.decoder[s - 1].h, &trace.decoder[s - 1].c)
        } else {
            (&zero, &zero)
        };
        let (dz, dc_prev) = step_backward(cell, c_prev, &dh, &dc);
        d_zx_dec.add_assign(&dz)?;
        if s > 0 {
            gemm(1.0, h_prev, true, &dz, false, 1.0, &mut d_dec_u)?;
            dh = dz.matmul_nt(model.decoder.u())?;
        }
        dc = dc_prev;
    }

    let d_dec_w = trace.embedding.matmul_tn(&d_zx_dec)?;
    grads.0[5] = d_zx_dec.col_sums();
    let d_embedding = d_zx_dec.matmul_nt(model.decoder.w())?;
    let mut dh = if mask_padding {
        Tensor2D::zeros(rows, hd)
    } else {
        d_embedding.clone()
    };
    let mut dc = Tensor2D::zeros(rows, hd);
    let mut d_enc_b = vec![0.0; 4 * hd];
    for t in (0..steps).rev() {
        if mask_padding {
            // Each sample's embedding gradient enters at its own last real step.
            for (b, &len) in batch.true_lengths().iter().enumerate() {
                if len == t + 1 {
                    dh.row_mut(b).copy_from_slice(d_embedding.row(b));
                }
            }
        }
        let cell = &trace.encoder[t];
        let (h_prev, c_prev) = if t > 0 {
            (&trace.encoder[t - 1].h, &trace.encoder[t - 1].c)
        } else {
            (&zero, &zero)
        };
        let (dz, dc_prev) = step_backward(cell, c_prev, &dh, &dc);
        gemm(1.0, &batch.step(t), true, &dz, false, 1.0, &mut d_enc_w)?;
        add_into(&mut d_enc_b, &dz.col_sums());
        if t > 0 {
            gemm(1.0, h_prev, true, &dz, false, 1.0, &mut d_enc_u)?;
            dh = dz.matmul_nt(model.encoder.u())?;
        }
        dc = dc_prev;
    }

    grads.0[0] = d_enc_w.into_data();
    grads.0[1] = d_enc_u.into_data();
    grads.0[2] = d_enc_b;
    grads.0[3] = d_dec_w.into_data();
    grads.0[4] = d_dec_u.into_data();
    grads.0[6] = d_proj_w.into_data();
    Ok((loss, grads))
}

impl Autoencoder for SeqAutoencoder {
    fn kind(&self) -> ModelKind {
        ModelKind::Seq
    }

    fn embedding_dim(&self) -> usize {
        self.hidden_dim()
    }

    fn params(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(8);
        out.extend(self.encoder.params());
        out.extend(self.decoder.params());
        out.push(self.out_proj.weights.data());
        out.push(&self.out_proj.bias);
        out
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(8);
        out.extend(self.encoder.params_mut());
        out.extend(self.decoder.params_mut());
        out.push(self.out_proj.weights.data_mut());
        out.push(&mut self.out_proj.bias);
        out
    }

    fn loss_and_grads(&self, batch: &SeqBatch, mask_padding: bool) -> Result<(f64, Grads)> {
        seq_forward_backward(self, batch, mask_padding)
    }

    fn reconstruct(&self, batch: &SeqBatch) -> Result<Tensor2D> {
        let embedding = encode(self, batch)?;
        decode(self, &embedding, batch.steps())
    }

    fn embed(&self, batch: &SeqBatch) -> Result<Tensor2D> {
        encode(self, batch)
    }

    fn set_padding_mode(&mut self, mask_padding: bool) {
        self.length_aware = mask_padding;
    }
}
