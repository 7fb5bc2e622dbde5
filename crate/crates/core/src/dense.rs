//! Fixed-length autoencoders over concatenated hourly feature vectors.
//!
//! A window of `h` hours and `f` features enters as one `h * f` vector. The
//! single-hidden-layer model is `input -> e -> input`; the two-hidden-layer
//! model is the mirrored stack `input -> h1 -> e -> h1 -> input`. Hidden
//! layers use ReLU and the output layer a sigmoid, so reconstructions live in
//! `(0, 1)` like the normalized inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::ActivationKind;
use crate::error::{Error, Result};
use crate::model::{mse_seed, Autoencoder, Grads, ModelKind, SeqBatch};
use crate::tensor::{gemm, Tensor2D};

/// Embedding width for a window: one tenth of the input values, rounded up.
pub fn embedding_dim(interval_hours: usize, num_features: usize) -> Result<usize> {
    if interval_hours == 0 || num_features == 0 {
        return Err(Error::Domain(format!(
            "embedding_dim needs positive sizes, got {interval_hours} hours x {num_features} features"
        )));
    }
    Ok((interval_hours * num_features).div_ceil(10))
}

/// Glorot-uniform matrix, `U(-sqrt(6 / (in + out)), +sqrt(6 / (in + out)))`.
pub(crate) fn glorot(
    rows: usize,
    cols: usize,
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> Tensor2D {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-limit..=limit))
        .collect();
    Tensor2D::new(rows, cols, data).expect("sized by construction")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `in_dim x out_dim`.
    pub weights: Tensor2D,
    pub bias: Vec<f64>,
    pub activation: ActivationKind,
}

impl DenseLayer {
    pub fn new(weights: Tensor2D, bias: Vec<f64>, activation: ActivationKind) -> Result<Self> {
        if bias.len() != weights.cols() {
            return Err(Error::shape(
                "DenseLayer::new",
                weights.shape(),
                (1, bias.len()),
            ));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.cols()
    }

    /// Post-activation output for a `B x in_dim` input.
    pub fn forward(&self, x: &Tensor2D) -> Result<Tensor2D> {
        let mut z = Tensor2D::zeros(x.rows(), self.out_dim());
        gemm(1.0, x, false, &self.weights, false, 0.0, &mut z)
            .map_err(|_| Error::shape("dense layer", x.shape(), self.weights.shape()))?;
        z.add_row_vector(&self.bias)?;
        let act = self.activation;
        for v in z.data_mut() {
            *v = act.eval(*v);
        }
        Ok(z)
    }
}

#[derive(Debug, Clone)]
pub struct DenseAutoencoder {
    layers: Vec<DenseLayer>,
    input_dim: usize,
    embedding_index: usize,
    seed: u64,
    // Bumped whenever parameters are handed out mutably; caches remember it.
    generation: u64,
}

impl PartialEq for DenseAutoencoder {
    fn eq(&self, other: &Self) -> bool {
        self.layers == other.layers
            && self.input_dim == other.input_dim
            && self.embedding_index == other.embedding_index
            && self.seed == other.seed
    }
}

/// Activations saved by `dense_forward` for the backward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Tensor2D>,
    generation: u64,
}

impl DenseCache {
    pub fn reconstruction(&self) -> &Tensor2D {
        self.activations.last().expect("at least one layer")
    }
}

impl DenseAutoencoder {
    /// Glorot-initialized autoencoder with zero biases.
    ///
    /// `hidden_dims = [e]` builds `input -> e -> input`; `hidden_dims = [h1, e]`
    /// builds the mirrored stack `input -> h1 -> e -> h1 -> input`, which
    /// requires `input_dim >= h1 >= e`.
    pub fn init(input_dim: usize, hidden_dims: &[usize], seed: u64) -> Result<Self> {
        Self::init_with_activations(
            input_dim,
            hidden_dims,
            seed,
            ActivationKind::ReLU,
            ActivationKind::Sigmoid,
        )
    }

    pub fn init_with_activations(
        input_dim: usize,
        hidden_dims: &[usize],
        seed: u64,
        hidden: ActivationKind,
        output: ActivationKind,
    ) -> Result<Self> {
        if input_dim == 0 || hidden_dims.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let dims: Vec<usize> = match *hidden_dims {
            [] => {
                return Err(Error::Config(
                    "dense autoencoder needs at least one hidden layer".into(),
                ))
            }
            [e] => vec![input_dim, e, input_dim],
            [h1, e] => {
                if !(input_dim >= h1 && h1 >= e) {
                    return Err(Error::Config(format!(
                        "two-hidden-layer stack must narrow symmetrically, got {input_dim} -> {h1} -> {e}"
                    )));
                }
                vec![input_dim, h1, e, h1, input_dim]
            }
            _ => {
                return Err(Error::Config(format!(
                    "expected one or two hidden widths, got {}",
                    hidden_dims.len()
                )))
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dims.len() - 1;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| DenseLayer {
                weights: glorot(w[0], w[1], w[0], w[1], &mut rng),
                bias: vec![0.0; w[1]],
                activation: if l + 1 == n { output } else { hidden },
            })
            .collect();
        Ok(Self {
            layers,
            input_dim,
            embedding_index: hidden_dims.len() - 1,
            seed,
            generation: 0,
        })
    }

    /// Assembles a model from explicit layers, checking that the widths chain
    /// and that the output width equals the input width.
    pub fn from_layers(layers: Vec<DenseLayer>, embedding_index: usize, seed: u64) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::Config("no layers".into()))?;
        let input_dim = first.in_dim();
        for (l, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Config(format!(
                    "layer {l} outputs {} but layer {} expects {}",
                    pair[0].out_dim(),
                    l + 1,
                    pair[1].in_dim()
                )));
            }
        }
        if layers.last().map(DenseLayer::out_dim) != Some(input_dim) {
            return Err(Error::Config("output width must equal input width".into()));
        }
        if embedding_index + 1 >= layers.len() {
            return Err(Error::Config(format!(
                "embedding index {embedding_index} must name a hidden layer"
            )));
        }
        Ok(Self {
            layers,
            input_dim,
            embedding_index,
            seed,
            generation: 0,
        })
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn embedding_index(&self) -> usize {
        self.embedding_index
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn check_input(&self, batch: &Tensor2D) -> Result<()> {
        if batch.cols() != self.input_dim {
            return Err(Error::shape(
                "dense input",
                batch.shape(),
                (batch.rows(), self.input_dim),
            ));
        }
        Ok(())
    }
}

pub fn dense_forward(model: &DenseAutoencoder, batch: &Tensor2D) -> Result<(Tensor2D, DenseCache)> {
    model.check_input(batch)?;
    let mut activations = Vec::with_capacity(model.layers.len() + 1);
    activations.push(batch.clone());
    for layer in &model.layers {
        let next = layer.forward(activations.last().expect("nonempty"))?;
        activations.push(next);
    }
    let out = activations.last().expect("nonempty").clone();
    Ok((
        out,
        DenseCache {
            activations,
            generation: model.generation,
        },
    ))
}

/// Gradients of the (optionally masked) mean squared reconstruction error,
/// ordered like `params()`: weights then bias for each layer.
pub fn dense_backward(
    model: &DenseAutoencoder,
    cache: &DenseCache,
    target: &Tensor2D,
    mask: Option<&Tensor2D>,
) -> Result<(f64, Grads)> {
    if cache.generation != model.generation || cache.activations.len() != model.layers.len() + 1 {
        return Err(Error::State(
            "cache was produced by a different model state".into(),
        ));
    }
    let pred = cache.reconstruction();
    if pred.shape() != target.shape() {
        return Err(Error::shape(
            "dense_backward target",
            pred.shape(),
            target.shape(),
        ));
    }
    let (loss, mut delta) = mse_seed(pred, target, mask)?;
    let mut grads: Vec<Vec<f64>> = vec![Vec::new(); model.layers.len() * 2];
    for (l, layer) in model.layers.iter().enumerate().rev() {
        let out = &cache.activations[l + 1];
        let input = &cache.activations[l];
        let act = layer.activation;
        for (d, y) in delta.data_mut().iter_mut().zip(out.data()) {
            *d *= act.derivative_from_output(*y);
        }
        let dw = input.matmul_tn(&delta)?;
        grads[2 * l + 1] = delta.col_sums();
        grads[2 * l] = dw.into_data();
        if l > 0 {
            delta = delta.matmul_nt(&layer.weights)?;
        }
    }
    Ok((loss, Grads(grads)))
}

/// Output of the embedding layer.
pub fn dense_embed(model: &DenseAutoencoder, batch: &Tensor2D) -> Result<Tensor2D> {
    model.check_input(batch)?;
    let mut x = batch.clone();
    for layer in &model.layers[..=model.embedding_index] {
        x = layer.forward(&x)?;
    }
    Ok(x)
}

impl Autoencoder for DenseAutoencoder {
    fn kind(&self) -> ModelKind {
        if self.layers.len() <= 2 {
            ModelKind::Dense1
        } else {
            ModelKind::Dense2
        }
    }

    fn embedding_dim(&self) -> usize {
        self.layers[self.embedding_index].out_dim()
    }

    fn params(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| [l.weights.data(), l.bias.as_slice()])
            .collect()
    }

    fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.generation += 1;
        self.layers
            .iter_mut()
            .flat_map(|l| [l.weights.data_mut(), l.bias.as_mut_slice()])
            .collect()
    }

    fn loss_and_grads(&self, batch: &SeqBatch, mask_padding: bool) -> Result<(f64, Grads)> {
        let (_, cache) = dense_forward(self, batch.values())?;
        let mask = mask_padding.then(|| batch.padding_mask());
        dense_backward(self, &cache, batch.values(), mask.as_ref())
    }

    fn reconstruct(&self, batch: &SeqBatch) -> Result<Tensor2D> {
        dense_forward(self, batch.values()).map(|(out, _)| out)
    }

    fn embed(&self, batch: &SeqBatch) -> Result<Tensor2D> {
        dense_embed(self, batch.values())
    }
}
