//! Inputs shared by the benchmarks.

use icuae_core::{SeqBatch, Tensor2D, NUM_FEATURES};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Tensor2D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    Tensor2D::new(rows, cols, data).expect("sizes agree")
}

/// Unpadded batch of `rows` windows of `steps` hours with values in [0, 1).
pub fn random_batch(rows: usize, steps: usize, seed: u64) -> SeqBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = steps * NUM_FEATURES;
    let data = (0..rows * width).map(|_| rng.random::<f64>()).collect();
    let values = Tensor2D::new(rows, width, data).expect("sizes agree");
    SeqBatch::unpadded(values, steps, NUM_FEATURES).expect("values in range")
}
