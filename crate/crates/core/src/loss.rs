use crate::error::{Error, Result};
use crate::tensor::Tensor2D;

/// Mean squared error over every element.
pub fn mse(pred: &Tensor2D, target: &Tensor2D) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("mse", pred.shape(), target.shape()));
    }
    let n = pred.data().len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / n as f64)
}

/// Sum of squared errors restricted to cells where `mask` is non-zero, and
/// the number of such cells.
pub fn masked_sse(pred: &Tensor2D, target: &Tensor2D, mask: &Tensor2D) -> Result<(f64, usize)> {
    if pred.shape() != target.shape() {
        return Err(Error::shape("masked_sse", pred.shape(), target.shape()));
    }
    if pred.shape() != mask.shape() {
        return Err(Error::shape("masked_sse mask", pred.shape(), mask.shape()));
    }
    let mut sum = 0.0;
    let mut count = 0;
    for ((p, t), m) in pred.data().iter().zip(target.data()).zip(mask.data()) {
        if *m != 0.0 {
            sum += (p - t) * (p - t);
            count += 1;
        }
    }
    Ok((sum, count))
}
