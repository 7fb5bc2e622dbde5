//! Central finite-difference gradient checking.

use crate::error::{Error, Result};

/// Compares the analytic gradient returned by `loss_fn` at `params` with a
/// central finite-difference estimate and returns the largest relative error
/// `|a - n| / max(|a|, |n|, 1e-8)` over all coordinates.
///
/// The estimate uses the fourth-order central stencil
/// `(8 (f(p+e) - f(p-e)) - (f(p+2e) - f(p-2e))) / 12e`, which lets `epsilon`
/// be large enough that roundoff stays well below the 1e-8 floor even for
/// parameters whose true gradient is that small.
///
/// `loss_fn` maps a flat parameter vector to `(loss, gradient)`; only the loss
/// is used at the perturbed points.
pub fn grad_check<F>(mut loss_fn: F, params: &[f64], epsilon: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let (loss, analytic) = loss_fn(params)?;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite loss {loss} at base point"
        )));
    }
    if analytic.len() != params.len() {
        return Err(Error::shape(
            "grad_check",
            (analytic.len(), 1),
            (params.len(), 1),
        ));
    }
    let mut probe = params.to_vec();
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let orig = probe[i];
        let mut at = |offset: f64| -> Result<f64> {
            probe[i] = orig + offset;
            let (l, _) = loss_fn(&probe)?;
            if !l.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite loss perturbing parameter {i}"
                )));
            }
            Ok(l)
        };
        let near = at(epsilon)? - at(-epsilon)?;
        let far = at(2.0 * epsilon)? - at(-2.0 * epsilon)?;
        probe[i] = orig;
        let numeric = (8.0 * near - far) / (12.0 * epsilon);
        let a = analytic[i];
        let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(err);
    }
    Ok(worst)
}
