use super::params::ModelParams;
use crate::error::{Error, Result};

/// Clips `grads` to global norm `clip_norm`, then applies `p ← p − lr·g`.
/// Returns the gradient norm before clipping. Parameters are untouched when
/// the gradient is not finite.
pub fn sgd_update(params: &mut ModelParams, grads: &ModelParams, lr: f64, clip_norm: f64) -> Result<f64> {
    if !(lr >= 0.0) {
        return Err(Error::InvalidArgument(format!("learning rate must be non-negative, got {lr}")));
    }
    let norm = grads.global_norm();
    if !norm.is_finite() {
        return Err(Error::NonFinite(format!("gradient norm is {norm}")));
    }
    let scale = if norm > clip_norm { clip_norm / norm } else { 1.0 };
    params.add_scaled(-lr * scale, grads);
    Ok(norm)
}
