use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{clamp_prob, ln};

/// A scalar loss and its gradient w.r.t. the inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Mean binary cross-entropy over `preds` (probabilities, clamped away from
/// 0 and 1) against boolean `labels`.
pub fn bce_loss(preds: &[f64], labels: &[bool]) -> Result<LossGrad> {
    if preds.len() != labels.len() {
        return Err(Error::Length {
            left: preds.len(),
            right: labels.len(),
        });
    }
    if preds.is_empty() {
        return Err(Error::Empty);
    }
    if preds.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("predictions"));
    }
    let n = preds.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(preds.len());
    for (&raw, &label) in preds.iter().zip(labels) {
        let p = clamp_prob(raw);
        let inside = p == raw;
        if label {
            loss -= ln(p);
            grad.push(if inside { -1.0 / (p * n) } else { 0.0 });
        } else {
            loss -= ln(1.0 - p);
            grad.push(if inside { 1.0 / ((1.0 - p) * n) } else { 0.0 });
        }
    }
    Ok(LossGrad {
        loss: loss / n,
        grad,
    })
}
