use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{ln, PROB_FLOOR};

/// Probability mass over integer coordinate bins `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BinDistribution {
    probs: Vec<f64>,
}

/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;

impl BinDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::Range {
                what: "bin probability",
                value: p,
            });
        }
        let mass: f64 = probs.iter().sum();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Range {
                what: "total probability mass",
                value: mass,
            });
        }
        Ok(BinDistribution { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

impl TryFrom<Vec<f64>> for BinDistribution {
    type Error = Error;

    fn try_from(probs: Vec<f64>) -> Result<Self> {
        BinDistribution::new(probs)
    }
}

impl From<BinDistribution> for Vec<f64> {
    fn from(d: BinDistribution) -> Self {
        d.probs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DflLoss {
    pub loss: f64,
    /// Gradient w.r.t. each bin probability.
    pub grad: Vec<f64>,
    /// A bracketing bin with positive weight had zero probability; `loss`
    /// is `+inf`.
    pub saturated: bool,
}

/// Bracketing bins `(lo, hi)` of target `y` over `n` bins with their
/// weights `(hi - y, y - lo)`. A target on the last bin brackets as
/// `(n - 2, n - 1)` with all weight on the upper bin.
pub fn dfl_bracket(n: usize, y: f64) -> Result<(usize, usize, f64, f64)> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let top = (n - 1) as f64;
    if !(0.0..=top).contains(&y) {
        return Err(Error::Range {
            what: "dfl target",
            value: y,
        });
    }
    if n == 1 {
        return Ok((0, 0, 1.0, 0.0));
    }
    let lo = (libm::floor(y) as usize).min(n - 2);
    let hi = lo + 1;
    Ok((lo, hi, hi as f64 - y, y - lo as f64))
}

/// Distribution focal loss on an already validated distribution.
pub fn dfl_loss(dist: &BinDistribution, y: f64) -> Result<DflLoss> {
    dfl_loss_raw(dist.probs(), y)
}

/// Distribution focal loss treating `probs` as free variables (no
/// normalization check), which is what gradient checks perturb.
///
/// `-(y+ - y) * ln p[y-] - (y - y-) * ln p[y+]`; bins other than the
/// bracketing pair carry zero weight.
pub fn dfl_loss_raw(probs: &[f64], y: f64) -> Result<DflLoss> {
    if !y.is_finite() {
        return Err(Error::NonFinite("dfl target"));
    }
    if probs.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("bin probabilities"));
    }
    let (lo, hi, w_lo, w_hi) = dfl_bracket(probs.len(), y)?;
    let mut grad = vec![0.0; probs.len()];
    let mut loss = 0.0;
    let mut saturated = false;
    for (idx, weight) in [(lo, w_lo), (hi, w_hi)] {
        if weight == 0.0 {
            continue;
        }
        let p = probs[idx];
        if p <= 0.0 {
            saturated = true;
            grad[idx] = f64::NEG_INFINITY;
            continue;
        }
        let clamped = p.max(PROB_FLOOR);
        loss -= weight * ln(clamped);
        if clamped == p {
            grad[idx] -= weight / p;
        }
    }
    if saturated {
        loss = f64::INFINITY;
    }
    Ok(DflLoss {
        loss,
        grad,
        saturated,
    })
}
