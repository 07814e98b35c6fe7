//! Detection losses with analytic gradients.
//!
//! The weighted objective is `box * CIoU + dfl * DFL + cls * BCE`; every
//! component returns its gradient alongside the value so it can be checked
//! against [`finite_diff_grad`].

mod bce;
mod boxes;
mod dfl;
mod gradcheck;

pub use bce::{bce_loss, LossGrad};
pub use boxes::{ciou_loss, ciou_objective, iou, Box2D, CiouLoss};
pub use dfl::{dfl_bracket, dfl_loss, dfl_loss_raw, BinDistribution, DflLoss};
pub use gradcheck::{finite_diff_grad, relative_error, FiniteDiff, DEFAULT_FD_STEP};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_box: f64,
    pub lambda_dfl: f64,
    pub lambda_cls: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_box: 7.5,
            lambda_dfl: 0.5,
            lambda_cls: 1.5,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        for (what, value) in [
            ("lambda_box", self.lambda_box),
            ("lambda_dfl", self.lambda_dfl),
            ("lambda_cls", self.lambda_cls),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Range { what, value });
            }
        }
        Ok(())
    }
}

pub fn total_detection_loss(l_ciou: f64, l_dfl: f64, l_bce: f64, w: &LossWeights) -> Result<f64> {
    w.validate()?;
    for (what, value) in [("ciou", l_ciou), ("dfl", l_dfl), ("bce", l_bce)] {
        if !value.is_finite() {
            return Err(Error::NonFinite(what));
        }
        if value < 0.0 {
            return Err(Error::Range { what, value });
        }
    }
    Ok(w.lambda_box * l_ciou + w.lambda_dfl * l_dfl + w.lambda_cls * l_bce)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_weights_sum() {
        let w = LossWeights::default();
        assert_eq!(total_detection_loss(1.0, 1.0, 1.0, &w), Ok(9.5));
        assert_eq!(total_detection_loss(0.0, 0.0, 0.0, &w), Ok(0.0));
        let v = total_detection_loss(0.2, 0.4, 0.6, &w).unwrap();
        assert!((v - 2.6).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_finite_and_negative_parts() {
        let w = LossWeights::default();
        assert_eq!(
            total_detection_loss(f64::INFINITY, 0.0, 0.0, &w),
            Err(Error::NonFinite("ciou"))
        );
        assert_eq!(
            total_detection_loss(0.0, f64::NAN, 0.0, &w),
            Err(Error::NonFinite("dfl"))
        );
        assert!(total_detection_loss(0.0, 0.0, -1.0, &w).is_err());
    }

    #[test]
    fn linear_in_each_part() {
        let w = LossWeights::default();
        let f = |a, b, c| total_detection_loss(a, b, c, &w).unwrap();
        let (a, b, c) = (0.3, 1.7, 0.05);
        let sum = f(a, b, c) + f(0.9, 0.1, 2.0);
        assert!((f(a + 0.9, b + 0.1, c + 2.0) - sum).abs() < 1e-12);
        assert!((f(3.0 * a, 3.0 * b, 3.0 * c) - 3.0 * f(a, b, c)).abs() < 1e-12);
    }
}
