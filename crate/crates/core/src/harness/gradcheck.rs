use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detloss::{
    bce_loss, ciou_loss, ciou_objective, dfl_loss_raw, finite_diff_grad, iou, relative_error,
    Box2D, DEFAULT_FD_STEP,
};
use crate::error::{Error, Result};

use super::mlp::Mlp;

/// Largest relative error accepted between analytic and finite-difference
/// gradients.
pub const GRAD_CHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradCheckTarget {
    Bce,
    Dfl,
    Ciou,
    Mlp,
}

impl GradCheckTarget {
    pub fn name(self) -> &'static str {
        match self {
            GradCheckTarget::Bce => "bce",
            GradCheckTarget::Dfl => "dfl",
            GradCheckTarget::Ciou => "ciou",
            GradCheckTarget::Mlp => "mlp",
        }
    }
}

impl core::str::FromStr for GradCheckTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bce" => Ok(GradCheckTarget::Bce),
            "dfl" => Ok(GradCheckTarget::Dfl),
            "ciou" => Ok(GradCheckTarget::Ciou),
            "mlp" => Ok(GradCheckTarget::Mlp),
            _ => Err(Error::Parameter("unknown gradient-check target")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub target: GradCheckTarget,
    pub seed: u64,
    pub cases: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    /// Index of the case with the largest error.
    pub worst_case: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= GRAD_CHECK_TOLERANCE
    }
}

/// Compares analytic gradients against central differences on `cases`
/// seeded, nondegenerate inputs.
///
/// Degeneracy guards: probabilities at least 1e-3 (and at most 1 - 1e-3
/// for BCE), DFL targets at least 1e-3 from an integer, CIoU pairs with
/// IoU in (0.05, 0.95) and no two parallel box edges within 1e-3 of each
/// other.
pub fn run_grad_check(target: GradCheckTarget, cases: usize, seed: u64) -> Result<GradCheckReport> {
    if cases == 0 {
        return Err(Error::Parameter("cases must be positive"));
    }
    let mut rng = super::rng_for(seed, 3);
    let mut errors = Vec::with_capacity(cases);
    for _ in 0..cases {
        let err = match target {
            GradCheckTarget::Bce => bce_case(&mut rng)?,
            GradCheckTarget::Dfl => dfl_case(&mut rng)?,
            GradCheckTarget::Ciou => ciou_case(&mut rng)?,
            GradCheckTarget::Mlp => mlp_case(&mut rng)?,
        };
        errors.push(err);
    }
    let (worst_case, max_rel_error) =
        errors
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, e)| {
                if e > best.1 || e.is_nan() {
                    (i, if e.is_nan() { f64::INFINITY } else { e })
                } else {
                    best
                }
            });
    Ok(GradCheckReport {
        target,
        seed,
        cases,
        max_rel_error,
        mean_rel_error: errors.iter().sum::<f64>() / cases as f64,
        worst_case,
    })
}

fn bce_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n = rng.random_range(1..=8);
    let preds: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..1.0 - 1e-3)).collect();
    let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let analytic = bce_loss(&preds, &labels)?.grad;
    let fd = finite_diff_grad(
        |p| bce_loss(p, &labels).map_or(f64::NAN, |o| o.loss),
        &preds,
        DEFAULT_FD_STEP,
    );
    Ok(relative_error(&analytic, &fd.grad))
}

fn dfl_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let n: usize = rng.random_range(2..=16);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let probs: Vec<f64> = raw.iter().map(|r| r / total).collect();
    debug_assert!(probs.iter().all(|&p| p >= 1e-3));
    let y = loop {
        let y: f64 = rng.random_range(0.0..(n - 1) as f64);
        if (y - libm::round(y)).abs() >= 1e-3 {
            break y;
        }
    };
    let analytic = dfl_loss_raw(&probs, y)?.grad;
    let fd = finite_diff_grad(
        |p| dfl_loss_raw(p, y).map_or(f64::NAN, |o| o.loss),
        &probs,
        DEFAULT_FD_STEP,
    );
    Ok(relative_error(&analytic, &fd.grad))
}

fn edges_apart(a: &Box2D, b: &Box2D, gap: f64) -> bool {
    let (ax1, ay1, ax2, ay2) = a.corners();
    let (bx1, by1, bx2, by2) = b.corners();
    [ax1 - bx1, ax2 - bx2, ay1 - by1, ay2 - by2]
        .iter()
        .all(|d| d.abs() >= gap)
}

fn ciou_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (pred, gt) = loop {
        let gt = Box2D::new(
            rng.random_range(0.0..10.0),
            rng.random_range(0.0..10.0),
            rng.random_range(0.5..4.0),
            rng.random_range(0.5..4.0),
        )?;
        let pred = Box2D::new(
            gt.cx + rng.random_range(-1.5..1.5),
            gt.cy + rng.random_range(-1.5..1.5),
            gt.w * rng.random_range(0.5..2.0),
            gt.h * rng.random_range(0.5..2.0),
        )?;
        let overlap = iou(&pred, &gt)?;
        if overlap > 0.05 && overlap < 0.95 && edges_apart(&pred, &gt, 1e-3) {
            break (pred, gt);
        }
    };
    let out = ciou_loss(&pred, &gt)?;
    let fd = finite_diff_grad(
        |x| {
            ciou_objective(&Box2D::from_array([x[0], x[1], x[2], x[3]]), &gt, out.alpha)
                .unwrap_or(f64::NAN)
        },
        &pred.to_array(),
        DEFAULT_FD_STEP,
    );
    Ok(relative_error(&out.grad, &fd.grad))
}

fn mlp_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let mlp = Mlp::new(2);
    let params = mlp.init(rng);
    let n = rng.random_range(1..=4);
    let x: Vec<f64> = (0..2 * n).map(|_| rng.random_range(-3.0..3.0)).collect();
    let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    let (_, analytic) = mlp.forward_backward(&params, &x, &labels)?;
    let fd = finite_diff_grad(
        |p| mlp.loss(p, &x, &labels).unwrap_or(f64::NAN),
        &params,
        DEFAULT_FD_STEP,
    );
    Ok(relative_error(&analytic, &fd.grad))
}
