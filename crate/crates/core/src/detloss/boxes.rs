use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{atan, PI};

/// Axis-aligned box in center/size form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Box2D {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl Box2D {
    pub fn new(cx: f64, cy: f64, w: f64, h: f64) -> Result<Self> {
        let b = Box2D { cx, cy, w, h };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(Error::NonFinite("box center"));
        }
        if !(self.w > 0.0 && self.h > 0.0 && self.w.is_finite() && self.h.is_finite()) {
            return Err(Error::DegenerateBox);
        }
        Ok(())
    }

    /// `(x1, y1, x2, y2)`.
    pub fn corners(&self) -> (f64, f64, f64, f64) {
        let (hw, hh) = (self.w / 2.0, self.h / 2.0);
        (self.cx - hw, self.cy - hh, self.cx + hw, self.cy + hh)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.cx, self.cy, self.w, self.h]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Box2D {
            cx: a[0],
            cy: a[1],
            w: a[2],
            h: a[3],
        }
    }
}

/// Weight of the first argument in the derivative of `min`/`max`; ties
/// split evenly so that identical boxes get a zero subgradient.
#[inline]
fn pick(first_wins: bool, tie: bool) -> f64 {
    if tie {
        0.5
    } else if first_wins {
        1.0
    } else {
        0.0
    }
}

/// Extent along one axis with its derivative w.r.t. the predicted center
/// and size on that axis.
#[derive(Clone, Copy)]
struct Extent {
    len: f64,
    d_center: f64,
    d_size: f64,
}

fn overlap(c: f64, s: f64, cg: f64, sg: f64) -> Extent {
    let (lo, hi) = (c - s / 2.0, c + s / 2.0);
    let (glo, ghi) = (cg - sg / 2.0, cg + sg / 2.0);
    let len = hi.min(ghi) - lo.max(glo);
    if len <= 0.0 {
        return Extent {
            len: 0.0,
            d_center: 0.0,
            d_size: 0.0,
        };
    }
    let w_hi = pick(hi < ghi, hi == ghi);
    let w_lo = pick(lo > glo, lo == glo);
    Extent {
        len,
        d_center: w_hi - w_lo,
        d_size: 0.5 * (w_hi + w_lo),
    }
}

fn enclosure(c: f64, s: f64, cg: f64, sg: f64) -> Extent {
    let (lo, hi) = (c - s / 2.0, c + s / 2.0);
    let (glo, ghi) = (cg - sg / 2.0, cg + sg / 2.0);
    let w_hi = pick(hi > ghi, hi == ghi);
    let w_lo = pick(lo < glo, lo == glo);
    Extent {
        len: hi.max(ghi) - lo.min(glo),
        d_center: w_hi - w_lo,
        d_size: 0.5 * (w_hi + w_lo),
    }
}

/// Intersection over union.
pub fn iou(a: &Box2D, b: &Box2D) -> Result<f64> {
    a.validate()?;
    b.validate()?;
    if a == b {
        return Ok(1.0);
    }
    let iw = overlap(a.cx, a.w, b.cx, b.w).len;
    let ih = overlap(a.cy, a.h, b.cy, b.h).len;
    let inter = iw * ih;
    // corner rounding can push the ratio a few ulps past 1
    Ok((inter / (a.area() + b.area() - inter)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CiouLoss {
    pub loss: f64,
    /// Gradient w.r.t. `(cx, cy, w, h)` of the prediction, with `alpha`
    /// held constant.
    pub grad: [f64; 4],
    pub iou: f64,
    /// Aspect-ratio consistency term.
    pub v: f64,
    /// Trade-off weight on `v`.
    pub alpha: f64,
}

const ASPECT_SCALE: f64 = 4.0 / (PI * PI);

/// Complete-IoU loss `1 - IoU + rho^2 / c^2 + alpha * v` and its gradient.
pub fn ciou_loss(pred: &Box2D, gt: &Box2D) -> Result<CiouLoss> {
    pred.validate()?;
    gt.validate()?;
    Ok(ciou_eval(pred, gt, None))
}

/// The loss surface the CIoU gradient describes: the CIoU expression with
/// the aspect-ratio weight fixed at `alpha`. At the `alpha` reported by
/// [`ciou_loss`] its value equals the CIoU loss.
pub fn ciou_objective(pred: &Box2D, gt: &Box2D, alpha: f64) -> Result<f64> {
    pred.validate()?;
    gt.validate()?;
    Ok(ciou_eval(pred, gt, Some(alpha)).loss)
}

fn ciou_eval(pred: &Box2D, gt: &Box2D, alpha_fixed: Option<f64>) -> CiouLoss {
    if pred == gt {
        return CiouLoss {
            loss: 0.0,
            grad: [0.0; 4],
            iou: 1.0,
            v: 0.0,
            alpha: alpha_fixed.unwrap_or(0.0),
        };
    }
    let ox = overlap(pred.cx, pred.w, gt.cx, gt.w);
    let oy = overlap(pred.cy, pred.h, gt.cy, gt.h);
    let inter = ox.len * oy.len;
    // [d/dcx, d/dcy, d/dw, d/dh]
    let d_inter = [
        ox.d_center * oy.len,
        ox.len * oy.d_center,
        ox.d_size * oy.len,
        ox.len * oy.d_size,
    ];
    let union = pred.area() + gt.area() - inter;
    let d_union = [
        -d_inter[0],
        -d_inter[1],
        pred.h - d_inter[2],
        pred.w - d_inter[3],
    ];
    let iou = inter / union;
    let mut d_iou = [0.0; 4];
    for i in 0..4 {
        d_iou[i] = (d_inter[i] * union - inter * d_union[i]) / (union * union);
    }

    let ex = enclosure(pred.cx, pred.w, gt.cx, gt.w);
    let ey = enclosure(pred.cy, pred.h, gt.cy, gt.h);
    let c2 = ex.len * ex.len + ey.len * ey.len;
    let d_c2 = [
        2.0 * ex.len * ex.d_center,
        2.0 * ey.len * ey.d_center,
        2.0 * ex.len * ex.d_size,
        2.0 * ey.len * ey.d_size,
    ];
    let (dx, dy) = (pred.cx - gt.cx, pred.cy - gt.cy);
    let rho2 = dx * dx + dy * dy;
    let d_rho2 = [2.0 * dx, 2.0 * dy, 0.0, 0.0];
    let dist = rho2 / c2;
    let mut d_dist = [0.0; 4];
    for i in 0..4 {
        d_dist[i] = (d_rho2[i] * c2 - rho2 * d_c2[i]) / (c2 * c2);
    }

    let angle = atan(gt.w / gt.h) - atan(pred.w / pred.h);
    let v = ASPECT_SCALE * angle * angle;
    let r2 = pred.w * pred.w + pred.h * pred.h;
    let d_v = [
        0.0,
        0.0,
        -2.0 * ASPECT_SCALE * angle * pred.h / r2,
        2.0 * ASPECT_SCALE * angle * pred.w / r2,
    ];
    let alpha = alpha_fixed.unwrap_or_else(|| {
        let denom = (1.0 - iou) + v;
        if denom > 0.0 {
            v / denom
        } else {
            0.0
        }
    });

    let mut grad = [0.0; 4];
    for i in 0..4 {
        grad[i] = -d_iou[i] + d_dist[i] + alpha * d_v[i];
    }
    CiouLoss {
        loss: 1.0 - iou + dist + alpha * v,
        grad,
        iou,
        v,
        alpha,
    }
}
