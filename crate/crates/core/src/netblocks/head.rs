use alloc::vec;

use super::layers::pointwise_conv;
use crate::error::{Error, Result};
use crate::math::{sigmoid, softmax_into};
use crate::tensor::Tensor;

/// Per-cell predictions of the decoupled head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadOutput {
    /// `K x H x W` class probabilities.
    pub p_cls: Tensor,
    /// `4 x n_bins x H x W`: one distribution over bins per box side.
    pub d_box: Tensor,
    /// `1 x H x W` objectness.
    pub p_obj: Tensor,
}

impl HeadOutput {
    /// Distribution for `side` (0..4) at cell `(y, x)`.
    pub fn side_distribution(&self, side: usize, y: usize, x: usize) -> alloc::vec::Vec<f64> {
        let s = self.d_box.shape();
        let (n, h, w) = (s[1], s[2], s[3]);
        (0..n)
            .map(|b| self.d_box.data()[((side * n + b) * h + y) * w + x])
            .collect()
    }
}

/// Decoupled detection head: separate 1x1 projections for classes
/// (`K x C`), box bins (`4 * n_bins x C`, side-major) and objectness
/// (`1 x C`). Classes and objectness go through a sigmoid; each side's
/// bins through a softmax.
pub fn head_predict(
    f: &Tensor,
    cls_w: &Tensor,
    box_w: &Tensor,
    obj_w: &Tensor,
    n_bins: usize,
) -> Result<HeadOutput> {
    let (c, h, w) = f.chw()?;
    if n_bins == 0 {
        return Err(Error::Parameter("n_bins must be positive"));
    }
    if box_w.shape() != [4 * n_bins, c] {
        return Err(Error::shape(&[4 * n_bins, c], box_w.shape()));
    }
    if obj_w.shape() != [1, c] {
        return Err(Error::shape(&[1, c], obj_w.shape()));
    }
    let p_cls = pointwise_conv(f, cls_w)?.map(sigmoid);
    let p_obj = pointwise_conv(f, obj_w)?.map(sigmoid);
    let logits = pointwise_conv(f, box_w)?;

    let plane = h * w;
    let mut d_box = vec![0.0; 4 * n_bins * plane];
    let mut cell_logits = vec![0.0; n_bins];
    let mut cell_probs = vec![0.0; n_bins];
    for side in 0..4 {
        for p in 0..plane {
            for (b, z) in cell_logits.iter_mut().enumerate() {
                *z = logits.data()[(side * n_bins + b) * plane + p];
            }
            softmax_into(&cell_logits, &mut cell_probs);
            for (b, &q) in cell_probs.iter().enumerate() {
                d_box[(side * n_bins + b) * plane + p] = q;
            }
        }
    }
    Ok(HeadOutput {
        p_cls,
        d_box: Tensor::new(vec![4, n_bins, h, w], d_box)?,
        p_obj,
    })
}
