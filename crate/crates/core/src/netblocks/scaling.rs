use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::layers::conv_output_size;
use crate::error::{Error, Result};
use crate::math::pow;

/// Target of the compound-scaling constraint `alpha * beta^2 * gamma^2`.
pub const COMPOUND_TARGET: f64 = 2.0;

/// Relative slack allowed on [`COMPOUND_TARGET`] for a grid-search result.
const CONSTRAINT_SLACK: f64 = 0.05;

/// Depth, width and resolution bases with a shared compound coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingTriple {
    pub alpha: f64,
    pub beta_w: f64,
    pub gamma_r: f64,
    pub phi: f64,
}

impl ScalingTriple {
    pub fn constraint_value(&self) -> f64 {
        self.alpha * self.beta_w * self.beta_w * self.gamma_r * self.gamma_r
    }

    /// `|alpha * beta^2 * gamma^2 - 2|`.
    pub fn residual(&self) -> f64 {
        (self.constraint_value() - COMPOUND_TARGET).abs()
    }
}

/// Depth, width and resolution multipliers `(alpha^phi, beta^phi, gamma^phi)`.
pub fn compound_scale(s: &ScalingTriple) -> (f64, f64, f64) {
    (
        pow(s.alpha, s.phi),
        pow(s.beta_w, s.phi),
        pow(s.gamma_r, s.phi),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleRange {
    pub lo: f64,
    pub hi: f64,
}

impl ScaleRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        ScaleRange { lo, hi }
    }

    fn points(&self, step: f64) -> Result<Vec<f64>> {
        if !(1.0 <= self.lo && self.lo <= self.hi && self.hi <= 2.0) {
            return Err(Error::Parameter("scaling ranges must lie within [1, 2]"));
        }
        let n = libm::floor((self.hi - self.lo) / step + 1e-9) as usize + 1;
        Ok((0..n).map(|i| self.lo + i as f64 * step).collect())
    }
}

/// Exhaustive search over `lo, lo + step, ..` on each range for the triple
/// closest to the compound constraint. Ties go to the smallest alpha, then
/// the smallest beta. The result carries `phi = 1`.
pub fn grid_search_scaling(step: f64, ranges: [ScaleRange; 3]) -> Result<ScalingTriple> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Parameter("grid step must be positive"));
    }
    let alphas = ranges[0].points(step)?;
    let betas = ranges[1].points(step)?;
    let gammas = ranges[2].points(step)?;
    let mut best: Option<ScalingTriple> = None;
    for &alpha in &alphas {
        for &beta_w in &betas {
            for &gamma_r in &gammas {
                let cand = ScalingTriple {
                    alpha,
                    beta_w,
                    gamma_r,
                    phi: 1.0,
                };
                match best {
                    Some(b) if cand.residual() >= b.residual() - 1e-12 => {}
                    _ => best = Some(cand),
                }
            }
        }
    }
    let best = best.ok_or(Error::Parameter("empty scaling grid"))?;
    if best.residual() > CONSTRAINT_SLACK * COMPOUND_TARGET {
        return Err(Error::Range {
            what: "compound constraint residual",
            value: best.residual(),
        });
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
}

const fn stage(out_channels: usize, stride: usize) -> StageSpec {
    StageSpec {
        out_channels,
        kernel: 3,
        stride,
        pad: 1,
    }
}

/// 3x3 convolutions of the detector backbone: five stride-2 stages from 32
/// to 512 channels, then a stride-1 widening to 1024 at the coarsest scale.
pub const BACKBONE_STAGES: [StageSpec; 6] = [
    stage(32, 2),
    stage(64, 2),
    stage(128, 2),
    stage(256, 2),
    stage(512, 2),
    stage(1024, 1),
];

/// Shapes `[C, H, W]` produced by running `stages` on an input of shape
/// `input`, starting with the input itself.
pub fn backbone_ladder(input: [usize; 3], stages: &[StageSpec]) -> Result<Vec<[usize; 3]>> {
    let mut shapes = Vec::with_capacity(stages.len() + 1);
    shapes.push(input);
    let mut cur = input;
    for s in stages {
        let h = conv_output_size(cur[1], s.kernel, s.stride, s.pad);
        let w = conv_output_size(cur[2], s.kernel, s.stride, s.pad);
        match (h, w) {
            (Some(h), Some(w)) => cur = [s.out_channels, h, w],
            _ => return Err(Error::Parameter("stage kernel larger than feature map")),
        }
        shapes.push(cur);
    }
    Ok(shapes)
}
