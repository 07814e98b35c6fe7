use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::tensor::Tensor;

pub fn silu(x: &Tensor) -> Tensor {
    x.map(math::silu)
}

/// Inference-mode batch normalization `gamma * (x - mu) / sigma + beta`.
pub fn batchnorm_infer(x: &Tensor, mu: f64, sigma: f64, gamma: f64, beta: f64) -> Result<Tensor> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Parameter("batchnorm sigma must be positive"));
    }
    Ok(x.map(|v| gamma * ((v - mu) / sigma) + beta))
}

/// Output length of a convolution along one axis, or `None` when the kernel
/// does not fit the padded input.
pub fn conv_output_size(input: usize, kernel: usize, stride: usize, pad: usize) -> Option<usize> {
    let padded = input + 2 * pad;
    if kernel == 0 || stride == 0 || kernel > padded {
        return None;
    }
    Some((padded - kernel) / stride + 1)
}

fn kernel_dims(kernels: &Tensor) -> Result<(usize, usize, usize)> {
    match *kernels.shape() {
        [o, c, kh, kw] if kh == kw => Ok((o, c, kh)),
        _ => Err(Error::Shape {
            expected: vec![0, 0, 0, 0],
            found: kernels.shape().to_vec(),
        }),
    }
}

/// Multi-channel 2-D cross-correlation. `kernels` is `O x C x K x K`.
pub fn conv2d(
    x: &Tensor,
    kernels: &Tensor,
    bias: &[f64],
    stride: usize,
    pad: usize,
) -> Result<Tensor> {
    let (c, h, w) = x.chw()?;
    let (o, kc, k) = kernel_dims(kernels)?;
    if kc != c {
        return Err(Error::shape(&[o, c, k, k], kernels.shape()));
    }
    if bias.len() != o {
        return Err(Error::Length {
            left: o,
            right: bias.len(),
        });
    }
    let oh =
        conv_output_size(h, k, stride, pad).ok_or(Error::Parameter("kernel larger than input"))?;
    let ow =
        conv_output_size(w, k, stride, pad).ok_or(Error::Parameter("kernel larger than input"))?;
    let kd = kernels.data();
    let mut out = Vec::with_capacity(o * oh * ow);
    for oc in 0..o {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = bias[oc];
                for ic in 0..c {
                    for ky in 0..k {
                        let iy = (oy * stride + ky) as isize - pad as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * stride + kx) as isize - pad as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            let wv = kd[((oc * c + ic) * k + ky) * k + kx];
                            acc += wv * x.at3(ic, iy as usize, ix as usize);
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(vec![o, oh, ow], out)
}

/// Per-channel cross-correlation; `kernels` is `C x K x K`.
pub fn depthwise_conv(x: &Tensor, kernels: &Tensor, stride: usize, pad: usize) -> Result<Tensor> {
    let (c, h, w) = x.chw()?;
    let (kc, k) = match *kernels.shape() {
        [kc, kh, kw] if kh == kw => (kc, kh),
        _ => {
            return Err(Error::Shape {
                expected: vec![c, 0, 0],
                found: kernels.shape().to_vec(),
            })
        }
    };
    if kc != c {
        return Err(Error::shape(&[c, k, k], kernels.shape()));
    }
    let oh =
        conv_output_size(h, k, stride, pad).ok_or(Error::Parameter("kernel larger than input"))?;
    let ow =
        conv_output_size(w, k, stride, pad).ok_or(Error::Parameter("kernel larger than input"))?;
    let kd = kernels.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut acc = 0.0;
                for ky in 0..k {
                    let iy = (oy * stride + ky) as isize - pad as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for kx in 0..k {
                        let ix = (ox * stride + kx) as isize - pad as isize;
                        if ix < 0 || ix >= w as isize {
                            continue;
                        }
                        acc += kd[(ch * k + ky) * k + kx] * x.at3(ch, iy as usize, ix as usize);
                    }
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(vec![c, oh, ow], out)
}

/// Per-pixel linear map across channels; `weights` is `O x C`.
pub fn pointwise_conv(x: &Tensor, weights: &Tensor) -> Result<Tensor> {
    let (c, h, w) = x.chw()?;
    let o = match *weights.shape() {
        [o, wc] if wc == c => o,
        _ => return Err(Error::shape(&[0, c], weights.shape())),
    };
    let wd = weights.data();
    let mut out = Vec::with_capacity(o * h * w);
    for oc in 0..o {
        for y in 0..h {
            for xx in 0..w {
                let mut acc = 0.0;
                for ic in 0..c {
                    acc += wd[oc * c + ic] * x.at3(ic, y, xx);
                }
                out.push(acc);
            }
        }
    }
    Tensor::new(vec![o, h, w], out)
}

/// Class scores `W x + b` and the winning index (lowest index on ties).
pub fn linear_classify(x: &[f64], weights: &Tensor, bias: &[f64]) -> Result<(Vec<f64>, usize)> {
    let k = match *weights.shape() {
        [k, d] if d == x.len() => k,
        _ => return Err(Error::shape(&[bias.len(), x.len()], weights.shape())),
    };
    if bias.len() != k {
        return Err(Error::Length {
            left: k,
            right: bias.len(),
        });
    }
    let scores: Vec<f64> = weights
        .data()
        .chunks_exact(x.len())
        .zip(bias)
        .map(|(row, &b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
        .collect();
    let mut label = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[label] {
            label = i;
        }
    }
    Ok((scores, label))
}
