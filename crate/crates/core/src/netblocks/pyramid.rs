use alloc::vec;
use alloc::vec::Vec;

use super::layers::{conv2d, pointwise_conv};
use crate::error::{Error, Result};
use crate::math::sigmoid;
use crate::tensor::Tensor;

/// Stride-1 max pooling with `(k - 1) / 2` padding, so spatial size is kept.
/// Padding never wins the max.
pub fn max_pool_same(x: &Tensor, k: usize) -> Result<Tensor> {
    if k % 2 == 0 {
        return Err(Error::Parameter("pooling kernel must be odd"));
    }
    let (c, h, w) = x.chw()?;
    let r = k / 2;
    let mut out = Vec::with_capacity(x.len());
    for ch in 0..c {
        for y in 0..h {
            let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
            for xx in 0..w {
                let (x0, x1) = (xx.saturating_sub(r), (xx + r).min(w - 1));
                let mut m = f64::NEG_INFINITY;
                for yy in y0..=y1 {
                    for xi in x0..=x1 {
                        m = m.max(x.at3(ch, yy, xi));
                    }
                }
                out.push(m);
            }
        }
    }
    Tensor::new(x.shape().to_vec(), out)
}

/// `[x, M(x), M(M(x)), M(M(M(x)))]` for the cascaded pool `M` of size `k`.
pub fn sppf_stages(x: &Tensor, k: usize) -> Result<[Tensor; 4]> {
    let p1 = max_pool_same(x, k)?;
    let p2 = max_pool_same(&p1, k)?;
    let p3 = max_pool_same(&p2, k)?;
    Ok([x.clone(), p1, p2, p3])
}

/// Spatial pyramid pooling (fast): cascaded pools concatenated along
/// channels, then projected by `proj` (`O x 4C`).
pub fn sppf(x: &Tensor, k: usize, proj: &Tensor) -> Result<Tensor> {
    let [a, b, c, d] = sppf_stages(x, k)?;
    let cat = Tensor::concat_channels(&[&a, &b, &c, &d])?;
    pointwise_conv(&cat, proj)
}

/// Spatial attention map `A = sigmoid(conv7x7([max_c F, mean_c F]))` (no
/// bias, padding 3) and the refined features `A * F`.
///
/// `conv7` is `1 x 2 x 7 x 7` or `2 x 7 x 7`.
pub fn spatial_attention(f: &Tensor, conv7: &Tensor) -> Result<(Tensor, Tensor)> {
    let (c, h, w) = f.chw()?;
    let kernel = match *conv7.shape() {
        [1, 2, 7, 7] => conv7.clone(),
        [2, 7, 7] => conv7.clone().reshape(&[1, 2, 7, 7])?,
        _ => return Err(Error::shape(&[1, 2, 7, 7], conv7.shape())),
    };
    let plane = h * w;
    let mut pooled = vec![0.0; 2 * plane];
    for p in 0..plane {
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for ch in 0..c {
            let v = f.data()[ch * plane + p];
            max = max.max(v);
            sum += v;
        }
        pooled[p] = max;
        pooled[plane + p] = sum / c as f64;
    }
    let pooled = Tensor::new(vec![2, h, w], pooled)?;
    let attn = conv2d(&pooled, &kernel, &[0.0], 1, 3)?.map(sigmoid);
    let mut refined = f.clone();
    for (i, v) in refined.data_mut().iter_mut().enumerate() {
        *v *= attn.data()[i % plane];
    }
    Ok((attn, refined))
}

/// Nearest-neighbour 2x upsampling.
pub fn upsample_nearest2(x: &Tensor) -> Result<Tensor> {
    let (c, h, w) = x.chw()?;
    let mut out = Vec::with_capacity(4 * x.len());
    for ch in 0..c {
        for y in 0..2 * h {
            for xx in 0..2 * w {
                out.push(x.at3(ch, y / 2, xx / 2));
            }
        }
    }
    Tensor::new(vec![c, 2 * h, 2 * w], out)
}

/// 2x2 max pooling with stride 2; spatial dimensions must be even.
pub fn downsample_max2(x: &Tensor) -> Result<Tensor> {
    let (c, h, w) = x.chw()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::shape(&[c, h + h % 2, w + w % 2], x.shape()));
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for y in 0..oh {
            for xx in 0..ow {
                let m = x
                    .at3(ch, 2 * y, 2 * xx)
                    .max(x.at3(ch, 2 * y, 2 * xx + 1))
                    .max(x.at3(ch, 2 * y + 1, 2 * xx))
                    .max(x.at3(ch, 2 * y + 1, 2 * xx + 1));
                out.push(m);
            }
        }
    }
    Tensor::new(vec![c, oh, ow], out)
}

/// Top-down fusion: upsample the deeper map, concatenate after the backbone
/// map and merge with a pointwise projection standing in for C3k2.
pub fn fuse_topdown(backbone: &Tensor, deeper: &Tensor, merge: &Tensor) -> Result<Tensor> {
    let (_, bh, bw) = backbone.chw()?;
    let (dc, dh, dw) = deeper.chw()?;
    if dh * 2 != bh || dw * 2 != bw {
        return Err(Error::shape(&[dc, bh / 2, bw / 2], deeper.shape()));
    }
    let up = upsample_nearest2(deeper)?;
    pointwise_conv(&Tensor::concat_channels(&[backbone, &up])?, merge)
}

/// Bottom-up fusion: 2x2 max-downsample the shallower output, concatenate
/// after the fused map and merge with a pointwise projection.
pub fn fuse_bottomup(fused: &Tensor, shallower_out: &Tensor, merge: &Tensor) -> Result<Tensor> {
    let (_, fh, fw) = fused.chw()?;
    let (sc, sh, sw) = shallower_out.chw()?;
    if sh != fh * 2 || sw != fw * 2 {
        return Err(Error::shape(&[sc, fh * 2, fw * 2], shallower_out.shape()));
    }
    let down = downsample_max2(shallower_out)?;
    pointwise_conv(&Tensor::concat_channels(&[fused, &down])?, merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    fn identity_block(out: usize, inp: usize) -> Tensor {
        Tensor::from_fn(&[out, inp], |i| if i / inp == i % inp { 1.0 } else { 0.0 })
    }

    #[test]
    fn sppf_constant_input() {
        let x = Tensor::full(&[2, 5, 5], 3.0);
        let stages = sppf_stages(&x, 5).unwrap();
        for s in &stages {
            assert!(s.data().iter().all(|&v| v == 3.0));
        }
        // project onto the first stage's channels
        let y = sppf(&x, 5, &identity_block(2, 8)).unwrap();
        assert_eq!(y.shape(), &[2, 5, 5]);
        assert!(y.data().iter().all(|&v| v == 3.0));
    }

    #[test]
    fn sppf_peak_propagates() {
        let mut x = Tensor::zeros(&[1, 7, 7]);
        x.data_mut()[24] = 5.0;
        let stages = sppf_stages(&x, 3).unwrap();
        for pair in stages.windows(2) {
            for (a, b) in pair[0].data().iter().zip(pair[1].data()) {
                assert!(b >= a);
            }
        }
        // three 3x3 pools reach radius 3: the whole 7x7 plane
        assert!(stages[3].data().iter().all(|&v| v == 5.0));
        assert_eq!(stages[1].data().iter().filter(|&&v| v == 5.0).count(), 9);
    }

    #[test]
    fn even_kernel_rejected() {
        let x = Tensor::zeros(&[1, 4, 4]);
        assert!(matches!(max_pool_same(&x, 4), Err(Error::Parameter(_))));
        assert!(sppf(&x, 2, &identity_block(1, 4)).is_err());
    }

    #[test]
    fn attention_zero_kernel_halves() {
        let f = Tensor::from_fn(&[3, 4, 5], |i| i as f64 - 20.0);
        let (a, refined) = spatial_attention(&f, &Tensor::zeros(&[1, 2, 7, 7])).unwrap();
        assert_eq!(a.shape(), &[1, 4, 5]);
        assert!(a.data().iter().all(|&v| v == 0.5));
        for (r, x) in refined.data().iter().zip(f.data()) {
            assert_eq!(*r, x / 2.0);
        }
        let zero = Tensor::zeros(&[2, 3, 3]);
        let kernel = Tensor::from_fn(&[2, 7, 7], |i| libm::sin(i as f64));
        let (_, refined) = spatial_attention(&zero, &kernel).unwrap();
        assert!(refined.data().iter().all(|&v| v == 0.0));
        assert!(spatial_attention(&zero, &Tensor::zeros(&[1, 1, 7, 7])).is_err());
    }

    #[test]
    fn nearest_upsample() {
        let x = t(&[1, 2, 2], &[1.0, 2.0, 3.0, 4.0]);
        let up = upsample_nearest2(&x).unwrap();
        assert_eq!(
            up.data(),
            &[1.0, 1.0, 2.0, 2.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0, 3.0, 3.0, 4.0, 4.0]
        );
    }

    #[test]
    fn fusion_shapes_and_zero_branch() {
        let backbone = Tensor::from_fn(&[2, 4, 4], |i| i as f64);
        let deeper = Tensor::zeros(&[3, 2, 2]);
        let merge = identity_block(2, 5);
        assert_eq!(fuse_topdown(&backbone, &deeper, &merge).unwrap(), backbone);
        assert!(fuse_topdown(&backbone, &Tensor::zeros(&[3, 3, 2]), &merge).is_err());

        let shallow = Tensor::full(&[1, 8, 8], 2.5);
        let fused = Tensor::zeros(&[1, 4, 4]);
        let out = fuse_bottomup(&fused, &shallow, &t(&[1, 2], &[0.0, 1.0])).unwrap();
        assert_eq!(out.shape(), &[1, 4, 4]);
        assert!(out.data().iter().all(|&v| v == 2.5));
        assert!(
            fuse_bottomup(&fused, &Tensor::zeros(&[1, 6, 8]), &t(&[1, 2], &[0.0, 1.0])).is_err()
        );
    }
}
