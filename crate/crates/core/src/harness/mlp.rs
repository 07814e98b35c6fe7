use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::detloss::bce_loss;
use crate::error::{Error, Result};
use crate::math::{sigmoid, silu, sqrt};

pub const HIDDEN_UNITS: usize = 8;

/// `dim -> 8 -> 1` network with SiLU hidden units and a sigmoid output,
/// trained on mean BCE.
///
/// Parameters live in one flat vector laid out as
/// `[W1 (8 x dim, row-major), b1 (8), w2 (8), b2 (1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mlp {
    pub dim: usize,
}

impl Mlp {
    pub fn new(dim: usize) -> Self {
        Mlp { dim }
    }

    pub fn param_count(&self) -> usize {
        HIDDEN_UNITS * self.dim + 2 * HIDDEN_UNITS + 1
    }

    /// Gaussian weights scaled by `1 / sqrt(fan_in)`, zero biases.
    pub fn init(&self, rng: &mut impl Rng) -> Vec<f64> {
        let mut params = vec![0.0; self.param_count()];
        let w1 = HIDDEN_UNITS * self.dim;
        let s1 = 1.0 / sqrt(self.dim as f64);
        for p in &mut params[..w1] {
            *p = s1 * rng.sample::<f64, _>(StandardNormal);
        }
        let s2 = 1.0 / sqrt(HIDDEN_UNITS as f64);
        let w2 = w1 + HIDDEN_UNITS;
        for p in &mut params[w2..w2 + HIDDEN_UNITS] {
            *p = s2 * rng.sample::<f64, _>(StandardNormal);
        }
        params
    }

    fn check(&self, params: &[f64], features: &[f64], labels: Option<&[bool]>) -> Result<usize> {
        if params.len() != self.param_count() {
            return Err(Error::Length {
                left: self.param_count(),
                right: params.len(),
            });
        }
        if self.dim == 0 || features.len() % self.dim != 0 {
            return Err(Error::Length {
                left: self.dim,
                right: features.len(),
            });
        }
        let n = features.len() / self.dim;
        if let Some(labels) = labels {
            if labels.len() != n {
                return Err(Error::Length {
                    left: n,
                    right: labels.len(),
                });
            }
        }
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(n)
    }

    /// Hidden pre-activations and output probability for one example.
    fn forward_one(&self, params: &[f64], x: &[f64], pre: &mut [f64; HIDDEN_UNITS]) -> f64 {
        let d = self.dim;
        let (w1, rest) = params.split_at(HIDDEN_UNITS * d);
        let (b1, rest) = rest.split_at(HIDDEN_UNITS);
        let (w2, b2) = rest.split_at(HIDDEN_UNITS);
        let mut z = b2[0];
        for j in 0..HIDDEN_UNITS {
            let h = w1[j * d..(j + 1) * d]
                .iter()
                .zip(x)
                .map(|(w, v)| w * v)
                .sum::<f64>()
                + b1[j];
            pre[j] = h;
            z += w2[j] * silu(h);
        }
        sigmoid(z)
    }

    /// Output probabilities for each row of `features`.
    pub fn predict(&self, params: &[f64], features: &[f64]) -> Result<Vec<f64>> {
        self.check(params, features, None)?;
        let mut pre = [0.0; HIDDEN_UNITS];
        Ok(features
            .chunks_exact(self.dim)
            .map(|x| self.forward_one(params, x, &mut pre))
            .collect())
    }

    /// Mean BCE over the batch.
    pub fn loss(&self, params: &[f64], features: &[f64], labels: &[bool]) -> Result<f64> {
        self.check(params, features, Some(labels))?;
        let probs = self.predict(params, features)?;
        Ok(bce_loss(&probs, labels)?.loss)
    }

    /// Mean BCE over the batch and its gradient w.r.t. every parameter.
    pub fn forward_backward(
        &self,
        params: &[f64],
        features: &[f64],
        labels: &[bool],
    ) -> Result<(f64, Vec<f64>)> {
        let n = self.check(params, features, Some(labels))?;
        let d = self.dim;
        let mut pres = vec![[0.0; HIDDEN_UNITS]; n];
        let probs: Vec<f64> = features
            .chunks_exact(d)
            .zip(pres.iter_mut())
            .map(|(x, pre)| self.forward_one(params, x, pre))
            .collect();
        let out = bce_loss(&probs, labels)?;

        let mut grad = vec![0.0; params.len()];
        let w2_at = HIDDEN_UNITS * d + HIDDEN_UNITS;
        let b2_at = w2_at + HIDDEN_UNITS;
        for ((x, pre), (&p, &dl_dp)) in features
            .chunks_exact(d)
            .zip(&pres)
            .zip(probs.iter().zip(&out.grad))
        {
            let dz = dl_dp * p * (1.0 - p);
            grad[b2_at] += dz;
            for j in 0..HIDDEN_UNITS {
                let h = pre[j];
                let s = sigmoid(h);
                grad[w2_at + j] += dz * h * s;
                let dh = dz * params[w2_at + j] * s * (1.0 + h * (1.0 - s));
                grad[HIDDEN_UNITS * d + j] += dh;
                for (k, &xv) in x.iter().enumerate() {
                    grad[j * d + k] += dh * xv;
                }
            }
        }
        Ok((out.loss, grad))
    }

    /// Fraction of rows whose thresholded output (at 0.5) matches the label.
    pub fn accuracy(&self, params: &[f64], features: &[f64], labels: &[bool]) -> Result<f64> {
        self.check(params, features, Some(labels))?;
        let probs = self.predict(params, features)?;
        let hits = probs
            .iter()
            .zip(labels)
            .filter(|(&p, &l)| (p >= 0.5) == l)
            .count();
        Ok(hits as f64 / labels.len() as f64)
    }
}
