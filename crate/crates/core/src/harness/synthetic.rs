use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two isotropic unit-variance Gaussian clouds centred at
/// `-(separation / 2) e1` (label `false`) and `+(separation / 2) e1`
/// (label `true`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n_per_class: usize,
    pub dim: usize,
    pub separation: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            seed: 0,
            n_per_class: 200,
            dim: 2,
            separation: 6.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_class == 0 || self.dim == 0 {
            return Err(Error::Parameter("n_per_class and dim must be positive"));
        }
        if !(self.separation >= 0.0 && self.separation.is_finite()) {
            return Err(Error::Range {
                what: "separation",
                value: self.separation,
            });
        }
        Ok(())
    }
}

/// Row-major features with one boolean label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<bool>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// Rows `indices` gathered into a contiguous feature block and labels.
    pub fn gather(&self, indices: &[usize]) -> (Vec<f64>, Vec<bool>) {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        (features, labels)
    }

    /// Little-endian encoding of features then labels, for byte-level
    /// comparison.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.features.len() * 8 + self.labels.len());
        for v in &self.features {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend(self.labels.iter().map(|&l| l as u8));
        out
    }
}

pub fn make_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = super::rng_for(spec.seed, 0);
    let n = 2 * spec.n_per_class;
    let mut features = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for label in [false, true] {
        let offset = if label { 0.5 } else { -0.5 } * spec.separation;
        for _ in 0..spec.n_per_class {
            for d in 0..spec.dim {
                let z: f64 = rng.sample(StandardNormal);
                features.push(if d == 0 { z + offset } else { z });
            }
            labels.push(label);
        }
    }
    Ok(Dataset {
        dim: spec.dim,
        features,
        labels,
    })
}
