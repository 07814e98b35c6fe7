use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// Analytic objectives for optimizer benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TestFunction {
    /// `0.5 * |x|^2`, minimum 0 at the origin.
    Quadratic,
    /// `sum (1 - x_i)^2 + 100 (x_{i+1} - x_i^2)^2`, minimum 0 at all ones.
    Rosenbrock,
}

impl TestFunction {
    pub fn name(self) -> &'static str {
        match self {
            TestFunction::Quadratic => "quadratic",
            TestFunction::Rosenbrock => "rosenbrock",
        }
    }

    pub fn min_dim(self) -> usize {
        match self {
            TestFunction::Quadratic => 1,
            TestFunction::Rosenbrock => 2,
        }
    }

    pub fn value(self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            TestFunction::Rosenbrock => x
                .windows(2)
                .map(|p| {
                    let (a, b) = (1.0 - p[0], p[1] - p[0] * p[0]);
                    a * a + 100.0 * b * b
                })
                .sum(),
        }
    }

    pub fn grad(self, x: &[f64]) -> Vec<f64> {
        match self {
            TestFunction::Quadratic => x.to_vec(),
            TestFunction::Rosenbrock => {
                let mut g = alloc::vec![0.0; x.len()];
                for i in 0..x.len().saturating_sub(1) {
                    let b = x[i + 1] - x[i] * x[i];
                    g[i] += -2.0 * (1.0 - x[i]) - 400.0 * x[i] * b;
                    g[i + 1] += 200.0 * b;
                }
                g
            }
        }
    }

    pub fn minimizer(self, dim: usize) -> Vec<f64> {
        match self {
            TestFunction::Quadratic => alloc::vec![0.0; dim],
            TestFunction::Rosenbrock => alloc::vec![1.0; dim],
        }
    }
}

impl core::str::FromStr for TestFunction {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "quadratic" => Ok(TestFunction::Quadratic),
            "rosenbrock" => Ok(TestFunction::Rosenbrock),
            _ => Err(crate::Error::Parameter("unknown test function")),
        }
    }
}
