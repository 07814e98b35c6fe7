use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDiff {
    pub grad: Vec<f64>,
    /// Coordinates where an evaluation was not finite; their entry in
    /// `grad` is NaN.
    pub flagged: Vec<usize>,
}

impl FiniteDiff {
    pub fn is_clean(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` per coordinate.
pub fn finite_diff_grad(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> FiniteDiff {
    let mut probe = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    let mut flagged = Vec::new();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe);
        probe[i] = x[i] - h;
        let down = f(&probe);
        probe[i] = x[i];
        if up.is_finite() && down.is_finite() {
            grad[i] = (up - down) / (2.0 * h);
        } else {
            grad[i] = f64::NAN;
            flagged.push(i);
        }
    }
    FiniteDiff { grad, flagged }
}

/// `|a - b| / max(|a|, |b|)` in the Euclidean norm; zero when both vectors
/// vanish, infinite on NaN or length mismatch.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let norm = |v: &mut dyn Iterator<Item = f64>| sqrt(v.map(|x| x * x).sum());
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    if diff.is_nan() {
        return f64::INFINITY;
    }
    let scale = norm(&mut a.iter().copied()).max(norm(&mut b.iter().copied()));
    if scale == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / scale
    }
}
