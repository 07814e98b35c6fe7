use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::optim::{HyperParams, OptimState, OptimizerKind};
use crate::tensor::Tensor;

use super::testfns::TestFunction;

/// Learning rates tried when tuning AWDR on Rosenbrock.
pub const ROSENBROCK_LR_GRID: [f64; 3] = [1e-3, 3e-3, 1e-2];

/// Objective values along an optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub function: TestFunction,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    /// `values[k]` is the objective after `k` updates; `values[0]` is at `x0`.
    pub values: Vec<f64>,
    pub final_x: Vec<f64>,
    /// The run stopped early on a non-finite objective or gradient.
    pub diverged: bool,
}

impl Trajectory {
    pub fn final_value(&self) -> f64 {
        *self
            .values
            .last()
            .expect("trajectory holds the initial value")
    }

    /// First step at which the objective drops below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.values.iter().position(|&v| v < threshold)
    }
}

/// Start point used when none is given: `x = ±1` (sign drawn from `seed`)
/// for the quadratic, the classic `(-1.2, 1.0)` for Rosenbrock.
pub fn default_start(func: TestFunction, seed: u64) -> Vec<f64> {
    match func {
        TestFunction::Quadratic => {
            let positive = super::rng_for(seed, 4).random_bool(0.5);
            alloc::vec![if positive { 1.0 } else { -1.0 }]
        }
        TestFunction::Rosenbrock => alloc::vec![-1.2, 1.0],
    }
}

/// Epoch fed to the blend schedule at update `k` of `steps`: the horizon is
/// spread evenly over the run.
fn epoch_at(k: u64, steps: u64, horizon: u64) -> u64 {
    ((k as u128 * horizon as u128) / steps as u128) as u64
}

/// Runs `steps` updates of `opt` on `func` from `x0`.
pub fn bench_function(
    func: TestFunction,
    opt: OptimizerKind,
    hp: &HyperParams,
    x0: &[f64],
    steps: u64,
) -> Result<Trajectory> {
    hp.validate()?;
    if x0.len() < func.min_dim() {
        return Err(Error::Length {
            left: func.min_dim(),
            right: x0.len(),
        });
    }
    if steps == 0 {
        return Err(Error::Parameter("steps must be positive"));
    }
    let mut x = Tensor::from_vec(x0.to_vec())?;
    let mut state = OptimState::for_params(&x);
    let mut values = Vec::with_capacity(steps as usize + 1);
    values.push(func.value(x.data()));
    let mut diverged = !values[0].is_finite();
    for k in 0..steps {
        if diverged {
            break;
        }
        state.epoch = epoch_at(k, steps, hp.horizon_t);
        let grad = Tensor::from_vec(func.grad(x.data()));
        let next = match grad {
            Ok(g) => opt.step(&mut state, &x, &g, hp),
            Err(e) => Err(e),
        };
        match next {
            Ok(n) if n.is_finite() => x = n,
            Ok(_) | Err(Error::NonFinite(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        }
        let v = func.value(x.data());
        values.push(v);
        diverged = !v.is_finite();
    }
    Ok(Trajectory {
        function: func,
        optimizer: opt,
        lr: hp.lr,
        values,
        final_x: x.into_data(),
        diverged,
    })
}

/// Runs every learning rate in `grid` and keeps the run with the lowest
/// final objective (earliest grid entry on ties, diverged runs last).
pub fn tune_lr(
    func: TestFunction,
    opt: OptimizerKind,
    hp: &HyperParams,
    x0: &[f64],
    steps: u64,
    grid: &[f64],
) -> Result<Trajectory> {
    let mut best: Option<Trajectory> = None;
    for &lr in grid {
        let run = bench_function(func, opt, &hp.with_lr(lr), x0, steps)?;
        let better = match &best {
            None => true,
            Some(b) if b.diverged => !run.diverged,
            Some(b) => !run.diverged && run.final_value() < b.final_value(),
        };
        if better {
            best = Some(run);
        }
    }
    best.ok_or(Error::Empty)
}
