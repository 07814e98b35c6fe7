use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{HyperParams, OptimState, OptimizerKind};
use crate::tensor::Tensor;

use super::mlp::Mlp;
use super::synthetic::{make_synthetic, SyntheticSpec};

/// Train accuracy that counts as reaching the target.
pub const TARGET_ACCURACY: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: u64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub beta_t: f64,
    pub lr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub final_loss: f64,
    pub final_accuracy: f64,
    /// First epoch whose train accuracy reached [`TARGET_ACCURACY`].
    pub epochs_to_target: Option<u64>,
    pub diverged: bool,
    /// Mean absolute change of the train loss between consecutive epochs
    /// over the second half of the run.
    pub loss_oscillation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Hyperparameters as used, with the horizon bound to the epoch count.
    pub hp: HyperParams,
    pub records: Vec<EpochRecord>,
    pub summary: TrainSummary,
}

/// Trains the tiny MLP on a synthetic dataset with shuffled mini-batches.
///
/// The blend horizon is the number of epochs; epoch `e` (0-based) runs
/// with `beta(e)`. Records hold the loss and accuracy over the full
/// training set after each epoch. A non-finite loss or gradient stops the
/// run and sets `diverged`; the epoch in which that happens is recorded with
/// a NaN loss.
pub fn train_toy(
    opt: OptimizerKind,
    hp: &HyperParams,
    spec: &SyntheticSpec,
    epochs: u64,
    batch_size: usize,
) -> Result<TrainHistory> {
    if epochs == 0 || batch_size == 0 {
        return Err(Error::Parameter("epochs and batch_size must be positive"));
    }
    let hp = hp.with_horizon(epochs);
    hp.validate()?;
    let data = make_synthetic(spec)?;
    let mlp = Mlp::new(data.dim);
    let mut params = Tensor::from_vec(mlp.init(&mut super::rng_for(spec.seed, 1)))?;
    let mut shuffle_rng = super::rng_for(spec.seed, 2);
    let mut state = OptimState::for_params(&params);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut records = Vec::with_capacity(epochs as usize);
    let mut diverged = false;

    for epoch in 0..epochs {
        state.epoch = epoch;
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(batch_size) {
            let (x, y) = data.gather(chunk);
            let (loss, grad) = match mlp.forward_backward(params.data(), &x, &y) {
                Ok(out) => out,
                Err(Error::NonFinite(_)) => {
                    diverged = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                diverged = true;
                break;
            }
            let grad = Tensor::new(params.shape().to_vec(), grad)?;
            let next = opt.step(&mut state, &params, &grad, &hp)?;
            if !next.is_finite() {
                diverged = true;
                break;
            }
            params = next;
        }
        let train_loss = if diverged {
            f64::NAN
        } else {
            match mlp.loss(params.data(), &data.features, &data.labels) {
                Ok(loss) => loss,
                Err(Error::NonFinite(_)) => f64::NAN,
                Err(e) => return Err(e),
            }
        };
        // on divergence, accuracy of the last finite parameters
        let train_accuracy = mlp.accuracy(params.data(), &data.features, &data.labels)?;
        records.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            beta_t: opt.beta(epoch, &hp),
            lr: hp.lr,
        });
        if !train_loss.is_finite() {
            diverged = true;
            break;
        }
    }

    let summary = summarize(&records, diverged);
    Ok(TrainHistory {
        optimizer: opt,
        seed: spec.seed,
        hp,
        records,
        summary,
    })
}

fn summarize(records: &[EpochRecord], diverged: bool) -> TrainSummary {
    let last = records.last();
    let tail = &records[records.len() / 2..];
    let loss_oscillation = if tail.len() < 2 {
        0.0
    } else {
        tail.windows(2)
            .map(|w| (w[1].train_loss - w[0].train_loss).abs())
            .sum::<f64>()
            / (tail.len() - 1) as f64
    };
    TrainSummary {
        final_loss: last.map_or(f64::NAN, |r| r.train_loss),
        final_accuracy: last.map_or(0.0, |r| r.train_accuracy),
        epochs_to_target: records
            .iter()
            .find(|r| r.train_accuracy >= TARGET_ACCURACY)
            .map(|r| r.epoch),
        diverged,
        loss_oscillation,
    }
}
