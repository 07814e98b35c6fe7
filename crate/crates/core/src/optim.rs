//! RMSProp, AdamW and AWDR, their linear blend with a decaying coefficient.
//!
//! AWDR keeps both branches' accumulators, feeds each the same raw gradient
//! and mixes the two parameter deltas:
//!
//! ```text
//! beta(t) = beta0 * (1 - min(t, T) / T)
//! theta  <- theta + beta(t) * d_rmsprop + (1 - beta(t)) * d_adamw
//! ```
//!
//! `t` is the epoch counter carried in [`OptimState`]; the caller advances it.
//! Weight decay lives only in the AdamW branch, so it is phased in as the
//! blend moves away from RMSProp.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{cos, pow, sqrt, PI};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHyperParams")]
pub struct HyperParams {
    pub lr: f64,
    /// Decay of the RMSProp squared-gradient accumulator.
    pub rms_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Blend coefficient at epoch zero.
    pub beta0: f64,
    /// Epoch at which the blend reaches pure AdamW.
    #[serde(rename = "horizon_T")]
    pub horizon_t: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lr: 1e-3,
            rms_decay: 0.99,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
            beta0: 1.0,
            horizon_t: 100,
        }
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawHyperParams {
    lr: f64,
    rms_decay: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    beta0: f64,
    #[serde(rename = "horizon_T")]
    horizon_t: u64,
}

impl Default for RawHyperParams {
    fn default() -> Self {
        let d = HyperParams::default();
        RawHyperParams {
            lr: d.lr,
            rms_decay: d.rms_decay,
            beta1: d.beta1,
            beta2: d.beta2,
            eps: d.eps,
            weight_decay: d.weight_decay,
            beta0: d.beta0,
            horizon_t: d.horizon_t,
        }
    }
}

impl TryFrom<RawHyperParams> for HyperParams {
    type Error = Error;

    fn try_from(raw: RawHyperParams) -> Result<Self> {
        let hp = HyperParams {
            lr: raw.lr,
            rms_decay: raw.rms_decay,
            beta1: raw.beta1,
            beta2: raw.beta2,
            eps: raw.eps,
            weight_decay: raw.weight_decay,
            beta0: raw.beta0,
            horizon_t: raw.horizon_t,
        };
        hp.validate()?;
        Ok(hp)
    }
}

impl HyperParams {
    pub fn with_lr(self, lr: f64) -> Self {
        HyperParams { lr, ..self }
    }

    pub fn with_weight_decay(self, weight_decay: f64) -> Self {
        HyperParams {
            weight_decay,
            ..self
        }
    }

    pub fn with_beta0(self, beta0: f64) -> Self {
        HyperParams { beta0, ..self }
    }

    pub fn with_horizon(self, horizon_t: u64) -> Self {
        HyperParams { horizon_t, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let open_unit = |x: f64| x > 0.0 && x < 1.0;
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Range {
                what: "lr",
                value: self.lr,
            });
        }
        for (what, value) in [
            ("rms_decay", self.rms_decay),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
        ] {
            if !open_unit(value) {
                return Err(Error::Range { what, value });
            }
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Range {
                what: "eps",
                value: self.eps,
            });
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::Range {
                what: "weight_decay",
                value: self.weight_decay,
            });
        }
        if !(0.0..=1.0).contains(&self.beta0) {
            return Err(Error::Range {
                what: "beta0",
                value: self.beta0,
            });
        }
        if self.horizon_t == 0 {
            return Err(Error::Range {
                what: "horizon_T",
                value: 0.0,
            });
        }
        Ok(())
    }
}

/// Accumulators for both branches plus the step and epoch counters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimState {
    pub rms_acc: Tensor,
    pub adam_m: Tensor,
    pub adam_v: Tensor,
    /// Number of AdamW-branch updates, used for bias correction.
    pub step: u64,
    pub epoch: u64,
}

impl OptimState {
    pub fn new(shape: &[usize]) -> Self {
        OptimState {
            rms_acc: Tensor::zeros(shape),
            adam_m: Tensor::zeros(shape),
            adam_v: Tensor::zeros(shape),
            step: 0,
            epoch: 0,
        }
    }

    pub fn for_params(params: &Tensor) -> Self {
        Self::new(params.shape())
    }

    pub fn shape(&self) -> &[usize] {
        self.rms_acc.shape()
    }

    pub fn advance_epoch(&mut self) {
        self.epoch += 1;
    }

    fn check(&self, t: &Tensor) -> Result<()> {
        self.rms_acc.ensure_same_shape(t)
    }
}

/// `beta0 * (1 - min(t, T) / T)`; epochs past the horizon clamp to zero.
pub fn blend_coefficient(t: u64, hp: &HyperParams) -> f64 {
    let horizon = hp.horizon_t.max(1);
    let t = t.min(horizon);
    hp.beta0 * (1.0 - t as f64 / horizon as f64)
}

/// Advances the RMSProp accumulator and returns `-lr * g / (sqrt(v) + eps)`.
pub fn rmsprop_delta(state: &mut OptimState, grad: &Tensor, hp: &HyperParams) -> Result<Tensor> {
    hp.validate()?;
    state.check(grad)?;
    let rho = hp.rms_decay;
    let mut delta = Tensor::zeros(grad.shape());
    for ((v, d), &g) in state
        .rms_acc
        .data_mut()
        .iter_mut()
        .zip(delta.data_mut())
        .zip(grad.data())
    {
        *v = rho * *v + (1.0 - rho) * g * g;
        *d = -hp.lr * g / (sqrt(*v) + hp.eps);
    }
    Ok(delta)
}

/// Advances the AdamW moments and returns the bias-corrected step with
/// decoupled weight decay, `-lr * (m_hat / (sqrt(v_hat) + eps) + wd * theta)`.
pub fn adamw_delta(
    state: &mut OptimState,
    params: &Tensor,
    grad: &Tensor,
    hp: &HyperParams,
) -> Result<Tensor> {
    hp.validate()?;
    state.check(grad)?;
    state.check(params)?;
    state.step += 1;
    let t = state.step as f64;
    let bias1 = 1.0 - pow(hp.beta1, t);
    let bias2 = 1.0 - pow(hp.beta2, t);
    let mut delta = Tensor::zeros(grad.shape());
    let moments = state
        .adam_m
        .data_mut()
        .iter_mut()
        .zip(state.adam_v.data_mut().iter_mut());
    for (((m, v), d), (&g, &p)) in moments
        .zip(delta.data_mut())
        .zip(grad.data().iter().zip(params.data()))
    {
        *m = hp.beta1 * *m + (1.0 - hp.beta1) * g;
        *v = hp.beta2 * *v + (1.0 - hp.beta2) * g * g;
        let m_hat = *m / bias1;
        let v_hat = *v / bias2;
        *d = -hp.lr * (m_hat / (sqrt(v_hat) + hp.eps) + hp.weight_decay * p);
    }
    Ok(delta)
}

fn ensure_finite(grad: &Tensor) -> Result<()> {
    if grad.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("gradient"))
    }
}

/// One AWDR update. Returns the new parameters.
pub fn awdr_step(
    state: &mut OptimState,
    params: &Tensor,
    grad: &Tensor,
    hp: &HyperParams,
) -> Result<Tensor> {
    state.check(params)?;
    state.check(grad)?;
    ensure_finite(grad)?;
    let beta = blend_coefficient(state.epoch, hp);
    let d_rms = rmsprop_delta(state, grad, hp)?;
    let d_adamw = adamw_delta(state, params, grad, hp)?;
    let mut next = params.clone();
    for ((p, &a), &b) in next
        .data_mut()
        .iter_mut()
        .zip(d_rms.data())
        .zip(d_adamw.data())
    {
        *p = *p + beta * a + (1.0 - beta) * b;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    RmsProp,
    AdamW,
    Awdr,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 3] = [
        OptimizerKind::RmsProp,
        OptimizerKind::AdamW,
        OptimizerKind::Awdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::RmsProp => "rmsprop",
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::Awdr => "awdr",
        }
    }

    /// Blend coefficient this optimizer applies at `epoch`: 1 for RMSProp,
    /// 0 for AdamW, the schedule for AWDR.
    pub fn beta(self, epoch: u64, hp: &HyperParams) -> f64 {
        match self {
            OptimizerKind::RmsProp => 1.0,
            OptimizerKind::AdamW => 0.0,
            OptimizerKind::Awdr => blend_coefficient(epoch, hp),
        }
    }

    /// Applies one update and returns the new parameters.
    pub fn step(
        self,
        state: &mut OptimState,
        params: &Tensor,
        grad: &Tensor,
        hp: &HyperParams,
    ) -> Result<Tensor> {
        match self {
            OptimizerKind::Awdr => awdr_step(state, params, grad, hp),
            OptimizerKind::RmsProp | OptimizerKind::AdamW => {
                state.check(params)?;
                ensure_finite(grad)?;
                let delta = if self == OptimizerKind::RmsProp {
                    rmsprop_delta(state, grad, hp)?
                } else {
                    adamw_delta(state, params, grad, hp)?
                };
                let mut next = params.clone();
                for (p, &d) in next.data_mut().iter_mut().zip(delta.data()) {
                    *p += d;
                }
                Ok(next)
            }
        }
    }
}

impl core::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rmsprop" => Ok(OptimizerKind::RmsProp),
            "adamw" => Ok(OptimizerKind::AdamW),
            "awdr" => Ok(OptimizerKind::Awdr),
            _ => Err(Error::Parameter("unknown optimizer")),
        }
    }
}

/// One-cycle learning-rate policy: linear warmup from `lr_max / start_div`
/// to `lr_max`, then cosine annealing down to `lr_max / final_div`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneCycle {
    pub lr_max: f64,
    pub pct_start: f64,
    pub start_div: f64,
    pub final_div: f64,
}

impl OneCycle {
    pub fn new(lr_max: f64) -> Self {
        OneCycle {
            lr_max,
            pct_start: 0.3,
            start_div: 25.0,
            final_div: 1e4,
        }
    }

    pub fn lr(&self, step: u64, total_steps: u64) -> Result<f64> {
        one_cycle_lr(
            step,
            total_steps,
            self.lr_max,
            self.pct_start,
            self.start_div,
            self.final_div,
        )
    }
}

/// Peak step of the one-cycle policy, kept strictly inside the schedule so
/// that both phases are non-empty.
pub fn one_cycle_peak(total_steps: u64, pct_start: f64) -> u64 {
    let peak = libm::round(pct_start * total_steps as f64) as u64;
    peak.clamp(1, total_steps.saturating_sub(1).max(1))
}

pub fn one_cycle_lr(
    step: u64,
    total_steps: u64,
    lr_max: f64,
    pct_start: f64,
    start_div: f64,
    final_div: f64,
) -> Result<f64> {
    if total_steps < 2 {
        return Err(Error::Range {
            what: "total_steps",
            value: total_steps as f64,
        });
    }
    if step > total_steps {
        return Err(Error::Range {
            what: "step",
            value: step as f64,
        });
    }
    if ![lr_max, start_div, final_div].iter().all(|&v| v > 0.0) {
        return Err(Error::Parameter("one-cycle rates must be positive"));
    }
    if !(pct_start > 0.0 && pct_start < 1.0) {
        return Err(Error::Range {
            what: "pct_start",
            value: pct_start,
        });
    }
    let peak = one_cycle_peak(total_steps, pct_start);
    let lr_start = lr_max / start_div;
    let lr_final = lr_max / final_div;
    if step <= peak {
        let frac = step as f64 / peak as f64;
        Ok(lr_start + (lr_max - lr_start) * frac)
    } else {
        let frac = (step - peak) as f64 / (total_steps - peak) as f64;
        Ok(lr_final + (lr_max - lr_final) * 0.5 * (1.0 + cos(PI * frac)))
    }
}
