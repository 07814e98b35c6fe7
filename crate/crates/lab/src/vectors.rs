//! Golden test vectors: one JSON record per line,
//! `{"op": ..., "inputs": {...}, "expected": ..., "tolerance": ...}`.
//!
//! A tolerance of 0 demands bit-identical reals. Tensors use the
//! `{shape, data}` layout; undefined metrics are `null`.

use std::path::Path;

use awdr_core::detloss::{
    bce_loss, ciou_loss, dfl_loss_raw, iou, total_detection_loss, Box2D, LossWeights,
};
use awdr_core::metrics::{
    accuracy, auc_roc, average_precision, f1_score, mcc, precision, recall, Confusion,
};
use awdr_core::netblocks::{
    backbone_ladder, batchnorm_infer, compound_scale, conv2d, depthwise_conv, downsample_max2,
    linear_classify, max_pool_same, pointwise_conv, silu, upsample_nearest2, ScalingTriple,
    BACKBONE_STAGES,
};
use awdr_core::optim::{
    adamw_delta, awdr_step, blend_coefficient, one_cycle_lr, rmsprop_delta, HyperParams, OptimState,
};
use awdr_core::Tensor;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorRecord {
    pub op: String,
    pub inputs: Value,
    pub expected: Value,
    pub tolerance: f64,
}

/// Operation and typed inputs, decoded from a record's `op` and `inputs`.
#[derive(Debug, Deserialize)]
#[serde(
    tag = "op",
    content = "inputs",
    rename_all = "snake_case",
    deny_unknown_fields
)]
enum Op {
    BlendCoefficient {
        t: u64,
        hp: HyperParams,
    },
    // optimizer ops take one update from a fresh state
    RmspropDelta {
        grad: Tensor,
        hp: HyperParams,
    },
    AdamwDelta {
        params: Tensor,
        grad: Tensor,
        hp: HyperParams,
    },
    AwdrStep {
        params: Tensor,
        grad: Tensor,
        hp: HyperParams,
        epoch: u64,
    },
    OneCycleLr {
        step: u64,
        total: u64,
        lr_max: f64,
    },
    Iou {
        a: [f64; 4],
        b: [f64; 4],
    },
    CiouLoss {
        pred: [f64; 4],
        gt: [f64; 4],
    },
    DflLoss {
        probs: Vec<f64>,
        y: f64,
    },
    BceLoss {
        preds: Vec<f64>,
        labels: Vec<bool>,
    },
    TotalDetectionLoss {
        l_ciou: f64,
        l_dfl: f64,
        l_bce: f64,
    },
    Precision(Confusion),
    Recall(Confusion),
    Accuracy(Confusion),
    Mcc(Confusion),
    F1Score {
        precision: Option<f64>,
        recall: Option<f64>,
    },
    AveragePrecision {
        scores: Vec<f64>,
        labels: Vec<bool>,
    },
    AucRoc {
        scores: Vec<f64>,
        labels: Vec<bool>,
    },
    Silu {
        x: Tensor,
    },
    BatchnormInfer {
        x: Tensor,
        mu: f64,
        sigma: f64,
        gamma: f64,
        beta: f64,
    },
    Conv2d {
        x: Tensor,
        kernels: Tensor,
        bias: Vec<f64>,
        stride: usize,
        pad: usize,
    },
    DepthwiseConv {
        x: Tensor,
        kernels: Tensor,
        stride: usize,
        pad: usize,
    },
    PointwiseConv {
        x: Tensor,
        weights: Tensor,
    },
    LinearClassify {
        x: Vec<f64>,
        weights: Tensor,
        bias: Vec<f64>,
    },
    MaxPoolSame {
        x: Tensor,
        k: usize,
    },
    UpsampleNearest2 {
        x: Tensor,
    },
    DownsampleMax2 {
        x: Tensor,
    },
    CompoundScale(ScalingTriple),
    BackboneLadder {
        input: [usize; 3],
    },
}

#[derive(Debug, thiserror::Error)]
pub enum VectorError {
    #[error("bad record: {0}")]
    Decode(#[from] serde_json::Error),
    #[error("operation failed: {0}")]
    Op(#[from] awdr_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Line {
        line: usize,
        source: Box<VectorError>,
    },
}

fn tensor(t: &Tensor) -> Value {
    serde_json::to_value(t).expect("tensors serialize")
}

fn boxed(a: [f64; 4]) -> Result<Box2D, awdr_core::Error> {
    Box2D::new(a[0], a[1], a[2], a[3])
}

/// Evaluates a record's operation on its inputs.
pub fn evaluate(op: &str, inputs: &Value) -> Result<Value, VectorError> {
    let op: Op = serde_json::from_value(json!({ "op": op, "inputs": inputs }))?;
    let v = match op {
        Op::BlendCoefficient { t, hp } => json!(blend_coefficient(t, &hp)),
        Op::RmspropDelta { grad, hp } => {
            let mut st = OptimState::new(grad.shape());
            tensor(&rmsprop_delta(&mut st, &grad, &hp)?)
        }
        Op::AdamwDelta { params, grad, hp } => {
            let mut st = OptimState::for_params(&params);
            tensor(&adamw_delta(&mut st, &params, &grad, &hp)?)
        }
        Op::AwdrStep {
            params,
            grad,
            hp,
            epoch,
        } => {
            let mut st = OptimState::for_params(&params);
            st.epoch = epoch;
            tensor(&awdr_step(&mut st, &params, &grad, &hp)?)
        }
        Op::OneCycleLr {
            step,
            total,
            lr_max,
        } => json!(one_cycle_lr(step, total, lr_max, 0.3, 25.0, 1e4)?),
        Op::Iou { a, b } => json!(iou(&boxed(a)?, &boxed(b)?)?),
        Op::CiouLoss { pred, gt } => {
            let r = ciou_loss(&boxed(pred)?, &boxed(gt)?)?;
            json!({ "loss": r.loss, "grad": r.grad })
        }
        Op::DflLoss { probs, y } => {
            let r = dfl_loss_raw(&probs, y)?;
            json!({ "loss": r.loss, "grad": r.grad, "saturated": r.saturated })
        }
        Op::BceLoss { preds, labels } => {
            let r = bce_loss(&preds, &labels)?;
            json!({ "loss": r.loss, "grad": r.grad })
        }
        Op::TotalDetectionLoss {
            l_ciou,
            l_dfl,
            l_bce,
        } => json!(total_detection_loss(
            l_ciou,
            l_dfl,
            l_bce,
            &LossWeights::default()
        )?),
        Op::Precision(c) => json!(precision(&c)),
        Op::Recall(c) => json!(recall(&c)),
        Op::Accuracy(c) => json!(accuracy(&c)),
        Op::Mcc(c) => json!(mcc(&c)),
        Op::F1Score { precision, recall } => json!(f1_score(precision, recall)),
        Op::AveragePrecision { scores, labels } => json!(average_precision(&scores, &labels)?),
        Op::AucRoc { scores, labels } => json!(auc_roc(&scores, &labels)?),
        Op::Silu { x } => tensor(&silu(&x)),
        Op::BatchnormInfer {
            x,
            mu,
            sigma,
            gamma,
            beta,
        } => tensor(&batchnorm_infer(&x, mu, sigma, gamma, beta)?),
        Op::Conv2d {
            x,
            kernels,
            bias,
            stride,
            pad,
        } => tensor(&conv2d(&x, &kernels, &bias, stride, pad)?),
        Op::DepthwiseConv {
            x,
            kernels,
            stride,
            pad,
        } => tensor(&depthwise_conv(&x, &kernels, stride, pad)?),
        Op::PointwiseConv { x, weights } => tensor(&pointwise_conv(&x, &weights)?),
        Op::LinearClassify { x, weights, bias } => {
            let (scores, label) = linear_classify(&x, &weights, &bias)?;
            json!({ "scores": scores, "label": label })
        }
        Op::MaxPoolSame { x, k } => tensor(&max_pool_same(&x, k)?),
        Op::UpsampleNearest2 { x } => tensor(&upsample_nearest2(&x)?),
        Op::DownsampleMax2 { x } => tensor(&downsample_max2(&x)?),
        Op::CompoundScale(s) => {
            let (d, w, r) = compound_scale(&s);
            json!([d, w, r])
        }
        Op::BackboneLadder { input } => json!(backbone_ladder(input, &BACKBONE_STAGES)?),
    };
    Ok(v)
}

/// Structural comparison; reals within `tol` absolutely (bit-equal at 0).
/// Returns the path of the first mismatch.
pub fn compare(actual: &Value, expected: &Value, tol: f64) -> Result<(), String> {
    fn walk(a: &Value, e: &Value, tol: f64, at: &mut String) -> Result<(), String> {
        match (a, e) {
            (Value::Number(x), Value::Number(y)) => {
                let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
                let ok = if tol == 0.0 {
                    x.to_bits() == y.to_bits() || x == y
                } else {
                    (x - y).abs() <= tol
                };
                if ok {
                    Ok(())
                } else {
                    Err(format!("{at}: got {x:e}, expected {y:e}"))
                }
            }
            (Value::Array(xs), Value::Array(ys)) => {
                if xs.len() != ys.len() {
                    return Err(format!("{at}: length {} vs {}", xs.len(), ys.len()));
                }
                for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                    let n = at.len();
                    at.push_str(&format!("[{i}]"));
                    walk(x, y, tol, at)?;
                    at.truncate(n);
                }
                Ok(())
            }
            (Value::Object(xs), Value::Object(ys)) => {
                if xs.len() != ys.len() || xs.keys().any(|k| !ys.contains_key(k)) {
                    return Err(format!("{at}: keys differ"));
                }
                for (k, y) in ys {
                    let n = at.len();
                    at.push('.');
                    at.push_str(k);
                    walk(&xs[k], y, tol, at)?;
                    at.truncate(n);
                }
                Ok(())
            }
            _ if a == e => Ok(()),
            _ => Err(format!("{at}: got {a}, expected {e}")),
        }
    }
    walk(actual, expected, tol, &mut String::from("$"))
}

impl VectorRecord {
    /// Evaluates the record and compares against `expected`.
    pub fn check(&self) -> Result<Result<(), String>, VectorError> {
        let actual = evaluate(&self.op, &self.inputs)?;
        Ok(compare(&actual, &self.expected, self.tolerance))
    }
}

/// Parses a JSON-lines vector file; blank lines and `#` comments are skipped.
pub fn parse_vectors(text: &str) -> Result<Vec<(usize, VectorRecord)>, VectorError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let rec = serde_json::from_str(t).map_err(|e| VectorError::Line {
            line: i + 1,
            source: Box::new(e.into()),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

pub fn load_vectors(path: &Path) -> Result<Vec<(usize, VectorRecord)>, VectorError> {
    let text = std::fs::read_to_string(path).map_err(|source| VectorError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_vectors(&text)
}
