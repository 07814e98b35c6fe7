//! Byte-stable CSV and JSON artifacts.
//!
//! CSV reals use fixed 6-decimal formatting; JSON uses serde_json's
//! shortest round-trip representation. Field order is fixed by the structs.

use std::fmt::Write as _;

use awdr_core::harness::{GradCheckReport, TrainHistory, TrainSummary, Trajectory};
use awdr_core::metrics::MetricsReport;
use awdr_core::netblocks::ScalingTriple;
use awdr_core::optim::HyperParams;
use serde::{Deserialize, Serialize};

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_accuracy,beta_t,lr";
pub const TRAJECTORY_HEADER: &str = "step,f";

/// Fixed 6-decimal rendering; undefined or non-finite values render as `NA`.
pub fn fmt6(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => {
            let s = format!("{v:.6}");
            // avoid "-0.000000"
            if s.trim_start_matches('-')
                .bytes()
                .all(|b| b == b'0' || b == b'.')
            {
                s.trim_start_matches('-').to_string()
            } else {
                s
            }
        }
        _ => "NA".to_string(),
    }
}

pub fn history_csv(history: &TrainHistory) -> String {
    let mut out = String::from(HISTORY_HEADER);
    out.push('\n');
    for r in &history.records {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch,
            fmt6(Some(r.train_loss)),
            fmt6(Some(r.train_accuracy)),
            fmt6(Some(r.beta_t)),
            fmt6(Some(r.lr)),
        )
        .unwrap();
    }
    out
}

/// Terminal summary of a toy training run, written next to the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSidecar {
    pub command: String,
    pub optimizer: String,
    pub seed: u64,
    pub epochs: u64,
    pub hp: HyperParams,
    pub summary: TrainSummary,
}

impl TrainSidecar {
    pub fn new(history: &TrainHistory) -> Self {
        TrainSidecar {
            command: "train-toy".into(),
            optimizer: history.optimizer.name().into(),
            seed: history.seed,
            epochs: history.records.len() as u64,
            hp: history.hp,
            summary: history.summary,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainJson {
    #[serde(flatten)]
    pub meta: TrainSidecar,
    pub records: Vec<awdr_core::harness::EpochRecord>,
}

pub fn history_json(history: &TrainHistory) -> String {
    to_json(&TrainJson {
        meta: TrainSidecar::new(history),
        records: history.records.clone(),
    })
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (k, v) in t.values.iter().enumerate() {
        writeln!(out, "{k},{}", fmt6(Some(*v))).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSidecar {
    pub command: String,
    pub function: String,
    pub optimizer: String,
    pub seed: u64,
    pub steps: u64,
    pub x0: Vec<f64>,
    pub hp: HyperParams,
    pub final_value: f64,
    pub final_x: Vec<f64>,
    pub diverged: bool,
}

impl BenchSidecar {
    pub fn new(t: &Trajectory, seed: u64, x0: &[f64], hp: &HyperParams) -> Self {
        BenchSidecar {
            command: "bench".into(),
            function: t.function.name().into(),
            optimizer: t.optimizer.name().into(),
            seed,
            steps: (t.values.len() - 1) as u64,
            x0: x0.to_vec(),
            hp: *hp,
            final_value: t.final_value(),
            final_x: t.final_x.clone(),
            diverged: t.diverged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchJson {
    #[serde(flatten)]
    pub meta: BenchSidecar,
    pub values: Vec<f64>,
}

pub fn metrics_csv(report: &MetricsReport) -> String {
    let row: Vec<String> = report.values().iter().map(|v| fmt6(*v)).collect();
    format!("{}\n{}\n", MetricsReport::COLUMNS.join(","), row.join(","))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsJson {
    pub seed: u64,
    pub threshold: f64,
    pub samples: usize,
    #[serde(flatten)]
    pub report: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleJson {
    pub seed: u64,
    pub step: f64,
    #[serde(flatten)]
    pub triple: ScalingTriple,
    pub constraint: f64,
    pub residual: f64,
    pub depth: f64,
    pub width: f64,
    pub resolution: f64,
}

/// One summary line for a gradient check.
pub fn grad_check_line(r: &GradCheckReport) -> String {
    format!(
        "grad-check loss={} cases={} seed={} max_rel_error={:.3e} mean_rel_error={:.3e} worst_case={} status={}",
        r.target.name(),
        r.cases,
        r.seed,
        r.max_rel_error,
        r.mean_rel_error,
        r.worst_case,
        if r.passed() { "pass" } else { "fail" }
    )
}

/// Pretty-printed JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_decimals() {
        assert_eq!(fmt6(Some(0.5)), "0.500000");
        assert_eq!(fmt6(Some(1.0 / 3.0)), "0.333333");
        assert_eq!(fmt6(Some(-1e-9)), "0.000000");
        assert_eq!(fmt6(Some(-2.5)), "-2.500000");
        assert_eq!(fmt6(None), "NA");
        assert_eq!(fmt6(Some(f64::NAN)), "NA");
    }

    #[test]
    fn metrics_row_order() {
        let r = MetricsReport {
            accuracy: Some(1.0),
            precision: Some(0.5),
            recall: None,
            f1: Some(0.25),
            ap: Some(0.125),
            mcc: Some(-1.0),
            auc: Some(0.75),
        };
        assert_eq!(
            metrics_csv(&r),
            "accuracy,precision,recall,f1,ap,mcc,auc\n1.000000,0.500000,NA,0.250000,0.125000,-1.000000,0.750000\n"
        );
    }
}
