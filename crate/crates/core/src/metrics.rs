//! Binary classification metrics.
//!
//! Ratios that are undefined for the given counts (for example precision
//! with no positive predictions) come back as `None` instead of a silent 0.

use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn new(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        Confusion { tp, fp, tn, fn_ }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn check_pair<T>(scores: &[T], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Length {
            left: scores.len(),
            right: labels.len(),
        });
    }
    if scores.is_empty() {
        return Err(Error::Empty);
    }
    Ok(())
}

pub fn confusion_from_labels(preds: &[bool], labels: &[bool]) -> Result<Confusion> {
    check_pair(preds, labels)?;
    let mut c = Confusion::default();
    for (&p, &l) in preds.iter().zip(labels) {
        match (p, l) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

pub fn precision(c: &Confusion) -> Option<f64> {
    ratio(c.tp, c.tp + c.fp)
}

pub fn recall(c: &Confusion) -> Option<f64> {
    ratio(c.tp, c.tp + c.fn_)
}

pub fn accuracy(c: &Confusion) -> Option<f64> {
    ratio(c.tp + c.tn, c.total())
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_score(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    let (p, r) = (precision?, recall?);
    if p + r == 0.0 {
        Some(0.0)
    } else {
        Some(2.0 * p * r / (p + r))
    }
}

/// `(f1, accuracy)`.
pub fn f1_accuracy(c: &Confusion) -> (Option<f64>, Option<f64>) {
    (f1_score(precision(c), recall(c)), accuracy(c))
}

/// Matthews correlation coefficient; undefined when any marginal is zero.
pub fn mcc(c: &Confusion) -> Option<f64> {
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    let marginals = [tp + fp, tp + fn_, tn + fp, tn + fn_];
    if marginals.contains(&0.0) {
        return None;
    }
    let den = sqrt(marginals.iter().product());
    Some((tp * tn - fp * fn_) / den)
}

/// Cumulative `(tp, fp)` after each group of tied scores, highest first.
fn threshold_sweep(scores: &[f64], labels: &[bool]) -> Result<Vec<(u64, u64)>> {
    check_pair(scores, labels)?;
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("scores"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    for (pos, &i) in order.iter().enumerate() {
        if labels[i] {
            tp += 1;
        } else {
            fp += 1;
        }
        let last_of_group = order
            .get(pos + 1)
            .map_or(true, |&next| scores[next] != scores[i]);
        if last_of_group {
            points.push((tp, fp));
        }
    }
    Ok(points)
}

/// Threshold-sweep average precision: `sum_k P_k * (R_k - R_{k-1})` over
/// distinct score thresholds, highest first. `None` without positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    let points = threshold_sweep(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l).count() as f64;
    if positives == 0.0 {
        return Ok(None);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (tp, fp) in points {
        let recall = tp as f64 / positives;
        if recall > prev_recall {
            ap += (tp as f64 / (tp + fp) as f64) * (recall - prev_recall);
            prev_recall = recall;
        }
    }
    Ok(Some(ap))
}

/// Trapezoidal area under the ROC curve; tied scores form one diagonal
/// segment. `None` unless both classes are present.
pub fn auc_roc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>> {
    let points = threshold_sweep(scores, labels)?;
    let pos = labels.iter().filter(|&&l| l).count() as f64;
    let neg = labels.len() as f64 - pos;
    if pos == 0.0 || neg == 0.0 {
        return Ok(None);
    }
    let mut area = 0.0;
    let (mut prev_tpr, mut prev_fpr) = (0.0, 0.0);
    for (tp, fp) in points {
        let (tpr, fpr) = (tp as f64 / pos, fp as f64 / neg);
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
    }
    Ok(Some(area))
}

/// Every score at once. Undefined entries are `None` (`null` in JSON).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub ap: Option<f64>,
    pub mcc: Option<f64>,
    pub auc: Option<f64>,
}

impl MetricsReport {
    /// Column order used by CSV output.
    pub const COLUMNS: [&'static str; 7] =
        ["accuracy", "precision", "recall", "f1", "ap", "mcc", "auc"];

    /// Scores for `scores` thresholded at `threshold` (a score at the
    /// threshold counts as positive).
    pub fn from_scores(scores: &[f64], labels: &[bool], threshold: f64) -> Result<Self> {
        let preds: Vec<bool> = scores.iter().map(|&s| s >= threshold).collect();
        let c = confusion_from_labels(&preds, labels)?;
        let mut report = Self::from_confusion(&c);
        report.ap = average_precision(scores, labels)?;
        report.auc = auc_roc(scores, labels)?;
        Ok(report)
    }

    /// Count-based scores only; `ap` and `auc` need raw scores and are `None`.
    pub fn from_confusion(c: &Confusion) -> Self {
        let (f1, accuracy) = f1_accuracy(c);
        MetricsReport {
            accuracy,
            precision: precision(c),
            recall: recall(c),
            f1,
            ap: None,
            mcc: mcc(c),
            auc: None,
        }
    }

    /// Values in [`Self::COLUMNS`] order.
    pub fn values(&self) -> [Option<f64>; 7] {
        [
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.ap,
            self.mcc,
            self.auc,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bools(v: &[u8]) -> Vec<bool> {
        v.iter().map(|&x| x == 1).collect()
    }

    #[test]
    fn confusion_counts() {
        let l = bools(&[1, 0, 1]);
        assert_eq!(
            confusion_from_labels(&l, &l).unwrap(),
            Confusion::new(2, 0, 1, 0)
        );
        let inv: Vec<bool> = l.iter().map(|x| !x).collect();
        let c = confusion_from_labels(&inv, &l).unwrap();
        assert_eq!((c.tp, c.tn), (0, 0));
        let c = confusion_from_labels(&bools(&[1, 1, 0, 0]), &bools(&[1, 0, 1, 0])).unwrap();
        assert_eq!(c, Confusion::new(1, 1, 1, 1));
        assert!(confusion_from_labels(&[true], &[]).is_err());
        assert_eq!(confusion_from_labels(&[], &[]), Err(Error::Empty));
    }

    #[test]
    fn precision_recall_values() {
        assert_eq!(precision(&Confusion::new(98, 0, 0, 0)), Some(1.0));
        assert_eq!(precision(&Confusion::new(0, 5, 0, 0)), Some(0.0));
        assert_eq!(precision(&Confusion::new(3, 1, 0, 0)), Some(0.75));
        assert_eq!(precision(&Confusion::new(0, 0, 4, 1)), None);
        assert_eq!(recall(&Confusion::new(98, 0, 0, 2)), Some(0.98));
        assert_eq!(recall(&Confusion::new(100, 0, 0, 0)), Some(1.0));
        assert_eq!(recall(&Confusion::new(1, 0, 0, 3)), Some(0.25));
        assert_eq!(recall(&Confusion::new(0, 3, 3, 0)), None);
    }

    #[test]
    fn f1_and_accuracy() {
        let f1 = f1_score(Some(0.99), Some(0.99)).unwrap();
        assert!((f1 - 0.99).abs() < 1e-12);
        assert_eq!(
            f1_accuracy(&Confusion::new(5, 0, 5, 0)),
            (Some(1.0), Some(1.0))
        );
        assert_eq!(
            f1_accuracy(&Confusion::new(1, 1, 1, 1)),
            (Some(0.5), Some(0.5))
        );
        assert_eq!(f1_accuracy(&Confusion::new(0, 0, 3, 2)).0, None);
        assert_eq!(f1_score(Some(0.0), Some(0.0)), Some(0.0));
    }

    #[test]
    fn mcc_values() {
        assert_eq!(mcc(&Confusion::new(0, 0, 6, 0)), None);
        assert_eq!(mcc(&Confusion::new(4, 4, 0, 0)), None);
        assert_eq!(
            mcc(&Confusion::new(4, 1, 6, 1)).map(|m| m > 0.0),
            Some(true)
        );
        let m = mcc(&Confusion::new(6, 1, 3, 2)).unwrap();
        assert!((m - 16.0 / libm::sqrt(1120.0)).abs() < 1e-15);
        assert!((m - 0.4781).abs() < 1e-4);
    }

    #[test]
    fn mcc_extremes() {
        let labels = bools(&[1, 1, 0, 0, 0]);
        let perfect = confusion_from_labels(&labels, &labels).unwrap();
        let inverted: Vec<bool> = labels.iter().map(|x| !x).collect();
        let inv = confusion_from_labels(&inverted, &labels).unwrap();
        assert_eq!(perfect, Confusion::new(2, 0, 3, 0));
        assert_eq!(mcc(&perfect), Some(1.0));
        assert_eq!(mcc(&inv), Some(-1.0));
    }

    #[test]
    fn average_precision_cases() {
        let ap = average_precision(&[0.9, 0.8, 0.7, 0.6], &bools(&[1, 0, 1, 0])).unwrap();
        assert!((ap.unwrap() - (0.5 + 2.0 / 3.0 * 0.5)).abs() < 1e-15);
        assert_eq!(
            average_precision(&[0.9, 0.8, 0.1], &bools(&[1, 1, 0])).unwrap(),
            Some(1.0)
        );
        assert_eq!(
            average_precision(&[0.3, 0.1, 0.2], &bools(&[1, 1, 1])).unwrap(),
            Some(1.0)
        );
        assert_eq!(
            average_precision(&[0.3, 0.1], &bools(&[0, 0])).unwrap(),
            None
        );
        assert!(average_precision(&[f64::NAN], &[true]).is_err());
    }

    #[test]
    fn auc_cases() {
        let labels = bools(&[1, 0, 1, 0]);
        assert_eq!(auc_roc(&[0.9, 0.8, 0.7, 0.6], &labels).unwrap(), Some(0.75));
        assert_eq!(auc_roc(&[0.9, 0.1, 0.8, 0.2], &labels).unwrap(), Some(1.0));
        assert_eq!(auc_roc(&[0.4; 4], &labels).unwrap(), Some(0.5));
        assert_eq!(auc_roc(&[0.4, 0.3], &bools(&[1, 1])).unwrap(), None);
    }

    #[test]
    fn report_from_scores() {
        let scores = [0.9, 0.8, 0.7, 0.6];
        let labels = bools(&[1, 0, 1, 0]);
        let r = MetricsReport::from_scores(&scores, &labels, 0.75).unwrap();
        assert_eq!(r.accuracy, Some(0.5));
        assert_eq!(r.precision, Some(0.5));
        assert_eq!(r.auc, Some(0.75));
        assert_eq!(r.values()[6], r.auc);
        let json =
            serde_json::to_string(&MetricsReport::from_confusion(&Confusion::new(0, 0, 2, 0)))
                .unwrap();
        assert!(json.contains("\"precision\":null"));
    }
}
