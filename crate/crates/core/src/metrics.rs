//! Binary classification metrics, PR/ROC curves and report export.
//!
//! The positive class is malignant (label 1). A prediction is positive when
//! its score strictly exceeds the threshold.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{VideoPrediction, POSITIVE_CLASS};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

fn ratio(num: usize, den: usize, metric: &'static str, reason: &'static str) -> Result<f64> {
    if den == 0 {
        Err(Error::UndefinedMetric { metric, reason })
    } else {
        Ok(num as f64 / den as f64)
    }
}

impl ConfusionMatrix {
    pub fn new(tp: usize, tn: usize, fp: usize, fn_: usize) -> Self {
        ConfusionMatrix { tp, tn, fp, fn_ }
    }

    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Result<f64> {
        ratio(self.tp + self.tn, self.total(), "accuracy", "no samples")
    }

    pub fn precision(&self) -> Result<f64> {
        ratio(self.tp, self.tp + self.fp, "precision", "no positive predictions")
    }

    /// True positive rate, `TP / (TP + FN)`.
    pub fn sensitivity(&self) -> Result<f64> {
        ratio(self.tp, self.tp + self.fn_, "sensitivity", "no actual positives")
    }

    /// True negative rate, `TN / (TN + FP)`.
    pub fn specificity(&self) -> Result<f64> {
        ratio(self.tn, self.tn + self.fp, "specificity", "no actual negatives")
    }

    /// Harmonic mean of sensitivity and precision.
    pub fn f1(&self) -> Result<f64> {
        let p = self.precision()?;
        let s = self.sensitivity()?;
        f1_from(p, s)
    }

    /// Rows are true classes `[negative, positive]`, columns predicted
    /// classes, each row divided by its total.
    pub fn normalized(&self) -> Result<[[f64; 2]; 2]> {
        let neg = self.tn + self.fp;
        let pos = self.tp + self.fn_;
        if neg == 0 || pos == 0 {
            return Err(Error::UndefinedMetric {
                metric: "normalized confusion",
                reason: "a true-class row is empty",
            });
        }
        Ok([
            [self.tn as f64 / neg as f64, self.fp as f64 / neg as f64],
            [self.fn_ as f64 / pos as f64, self.tp as f64 / pos as f64],
        ])
    }
}

pub fn normalized_confusion(cm: &ConfusionMatrix) -> Result<[[f64; 2]; 2]> {
    cm.normalized()
}

/// `2·s·p / (s + p)`.
pub fn f1_from(precision: f64, sensitivity: f64) -> Result<f64> {
    if precision + sensitivity == 0.0 {
        return Err(Error::UndefinedMetric {
            metric: "f1",
            reason: "precision and sensitivity are both zero",
        });
    }
    Ok(2.0 * sensitivity * precision / (sensitivity + precision))
}

/// `(score, label)` pairs, score being the positive-class probability.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RankedPredictions {
    items: Vec<(f64, usize)>,
}

impl RankedPredictions {
    pub fn new(items: Vec<(f64, usize)>) -> Result<Self> {
        for &(s, l) in &items {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidConfig(format!("score {s} outside [0, 1]")));
            }
            if l > 1 {
                return Err(Error::LabelOutOfRange { label: l, classes: 2 });
            }
        }
        Ok(RankedPredictions { items })
    }

    pub fn from_scores(scores: &[f64], labels: &[usize]) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape {
                op: "ranked predictions",
                left: (scores.len(), 1),
                right: (labels.len(), 1),
            });
        }
        Self::new(scores.iter().copied().zip(labels.iter().copied()).collect())
    }

    pub fn from_videos(preds: &[VideoPrediction]) -> Result<Self> {
        Self::new(preds.iter().map(|p| (p.score(), p.true_label)).collect())
    }

    pub fn items(&self) -> &[(f64, usize)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.items.iter().filter(|&&(_, l)| l == POSITIVE_CLASS).count()
    }

    pub fn negatives(&self) -> usize {
        self.items.len() - self.positives()
    }

    /// Cumulative `(tp, fp, score)` after admitting each distinct score,
    /// highest first.
    fn sweep(&self) -> Vec<(usize, usize, f64)> {
        let mut sorted = self.items.clone();
        sorted.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut out = Vec::new();
        let (mut tp, mut fp) = (0, 0);
        for (i, &(s, l)) in sorted.iter().enumerate() {
            if l == POSITIVE_CLASS {
                tp += 1;
            } else {
                fp += 1;
            }
            if sorted.get(i + 1).is_none_or(|next| next.0 != s) {
                out.push((tp, fp, s));
            }
        }
        out
    }
}

pub fn confusion_at_threshold(preds: &RankedPredictions, threshold: f64) -> Result<ConfusionMatrix> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no predictions"));
    }
    let mut cm = ConfusionMatrix::default();
    for &(s, l) in preds.items() {
        match (s > threshold, l == POSITIVE_CLASS) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (false, true) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    /// Lowest score counted positive at this point (`score >= threshold`);
    /// `+inf` for the ROC origin.
    pub threshold: f64,
}

/// Recall (x) against precision (y), one point per distinct score, in order
/// of increasing recall.
pub fn pr_curve(preds: &RankedPredictions) -> Result<Vec<CurvePoint>> {
    let pos = preds.positives();
    if pos == 0 {
        return Err(Error::UndefinedMetric {
            metric: "precision-recall curve",
            reason: "no positive samples",
        });
    }
    Ok(preds
        .sweep()
        .into_iter()
        .map(|(tp, fp, s)| CurvePoint {
            x: tp as f64 / pos as f64,
            y: tp as f64 / (tp + fp) as f64,
            threshold: s,
        })
        .collect())
}

/// Step-wise `Σ (R_k − R_{k−1})·P_k` over the threshold sweep.
pub fn average_precision(preds: &RankedPredictions) -> Result<f64> {
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for p in pr_curve(preds)? {
        ap += (p.x - prev_recall) * p.y;
        prev_recall = p.x;
    }
    Ok(ap)
}

/// False positive rate (x) against true positive rate (y), from `(0, 0)` to
/// `(1, 1)`.
pub fn roc_curve(preds: &RankedPredictions) -> Result<Vec<CurvePoint>> {
    let (pos, neg) = (preds.positives(), preds.negatives());
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric {
            metric: "roc curve",
            reason: "both classes must be present",
        });
    }
    let mut points = vec![CurvePoint {
        x: 0.0,
        y: 0.0,
        threshold: f64::INFINITY,
    }];
    points.extend(preds.sweep().into_iter().map(|(tp, fp, s)| CurvePoint {
        x: fp as f64 / neg as f64,
        y: tp as f64 / pos as f64,
        threshold: s,
    }));
    Ok(points)
}

/// Trapezoidal area under [`roc_curve`]. Tied scores produce a diagonal
/// segment, which counts positive/negative ties as one half.
pub fn auc(preds: &RankedPredictions) -> Result<f64> {
    let pts = roc_curve(preds)?;
    Ok(pts
        .windows(2)
        .map(|w| (w[1].x - w[0].x) * (w[1].y + w[0].y) / 2.0)
        .sum())
}

/// Scores split by outcome at a threshold.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbDistribution {
    pub tp: Vec<f64>,
    pub tn: Vec<f64>,
    pub fp: Vec<f64>,
    #[serde(rename = "fn")]
    pub fn_: Vec<f64>,
}

pub fn prob_distribution(preds: &RankedPredictions, threshold: f64) -> Result<ProbDistribution> {
    if preds.is_empty() {
        return Err(Error::EmptyInput("no predictions"));
    }
    let mut d = ProbDistribution::default();
    for &(s, l) in preds.items() {
        let bucket = match (s > threshold, l == POSITIVE_CLASS) {
            (true, true) => &mut d.tp,
            (true, false) => &mut d.fp,
            (false, false) => &mut d.tn,
            (false, true) => &mut d.fn_,
        };
        bucket.push(s);
    }
    Ok(d)
}

/// Every scalar metric for one set of predictions. Undefined values are
/// `None` (JSON `null`, text `undefined`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub f1: Option<f64>,
    pub auc: Option<f64>,
    pub ap: Option<f64>,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl MetricReport {
    pub fn compute(preds: &RankedPredictions, threshold: f64) -> Result<Self> {
        let cm = confusion_at_threshold(preds, threshold)?;
        Ok(MetricReport {
            accuracy: cm.accuracy().ok(),
            precision: cm.precision().ok(),
            sensitivity: cm.sensitivity().ok(),
            specificity: cm.specificity().ok(),
            f1: cm.f1().ok(),
            auc: auc(preds).ok(),
            ap: average_precision(preds).ok(),
            tp: cm.tp,
            tn: cm.tn,
            fp: cm.fp,
            fn_: cm.fn_,
        })
    }

    pub fn confusion(&self) -> ConfusionMatrix {
        ConfusionMatrix::new(self.tp, self.tn, self.fp, self.fn_)
    }

    /// Mean of each defined metric across reports; counts are summed.
    pub fn mean_of(reports: &[MetricReport]) -> MetricReport {
        let mean = |f: fn(&MetricReport) -> Option<f64>| {
            let vals: Vec<f64> = reports.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        MetricReport {
            accuracy: mean(|r| r.accuracy),
            precision: mean(|r| r.precision),
            sensitivity: mean(|r| r.sensitivity),
            specificity: mean(|r| r.specificity),
            f1: mean(|r| r.f1),
            auc: mean(|r| r.auc),
            ap: mean(|r| r.ap),
            tp: reports.iter().map(|r| r.tp).sum(),
            tn: reports.iter().map(|r| r.tn).sum(),
            fp: reports.iter().map(|r| r.fp).sum(),
            fn_: reports.iter().map(|r| r.fn_).sum(),
        }
    }

    /// `key=value` lines in the documented key order.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let fmt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), sig9);
        for (k, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("sensitivity", self.sensitivity),
            ("specificity", self.specificity),
            ("f1", self.f1),
            ("auc", self.auc),
            ("ap", self.ap),
        ] {
            let _ = writeln!(out, "{k}={}", fmt(v));
        }
        for (k, v) in [("tp", self.tp), ("tn", self.tn), ("fp", self.fp), ("fn", self.fn_)] {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }
}

/// Nine significant digits in scientific notation.
pub fn sig9(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.8e}")
    } else {
        format!("{v}")
    }
}

pub fn curve_to_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("x,y,threshold\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", sig9(p.x), sig9(p.y), sig9(p.threshold));
    }
    out
}

pub fn write_curve_csv(path: impl AsRef<Path>, points: &[CurvePoint]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, curve_to_csv(points)).map_err(|e| Error::io(path, e))
}

/// `bucket,score` rows, buckets in the order tp, tn, fp, fn.
pub fn distribution_to_csv(d: &ProbDistribution) -> String {
    let mut out = String::from("bucket,score\n");
    for (name, scores) in [("tp", &d.tp), ("tn", &d.tn), ("fp", &d.fp), ("fn", &d.fn_)] {
        for &s in scores {
            let _ = writeln!(out, "{name},{}", sig9(s));
        }
    }
    out
}
