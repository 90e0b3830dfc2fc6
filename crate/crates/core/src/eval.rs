//! Confusion counts, recall, precision and AUROC.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ensemble::VotingModel;
use crate::error::{Error, Result};
use crate::harness::REPORT_FORMAT_VERSION;
use crate::types::{LabeledDataset, RunConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::domain(format!(
            "label lengths differ: {} truths, {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 1) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fn_ += 1,
            _ => {
                return Err(Error::domain(format!(
                    "labels must be 0 or 1, got ({t}, {p})"
                )))
            }
        }
    }
    Ok(cm)
}

/// `None` when there are no actual positives.
pub fn recall(cm: &ConfusionMatrix) -> Option<f64> {
    let d = cm.tp + cm.fn_;
    (d > 0).then(|| cm.tp as f64 / d as f64)
}

/// `None` when nothing was predicted positive.
pub fn precision(cm: &ConfusionMatrix) -> Option<f64> {
    let d = cm.tp + cm.fp;
    (d > 0).then(|| cm.tp as f64 / d as f64)
}

fn class_totals(y_true: &[u8], scores: &[f64]) -> Result<(u64, u64)> {
    if y_true.len() != scores.len() {
        return Err(Error::domain("labels and scores differ in length"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::domain("scores contain NaN"));
    }
    let pos = y_true.iter().filter(|&&y| y == 1).count() as u64;
    let neg = y_true.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::domain(
            "AUROC needs both classes in the truth labels",
        ));
    }
    Ok((pos, neg))
}

/// Indices sorted by ascending score, grouped into runs of equal score.
fn tie_groups(scores: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in order {
        match groups.last_mut() {
            Some(g) if scores[g[0]] == scores[i] => g.push(i),
            _ => groups.push(vec![i]),
        }
    }
    groups
}

/// Mann–Whitney statistic: the share of (positive, negative) pairs where
/// the positive scores higher, ties counting one half.
///
/// Half-pairs are tallied as doubled integers, so the result is the single
/// correctly rounded quotient and matches a pairwise count exactly.
pub fn auroc(y_true: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = class_totals(y_true, scores)?;
    let mut doubled: u128 = 0;
    let mut neg_below: u128 = 0;
    for g in tie_groups(scores) {
        let p = g.iter().filter(|&&i| y_true[i] == 1).count() as u128;
        let n = g.len() as u128 - p;
        doubled += 2 * p * neg_below + p * n;
        neg_below += n;
    }
    Ok(doubled as f64 / (2 * pos as u128 * neg as u128) as f64)
}

/// ROC staircase from (0,0) to (1,1), one point per distinct score.
pub fn roc_points(y_true: &[u8], scores: &[f64]) -> Result<Vec<(f64, f64)>> {
    let (pos, neg) = class_totals(y_true, scores)?;
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0u64, 0u64);
    for g in tie_groups(scores).iter().rev() {
        for &i in g {
            if y_true[i] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }
    Ok(points)
}

/// Area under a piecewise-linear curve.
pub fn trapezoid_area(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub train_seconds: f64,
    pub predict_micros_per_sample: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u64,
    pub n_samples: usize,
    pub confusion: ConfusionMatrix,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    /// `None` when the evaluated data holds a single class.
    pub auroc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
    pub config_echo: RunConfig,
}

impl EvalReport {
    pub fn without_timing(mut self) -> Self {
        self.timing = None;
        self
    }
}

/// Scores every row of `data` once, timing the whole pass.
pub fn predict_all(model: &VotingModel, data: &LabeledDataset) -> (Vec<u8>, Vec<f64>, f64) {
    let features = data.features();
    let start = Instant::now();
    let (labels, probs): (Vec<u8>, Vec<f64>) =
        features.iter().map(|x| model.predict_features(x)).unzip();
    let micros = start.elapsed().as_secs_f64() * 1e6 / features.len().max(1) as f64;
    (labels, probs, micros)
}

pub fn evaluate(model: &VotingModel, data: &LabeledDataset) -> Result<EvalReport> {
    let (pred, probs, micros) = predict_all(model, data);
    let cm = confusion(data.labels(), &pred)?;
    let both = data.positives() > 0 && data.negatives() > 0;
    let auroc = if both {
        Some(auroc(data.labels(), &probs)?)
    } else {
        None
    };
    Ok(EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        n_samples: data.len(),
        confusion: cm,
        recall: recall(&cm),
        precision: precision(&cm),
        auroc,
        timing: Some(Timing {
            train_seconds: model.metadata.train_seconds,
            predict_micros_per_sample: micros,
        }),
        config_echo: model.config.clone(),
    })
}
