//! Classification metrics: ROC-AUC (two independent routes), confusion
//! counts at a threshold, and the balanced class-weight heuristic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

fn check_pairs(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some((i, _)) = scores.iter().enumerate().find(|(_, s)| !s.is_finite()) {
        return Err(Error::NonFinite {
            what: "score",
            name: format!("index {i}"),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Input(format!("label must be 0 or 1, got {bad}")));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Config(format!(
            "metric undefined for single-class labels ({pos} positive, {neg} negative)"
        )));
    }
    Ok((pos, neg))
}

/// Area under the ROC curve by trapezoidal integration over the distinct
/// score thresholds. Tied scores advance the curve diagonally in one step,
/// which is the midrank convention.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_pairs(scores, labels)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut fp) = (0u64, 0u64);
    let (mut prev_tp, mut prev_fp) = (0u64, 0u64);
    let mut area = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            if labels[idx[j]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let d_fpr = (fp - prev_fp) as f64 / neg as f64;
        let tpr_mid = (tp + prev_tp) as f64 / (2.0 * pos as f64);
        area += d_fpr * tpr_mid;
        prev_tp = tp;
        prev_fp = fp;
        i = j;
    }
    Ok(area)
}

/// The same statistic by brute force: over all positive/negative pairs,
/// credit 1 for a concordant pair and 1/2 for a tie. Quadratic; kept as an
/// independent oracle for the trapezoidal route.
pub fn pairwise_concordance_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = check_pairs(scores, labels)?;
    let mut credit = 0.0;
    for (i, &yi) in labels.iter().enumerate() {
        if yi != 1 {
            continue;
        }
        for (j, &yj) in labels.iter().enumerate() {
            if yj != 0 {
                continue;
            }
            if scores[i] > scores[j] {
                credit += 1.0;
            } else if scores[i] == scores[j] {
                credit += 0.5;
            }
        }
    }
    Ok(credit / (pos as f64 * neg as f64))
}

/// Balanced class weights: w_c = total / (2 * count_c).
pub fn class_weights(labels: &[u8]) -> Result<(f64, f64)> {
    if let Some(&bad) = labels.iter().find(|&&y| y > 1) {
        return Err(Error::Input(format!("label must be 0 or 1, got {bad}")));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Config(format!(
            "class weighting needs both classes ({pos} positive, {neg} negative)"
        )));
    }
    let total = labels.len() as f64;
    Ok((total / (2.0 * neg as f64), total / (2.0 * pos as f64)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f1: f64,
    pub roc_auc: f64,
}

/// Confusion counts and the five headline metrics at a probability
/// threshold. `prob >= threshold` predicts class 1. F1 is defined as 0 when
/// no true positive exists.
pub fn evaluate(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "threshold must be in [0, 1], got {threshold}"
        )));
    }
    let auc = roc_auc(probs, labels)?;
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }
    let n = probs.len();
    let f1 = if tp == 0 {
        0.0
    } else {
        let precision = tp as f64 / (tp + fp) as f64;
        let recall = tp as f64 / (tp + fn_) as f64;
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricsReport {
        n,
        tp,
        fp,
        tn,
        fn_,
        sensitivity: tp as f64 / (tp + fn_) as f64,
        specificity: tn as f64 / (tn + fp) as f64,
        accuracy: (tp + tn) as f64 / n as f64,
        f1,
        roc_auc: auc,
    })
}
