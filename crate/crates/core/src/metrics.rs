//! Threshold-free ranking metrics.
//!
//! ROC-AUC is the Mann–Whitney statistic with half credit for ties. PR-AUC is
//! step-wise average precision; a block of tied scores is consumed at once and
//! precision is read after the whole block.

use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub roc_auc: f64,
    pub pr_auc: f64,
    pub n_pos: usize,
    pub n_neg: usize,
    pub n_evaluated: usize,
}

fn check_inputs(scores: &[f64], labels: &[Label]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    Ok(())
}

/// Indices sorted by descending score, grouped into tied blocks as
/// `(positives, negatives)` per block.
fn tied_blocks(scores: &[f64], labels: &[Label]) -> Vec<(u64, u64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut blocks: Vec<(u64, u64)> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        // -0.0 and 0.0 tie
        if prev != Some(scores[i]) {
            blocks.push((0, 0));
            prev = Some(scores[i]);
        }
        let block = blocks.last_mut().expect("block pushed above");
        if labels[i].is_positive() {
            block.0 += 1;
        } else {
            block.1 += 1;
        }
    }
    blocks
}

pub fn roc_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count() as u64;
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC-AUC needs both classes (positives: {n_pos}, negatives: {n_neg})"
        )));
    }
    // Twice the Mann-Whitney U, kept integral.
    let mut doubled: u128 = 0;
    let mut neg_below = n_neg;
    for (pos, neg) in tied_blocks(scores, labels) {
        neg_below -= neg;
        doubled += u128::from(pos) * (2 * u128::from(neg_below) + u128::from(neg));
    }
    Ok(doubled as f64 / (2 * u128::from(n_pos) * u128::from(n_neg)) as f64)
}

pub fn pr_auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    check_inputs(scores, labels)?;
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    if n_pos == 0 {
        return Err(Error::UndefinedMetric("PR-AUC needs at least one positive".into()));
    }
    let mut tp = 0u64;
    let mut seen = 0u64;
    let mut acc = 0.0;
    for (pos, neg) in tied_blocks(scores, labels) {
        tp += pos;
        seen += pos + neg;
        if pos > 0 {
            acc += pos as f64 * (tp as f64 / seen as f64);
        }
    }
    Ok(acc / n_pos as f64)
}

/// Both metrics over the records with `mask[i]` set.
pub fn evaluate_subset(scores: &[f64], mask: &[bool], gold: &[Label]) -> Result<EvalResult> {
    if scores.len() != mask.len() || scores.len() != gold.len() {
        return Err(Error::DimensionMismatch {
            expected: gold.len(),
            actual: scores.len().min(mask.len()),
        });
    }
    let (s, l): (Vec<f64>, Vec<Label>) = scores
        .iter()
        .zip(gold)
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((&s, &l), _)| (s, l))
        .unzip();
    let n_pos = l.iter().filter(|x| x.is_positive()).count();
    let n_neg = l.len() - n_pos;
    if l.is_empty() {
        return Err(Error::NoCoveredRecords);
    }
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "evaluated subset is single-class (positives: {n_pos}, negatives: {n_neg})"
        )));
    }
    Ok(EvalResult {
        roc_auc: roc_auc(&s, &l)?,
        pr_auc: pr_auc(&s, &l)?,
        n_pos,
        n_neg,
        n_evaluated: l.len(),
    })
}

/// Label-model evaluation: only covered records count.
pub fn evaluate_label_model(scores: &[f64], coverage_mask: &[bool], gold: &[Label]) -> Result<EvalResult> {
    evaluate_subset(scores, coverage_mask, gold)
}

/// Evaluation over every record.
pub fn evaluate_all(scores: &[f64], gold: &[Label]) -> Result<EvalResult> {
    evaluate_subset(scores, &vec![true; scores.len()], gold)
}
