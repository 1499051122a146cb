use serde::{Deserialize, Serialize};

use crate::data::Label;
use crate::error::{ensure, Result};

/// Default recall weight of the F-score.
pub const DEFAULT_BETA: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_positive: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub true_negative: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.true_positive + self.false_negative + self.false_positive + self.true_negative
    }
}

pub fn confusion_matrix(predictions: &[Label], truths: &[Label]) -> Result<ConfusionMatrix> {
    ensure!(
        predictions.len() == truths.len(),
        InvalidArgument,
        "{} predictions for {} truths",
        predictions.len(),
        truths.len()
    );
    ensure!(!truths.is_empty(), InvalidArgument, "no predictions to score");
    let mut cm = ConfusionMatrix::default();
    for (p, t) in predictions.iter().zip(truths) {
        match (t.is_positive(), p.is_positive()) {
            (true, true) => cm.true_positive += 1,
            (true, false) => cm.false_negative += 1,
            (false, true) => cm.false_positive += 1,
            (false, false) => cm.true_negative += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: f64,
    pub recall: f64,
    pub precision: f64,
    pub f_beta: f64,
    pub beta: f64,
    pub auc: Option<f64>,
}

/// Accuracy, recall, precision and `F_beta = (1 + b^2) R P / (b^2 P + R)`.
/// Precision is 0 when nothing is predicted positive.
pub fn compute_metrics(cm: &ConfusionMatrix, beta: f64) -> Result<MetricReport> {
    ensure!(
        cm.true_positive + cm.false_negative > 0,
        InvalidArgument,
        "no positive truths; recall is undefined"
    );
    ensure!(
        cm.false_positive + cm.true_negative > 0,
        InvalidArgument,
        "no negative truths"
    );
    ensure!(beta > 0.0 && beta.is_finite(), InvalidArgument, "beta must be positive");
    let tp = cm.true_positive as f64;
    let recall = tp / (cm.true_positive + cm.false_negative) as f64;
    let predicted_pos = cm.true_positive + cm.false_positive;
    let precision = if predicted_pos == 0 { 0.0 } else { tp / predicted_pos as f64 };
    let b2 = beta * beta;
    let f_beta = if recall == 0.0 && precision == 0.0 {
        0.0
    } else {
        (1.0 + b2) * recall * precision / (b2 * precision + recall)
    };
    Ok(MetricReport {
        accuracy: (cm.true_positive + cm.true_negative) as f64 / cm.total() as f64,
        recall,
        precision,
        f_beta,
        beta,
        auc: None,
    })
}

/// Midranks (1-based) of `values`; tied values share their average rank.
pub(crate) fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Area under the ROC curve from the Mann-Whitney rank sum of the positives.
pub fn roc_auc(scores: &[f64], truths: &[Label]) -> Result<f64> {
    ensure!(
        scores.len() == truths.len(),
        InvalidArgument,
        "{} scores for {} truths",
        scores.len(),
        truths.len()
    );
    ensure!(
        scores.iter().all(|s| !s.is_nan()),
        InvalidArgument,
        "scores contain NaN"
    );
    let n_pos = truths.iter().filter(|t| t.is_positive()).count();
    let n_neg = truths.len() - n_pos;
    ensure!(n_pos > 0 && n_neg > 0, InvalidArgument, "AUC needs both classes");
    let ranks = midranks(scores);
    let rank_sum: f64 = ranks
        .iter()
        .zip(truths)
        .filter(|(_, t)| t.is_positive())
        .map(|(r, _)| r)
        .sum();
    let n_pos = n_pos as f64;
    Ok((rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg as f64))
}
