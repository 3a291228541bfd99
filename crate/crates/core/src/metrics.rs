//! Evaluation metrics: accuracy, ROC AUC, maximum correlation coefficient and
//! selection stability.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::sigmoid;

fn binary_counts(labels: &[usize]) -> Result<(usize, usize)> {
    let mut pos = 0;
    for &y in labels {
        match y {
            0 => {}
            1 => pos += 1,
            _ => {
                return Err(Error::LabelOutOfRange {
                    label: y,
                    num_classes: 2,
                })
            }
        }
    }
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(
            "both classes must be present in the labels".into(),
        ));
    }
    Ok((pos, neg))
}

fn check_lengths(scores: &[f64], labels: &[usize]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::dims(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores contain NaN"));
    }
    Ok(())
}

/// Maximum over thresholds `t` of the Pearson correlation between
/// `1{score > t}` and the binary labels.
///
/// Thresholds sit between consecutive distinct scores, which covers every
/// distinct prediction vector. The all-positive and all-negative predictions
/// have no defined correlation and count as 0, so the result is never
/// negative.
pub fn max_cc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (n_pos, n_neg) = binary_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (p, q) = (n_pos as f64, n_neg as f64);
    let mut best = 0.0f64;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if i == order.len() {
            break;
        }
        let (tp_f, fp_f) = (tp as f64, fp as f64);
        let (fn_f, tn_f) = (p - tp_f, q - fp_f);
        let denom = ((tp_f + fp_f) * p * q * (tn_f + fn_f)).sqrt();
        best = best.max((tp_f * tn_f - fp_f * fn_f) / denom);
    }
    Ok(best)
}

/// Area under the ROC curve via the Mann–Whitney statistic; tied scores
/// count one half.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    check_lengths(scores, labels)?;
    let (n_pos, n_neg) = binary_counts(labels)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // sum of (1-based, tie-averaged) ranks of the positives
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        let pos_in_block = order[i..j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += avg_rank * pos_in_block as f64;
        i = j;
    }
    let p = n_pos as f64;
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// How score rows turn into class predictions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionRule {
    /// Positive iff the calibrated class-1 probability is strictly above the
    /// threshold. One score column is a logit; two columns go through softmax.
    Binary {
        threshold: f64,
    },
    Argmax,
}

impl DecisionRule {
    pub const HALF: DecisionRule = DecisionRule::Binary { threshold: 0.5 };

    /// `Binary` at 0.5 for two-class outputs, `Argmax` otherwise.
    pub fn default_for(num_outputs: usize) -> Self {
        if num_outputs <= 2 {
            Self::HALF
        } else {
            DecisionRule::Argmax
        }
    }
}

/// Class-1 probability per row: sigmoid of a single logit, or the softmax
/// probability of column 1 for two columns.
pub fn positive_probability(scores: &Matrix) -> Result<Vec<f64>> {
    match scores.cols() {
        1 => Ok(scores.as_slice().iter().map(|&s| sigmoid(s)).collect()),
        2 => Ok((0..scores.rows())
            .map(|r| sigmoid(scores.get(r, 1) - scores.get(r, 0)))
            .collect()),
        c => Err(Error::dims(format!("binary scores need 1 or 2 columns, got {c}"))),
    }
}

pub fn predict_classes(scores: &Matrix, rule: DecisionRule) -> Result<Vec<usize>> {
    match rule {
        DecisionRule::Binary { threshold } => Ok(positive_probability(scores)?
            .into_iter()
            .map(|p| usize::from(p > threshold))
            .collect()),
        DecisionRule::Argmax => {
            if scores.cols() == 0 {
                return Err(Error::dims("scores have no columns"));
            }
            Ok((0..scores.rows())
                .map(|r| {
                    let row = scores.row(r);
                    let mut best = 0;
                    for (c, &v) in row.iter().enumerate() {
                        if v > row[best] {
                            best = c;
                        }
                    }
                    best
                })
                .collect())
        }
    }
}

/// Fraction of rows whose predicted class equals the label (0 for no rows).
pub fn accuracy(scores: &Matrix, labels: &[usize], rule: DecisionRule) -> Result<f64> {
    if scores.rows() != labels.len() {
        return Err(Error::dims(format!(
            "{} score rows for {} labels",
            scores.rows(),
            labels.len()
        )));
    }
    if labels.is_empty() {
        return Ok(0.0);
    }
    let preds = predict_classes(scores, rule)?;
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// `confusion[truth][prediction]` counts.
pub fn confusion_matrix(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    let mut m = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &y) in preds.iter().zip(labels) {
        if y >= num_classes || p >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: y.max(p),
                num_classes,
            });
        }
        m[y][p] += 1;
    }
    Ok(m)
}

/// Mean Jaccard index over all unordered pairs of selections. Two empty
/// selections are identical and score 1.
pub fn mean_pairwise_jaccard(sets: &[BTreeSet<usize>]) -> Result<f64> {
    if sets.len() < 2 {
        return Err(Error::invalid(format!(
            "pairwise Jaccard needs at least 2 sets, got {}",
            sets.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0usize;
    for (a_idx, a) in sets.iter().enumerate() {
        for b in &sets[a_idx + 1..] {
            let inter = a.intersection(b).count();
            let union = a.len() + b.len() - inter;
            total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    pub auc: Option<f64>,
    pub max_cc: Option<f64>,
    /// Rows are ground truth, columns predictions.
    pub confusion: Vec<Vec<usize>>,
}

/// Accuracy and confusion for any class count; AUC and Max CC as well for
/// two-class problems where both classes occur.
pub fn evaluate(scores: &Matrix, labels: &[usize], num_classes: usize) -> Result<EvalReport> {
    let rule = DecisionRule::default_for(scores.cols());
    let preds = predict_classes(scores, rule)?;
    let confusion = confusion_matrix(&preds, labels, num_classes.max(2))?;
    let accuracy = accuracy(scores, labels, rule)?;
    let (mut auc_v, mut max_cc_v) = (None, None);
    if num_classes == 2 && binary_counts(labels).is_ok() {
        let probs = positive_probability(scores)?;
        auc_v = Some(auc(&probs, labels)?);
        max_cc_v = Some(max_cc(&probs, labels)?);
    }
    Ok(EvalReport {
        n: labels.len(),
        accuracy,
        auc: auc_v,
        max_cc: max_cc_v,
        confusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn max_cc_cases() {
        assert_eq!(max_cc(&[0.0, 1.0, 1.0, 0.0], &[0, 1, 1, 0]).unwrap(), 1.0);
        let labels = [0, 1, 1, 0, 1, 0];
        let flipped: Vec<f64> = labels.iter().map(|&y| 1.0 - y as f64).collect();
        assert_eq!(max_cc(&flipped, &labels).unwrap(), 0.0);
        let v = max_cc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        // midpoints 0.225, 0.375, 0.6 give correlations 1/√3, 0, 1/√3
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!(matches!(max_cc(&[0.1, 0.2], &[1, 1]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn auc_cases() {
        assert_eq!(auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(auc(&[0.3; 5], &[0, 1, 0, 1, 1]).unwrap(), 0.5);
        assert!((auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap() - 0.75).abs() < 1e-15);
        assert!(matches!(auc(&[0.1], &[0]), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn accuracy_rules() {
        let scores = Matrix::from_rows(&[vec![0.0, 0.0], vec![-1.0, 2.0], vec![3.0, 1.0]]).unwrap();
        // first row sits exactly at p = 0.5 and is negative
        assert_eq!(predict_classes(&scores, DecisionRule::HALF).unwrap(), vec![0, 1, 0]);
        assert_eq!(accuracy(&scores, &[0, 1, 0], DecisionRule::HALF).unwrap(), 1.0);
        assert!((accuracy(&scores, &[1, 1, 1], DecisionRule::HALF).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let multi = Matrix::from_rows(&[vec![0.1, 0.7, 0.2], vec![0.9, 0.0, 0.1]]).unwrap();
        assert_eq!(accuracy(&multi, &[1, 0], DecisionRule::Argmax).unwrap(), 1.0);
        let logit = Matrix::from_rows(&[vec![0.0], vec![0.1]]).unwrap();
        assert_eq!(predict_classes(&logit, DecisionRule::HALF).unwrap(), vec![0, 1]);
    }

    #[test]
    fn jaccard_cases() {
        assert_eq!(mean_pairwise_jaccard(&[set(&[1, 2]), set(&[1, 2])]).unwrap(), 1.0);
        assert_eq!(mean_pairwise_jaccard(&[set(&[1]), set(&[2])]).unwrap(), 0.0);
        let v = mean_pairwise_jaccard(&[set(&[1, 2]), set(&[2, 3]), set(&[1, 2])]).unwrap();
        assert!((v - 5.0 / 9.0).abs() < 1e-15);
        assert_eq!(mean_pairwise_jaccard(&[set(&[]), set(&[])]).unwrap(), 1.0);
        assert!(mean_pairwise_jaccard(&[set(&[1])]).is_err());
    }

    #[test]
    fn evaluate_binary_report() {
        let scores = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![0.5, 0.4], vec![0.0, 0.3]]).unwrap();
        let r = evaluate(&scores, &[0, 1, 1, 0], 2).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.confusion.iter().flatten().sum::<usize>(), 4);
        assert!(r.auc.is_some() && r.max_cc.is_some());
        assert_eq!(r.accuracy, 0.5);
    }
}
