//! Training losses. Every loss is a batch mean, and its gradient already
//! carries the `1/b` factor, so `λ` means the same thing at any batch size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    WeightedCrossEntropy,
    /// `½‖s − onehot(y)‖²` per sample.
    SquaredError,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSpec {
    pub kind: LossKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class_weights: Option<Vec<f64>>,
}

impl LossSpec {
    pub fn cross_entropy() -> Self {
        LossSpec {
            kind: LossKind::CrossEntropy,
            class_weights: None,
        }
    }

    pub fn weighted_cross_entropy(weights: Vec<f64>) -> Result<Self> {
        let spec = LossSpec {
            kind: LossKind::WeightedCrossEntropy,
            class_weights: Some(weights),
        };
        spec.validate(None)?;
        Ok(spec)
    }

    pub fn squared_error() -> Self {
        LossSpec {
            kind: LossKind::SquaredError,
            class_weights: None,
        }
    }

    /// Checks the weights; with `num_classes` given, also their count.
    pub fn validate(&self, num_classes: Option<usize>) -> Result<()> {
        match (&self.kind, &self.class_weights) {
            (LossKind::WeightedCrossEntropy, None) => Err(Error::invalid("weighted cross-entropy needs class weights")),
            (_, Some(w)) => {
                if w.is_empty() || w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(Error::invalid(format!("class weights must be positive, got {w:?}")));
                }
                if let Some(c) = num_classes {
                    if w.len() != c {
                        return Err(Error::invalid(format!("{} class weights for {c} classes", w.len())));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn weight(&self, label: usize) -> f64 {
        match (&self.kind, &self.class_weights) {
            (LossKind::WeightedCrossEntropy, Some(w)) => w[label],
            _ => 1.0,
        }
    }
}

/// `w_c = n / (C · n_c)`: inverse class frequency, normalized to mean 1 over
/// samples.
pub fn inverse_frequency_weights(labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; num_classes];
    for &y in labels {
        *counts
            .get_mut(y)
            .ok_or(Error::LabelOutOfRange { label: y, num_classes })? += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::invalid(format!("class {c} has no samples")));
    }
    let n = labels.len() as f64;
    Ok(counts.iter().map(|&nc| n / (num_classes as f64 * nc as f64)).collect())
}

fn check_inputs(spec: &LossSpec, scores: &Matrix, labels: &[usize]) -> Result<()> {
    if scores.rows() != labels.len() {
        return Err(Error::dims(format!(
            "{} score rows for {} labels",
            scores.rows(),
            labels.len()
        )));
    }
    if scores.rows() == 0 {
        return Err(Error::EmptyDataset);
    }
    let c = scores.cols();
    if let Some(&label) = labels.iter().find(|&&y| y >= c) {
        return Err(Error::LabelOutOfRange { label, num_classes: c });
    }
    spec.validate(Some(c))
}

/// Per-sample loss for one score row; writes `∂ℓ/∂s` into `grad` if given.
fn sample_loss(kind: LossKind, row: &[f64], y: usize, grad: Option<&mut [f64]>) -> f64 {
    match kind {
        LossKind::CrossEntropy | LossKind::WeightedCrossEntropy => {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let sum: f64 = row.iter().map(|s| (s - m).exp()).sum();
            let lse = m + sum.ln();
            if let Some(g) = grad {
                for (c, (gc, s)) in g.iter_mut().zip(row).enumerate() {
                    *gc = (s - m).exp() / sum - if c == y { 1.0 } else { 0.0 };
                }
            }
            lse - row[y]
        }
        LossKind::SquaredError => {
            let mut total = 0.0;
            let mut g = grad;
            for (c, s) in row.iter().enumerate() {
                let d = s - if c == y { 1.0 } else { 0.0 };
                total += 0.5 * d * d;
                if let Some(g) = g.as_deref_mut() {
                    g[c] = d;
                }
            }
            total
        }
    }
}

/// Batch-mean loss and its gradient w.r.t. the scores.
pub fn loss_and_grad(spec: &LossSpec, scores: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    check_inputs(spec, scores, labels)?;
    let b = scores.rows() as f64;
    let mut grad = Matrix::zeros(scores.rows(), scores.cols());
    let mut total = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        let w = spec.weight(y);
        let g = grad.row_mut(r);
        total += w * sample_loss(spec.kind, scores.row(r), y, Some(g));
        g.iter_mut().for_each(|v| *v *= w / b);
    }
    Ok((total / b, grad))
}

/// Batch-mean loss without the gradient.
pub fn loss_value(spec: &LossSpec, scores: &Matrix, labels: &[usize]) -> Result<f64> {
    check_inputs(spec, scores, labels)?;
    let total: f64 = labels
        .iter()
        .enumerate()
        .map(|(r, &y)| spec.weight(y) * sample_loss(spec.kind, scores.row(r), y, None))
        .sum();
    Ok(total / scores.rows() as f64)
}
