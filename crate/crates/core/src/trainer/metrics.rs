use crate::task::TaskType;
use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use super::loss::softmax;
use super::TrainError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum MetricSet {
    Classification {
        accuracy: f64,
        macro_f1: f64,
        /// One-vs-rest macro AUC; `None` when the targets hold one class.
        auc: Option<f64>,
        per_class_recall: Vec<f64>,
    },
    Regression {
        mae: f64,
        mse: f64,
        r2: f64,
    },
}

impl MetricSet {
    pub fn accuracy(&self) -> Option<f64> {
        match self {
            MetricSet::Classification { accuracy, .. } => Some(*accuracy),
            MetricSet::Regression { .. } => None,
        }
    }

    /// Named scalar metrics in a fixed order. Undefined values are skipped.
    pub fn named_values(&self) -> Vec<(&'static str, f64)> {
        match self {
            MetricSet::Classification {
                accuracy,
                macro_f1,
                auc,
                ..
            } => {
                let mut v = vec![("accuracy", *accuracy), ("macro_f1", *macro_f1)];
                if let Some(a) = auc {
                    v.push(("auc", *a));
                }
                v
            }
            MetricSet::Regression { mae, mse, r2 } => {
                vec![("mae", *mae), ("mse", *mse), ("r2", *r2)]
            }
        }
    }
}

/// Area under the ROC curve by the rank statistic, with average ranks for
/// ties. `None` when either class is absent.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), positive.len(), "scores and labels differ in length");
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks are 1-based; tied block i..=j shares the mean rank.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| positive[k]).count() as f64 * rank;
        i = j + 1;
    }
    let (p, q) = (n_pos as f64, n_neg as f64);
    Some((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

/// Metrics from raw model outputs (logits for classification, one
/// prediction column for regression).
pub fn compute_metrics(
    task: TaskType,
    outputs: &Array2<f64>,
    targets: &[f64],
) -> Result<MetricSet, TrainError> {
    if targets.is_empty() || outputs.nrows() != targets.len() {
        return Err(TrainError::Shape(format!(
            "metrics need matching non-empty inputs, got {} rows and {} targets",
            outputs.nrows(),
            targets.len()
        )));
    }
    let n = targets.len() as f64;
    match task {
        TaskType::Classification { classes } => {
            if outputs.ncols() != classes {
                return Err(TrainError::Shape(format!(
                    "{} output columns for {classes} classes",
                    outputs.ncols()
                )));
            }
            let probs = softmax(outputs);
            let predicted: Vec<usize> = probs
                .axis_iter(Axis(0))
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .fold((0, f64::NEG_INFINITY), |best, (j, &p)| {
                            if p > best.1 {
                                (j, p)
                            } else {
                                best
                            }
                        })
                        .0
                })
                .collect();
            let truth: Vec<usize> = targets.iter().map(|&t| t as usize).collect();
            let correct = predicted.iter().zip(&truth).filter(|(p, t)| p == t).count();

            let mut f1_sum = 0.0;
            let mut recalls = Vec::with_capacity(classes);
            for c in 0..classes {
                let tp = predicted.iter().zip(&truth).filter(|&(&p, &t)| p == c && t == c).count() as f64;
                let fp = predicted.iter().zip(&truth).filter(|&(&p, &t)| p == c && t != c).count() as f64;
                let fn_ = predicted.iter().zip(&truth).filter(|&(&p, &t)| p != c && t == c).count() as f64;
                let denom = 2.0 * tp + fp + fn_;
                f1_sum += if denom > 0.0 { 2.0 * tp / denom } else { 0.0 };
                recalls.push(if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 });
            }

            let auc = if classes == 2 {
                let labels: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
                roc_auc(&probs.column(1).to_vec(), &labels)
            } else {
                let per_class: Vec<f64> = (0..classes)
                    .filter_map(|c| {
                        let labels: Vec<bool> = truth.iter().map(|&t| t == c).collect();
                        roc_auc(&probs.column(c).to_vec(), &labels)
                    })
                    .collect();
                (!per_class.is_empty()).then(|| per_class.iter().sum::<f64>() / per_class.len() as f64)
            };

            Ok(MetricSet::Classification {
                accuracy: correct as f64 / n,
                macro_f1: f1_sum / classes as f64,
                auc,
                per_class_recall: recalls,
            })
        }
        TaskType::Regression => {
            if outputs.ncols() != 1 {
                return Err(TrainError::Shape(format!(
                    "regression expects one output column, got {}",
                    outputs.ncols()
                )));
            }
            let preds = outputs.column(0);
            let mean = targets.iter().sum::<f64>() / n;
            let (mut abs, mut sq, mut tot) = (0.0, 0.0, 0.0);
            for (p, t) in preds.iter().zip(targets) {
                abs += (p - t).abs();
                sq += (p - t) * (p - t);
                tot += (t - mean) * (t - mean);
            }
            // Constant targets leave R² undefined; report 0 (no better than the mean).
            let r2 = if tot > 0.0 { 1.0 - sq / tot } else { 0.0 };
            Ok(MetricSet::Regression {
                mae: abs / n,
                mse: sq / n,
                r2,
            })
        }
    }
}
