//! Losses and their gradients with respect to model outputs.
//!
//! All losses are mean-reduced over samples. For classification the
//! per-sample loss is multiplied by the weight of the sample's true class;
//! the mean still divides by the sample count, so scaling every weight
//! scales the loss and its gradient by the same factor.

use crate::space::{HyperSpec, LossKind};
use ndarray::{Array2, ArrayView1, Axis};

use super::TrainError;

const HUBER_DELTA: f64 = 1.0;

/// Row-wise softmax.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn log_softmax_row(row: ArrayView1<f64>) -> Vec<f64> {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    row.iter().map(|v| v - lse).collect()
}

fn check_shapes(
    kind: LossKind,
    outputs: &Array2<f64>,
    targets: &[f64],
    hyper: &HyperSpec,
) -> Result<(), TrainError> {
    if outputs.nrows() != targets.len() {
        return Err(TrainError::Shape(format!(
            "{} output rows for {} targets",
            outputs.nrows(),
            targets.len()
        )));
    }
    if outputs.nrows() == 0 {
        return Err(TrainError::Shape("empty batch".into()));
    }
    if kind.is_classification() {
        let k = outputs.ncols();
        if hyper.class_weights.len() != k {
            return Err(TrainError::Shape(format!(
                "{} class weights for {k} classes",
                hyper.class_weights.len()
            )));
        }
        if let Some(t) = targets
            .iter()
            .find(|&&t| t < 0.0 || t.fract() != 0.0 || t as usize >= k)
        {
            return Err(TrainError::Shape(format!("class target {t} outside [0, {k})")));
        }
    } else if outputs.ncols() != 1 {
        return Err(TrainError::Shape(format!(
            "regression loss expects one output column, got {}",
            outputs.ncols()
        )));
    }
    Ok(())
}

/// Mean loss and its gradient with respect to `outputs`.
pub fn loss_and_grad(
    kind: LossKind,
    outputs: &Array2<f64>,
    targets: &[f64],
    hyper: &HyperSpec,
) -> Result<(f64, Array2<f64>), TrainError> {
    check_shapes(kind, outputs, targets, hyper)?;
    let n = targets.len() as f64;
    let mut grad = Array2::zeros(outputs.raw_dim());
    let mut total = 0.0;

    match kind {
        LossKind::CrossEntropy | LossKind::Focal => {
            let gamma = if kind == LossKind::Focal {
                hyper.focal_gamma
            } else {
                0.0
            };
            for (i, row) in outputs.axis_iter(Axis(0)).enumerate() {
                let y = targets[i] as usize;
                let w = hyper.class_weights[y];
                let log_p = log_softmax_row(row);
                let log_py = log_p[y];
                let p_y = log_py.exp();
                let one_minus = (1.0 - p_y).max(0.0);
                // loss = -w (1-p)^g log p
                // dloss/dz_j = -w (d_jy - p_j) [(1-p)^g - g (1-p)^(g-1) p log p]
                let (focal, factor) = if gamma == 0.0 {
                    (1.0, 1.0)
                } else {
                    let focal = one_minus.powf(gamma);
                    let extra = if one_minus > 0.0 {
                        gamma * one_minus.powf(gamma - 1.0) * p_y * log_py
                    } else {
                        0.0
                    };
                    (focal, focal - extra)
                };
                total += -w * focal * log_py;
                for (j, g) in grad.row_mut(i).iter_mut().enumerate() {
                    let indicator = if j == y { 1.0 } else { 0.0 };
                    *g = -w * (indicator - log_p[j].exp()) * factor / n;
                }
            }
        }
        LossKind::Mse => {
            for (i, &t) in targets.iter().enumerate() {
                let r = outputs[[i, 0]] - t;
                total += r * r;
                grad[[i, 0]] = 2.0 * r / n;
            }
        }
        LossKind::Mae => {
            for (i, &t) in targets.iter().enumerate() {
                let r = outputs[[i, 0]] - t;
                total += r.abs();
                grad[[i, 0]] = if r > 0.0 {
                    1.0 / n
                } else if r < 0.0 {
                    -1.0 / n
                } else {
                    0.0
                };
            }
        }
        LossKind::Huber => {
            for (i, &t) in targets.iter().enumerate() {
                let r = outputs[[i, 0]] - t;
                if r.abs() <= HUBER_DELTA {
                    total += 0.5 * r * r;
                    grad[[i, 0]] = r / n;
                } else {
                    total += HUBER_DELTA * (r.abs() - 0.5 * HUBER_DELTA);
                    grad[[i, 0]] = HUBER_DELTA * r.signum() / n;
                }
            }
        }
    }
    Ok((total / n, grad))
}

/// Unweighted task loss used for every comparison across configurations:
/// cross-entropy for classification, squared error for regression.
pub fn evaluation_loss(outputs: &Array2<f64>, targets: &[f64], classification: bool) -> f64 {
    let n = targets.len().max(1) as f64;
    if classification {
        outputs
            .axis_iter(Axis(0))
            .zip(targets)
            .map(|(row, &t)| 0.0 - log_softmax_row(row)[t as usize])
            .sum::<f64>()
            / n
    } else {
        outputs
            .column(0)
            .iter()
            .zip(targets)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n
    }
}
