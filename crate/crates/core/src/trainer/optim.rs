//! SGD, Adam and AdamW updates.
//!
//! Weight decay is coupled (added to the gradient) for SGD, decoupled
//! (`theta *= 1 - lr * wd` before the moment update) for AdamW, and not
//! applied at all by plain Adam.

use crate::space::OptimizerKind;
use ndarray::Zip;

use super::model::{Gradients, LayerParams, MlpModel};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Optimizer slots. Buffers are allocated on first use with the parameter
/// shapes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerState {
    pub step: u64,
    /// SGD momentum buffer.
    pub velocity: Option<Vec<LayerParams>>,
    /// Adam first moment.
    pub first_moment: Option<Vec<LayerParams>>,
    /// Adam second moment.
    pub second_moment: Option<Vec<LayerParams>>,
}

impl OptimizerState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Keeps the slots that `kind` uses and clears the rest. Adam and AdamW
    /// share moments; moving between SGD and the Adam family restarts the
    /// step counter.
    pub fn switch_to(&mut self, kind: OptimizerKind) {
        match kind {
            OptimizerKind::Sgd => {
                if self.first_moment.is_some() {
                    self.step = 0;
                }
                self.first_moment = None;
                self.second_moment = None;
            }
            OptimizerKind::Adam | OptimizerKind::Adamw => {
                if self.velocity.is_some() {
                    self.step = 0;
                }
                self.velocity = None;
            }
        }
    }
}

fn zeros_like(model: &MlpModel) -> Vec<LayerParams> {
    model.layers.iter().map(LayerParams::zeros_like).collect()
}

/// Applies one update in place and increments the step counter.
pub fn optimizer_step(
    kind: OptimizerKind,
    model: &mut MlpModel,
    grads: &Gradients,
    state: &mut OptimizerState,
    lr: f64,
    weight_decay: f64,
    momentum: f64,
) {
    assert_eq!(grads.len(), model.layers.len(), "gradient layer count");
    state.step += 1;
    match kind {
        OptimizerKind::Sgd => {
            let velocity = state.velocity.get_or_insert_with(|| zeros_like(model));
            for ((layer, g), v) in model.layers.iter_mut().zip(grads).zip(velocity.iter_mut()) {
                sgd(&mut layer.weights, &g.weights, &mut v.weights, lr, weight_decay, momentum);
                sgd(&mut layer.bias, &g.bias, &mut v.bias, lr, weight_decay, momentum);
            }
        }
        OptimizerKind::Adam | OptimizerKind::Adamw => {
            let decay = if kind == OptimizerKind::Adamw {
                1.0 - lr * weight_decay
            } else {
                1.0
            };
            let t = state.step as i32;
            let c1 = 1.0 - ADAM_BETA1.powi(t);
            let c2 = 1.0 - ADAM_BETA2.powi(t);
            let m = state.first_moment.get_or_insert_with(|| zeros_like(model));
            let v = state.second_moment.get_or_insert_with(|| zeros_like(model));
            for (((layer, g), m), v) in model
                .layers
                .iter_mut()
                .zip(grads)
                .zip(m.iter_mut())
                .zip(v.iter_mut())
            {
                adam(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights, lr, decay, c1, c2);
                adam(&mut layer.bias, &g.bias, &mut m.bias, &mut v.bias, lr, decay, c1, c2);
            }
        }
    }
}

fn sgd<D: ndarray::Dimension>(
    theta: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    velocity: &mut ndarray::Array<f64, D>,
    lr: f64,
    weight_decay: f64,
    momentum: f64,
) {
    Zip::from(theta).and(grad).and(velocity).for_each(|p, &g, v| {
        let g = g + weight_decay * *p;
        *v = momentum * *v + g;
        *p -= lr * *v;
    });
}

#[allow(clippy::too_many_arguments)]
fn adam<D: ndarray::Dimension>(
    theta: &mut ndarray::Array<f64, D>,
    grad: &ndarray::Array<f64, D>,
    m: &mut ndarray::Array<f64, D>,
    v: &mut ndarray::Array<f64, D>,
    lr: f64,
    decay: f64,
    c1: f64,
    c2: f64,
) {
    Zip::from(theta).and(grad).and(m).and(v).for_each(|p, &g, m, v| {
        *p *= decay;
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
    });
}
