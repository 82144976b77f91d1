//! Fully connected network with explicit forward and backward passes.

use crate::rng::SeededRng;
use crate::space::{Activation, ArchSpec};
use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;

use super::TrainError;

/// Weights (`fan_in x fan_out`) and bias of one dense layer. Also used for
/// gradients and optimizer moments, which share the parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LayerParams {
    pub fn zeros_like(&self) -> Self {
        Self {
            weights: Array2::zeros(self.weights.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-layer gradients, shaped like the model parameters.
pub type Gradients = Vec<LayerParams>;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<LayerParams>,
    pub arch: ArchSpec,
    pub input_dim: usize,
    pub output_dim: usize,
}

/// Activations kept from a training forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input of every layer (the last entry feeds the output layer).
    inputs: Vec<Array2<f64>>,
    /// Hidden pre-activations.
    pre_activations: Vec<Array2<f64>>,
    /// Inverted-dropout masks (`0` or `1 / (1 - p)`), one per hidden layer.
    masks: Vec<Option<Array2<f64>>>,
    pub outputs: Array2<f64>,
}

fn activate(kind: Activation, z: &Array2<f64>) -> Array2<f64> {
    match kind {
        Activation::Relu => z.mapv(|v| v.max(0.0)),
        Activation::Tanh => z.mapv(f64::tanh),
    }
}

fn activation_grad(kind: Activation, z: &Array2<f64>, grad: &mut Array2<f64>) {
    match kind {
        Activation::Relu => Zip::from(grad).and(z).for_each(|g, &z| {
            if z <= 0.0 {
                *g = 0.0;
            }
        }),
        Activation::Tanh => Zip::from(grad).and(z).for_each(|g, &z| {
            let t = z.tanh();
            *g *= 1.0 - t * t;
        }),
    }
}

/// Builds a model with uniform fan-in initialisation: hidden layers draw
/// from `U(-sqrt(6/fan_in), sqrt(6/fan_in))` under ReLU and
/// `U(-sqrt(3/fan_in), sqrt(3/fan_in))` under tanh; the output layer uses
/// the tanh scale. Biases start at zero.
pub fn build_model(
    arch: &ArchSpec,
    input_dim: usize,
    output_dim: usize,
    rng: &mut SeededRng,
) -> Result<MlpModel, TrainError> {
    if input_dim < 1 || output_dim < 1 {
        return Err(TrainError::Shape(format!(
            "model dimensions must be positive, got input {input_dim}, output {output_dim}"
        )));
    }
    if arch.layer_widths.contains(&0) {
        return Err(TrainError::Shape("hidden layer of width 0".into()));
    }
    let mut dims = vec![input_dim];
    dims.extend(&arch.layer_widths);
    dims.push(output_dim);
    let last = dims.len() - 2;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let gain = if i < last && arch.activation == Activation::Relu {
                6.0
            } else {
                3.0
            };
            let limit = (gain / fan_in as f64).sqrt();
            LayerParams {
                weights: Array2::from_shape_simple_fn((fan_in, fan_out), || {
                    rng.random_range(-limit..limit)
                }),
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(MlpModel {
        layers,
        arch: arch.clone(),
        input_dim,
        output_dim,
    })
}

impl MlpModel {
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(LayerParams::len).sum()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<(), TrainError> {
        if x.ncols() != self.input_dim {
            return Err(TrainError::Shape(format!(
                "model expects {} features, got {}",
                self.input_dim,
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Inference pass (dropout disabled). Returns raw outputs (logits for
    /// classification).
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>, TrainError> {
        self.check_input(x)?;
        let mut a = x.clone();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights) + &layer.bias;
            a = if i < last {
                activate(self.arch.activation, &z)
            } else {
                z
            };
        }
        Ok(a)
    }

    /// Training pass with inverted dropout drawn from `rng`. With
    /// `rng == None` dropout is disabled.
    pub fn forward_train(
        &self,
        x: &Array2<f64>,
        rng: Option<&mut SeededRng>,
    ) -> Result<ForwardCache, TrainError> {
        self.check_input(x)?;
        let p = self.arch.dropout;
        let mut rng = rng;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut masks = Vec::with_capacity(last);
        let mut a = x.clone();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = a.dot(&layer.weights) + &layer.bias;
            inputs.push(a);
            if i == last {
                return Ok(ForwardCache {
                    inputs,
                    pre_activations,
                    masks,
                    outputs: z,
                });
            }
            let mut h = activate(self.arch.activation, &z);
            let mask = match rng.as_deref_mut() {
                Some(r) if p > 0.0 => {
                    let keep = 1.0 / (1.0 - p);
                    let m = Array2::from_shape_simple_fn(h.raw_dim(), || {
                        if r.random::<f64>() < p {
                            0.0
                        } else {
                            keep
                        }
                    });
                    h *= &m;
                    Some(m)
                }
                _ => None,
            };
            pre_activations.push(z);
            masks.push(mask);
            a = h;
        }
        unreachable!("a model has at least one layer")
    }

    /// Backpropagates `grad_outputs` (dL/d outputs) through the cached pass.
    pub fn backward(&self, cache: &ForwardCache, grad_outputs: &Array2<f64>) -> Gradients {
        let mut grads: Vec<LayerParams> = Vec::with_capacity(self.layers.len());
        let mut g = grad_outputs.clone();
        for i in (0..self.layers.len()).rev() {
            let input = &cache.inputs[i];
            let dw = input.t().dot(&g);
            let db = g.sum_axis(Axis(0));
            grads.push(LayerParams {
                weights: dw,
                bias: db,
            });
            if i == 0 {
                break;
            }
            let mut prev = g.dot(&self.layers[i].weights.t());
            if let Some(mask) = &cache.masks[i - 1] {
                prev *= mask;
            }
            activation_grad(self.arch.activation, &cache.pre_activations[i - 1], &mut prev);
            g = prev;
        }
        grads.reverse();
        grads
    }

    /// All parameters in layer order (weights row-major, then bias).
    pub fn flat_params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn set_flat_params(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.parameter_count(), "parameter vector length");
        let mut it = values.iter().copied();
        for layer in &mut self.layers {
            for w in layer.weights.iter_mut().chain(layer.bias.iter_mut()) {
                *w = it.next().expect("length checked");
            }
        }
    }

    /// Euclidean norm of all weights (biases excluded).
    pub fn weight_norm(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum::<f64>()
            .sqrt()
    }
}

/// Flattens layer-shaped values in [`MlpModel::flat_params`] order.
pub fn flatten(layers: &[LayerParams]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn arch(widths: &[usize]) -> ArchSpec {
        ArchSpec {
            layer_widths: widths.to_vec(),
            dropout: 0.0,
            activation: Activation::Relu,
        }
    }

    #[test]
    fn parameter_count_matches_hand_count() {
        let m = build_model(&arch(&[64, 64]), 4, 3, &mut seeded(1)).unwrap();
        assert_eq!(m.parameter_count(), 4 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3);
        assert_eq!(m.parameter_count(), 4675);
    }

    #[test]
    fn same_seed_same_weights() {
        let a = build_model(&arch(&[32, 32]), 5, 2, &mut seeded(9)).unwrap();
        let b = build_model(&arch(&[32, 32]), 5, 2, &mut seeded(9)).unwrap();
        let (fa, fb) = (a.flat_params(), b.flat_params());
        assert!(fa.iter().zip(&fb).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn regression_head_has_width_one() {
        let m = build_model(&arch(&[32, 32]), 3, 1, &mut seeded(0)).unwrap();
        assert_eq!(m.layers.last().unwrap().weights.ncols(), 1);
        let out = m.forward(&Array2::zeros((7, 3))).unwrap();
        assert_eq!(out.dim(), (7, 1));
    }

    #[test]
    fn rejects_degenerate_dimensions() {
        assert!(build_model(&arch(&[32, 32]), 0, 1, &mut seeded(0)).is_err());
        assert!(build_model(&arch(&[32, 32]), 3, 0, &mut seeded(0)).is_err());
        let m = build_model(&arch(&[32, 32]), 3, 1, &mut seeded(0)).unwrap();
        assert!(m.forward(&Array2::zeros((2, 4))).is_err());
    }

    #[test]
    fn train_pass_without_dropout_matches_inference() {
        let mut a = arch(&[32, 32]);
        a.dropout = 0.5;
        let m = build_model(&a, 3, 2, &mut seeded(3)).unwrap();
        let x = Array2::from_shape_fn((4, 3), |(i, j)| (i as f64) - j as f64 * 0.5);
        let cache = m.forward_train(&x, None).unwrap();
        assert_eq!(cache.outputs, m.forward(&x).unwrap());
        let dropped = m.forward_train(&x, Some(&mut seeded(5))).unwrap();
        assert_ne!(dropped.outputs, cache.outputs);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut m = build_model(&arch(&[32, 32]), 2, 2, &mut seeded(4)).unwrap();
        let mut p = m.flat_params();
        p[0] = 123.0;
        m.set_flat_params(&p);
        assert_eq!(m.layers[0].weights[[0, 0]], 123.0);
        assert_eq!(m.flat_params(), p);
    }
}
