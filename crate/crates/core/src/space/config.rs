//! Points of the configuration space: architecture, feature engineering,
//! training strategy and hyperparameters.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Implements `as_str`, `Display`, `FromStr` and an `ALL` table for a
/// snake_case unit enum.
macro_rules! vocabulary {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = UnknownValue;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($name => Ok($ty::$variant),)+
                    other => Err(UnknownValue {
                        kind: stringify!($ty),
                        value: other.to_string(),
                    }),
                }
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {kind} value `{value}`")]
pub struct UnknownValue {
    pub kind: &'static str,
    pub value: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
}

vocabulary!(Activation { Relu => "relu", Tanh => "tanh" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugMethod {
    Duplication,
    Rotation,
    Shift,
    Flip,
    Scale,
    Noise,
    Contrast,
    None,
}

vocabulary!(AugMethod {
    Duplication => "duplication",
    Rotation => "rotation",
    Shift => "shift",
    Flip => "flip",
    Scale => "scale",
    Noise => "noise",
    Contrast => "contrast",
    None => "none",
});

impl AugMethod {
    /// Methods that only make sense on image-shaped features.
    pub fn requires_image(self) -> bool {
        matches!(
            self,
            AugMethod::Rotation | AugMethod::Shift | AugMethod::Flip | AugMethod::Contrast
        )
    }

    /// Parameter used when the configuration does not set one.
    ///
    /// duplication: copies appended; rotation: max degrees; shift: max
    /// pixels; flip: per-sample probability; scale and contrast: relative
    /// jitter amplitude; noise: Gaussian sigma.
    pub fn default_param(self) -> Option<f64> {
        match self {
            AugMethod::Duplication => Some(1.0),
            AugMethod::Rotation => Some(15.0),
            AugMethod::Shift => Some(2.0),
            AugMethod::Flip => Some(0.5),
            AugMethod::Scale => Some(0.1),
            AugMethod::Noise => Some(0.1),
            AugMethod::Contrast => Some(0.2),
            AugMethod::None => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    CrossEntropy,
    Focal,
    Mse,
    Mae,
    Huber,
}

vocabulary!(LossKind {
    CrossEntropy => "cross_entropy",
    Focal => "focal",
    Mse => "mse",
    Mae => "mae",
    Huber => "huber",
});

impl LossKind {
    pub fn is_classification(self) -> bool {
        matches!(self, LossKind::CrossEntropy | LossKind::Focal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    Adamw,
}

vocabulary!(OptimizerKind { Sgd => "sgd", Adam => "adam", Adamw => "adamw" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Constant,
    StepDecay,
    Cosine,
}

vocabulary!(SchedulerKind {
    Constant => "constant",
    StepDecay => "step_decay",
    Cosine => "cosine",
});

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub layer_widths: Vec<usize>,
    pub dropout: f64,
    pub activation: Activation,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub methods: Vec<AugMethod>,
    #[serde(default)]
    pub method_params: BTreeMap<AugMethod, f64>,
}

impl FeatureSpec {
    /// Effective parameter of `method`: the configured one or its default.
    pub fn param(&self, method: AugMethod) -> Option<f64> {
        self.method_params
            .get(&method)
            .copied()
            .or_else(|| method.default_param())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulerParams {
    /// Epochs between decays for `step_decay`.
    pub step_size: usize,
    /// Multiplicative decay for `step_decay`.
    pub gamma: f64,
    /// Floor of the `cosine` schedule.
    pub min_lr: f64,
}

impl Default for SchedulerParams {
    fn default() -> Self {
        Self {
            step_size: 5,
            gamma: 0.5,
            min_lr: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub loss_kind: LossKind,
    pub optimizer_kind: OptimizerKind,
    pub scheduler_kind: SchedulerKind,
    #[serde(default)]
    pub scheduler_params: SchedulerParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperSpec {
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// SGD momentum; ignored by the Adam family.
    pub momentum: f64,
    /// One weight per class; empty for regression.
    pub class_weights: Vec<f64>,
    pub batch_size: usize,
    pub focal_gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub arch: ArchSpec,
    pub feature: FeatureSpec,
    pub strategy: StrategySpec,
    pub hyper: HyperSpec,
}

impl Configuration {
    /// Canonical JSON rendering (stable field order).
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_round_trips() {
        for m in AugMethod::ALL {
            assert_eq!(m.as_str().parse::<AugMethod>().unwrap(), *m);
        }
        assert_eq!("adamw".parse::<OptimizerKind>().unwrap(), OptimizerKind::Adamw);
        let err = "lion".parse::<OptimizerKind>().unwrap_err();
        assert_eq!(err.value, "lion");
    }

    #[test]
    fn method_param_map_serializes_with_string_keys() {
        let mut spec = FeatureSpec::default();
        spec.methods.push(AugMethod::Noise);
        spec.method_params.insert(AugMethod::Noise, 0.25);
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(json, r#"{"methods":["noise"],"method_params":{"noise":0.25}}"#);
        let back: FeatureSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
    }
}
