//! Addressing of individual configuration fields.

use super::config::{
    Activation, AugMethod, Configuration, LossKind, OptimizerKind, SchedulerKind, UnknownValue,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;
use std::str::FromStr;

/// A family of numeric fields sharing one domain and one trust region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NumericFamily {
    #[serde(rename = "learning_rate")]
    LearningRate,
    #[serde(rename = "weight_decay")]
    WeightDecay,
    #[serde(rename = "momentum")]
    Momentum,
    #[serde(rename = "batch_size")]
    BatchSize,
    #[serde(rename = "focal_gamma")]
    FocalGamma,
    #[serde(rename = "class_weights")]
    ClassWeights,
    #[serde(rename = "dropout")]
    Dropout,
    #[serde(rename = "layer_widths")]
    LayerWidths,
    #[serde(rename = "scheduler.step_size")]
    SchedulerStepSize,
    #[serde(rename = "scheduler.gamma")]
    SchedulerGamma,
    #[serde(rename = "scheduler.min_lr")]
    SchedulerMinLr,
    #[serde(rename = "augment.duplication")]
    AugDuplication,
    #[serde(rename = "augment.rotation")]
    AugRotation,
    #[serde(rename = "augment.shift")]
    AugShift,
    #[serde(rename = "augment.flip")]
    AugFlip,
    #[serde(rename = "augment.scale")]
    AugScale,
    #[serde(rename = "augment.noise")]
    AugNoise,
    #[serde(rename = "augment.contrast")]
    AugContrast,
}

impl NumericFamily {
    pub const ALL: &'static [NumericFamily] = &[
        NumericFamily::LearningRate,
        NumericFamily::WeightDecay,
        NumericFamily::Momentum,
        NumericFamily::BatchSize,
        NumericFamily::FocalGamma,
        NumericFamily::ClassWeights,
        NumericFamily::Dropout,
        NumericFamily::LayerWidths,
        NumericFamily::SchedulerStepSize,
        NumericFamily::SchedulerGamma,
        NumericFamily::SchedulerMinLr,
        NumericFamily::AugDuplication,
        NumericFamily::AugRotation,
        NumericFamily::AugShift,
        NumericFamily::AugFlip,
        NumericFamily::AugScale,
        NumericFamily::AugNoise,
        NumericFamily::AugContrast,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NumericFamily::LearningRate => "learning_rate",
            NumericFamily::WeightDecay => "weight_decay",
            NumericFamily::Momentum => "momentum",
            NumericFamily::BatchSize => "batch_size",
            NumericFamily::FocalGamma => "focal_gamma",
            NumericFamily::ClassWeights => "class_weights",
            NumericFamily::Dropout => "dropout",
            NumericFamily::LayerWidths => "layer_widths",
            NumericFamily::SchedulerStepSize => "scheduler.step_size",
            NumericFamily::SchedulerGamma => "scheduler.gamma",
            NumericFamily::SchedulerMinLr => "scheduler.min_lr",
            NumericFamily::AugDuplication => "augment.duplication",
            NumericFamily::AugRotation => "augment.rotation",
            NumericFamily::AugShift => "augment.shift",
            NumericFamily::AugFlip => "augment.flip",
            NumericFamily::AugScale => "augment.scale",
            NumericFamily::AugNoise => "augment.noise",
            NumericFamily::AugContrast => "augment.contrast",
        }
    }

    /// Families addressed element-wise (`family[i]`).
    pub fn is_indexed(self) -> bool {
        matches!(self, NumericFamily::ClassWeights | NumericFamily::LayerWidths)
    }

    pub fn is_architecture(self) -> bool {
        matches!(self, NumericFamily::Dropout | NumericFamily::LayerWidths)
    }

    pub fn aug_method(self) -> Option<AugMethod> {
        Some(match self {
            NumericFamily::AugDuplication => AugMethod::Duplication,
            NumericFamily::AugRotation => AugMethod::Rotation,
            NumericFamily::AugShift => AugMethod::Shift,
            NumericFamily::AugFlip => AugMethod::Flip,
            NumericFamily::AugScale => AugMethod::Scale,
            NumericFamily::AugNoise => AugMethod::Noise,
            NumericFamily::AugContrast => AugMethod::Contrast,
            _ => return None,
        })
    }

    pub fn for_aug_method(method: AugMethod) -> Option<NumericFamily> {
        NumericFamily::ALL
            .iter()
            .copied()
            .find(|f| f.aug_method() == Some(method))
    }
}

impl fmt::Display for NumericFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NumericFamily {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NumericFamily::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| UnknownValue {
                kind: "NumericFamily",
                value: s.to_string(),
            })
    }
}

/// One numeric field: a family plus, for indexed families, an element.
/// `index == None` on an indexed family addresses every element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NumericField {
    pub family: NumericFamily,
    pub index: Option<usize>,
}

impl NumericField {
    pub const fn new(family: NumericFamily) -> Self {
        Self {
            family,
            index: None,
        }
    }

    pub const fn element(family: NumericFamily, index: usize) -> Self {
        Self {
            family,
            index: Some(index),
        }
    }

    pub const LEARNING_RATE: NumericField = NumericField::new(NumericFamily::LearningRate);
    pub const WEIGHT_DECAY: NumericField = NumericField::new(NumericFamily::WeightDecay);
    pub const DROPOUT: NumericField = NumericField::new(NumericFamily::Dropout);
}

impl fmt::Display for NumericField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.index {
            Some(i) => write!(f, "{}[{}]", self.family, i),
            None => f.write_str(self.family.as_str()),
        }
    }
}

impl FromStr for NumericField {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || UnknownValue {
            kind: "NumericField",
            value: s.to_string(),
        };
        if let Some(open) = s.find('[') {
            let inner = s[open + 1..].strip_suffix(']').ok_or_else(unknown)?;
            let index: usize = inner.parse().map_err(|_| unknown())?;
            let family: NumericFamily = s[..open].parse().map_err(|_| unknown())?;
            if !family.is_indexed() {
                return Err(unknown());
            }
            Ok(NumericField::element(family, index))
        } else {
            Ok(NumericField::new(s.parse().map_err(|_| unknown())?))
        }
    }
}

impl Serialize for NumericField {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NumericField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoricalField {
    LossKind,
    OptimizerKind,
    SchedulerKind,
    Activation,
}

impl CategoricalField {
    pub const ALL: &'static [CategoricalField] = &[
        CategoricalField::LossKind,
        CategoricalField::OptimizerKind,
        CategoricalField::SchedulerKind,
        CategoricalField::Activation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoricalField::LossKind => "loss_kind",
            CategoricalField::OptimizerKind => "optimizer_kind",
            CategoricalField::SchedulerKind => "scheduler_kind",
            CategoricalField::Activation => "activation",
        }
    }

    pub fn is_architecture(self) -> bool {
        self == CategoricalField::Activation
    }

    /// Current value of this field in `config`.
    pub fn read(self, config: &Configuration) -> &'static str {
        match self {
            CategoricalField::LossKind => config.strategy.loss_kind.as_str(),
            CategoricalField::OptimizerKind => config.strategy.optimizer_kind.as_str(),
            CategoricalField::SchedulerKind => config.strategy.scheduler_kind.as_str(),
            CategoricalField::Activation => config.arch.activation.as_str(),
        }
    }

    /// Checks that `value` belongs to the global vocabulary of this field.
    pub fn parse_value(self, value: &str) -> Result<CategoricalValue, UnknownValue> {
        Ok(match self {
            CategoricalField::LossKind => CategoricalValue::Loss(value.parse::<LossKind>()?),
            CategoricalField::OptimizerKind => {
                CategoricalValue::Optimizer(value.parse::<OptimizerKind>()?)
            }
            CategoricalField::SchedulerKind => {
                CategoricalValue::Scheduler(value.parse::<SchedulerKind>()?)
            }
            CategoricalField::Activation => {
                CategoricalValue::Activation(value.parse::<Activation>()?)
            }
        })
    }
}

impl fmt::Display for CategoricalField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoricalField {
    type Err = UnknownValue;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CategoricalField::ALL
            .iter()
            .copied()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| UnknownValue {
                kind: "CategoricalField",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoricalValue {
    Loss(LossKind),
    Optimizer(OptimizerKind),
    Scheduler(SchedulerKind),
    Activation(Activation),
}
