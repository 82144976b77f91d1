//! The four-dimensional configuration space, configuration validation and
//! bounded configuration updates.

mod config;
mod delta;
mod field;
mod sampling;

pub use config::{
    Activation, ArchSpec, AugMethod, Configuration, FeatureSpec, HyperSpec, LossKind,
    OptimizerKind, SchedulerKind, SchedulerParams, StrategySpec, UnknownValue,
};
pub use delta::{
    apply_delta, apply_delta_with, relative_change, ApplyEvent, ApplyOptions, ApplyReport,
    ConfigDelta, FieldChange,
};
pub use field::{CategoricalField, CategoricalValue, NumericFamily, NumericField};
pub use sampling::{enumerate_grid, grid_field_names, sample_random, GridResolution};

use crate::task::TaskType;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpaceError {
    #[error("domain of `{field}` is empty or inverted: [{min}, {max}]")]
    InvertedBounds { field: String, min: f64, max: f64 },
    #[error("trust region for `{field}` must be positive, got {value}")]
    TrustRegion { field: String, value: f64 },
    #[error("no domain declared for `{0}`")]
    MissingDomain(String),
    #[error("vocabulary `{0}` is empty")]
    EmptyVocabulary(&'static str),
    #[error("loss `{loss}` is not compatible with task {task}")]
    IncompatibleLoss { loss: LossKind, task: TaskType },
    #[error("unknown grid field `{0}`")]
    UnknownGridField(String),
    #[error("invalid grid resolution for `{field}`: {reason}")]
    GridResolution { field: String, reason: String },
}

/// Closed interval of a numeric family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericDomain {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub log_scale: bool,
    #[serde(default)]
    pub integer: bool,
}

impl NumericDomain {
    pub const fn linear(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            log_scale: false,
            integer: false,
        }
    }

    pub const fn log(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            log_scale: true,
            integer: false,
        }
    }

    pub const fn integer(min: f64, max: f64) -> Self {
        Self {
            min,
            max,
            log_scale: false,
            integer: true,
        }
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Denominator of the trust-region relative change at `value`:
    /// `|value|`, floored at the lower bound for log-scale domains and at
    /// 1% of the width otherwise, so a field sitting at zero can still
    /// move.
    pub fn trust_scale(&self, value: f64) -> f64 {
        let floor = if self.log_scale {
            self.min
        } else {
            self.width() * 0.01
        };
        value.abs().max(floor)
    }

    pub fn contains(&self, value: f64) -> bool {
        value.is_finite()
            && value >= self.min
            && value <= self.max
            && (!self.integer || value.fract() == 0.0)
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }

    /// Midpoint in the domain's natural scale.
    pub fn midpoint(&self) -> f64 {
        let mid = if self.log_scale {
            (0.5 * (self.min.ln() + self.max.ln())).exp()
        } else {
            0.5 * (self.min + self.max)
        };
        if self.integer {
            mid.round()
        } else {
            mid
        }
    }
}

/// Bounds, vocabularies and per-field trust regions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationSpace {
    pub task: TaskType,
    pub layer_count: NumericDomain,
    pub numeric: BTreeMap<NumericFamily, NumericDomain>,
    pub losses: Vec<LossKind>,
    pub optimizers: Vec<OptimizerKind>,
    pub schedulers: Vec<SchedulerKind>,
    pub activations: Vec<Activation>,
    pub augmentations: Vec<AugMethod>,
    /// Maximum relative per-epoch change of each numeric family.
    pub trust_region: BTreeMap<NumericFamily, f64>,
}

impl ConfigurationSpace {
    /// Default space for a tabular dataset of the given task.
    pub fn for_task(task: TaskType) -> Self {
        use NumericFamily::*;
        let numeric = BTreeMap::from([
            (LearningRate, NumericDomain::log(1e-4, 1e-1)),
            (WeightDecay, NumericDomain::linear(0.0, 0.1)),
            (Momentum, NumericDomain::linear(0.0, 0.99)),
            (BatchSize, NumericDomain::integer(8.0, 256.0)),
            (FocalGamma, NumericDomain::linear(0.0, 5.0)),
            (ClassWeights, NumericDomain::linear(0.1, 10.0)),
            (Dropout, NumericDomain::linear(0.0, 0.9)),
            (LayerWidths, NumericDomain::integer(32.0, 512.0)),
            (SchedulerStepSize, NumericDomain::integer(1.0, 50.0)),
            (SchedulerGamma, NumericDomain::linear(0.05, 1.0)),
            (SchedulerMinLr, NumericDomain::linear(0.0, 1e-3)),
            (AugDuplication, NumericDomain::integer(1.0, 3.0)),
            (AugRotation, NumericDomain::linear(0.0, 30.0)),
            (AugShift, NumericDomain::integer(0.0, 3.0)),
            (AugFlip, NumericDomain::linear(0.0, 1.0)),
            (AugScale, NumericDomain::linear(0.0, 0.5)),
            (AugNoise, NumericDomain::linear(0.0, 1.0)),
            (AugContrast, NumericDomain::linear(0.0, 0.5)),
        ]);
        let trust_region = NumericFamily::ALL
            .iter()
            .map(|&f| (f, if f == ClassWeights { 0.5 } else { 1.0 }))
            .collect();
        let losses = LossKind::ALL
            .iter()
            .copied()
            .filter(|l| l.is_classification() == task.is_classification())
            .collect();
        Self {
            task,
            layer_count: NumericDomain::integer(2.0, 5.0),
            numeric,
            losses,
            optimizers: OptimizerKind::ALL.to_vec(),
            schedulers: SchedulerKind::ALL.to_vec(),
            activations: Activation::ALL.to_vec(),
            augmentations: vec![
                AugMethod::Duplication,
                AugMethod::Scale,
                AugMethod::Noise,
                AugMethod::None,
            ],
            trust_region,
        }
    }

    /// Adds the image-only augmentations to the vocabulary.
    pub fn with_image_augmentations(mut self) -> Self {
        for m in AugMethod::ALL {
            if !self.augmentations.contains(m) {
                self.augmentations.push(*m);
            }
        }
        self.augmentations.sort();
        self
    }

    pub fn domain(&self, family: NumericFamily) -> Option<&NumericDomain> {
        self.numeric.get(&family)
    }

    pub fn trust(&self, family: NumericFamily) -> Option<f64> {
        self.trust_region.get(&family).copied()
    }

    /// Structural checks on the space itself. NaN bounds fail too.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn check(&self) -> Result<(), SpaceError> {
        let inverted = |field: &str, d: &NumericDomain| {
            if !(d.min < d.max) || (d.log_scale && d.min <= 0.0) {
                Err(SpaceError::InvertedBounds {
                    field: field.to_string(),
                    min: d.min,
                    max: d.max,
                })
            } else {
                Ok(())
            }
        };
        inverted("layer_count", &self.layer_count)?;
        for family in NumericFamily::ALL {
            let d = self
                .domain(*family)
                .ok_or_else(|| SpaceError::MissingDomain(family.to_string()))?;
            inverted(family.as_str(), d)?;
        }
        for (family, &eps) in &self.trust_region {
            if !(eps > 0.0) || !eps.is_finite() {
                return Err(SpaceError::TrustRegion {
                    field: family.to_string(),
                    value: eps,
                });
            }
        }
        if self.losses.is_empty() {
            return Err(SpaceError::EmptyVocabulary("losses"));
        }
        if self.optimizers.is_empty() {
            return Err(SpaceError::EmptyVocabulary("optimizers"));
        }
        if self.schedulers.is_empty() {
            return Err(SpaceError::EmptyVocabulary("schedulers"));
        }
        if self.activations.is_empty() {
            return Err(SpaceError::EmptyVocabulary("activations"));
        }
        if let Some(&loss) = self
            .losses
            .iter()
            .find(|l| l.is_classification() != self.task.is_classification())
        {
            return Err(SpaceError::IncompatibleLoss {
                loss,
                task: self.task,
            });
        }
        Ok(())
    }

    /// Whether a categorical `value` is allowed for `field` in this space.
    pub fn allows(&self, value: CategoricalValue) -> bool {
        match value {
            CategoricalValue::Loss(l) => self.losses.contains(&l),
            CategoricalValue::Optimizer(o) => self.optimizers.contains(&o),
            CategoricalValue::Scheduler(s) => self.schedulers.contains(&s),
            CategoricalValue::Activation(a) => self.activations.contains(&a),
        }
    }

    /// Human-readable listing of every tunable field with its bounds and
    /// allowed values.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "task: {}", self.task);
        let _ = writeln!(
            out,
            "layer count: [{}, {}]",
            self.layer_count.min, self.layer_count.max
        );
        for (family, d) in &self.numeric {
            let scale = if d.log_scale { " (log scale)" } else { "" };
            let eps = self
                .trust(*family)
                .map(|e| format!(", max relative change per epoch {e}"))
                .unwrap_or_default();
            if d.integer {
                let _ = writeln!(out, "{family}: integer in [{}, {}]{eps}", d.min, d.max);
            } else {
                let _ = writeln!(
                    out,
                    "{family}: [{}, {}]{scale}{eps}",
                    fmt_bound(d.min),
                    fmt_bound(d.max)
                );
            }
        }
        let list = |items: Vec<&str>| items.join(", ");
        let _ = writeln!(out, "loss_kind: {}", list(self.losses.iter().map(|x| x.as_str()).collect()));
        let _ = writeln!(
            out,
            "optimizer_kind: {}",
            list(self.optimizers.iter().map(|x| x.as_str()).collect())
        );
        let _ = writeln!(
            out,
            "scheduler_kind: {}",
            list(self.schedulers.iter().map(|x| x.as_str()).collect())
        );
        let _ = writeln!(
            out,
            "activation: {}",
            list(self.activations.iter().map(|x| x.as_str()).collect())
        );
        let _ = writeln!(
            out,
            "augmentations: {}",
            list(self.augmentations.iter().map(|x| x.as_str()).collect())
        );
        out
    }
}

fn fmt_bound(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1.0 || v.abs() >= 1e4) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

/// One failed constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub value: String,
    pub bound: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {} violates {}", self.field, self.value, self.bound)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ValidationResult {
    pub violations: Vec<Violation>,
}

impl ValidationResult {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, field: impl Into<String>, value: impl fmt::Display, bound: impl Into<String>) {
        self.violations.push(Violation {
            field: field.into(),
            value: value.to_string(),
            bound: bound.into(),
        });
    }

    fn check_numeric(&mut self, field: impl Into<String>, value: f64, domain: Option<&NumericDomain>) {
        let field = field.into();
        match domain {
            None => self.push(field, value, "no declared domain"),
            Some(d) => {
                if !value.is_finite() {
                    self.push(field, value, "finite value");
                } else if value < d.min {
                    self.push(field, value, format!("lower bound {}", fmt_bound(d.min)));
                } else if value > d.max {
                    self.push(field, value, format!("upper bound {}", fmt_bound(d.max)));
                } else if d.integer && value.fract() != 0.0 {
                    self.push(field, value, "integer value");
                }
            }
        }
    }
}

/// Checks every invariant of `config` against `space`.
pub fn validate(config: &Configuration, space: &ConfigurationSpace) -> ValidationResult {
    use NumericFamily::*;
    let mut r = ValidationResult::default();

    let arch = &config.arch;
    let n_layers = arch.layer_widths.len() as f64;
    if n_layers < space.layer_count.min {
        r.push("layer_count", n_layers, format!("lower bound {}", space.layer_count.min));
    } else if n_layers > space.layer_count.max {
        r.push("layer_count", n_layers, format!("upper bound {}", space.layer_count.max));
    }
    for (i, &w) in arch.layer_widths.iter().enumerate() {
        r.check_numeric(format!("layer_widths[{i}]"), w as f64, space.domain(LayerWidths));
    }
    r.check_numeric("dropout", arch.dropout, space.domain(Dropout));
    if !space.activations.contains(&arch.activation) {
        r.push("activation", arch.activation, "allowed activations");
    }

    let feature = &config.feature;
    for (i, m) in feature.methods.iter().enumerate() {
        if feature.methods[..i].contains(m) {
            r.push("methods", m, "no duplicate methods");
        }
        if !space.augmentations.contains(m) {
            r.push("methods", m, "allowed augmentations");
        }
    }
    for (&method, &value) in &feature.method_params {
        match NumericFamily::for_aug_method(method) {
            Some(family) => r.check_numeric(family.to_string(), value, space.domain(family)),
            None => r.push(format!("method_params.{method}"), value, "method takes no parameter"),
        }
    }

    let strategy = &config.strategy;
    if !space.losses.contains(&strategy.loss_kind) {
        r.push("loss_kind", strategy.loss_kind, format!("losses allowed for {}", space.task));
    }
    if strategy.loss_kind.is_classification() != space.task.is_classification() {
        r.push("loss_kind", strategy.loss_kind, format!("compatible with {}", space.task));
    }
    if !space.optimizers.contains(&strategy.optimizer_kind) {
        r.push("optimizer_kind", strategy.optimizer_kind, "allowed optimizers");
    }
    if !space.schedulers.contains(&strategy.scheduler_kind) {
        r.push("scheduler_kind", strategy.scheduler_kind, "allowed schedulers");
    }
    let sp = &strategy.scheduler_params;
    r.check_numeric("scheduler.step_size", sp.step_size as f64, space.domain(SchedulerStepSize));
    r.check_numeric("scheduler.gamma", sp.gamma, space.domain(SchedulerGamma));
    r.check_numeric("scheduler.min_lr", sp.min_lr, space.domain(SchedulerMinLr));

    let hyper = &config.hyper;
    r.check_numeric("learning_rate", hyper.learning_rate, space.domain(LearningRate));
    r.check_numeric("weight_decay", hyper.weight_decay, space.domain(WeightDecay));
    r.check_numeric("momentum", hyper.momentum, space.domain(Momentum));
    r.check_numeric("batch_size", hyper.batch_size as f64, space.domain(BatchSize));
    r.check_numeric("focal_gamma", hyper.focal_gamma, space.domain(FocalGamma));
    let expected_weights = space.task.classes().unwrap_or(0);
    if hyper.class_weights.len() != expected_weights {
        r.push(
            "class_weights",
            hyper.class_weights.len(),
            format!("length {expected_weights}"),
        );
    }
    for (i, &w) in hyper.class_weights.iter().enumerate() {
        r.check_numeric(format!("class_weights[{i}]"), w, space.domain(ClassWeights));
    }
    r
}

/// Deterministic untuned configuration: two hidden layers of 64, dropout
/// 0.2, no augmentation, Adam at 0.01 with a constant schedule.
pub fn default_config(space: &ConfigurationSpace) -> Configuration {
    let loss_kind = if space.task.is_classification() {
        LossKind::CrossEntropy
    } else {
        LossKind::Mse
    };
    Configuration {
        arch: ArchSpec {
            layer_widths: vec![64, 64],
            dropout: 0.2,
            activation: Activation::Relu,
        },
        feature: FeatureSpec::default(),
        strategy: StrategySpec {
            loss_kind,
            optimizer_kind: OptimizerKind::Adam,
            scheduler_kind: SchedulerKind::Constant,
            scheduler_params: SchedulerParams::default(),
        },
        hyper: HyperSpec {
            learning_rate: 0.01,
            weight_decay: 0.0,
            momentum: 0.9,
            class_weights: vec![1.0; space.task.classes().unwrap_or(0)],
            batch_size: 32,
            focal_gamma: 2.0,
        },
    }
}

/// Reads a single (non-wildcard) numeric field. Returns `None` when the
/// field does not exist in `config` (e.g. an out-of-range index).
pub fn read_numeric(config: &Configuration, field: NumericField) -> Option<f64> {
    use NumericFamily::*;
    let h = &config.hyper;
    let sp = &config.strategy.scheduler_params;
    match (field.family, field.index) {
        (ClassWeights, Some(i)) => h.class_weights.get(i).copied(),
        (LayerWidths, Some(i)) => config.arch.layer_widths.get(i).map(|&w| w as f64),
        (ClassWeights | LayerWidths, None) => None,
        (LearningRate, _) => Some(h.learning_rate),
        (WeightDecay, _) => Some(h.weight_decay),
        (Momentum, _) => Some(h.momentum),
        (BatchSize, _) => Some(h.batch_size as f64),
        (FocalGamma, _) => Some(h.focal_gamma),
        (Dropout, _) => Some(config.arch.dropout),
        (SchedulerStepSize, _) => Some(sp.step_size as f64),
        (SchedulerGamma, _) => Some(sp.gamma),
        (SchedulerMinLr, _) => Some(sp.min_lr),
        (family, _) => family.aug_method().and_then(|m| config.feature.param(m)),
    }
}

/// Writes a single numeric field; integer fields must already be integral.
pub(crate) fn write_numeric(config: &mut Configuration, field: NumericField, value: f64) {
    use NumericFamily::*;
    let h = &mut config.hyper;
    let sp = &mut config.strategy.scheduler_params;
    match (field.family, field.index) {
        (ClassWeights, Some(i)) => h.class_weights[i] = value,
        (LayerWidths, Some(i)) => config.arch.layer_widths[i] = value as usize,
        (ClassWeights | LayerWidths, None) => unreachable!("wildcard fields are expanded"),
        (LearningRate, _) => h.learning_rate = value,
        (WeightDecay, _) => h.weight_decay = value,
        (Momentum, _) => h.momentum = value,
        (BatchSize, _) => h.batch_size = value as usize,
        (FocalGamma, _) => h.focal_gamma = value,
        (Dropout, _) => config.arch.dropout = value,
        (SchedulerStepSize, _) => sp.step_size = value as usize,
        (SchedulerGamma, _) => sp.gamma = value,
        (SchedulerMinLr, _) => sp.min_lr = value,
        (family, _) => {
            let method = family.aug_method().expect("augmentation family");
            config.feature.method_params.insert(method, value);
        }
    }
}

/// Expands a possibly-wildcard field into concrete fields present in `config`.
pub fn expand_field(config: &Configuration, field: NumericField) -> Vec<NumericField> {
    match (field.family, field.index) {
        (NumericFamily::ClassWeights, None) => (0..config.hyper.class_weights.len())
            .map(|i| NumericField::element(NumericFamily::ClassWeights, i))
            .collect(),
        (NumericFamily::LayerWidths, None) => (0..config.arch.layer_widths.len())
            .map(|i| NumericField::element(NumericFamily::LayerWidths, i))
            .collect(),
        _ => vec![field],
    }
}

/// Every concrete numeric field of `config`.
pub fn numeric_fields(config: &Configuration) -> Vec<NumericField> {
    NumericFamily::ALL
        .iter()
        .flat_map(|&f| expand_field(config, NumericField::new(f)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space3() -> ConfigurationSpace {
        ConfigurationSpace::for_task(TaskType::Classification { classes: 3 })
    }

    #[test]
    fn default_space_is_well_formed() {
        space3().check().unwrap();
        ConfigurationSpace::for_task(TaskType::Regression).check().unwrap();
        space3().with_image_augmentations().check().unwrap();
    }

    #[test]
    fn default_config_is_valid() {
        let space = space3();
        let c = default_config(&space);
        assert!(validate(&c, &space).is_ok());
        assert_eq!(c.hyper.class_weights, vec![1.0, 1.0, 1.0]);
        assert_eq!(c.arch.layer_widths, vec![64, 64]);
        assert_eq!(c.arch.dropout, 0.2);
        assert_eq!(c.strategy.optimizer_kind, OptimizerKind::Adam);

        let reg = ConfigurationSpace::for_task(TaskType::Regression);
        let c = default_config(&reg);
        assert_eq!(c.strategy.loss_kind, LossKind::Mse);
        assert!(c.hyper.class_weights.is_empty());
        assert!(validate(&c, &reg).is_ok());
    }

    #[test]
    fn three_layers_of_64_is_valid() {
        let space = space3();
        let mut c = default_config(&space);
        c.arch.layer_widths = vec![64, 64, 64];
        assert!(validate(&c, &space).is_ok());
    }

    #[test]
    fn learning_rate_above_bound_is_named() {
        let space = space3();
        let mut c = default_config(&space);
        c.hyper.learning_rate = 0.5;
        let r = validate(&c, &space);
        assert_eq!(r.violations.len(), 1);
        let v = &r.violations[0];
        assert_eq!(v.field, "learning_rate");
        assert_eq!(v.value, "0.5");
        assert!(v.bound.contains("1e-1"), "{}", v.bound);
    }

    #[test]
    fn six_layers_violate_layer_count() {
        let space = space3();
        let mut c = default_config(&space);
        c.arch.layer_widths = vec![64; 6];
        let r = validate(&c, &space);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].field, "layer_count");
        assert!(r.violations[0].bound.contains('5'));
    }

    #[test]
    fn validation_catches_each_family() {
        let space = space3();
        let base = default_config(&space);
        type Breaker = Box<dyn Fn(&mut Configuration)>;
        let cases: Vec<(&str, Breaker)> = vec![
            ("layer_widths[1]", Box::new(|c| c.arch.layer_widths[1] = 600)),
            ("dropout", Box::new(|c| c.arch.dropout = 0.95)),
            ("methods", Box::new(|c| c.feature.methods = vec![AugMethod::Noise, AugMethod::Noise])),
            ("methods", Box::new(|c| c.feature.methods = vec![AugMethod::Flip])),
            ("augment.noise", Box::new(|c| {
                c.feature.method_params.insert(AugMethod::Noise, 3.0);
            })),
            ("loss_kind", Box::new(|c| c.strategy.loss_kind = LossKind::Mse)),
            ("class_weights[0]", Box::new(|c| c.hyper.class_weights[0] = 20.0)),
            ("class_weights", Box::new(|c| c.hyper.class_weights.pop().map(|_| ()).unwrap())),
            ("batch_size", Box::new(|c| c.hyper.batch_size = 0)),
            ("learning_rate", Box::new(|c| c.hyper.learning_rate = f64::NAN)),
        ];
        for (field, mutate) in cases {
            let mut c = base.clone();
            mutate(&mut c);
            let r = validate(&c, &space);
            assert!(
                r.violations.iter().any(|v| v.field == field),
                "expected violation on {field}, got {:?}",
                r.violations
            );
        }
    }

    #[test]
    fn summary_lists_learning_rate_bounds() {
        let s = space3().summary();
        assert!(s.contains("1e-4"), "{s}");
        assert!(s.contains("1e-1"), "{s}");
        for name in ["learning_rate", "class_weights", "optimizer_kind: sgd, adam, adamw"] {
            assert!(s.contains(name), "{name} missing from {s}");
        }
    }

    #[test]
    fn inverted_space_is_rejected() {
        let mut space = space3();
        space
            .numeric
            .insert(NumericFamily::Dropout, NumericDomain::linear(0.5, 0.1));
        assert!(matches!(space.check(), Err(SpaceError::InvertedBounds { .. })));
        let mut space = space3();
        space.trust_region.insert(NumericFamily::LearningRate, 0.0);
        assert!(matches!(space.check(), Err(SpaceError::TrustRegion { .. })));
    }

    #[test]
    fn log_midpoint_is_geometric() {
        let d = NumericDomain::log(1e-4, 1e-1);
        assert!((d.midpoint() - 10f64.powf(-2.5)).abs() < 1e-15);
    }
}
