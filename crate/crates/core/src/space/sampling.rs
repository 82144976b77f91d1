//! Random sampling and grid enumeration over a configuration space.

use super::config::{AugMethod, Configuration};
use super::field::{CategoricalField, NumericFamily};
use super::{default_config, ConfigurationSpace, NumericDomain, SpaceError};
use crate::rng::SeededRng;
use rand::seq::IndexedRandom;
use rand::Rng;
use std::collections::BTreeMap;

/// Grid resolution per field name; see [`grid_field_names`].
pub type GridResolution = BTreeMap<String, usize>;

fn uniform(rng: &mut SeededRng, d: &NumericDomain) -> f64 {
    if d.integer {
        rng.random_range(d.min as i64..=d.max as i64) as f64
    } else if d.log_scale {
        rng.random_range(d.min.ln()..=d.max.ln()).exp()
    } else {
        rng.random_range(d.min..=d.max)
    }
}

fn domain(space: &ConfigurationSpace, family: NumericFamily) -> &NumericDomain {
    space
        .domain(family)
        .unwrap_or_else(|| panic!("space is missing a domain for {family}"))
}

/// Draws a valid configuration. The learning rate is log-uniform, every
/// other numeric field uniform over its domain, categorical fields uniform
/// over the allowed vocabulary, and each allowed augmentation is included
/// with probability 1/4.
pub fn sample_random(space: &ConfigurationSpace, rng: &mut SeededRng) -> Configuration {
    use NumericFamily::*;
    let mut c = default_config(space);
    let layers = uniform(rng, &space.layer_count) as usize;
    c.arch.layer_widths = (0..layers)
        .map(|_| uniform(rng, domain(space, LayerWidths)) as usize)
        .collect();
    c.arch.dropout = uniform(rng, domain(space, Dropout));
    c.arch.activation = *space.activations.choose(rng).expect("non-empty vocabulary");

    c.feature.methods.clear();
    for &m in &space.augmentations {
        if m != AugMethod::None && rng.random_bool(0.25) {
            c.feature.methods.push(m);
            if let Some(family) = NumericFamily::for_aug_method(m) {
                c.feature.method_params.insert(m, uniform(rng, domain(space, family)));
            }
        }
    }

    c.strategy.loss_kind = *space.losses.choose(rng).expect("non-empty vocabulary");
    c.strategy.optimizer_kind = *space.optimizers.choose(rng).expect("non-empty vocabulary");
    c.strategy.scheduler_kind = *space.schedulers.choose(rng).expect("non-empty vocabulary");
    let sp = &mut c.strategy.scheduler_params;
    sp.step_size = uniform(rng, domain(space, SchedulerStepSize)) as usize;
    sp.gamma = uniform(rng, domain(space, SchedulerGamma));
    sp.min_lr = uniform(rng, domain(space, SchedulerMinLr));

    let h = &mut c.hyper;
    h.learning_rate = uniform(rng, &NumericDomain {
        log_scale: true,
        ..*domain(space, LearningRate)
    });
    h.weight_decay = uniform(rng, domain(space, WeightDecay));
    h.momentum = uniform(rng, domain(space, Momentum));
    h.batch_size = uniform(rng, domain(space, BatchSize)) as usize;
    h.focal_gamma = uniform(rng, domain(space, FocalGamma));
    let cw = *domain(space, ClassWeights);
    for w in h.class_weights.iter_mut() {
        *w = uniform(rng, &cw);
    }
    c
}

/// Field names accepted by [`enumerate_grid`].
pub fn grid_field_names() -> &'static [&'static str] {
    &[
        "activation",
        "batch_size",
        "dropout",
        "focal_gamma",
        "layer_count",
        "layer_width",
        "learning_rate",
        "loss_kind",
        "momentum",
        "optimizer_kind",
        "scheduler_kind",
        "weight_decay",
    ]
}

#[derive(Debug, Clone)]
enum GridValue {
    Numeric(f64),
    Categorical(&'static str),
}

fn numeric_grid(field: &str, d: &NumericDomain, resolution: usize) -> Result<Vec<f64>, SpaceError> {
    if resolution == 1 {
        return Ok(vec![d.midpoint()]);
    }
    let steps = (resolution - 1) as f64;
    let values: Vec<f64> = (0..resolution)
        .map(|i| {
            let t = i as f64 / steps;
            let v = if d.log_scale {
                (d.min.ln() + t * (d.max.ln() - d.min.ln())).exp()
            } else {
                d.min + t * (d.max - d.min)
            };
            if d.integer {
                v.round()
            } else {
                v.clamp(d.min, d.max)
            }
        })
        .collect();
    if values.windows(2).any(|w| w[0] == w[1]) {
        return Err(SpaceError::GridResolution {
            field: field.to_string(),
            reason: format!("{resolution} points collapse onto duplicate integer values"),
        });
    }
    Ok(values)
}

fn field_values(
    space: &ConfigurationSpace,
    field: &str,
    resolution: usize,
) -> Result<Vec<GridValue>, SpaceError> {
    use NumericFamily::*;
    if resolution == 0 {
        return Err(SpaceError::GridResolution {
            field: field.to_string(),
            reason: "resolution must be at least 1".into(),
        });
    }
    let numeric = |family| numeric_grid(field, domain(space, family), resolution);
    let categorical = |names: Vec<&'static str>| {
        if resolution > names.len() {
            return Err(SpaceError::GridResolution {
                field: field.to_string(),
                reason: format!("only {} values are allowed", names.len()),
            });
        }
        Ok(names
            .into_iter()
            .take(resolution)
            .map(GridValue::Categorical)
            .collect())
    };
    let values = match field {
        "learning_rate" => numeric(LearningRate)?,
        "weight_decay" => numeric(WeightDecay)?,
        "momentum" => numeric(Momentum)?,
        "dropout" => numeric(Dropout)?,
        "focal_gamma" => numeric(FocalGamma)?,
        "batch_size" => numeric(BatchSize)?,
        "layer_width" => numeric(LayerWidths)?,
        "layer_count" => numeric_grid(field, &space.layer_count, resolution)?,
        "loss_kind" => return categorical(space.losses.iter().map(|x| x.as_str()).collect()),
        "optimizer_kind" => {
            return categorical(space.optimizers.iter().map(|x| x.as_str()).collect())
        }
        "scheduler_kind" => {
            return categorical(space.schedulers.iter().map(|x| x.as_str()).collect())
        }
        "activation" => return categorical(space.activations.iter().map(|x| x.as_str()).collect()),
        other => return Err(SpaceError::UnknownGridField(other.to_string())),
    };
    Ok(values.into_iter().map(GridValue::Numeric).collect())
}

fn set_grid_value(c: &mut Configuration, field: &str, value: &GridValue) {
    match (field, value) {
        ("learning_rate", GridValue::Numeric(v)) => c.hyper.learning_rate = *v,
        ("weight_decay", GridValue::Numeric(v)) => c.hyper.weight_decay = *v,
        ("momentum", GridValue::Numeric(v)) => c.hyper.momentum = *v,
        ("dropout", GridValue::Numeric(v)) => c.arch.dropout = *v,
        ("focal_gamma", GridValue::Numeric(v)) => c.hyper.focal_gamma = *v,
        ("batch_size", GridValue::Numeric(v)) => c.hyper.batch_size = *v as usize,
        ("layer_width", GridValue::Numeric(v)) => {
            for w in c.arch.layer_widths.iter_mut() {
                *w = *v as usize;
            }
        }
        ("layer_count", GridValue::Numeric(v)) => {
            let width = c.arch.layer_widths.first().copied().unwrap_or(64);
            c.arch.layer_widths = vec![width; *v as usize];
        }
        (name, GridValue::Categorical(v)) => {
            let field: CategoricalField = name.parse().expect("grid field is categorical");
            match field.parse_value(v).expect("value from the space vocabulary") {
                super::CategoricalValue::Loss(l) => c.strategy.loss_kind = l,
                super::CategoricalValue::Optimizer(o) => c.strategy.optimizer_kind = o,
                super::CategoricalValue::Scheduler(s) => c.strategy.scheduler_kind = s,
                super::CategoricalValue::Activation(a) => c.arch.activation = a,
            }
        }
        (name, v) => unreachable!("grid value {v:?} for {name}"),
    }
}

/// Cartesian product of per-field grids over the default configuration.
///
/// Fields are ordered by name with the first field varying slowest.
/// Numeric fields are evenly spaced over their domain (log-spaced for the
/// learning rate); resolution 1 selects the domain midpoint. Categorical
/// fields take the first `resolution` allowed values. `layer_width` sets
/// every hidden layer, and `layer_count` replicates the first width.
pub fn enumerate_grid(
    space: &ConfigurationSpace,
    resolution: &GridResolution,
) -> Result<Vec<Configuration>, SpaceError> {
    let axes: Vec<(&str, Vec<GridValue>)> = resolution
        .iter()
        .map(|(field, &r)| field_values(space, field, r).map(|v| (field.as_str(), v)))
        .collect::<Result<_, _>>()?;

    let base = default_config(space);
    let mut out = vec![base];
    for (field, values) in &axes {
        out = out
            .iter()
            .flat_map(|c| {
                values.iter().map(move |v| {
                    let mut next = c.clone();
                    set_grid_value(&mut next, field, v);
                    next
                })
            })
            .collect();
    }
    Ok(out)
}
