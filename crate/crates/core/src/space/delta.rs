//! Typed configuration modifications and their bounded application.
//!
//! Numeric changes are first capped so their relative change from the
//! value at the start of the update stays within the family's trust
//! region, then clamped into the family's domain. Anything that cannot be
//! applied (unknown vocabulary, missing element, frozen architecture) is
//! dropped and reported, never raised.

use super::config::{AugMethod, Configuration};
use super::field::{CategoricalField, CategoricalValue, NumericField};
use super::{expand_field, read_numeric, write_numeric, ConfigurationSpace, NumericDomain};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldChange {
    SetNumeric { field: NumericField, value: f64 },
    ScaleNumeric { field: NumericField, factor: f64 },
    SetCategorical { field: CategoricalField, value: String },
    AddMethod(AugMethod),
    RemoveMethod(AugMethod),
    NoChange,
}

impl FieldChange {
    pub fn touches_architecture(&self) -> bool {
        match self {
            FieldChange::SetNumeric { field, .. } | FieldChange::ScaleNumeric { field, .. } => {
                field.family.is_architecture()
            }
            FieldChange::SetCategorical { field, .. } => field.is_architecture(),
            _ => false,
        }
    }
}

impl fmt::Display for FieldChange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldChange::SetNumeric { field, value } => write!(f, "set {field} = {value}"),
            FieldChange::ScaleNumeric { field, factor } => write!(f, "scale {field} x{factor}"),
            FieldChange::SetCategorical { field, value } => write!(f, "set {field} = {value}"),
            FieldChange::AddMethod(m) => write!(f, "add {m}"),
            FieldChange::RemoveMethod(m) => write!(f, "remove {m}"),
            FieldChange::NoChange => f.write_str("no change"),
        }
    }
}

/// A set of field changes proposed for one update step.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfigDelta {
    pub changes: Vec<FieldChange>,
}

impl ConfigDelta {
    pub fn no_change() -> Self {
        Self {
            changes: vec![FieldChange::NoChange],
        }
    }

    pub fn single(change: FieldChange) -> Self {
        Self {
            changes: vec![change],
        }
    }

    pub fn is_noop(&self) -> bool {
        self.changes.iter().all(|c| *c == FieldChange::NoChange)
    }

    /// Canonical JSON form, accepted back by the advisor response parser.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("delta serializes")
    }
}

impl fmt::Display for ConfigDelta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_noop() {
            return f.write_str("no change");
        }
        let parts: Vec<String> = self
            .changes
            .iter()
            .filter(|c| **c != FieldChange::NoChange)
            .map(|c| c.to_string())
            .collect();
        f.write_str(&parts.join("; "))
    }
}

/// What happened to one requested change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplyEvent {
    Numeric {
        field: NumericField,
        /// Value at the start of the update.
        old: f64,
        requested: f64,
        /// After trust-region capping, before clamping.
        capped: f64,
        new: f64,
    },
    Categorical {
        field: CategoricalField,
        old: String,
        new: String,
    },
    MethodAdded(AugMethod),
    MethodRemoved(AugMethod),
    Dropped {
        change: FieldChange,
        reason: String,
    },
}

impl ApplyEvent {
    pub fn was_capped(&self) -> bool {
        matches!(self, ApplyEvent::Numeric { requested, capped, .. } if requested != capped)
    }

    pub fn was_clamped(&self) -> bool {
        matches!(self, ApplyEvent::Numeric { capped, new, .. } if capped != new)
    }
}

impl fmt::Display for ApplyEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ApplyEvent::Numeric { field, old, requested, capped, new } => {
                write!(f, "{field}: {old} -> {new}")?;
                if requested != capped {
                    write!(f, " (requested {requested}, capped to {capped})")?;
                }
                if capped != new {
                    write!(f, " (clamped from {capped})")?;
                }
                Ok(())
            }
            ApplyEvent::Categorical { field, old, new } => write!(f, "{field}: {old} -> {new}"),
            ApplyEvent::MethodAdded(m) => write!(f, "added {m}"),
            ApplyEvent::MethodRemoved(m) => write!(f, "removed {m}"),
            ApplyEvent::Dropped { change, reason } => write!(f, "dropped `{change}`: {reason}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ApplyReport {
    pub events: Vec<ApplyEvent>,
}

impl ApplyReport {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn dropped(&self) -> impl Iterator<Item = &ApplyEvent> {
        self.events
            .iter()
            .filter(|e| matches!(e, ApplyEvent::Dropped { .. }))
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ApplyOptions {
    /// Drop changes to architecture fields (layer widths, dropout, activation).
    pub freeze_architecture: bool,
}

/// Relative change used by the trust region: `|new - old|` over
/// [`NumericDomain::trust_scale`] of `old`.
pub fn relative_change(old: f64, new: f64, domain: &NumericDomain) -> f64 {
    (new - old).abs() / domain.trust_scale(old)
}

pub fn apply_delta(
    config: &Configuration,
    delta: &ConfigDelta,
    space: &ConfigurationSpace,
) -> (Configuration, ApplyReport) {
    apply_delta_with(config, delta, space, ApplyOptions::default())
}

pub fn apply_delta_with(
    config: &Configuration,
    delta: &ConfigDelta,
    space: &ConfigurationSpace,
    options: ApplyOptions,
) -> (Configuration, ApplyReport) {
    let start = config;
    let mut next = config.clone();
    let mut report = ApplyReport::default();
    let drop = |report: &mut ApplyReport, change: &FieldChange, reason: String| {
        report.events.push(ApplyEvent::Dropped {
            change: change.clone(),
            reason,
        });
    };

    for change in &delta.changes {
        if options.freeze_architecture && change.touches_architecture() {
            drop(&mut report, change, "architecture is frozen within an iteration".into());
            continue;
        }
        match change {
            FieldChange::NoChange => {}
            FieldChange::SetNumeric { field, .. } | FieldChange::ScaleNumeric { field, .. } => {
                let targets = expand_field(&next, *field);
                if targets.is_empty() {
                    drop(&mut report, change, format!("`{field}` has no elements"));
                    continue;
                }
                for target in targets {
                    match apply_numeric(start, &mut next, target, change, space) {
                        Ok(event) => report.events.push(event),
                        Err(reason) => drop(&mut report, change, reason),
                    }
                }
            }
            FieldChange::SetCategorical { field, value } => {
                let parsed = match field.parse_value(value) {
                    Ok(v) => v,
                    Err(e) => {
                        drop(&mut report, change, e.to_string());
                        continue;
                    }
                };
                if !space.allows(parsed) {
                    drop(&mut report, change, format!("`{value}` is not allowed for {field}"));
                    continue;
                }
                let old = field.read(&next).to_string();
                match parsed {
                    CategoricalValue::Loss(l) => next.strategy.loss_kind = l,
                    CategoricalValue::Optimizer(o) => next.strategy.optimizer_kind = o,
                    CategoricalValue::Scheduler(s) => next.strategy.scheduler_kind = s,
                    CategoricalValue::Activation(a) => next.arch.activation = a,
                }
                if old != *value {
                    report.events.push(ApplyEvent::Categorical {
                        field: *field,
                        old,
                        new: value.clone(),
                    });
                }
            }
            FieldChange::AddMethod(m) => {
                if !space.augmentations.contains(m) {
                    drop(&mut report, change, format!("augmentation `{m}` is not allowed"));
                } else if !next.feature.methods.contains(m) {
                    next.feature.methods.push(*m);
                    report.events.push(ApplyEvent::MethodAdded(*m));
                }
            }
            FieldChange::RemoveMethod(m) => {
                let before = next.feature.methods.len();
                next.feature.methods.retain(|x| x != m);
                if next.feature.methods.len() != before {
                    report.events.push(ApplyEvent::MethodRemoved(*m));
                }
            }
        }
    }
    (next, report)
}

fn apply_numeric(
    start: &Configuration,
    next: &mut Configuration,
    field: NumericField,
    change: &FieldChange,
    space: &ConfigurationSpace,
) -> Result<ApplyEvent, String> {
    let domain = space
        .domain(field.family)
        .ok_or_else(|| format!("no domain declared for `{}`", field.family))?;
    let current = read_numeric(next, field).ok_or_else(|| format!("`{field}` does not exist"))?;
    let old = read_numeric(start, field).ok_or_else(|| format!("`{field}` does not exist"))?;
    let requested = match change {
        FieldChange::SetNumeric { value, .. } => *value,
        FieldChange::ScaleNumeric { factor, .. } => current * factor,
        _ => unreachable!("numeric change"),
    };
    if !requested.is_finite() {
        return Err(format!("requested value {requested} is not finite"));
    }

    let capped = match space.trust(field.family) {
        Some(eps) => {
            let max_step = eps * domain.trust_scale(old);
            if (requested - old).abs() <= max_step {
                requested
            } else if requested > old {
                old + max_step
            } else {
                old - max_step
            }
        }
        None => requested,
    };
    // Integer fields round toward the starting value so rounding never
    // widens the step.
    let capped = if domain.integer {
        if capped >= old {
            capped.floor()
        } else {
            capped.ceil()
        }
    } else {
        capped
    };
    let new = domain.clamp(capped);
    write_numeric(next, field, new);
    Ok(ApplyEvent::Numeric {
        field,
        old,
        requested,
        capped,
        new,
    })
}
