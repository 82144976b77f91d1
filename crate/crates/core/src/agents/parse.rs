//! Total parsers for agent responses.
//!
//! Each parser looks for the first JSON object in the text that has the
//! expected shape. Nothing here panics or returns an error: unusable input
//! degrades to a conservative default and the reason is kept in `warnings`.

use crate::space::{
    Activation, ArchSpec, ConfigDelta, ConfigurationSpace, FieldChange, NumericFamily,
};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::NOTE_CHAR_CAP;

/// Rationale recorded when no usable object was found.
pub const PARSE_FAILURE: &str = "parse-failure";

const CHANGE_TAGS: [&str; 5] = [
    "set_numeric",
    "scale_numeric",
    "set_categorical",
    "add_method",
    "remove_method",
];

/// Every JSON object that starts at some `{` in `text`, in order of start
/// position. Nested objects are visited after their parents.
fn json_objects(text: &str) -> impl Iterator<Item = Map<String, Value>> + '_ {
    text.char_indices()
        .filter(|&(_, c)| c == '{')
        .filter_map(move |(i, _)| {
            let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<Value>();
            match stream.next() {
                Some(Ok(Value::Object(map))) => Some(map),
                _ => None,
            }
        })
}

fn string_field(map: &Map<String, Value>, key: &str) -> String {
    map.get(key)
        .and_then(Value::as_str)
        .map(str::to_string)
        .unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorResponse {
    pub delta: ConfigDelta,
    pub rationale: String,
    pub warnings: Vec<String>,
    /// False when no object of the expected shape was found.
    pub parsed: bool,
}

impl AdvisorResponse {
    pub fn failure(warning: impl Into<String>) -> Self {
        Self {
            delta: ConfigDelta::no_change(),
            rationale: PARSE_FAILURE.to_string(),
            warnings: vec![warning.into()],
            parsed: false,
        }
    }
}

fn is_advisor_object(map: &Map<String, Value>) -> bool {
    matches!(map.get("changes"), Some(Value::Array(_)))
        || CHANGE_TAGS.iter().any(|t| map.contains_key(*t))
}

/// Checks a change against the space vocabulary. Out-of-vocabulary values
/// become `NoChange` with a warning.
fn check_change(change: FieldChange, space: &ConfigurationSpace) -> Result<FieldChange, String> {
    match &change {
        FieldChange::SetNumeric { field, value: v } | FieldChange::ScaleNumeric { field, factor: v } => {
            if space.domain(field.family).is_none() {
                return Err(format!("field `{field}` is not tunable in this space"));
            }
            if !v.is_finite() {
                return Err(format!("non-finite number for `{field}`"));
            }
            if field.index.is_some() && !field.family.is_indexed() {
                return Err(format!("field `{field}` takes no index"));
            }
        }
        FieldChange::SetCategorical { field, value } => {
            let parsed = field.parse_value(value).map_err(|e| e.to_string())?;
            if !space.allows(parsed) {
                return Err(format!("{} `{value}` is not allowed in this space", field.as_str()));
            }
        }
        FieldChange::AddMethod(m) | FieldChange::RemoveMethod(m) => {
            if !space.augmentations.contains(m) {
                return Err(format!("augmentation `{m}` is not available for this dataset"));
            }
        }
        FieldChange::NoChange => {}
    }
    Ok(change)
}

fn parse_change(value: &Value, space: &ConfigurationSpace, warnings: &mut Vec<String>) -> FieldChange {
    match serde_json::from_value::<FieldChange>(value.clone()) {
        Ok(change) => check_change(change, space).unwrap_or_else(|w| {
            warnings.push(w);
            FieldChange::NoChange
        }),
        Err(e) => {
            let mut shown = value.to_string();
            truncate_chars(&mut shown, 120);
            warnings.push(format!("ignored change {shown}: {e}"));
            FieldChange::NoChange
        }
    }
}

/// Parses a configuration delta. See the advisor prompt for the format.
pub fn parse_advisor_response(text: &str, space: &ConfigurationSpace) -> AdvisorResponse {
    let Some(map) = json_objects(text).find(is_advisor_object) else {
        return AdvisorResponse::failure("no change object found in response");
    };
    let mut warnings = Vec::new();
    let changes = match map.get("changes") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| parse_change(v, space, &mut warnings))
            .collect(),
        _ => {
            // A bare change object; keep only its tag so extra keys such as
            // a rationale do not break variant matching.
            let tag = CHANGE_TAGS
                .iter()
                .find(|t| map.contains_key(**t))
                .expect("matched by is_advisor_object");
            let single = Value::Object(Map::from_iter([(tag.to_string(), map[*tag].clone())]));
            vec![parse_change(&single, space, &mut warnings)]
        }
    };
    AdvisorResponse {
        delta: ConfigDelta { changes },
        rationale: string_field(&map, "rationale"),
        warnings,
        parsed: true,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalResponse {
    pub success: bool,
    pub reason: String,
    pub parsed: bool,
}

/// `success` is true only for an object carrying `"success": true`.
pub fn parse_evaluator_response(text: &str) -> EvalResponse {
    match json_objects(text).find(|m| matches!(m.get("success"), Some(Value::Bool(_)))) {
        Some(map) => EvalResponse {
            success: map["success"] == Value::Bool(true),
            reason: string_field(&map, "reason"),
            parsed: true,
        },
        None => EvalResponse {
            success: false,
            reason: PARSE_FAILURE.to_string(),
            parsed: false,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoteOp {
    Append(String),
    Replace { index: usize, note: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PromptDeltaResponse {
    pub ops: Vec<NoteOp>,
    pub warnings: Vec<String>,
    pub parsed: bool,
}

fn truncate_chars(s: &mut String, cap: usize) -> bool {
    match s.char_indices().nth(cap) {
        Some((byte, _)) => {
            s.truncate(byte);
            true
        }
        None => false,
    }
}

fn parse_note_op(value: &Value, warnings: &mut Vec<String>) -> Option<NoteOp> {
    let op = match serde_json::from_value::<NoteOp>(value.clone()) {
        Ok(op) => op,
        Err(e) => {
            warnings.push(format!("ignored note operation: {e}"));
            return None;
        }
    };
    let (NoteOp::Append(note) | NoteOp::Replace { note, .. }) = &op;
    if note.trim().is_empty() {
        warnings.push("ignored empty note".to_string());
        return None;
    }
    let mut op = op;
    let (NoteOp::Append(note) | NoteOp::Replace { note, .. }) = &mut op;
    if truncate_chars(note, NOTE_CHAR_CAP) {
        warnings.push(format!("note truncated to {NOTE_CHAR_CAP} characters"));
    }
    Some(op)
}

fn is_optimizer_object(map: &Map<String, Value>) -> bool {
    matches!(map.get("append"), Some(Value::String(_)))
        || matches!(map.get("replace"), Some(Value::Object(_)))
        || matches!(map.get("ops"), Some(Value::Array(_)))
}

/// Parses note operations. Unusable text yields no operations.
pub fn parse_optimizer_response(text: &str) -> PromptDeltaResponse {
    let Some(map) = json_objects(text).find(is_optimizer_object) else {
        return PromptDeltaResponse {
            ops: Vec::new(),
            warnings: vec!["no note operation found in response".to_string()],
            parsed: false,
        };
    };
    let mut warnings = Vec::new();
    let ops = match map.get("ops") {
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(|v| parse_note_op(v, &mut warnings))
            .collect(),
        _ => {
            let key = if map.contains_key("append") { "append" } else { "replace" };
            let single = Value::Object(Map::from_iter([(key.to_string(), map[key].clone())]));
            parse_note_op(&single, &mut warnings).into_iter().collect()
        }
    };
    PromptDeltaResponse {
        ops,
        warnings,
        parsed: true,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectResponse {
    pub arch: ArchSpec,
    pub rationale: String,
    pub warnings: Vec<String>,
    pub parsed: bool,
}

fn is_architect_object(map: &Map<String, Value>) -> bool {
    ["layer_widths", "dropout", "activation"]
        .iter()
        .any(|k| map.contains_key(*k))
}

/// Parses an architecture proposal and clamps it into the space. Missing or
/// unusable fields keep their value from `previous`.
pub fn parse_architect_response(
    text: &str,
    space: &ConfigurationSpace,
    previous: &ArchSpec,
) -> ArchitectResponse {
    let Some(map) = json_objects(text).find(is_architect_object) else {
        return ArchitectResponse {
            arch: previous.clone(),
            rationale: PARSE_FAILURE.to_string(),
            warnings: vec!["no architecture object found in response".to_string()],
            parsed: false,
        };
    };
    let mut warnings = Vec::new();
    let mut arch = previous.clone();

    if let Some(v) = map.get("layer_widths") {
        let widths: Option<Vec<f64>> = v
            .as_array()
            .map(|items| items.iter().map(Value::as_f64).collect::<Option<Vec<_>>>())
            .unwrap_or(None)
            .filter(|w| !w.is_empty() && w.iter().all(|x| x.is_finite()));
        match widths {
            Some(mut w) => {
                let count = space.layer_count.clamp(w.len() as f64) as usize;
                if count != w.len() {
                    warnings.push(format!("layer count {} clamped to {count}", w.len()));
                    let last = *w.last().expect("non-empty");
                    w.resize(count, last);
                }
                let domain = space
                    .domain(NumericFamily::LayerWidths)
                    .copied()
                    .expect("space defines layer widths");
                arch.layer_widths = w
                    .iter()
                    .map(|&x| {
                        let c = domain.clamp(x.round());
                        if c != x {
                            warnings.push(format!("layer width {x} clamped to {c}"));
                        }
                        c as usize
                    })
                    .collect();
            }
            None => warnings.push("layer_widths must be a non-empty list of numbers".to_string()),
        }
    }
    if let Some(v) = map.get("dropout") {
        match v.as_f64() {
            Some(d) => {
                let domain = space
                    .domain(NumericFamily::Dropout)
                    .copied()
                    .expect("space defines dropout");
                let c = domain.clamp(d);
                if c != d {
                    warnings.push(format!("dropout {d} clamped to {c}"));
                }
                arch.dropout = c;
            }
            None => warnings.push("dropout must be a number".to_string()),
        }
    }
    if let Some(v) = map.get("activation") {
        match v.as_str().map(str::parse::<Activation>) {
            Some(Ok(a)) if space.activations.contains(&a) => arch.activation = a,
            _ => warnings.push(format!("activation {v} is not allowed")),
        }
    }
    ArchitectResponse {
        arch,
        rationale: string_field(&map, "rationale"),
        warnings,
        parsed: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{AugMethod, CategoricalField, NumericField};
    use crate::task::TaskType;

    fn space() -> ConfigurationSpace {
        ConfigurationSpace::for_task(TaskType::Classification { classes: 3 })
    }

    #[test]
    fn bare_change_is_recovered() {
        let text = r#"Sure. {"scale_numeric": {"field": "learning_rate", "factor": 2.0}} Done."#;
        let r = parse_advisor_response(text, &space());
        assert!(r.parsed);
        assert_eq!(
            r.delta,
            ConfigDelta::single(FieldChange::ScaleNumeric {
                field: NumericField::LEARNING_RATE,
                factor: 2.0
            })
        );
    }

    #[test]
    fn prose_falls_back_to_no_change() {
        let r = parse_advisor_response("I suggest being careful.", &space());
        assert!(!r.parsed);
        assert_eq!(r.delta, ConfigDelta::no_change());
        assert_eq!(r.rationale, PARSE_FAILURE);
    }

    #[test]
    fn unknown_optimizer_becomes_no_change_with_warning() {
        let text = r#"{"rationale": "try it", "changes": [
            {"set_categorical": {"field": "optimizer_kind", "value": "lion"}},
            {"set_categorical": {"field": "optimizer_kind", "value": "adamw"}}]}"#;
        let r = parse_advisor_response(text, &space());
        assert!(r.parsed);
        assert_eq!(r.rationale, "try it");
        assert_eq!(r.delta.changes[0], FieldChange::NoChange);
        assert_eq!(
            r.delta.changes[1],
            FieldChange::SetCategorical {
                field: CategoricalField::OptimizerKind,
                value: "adamw".into()
            }
        );
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("lion"));
    }

    #[test]
    fn regression_losses_are_rejected_for_classification() {
        let text = r#"{"set_categorical": {"field": "loss_kind", "value": "mse"}}"#;
        let r = parse_advisor_response(text, &space());
        assert_eq!(r.delta.changes, vec![FieldChange::NoChange]);
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn image_augmentation_is_rejected_on_tabular_space() {
        let r = parse_advisor_response(r#"{"changes": [{"add_method": "flip"}]}"#, &space());
        assert_eq!(r.delta.changes, vec![FieldChange::NoChange]);
        let r = parse_advisor_response(r#"{"changes": [{"add_method": "noise"}]}"#, &space());
        assert_eq!(r.delta.changes, vec![FieldChange::AddMethod(AugMethod::Noise)]);
    }

    #[test]
    fn nested_object_is_found() {
        let text = r#"{"reply": {"changes": ["no_change"]}}"#;
        let r = parse_advisor_response(text, &space());
        assert!(r.parsed);
        assert_eq!(r.delta, ConfigDelta::no_change());
    }

    #[test]
    fn evaluator_responses() {
        let r = parse_evaluator_response(r#"{"success": true, "reason": "val loss improved"}"#);
        assert!(r.success && r.parsed);
        assert_eq!(r.reason, "val loss improved");
        assert!(!parse_evaluator_response(r#"{"success": false}"#).success);
        let g = parse_evaluator_response("}{ garbage \u{0} {\"success\": \"yes\"}");
        assert!(!g.success && !g.parsed);
    }

    #[test]
    fn optimizer_append_and_fallback() {
        let r = parse_optimizer_response(r#"{"append": "prefer smaller lr steps near convergence"}"#);
        assert_eq!(
            r.ops,
            vec![NoteOp::Append("prefer smaller lr steps near convergence".into())]
        );
        let g = parse_optimizer_response("no json here");
        assert!(g.ops.is_empty() && !g.parsed);
    }

    #[test]
    fn long_notes_are_truncated_on_char_boundaries() {
        let long = "é".repeat(NOTE_CHAR_CAP + 50);
        let r = parse_optimizer_response(&format!(r#"{{"ops": [{{"append": "{long}"}}, {{"bogus": 1}}]}}"#));
        match &r.ops[..] {
            [NoteOp::Append(n)] => assert_eq!(n.chars().count(), NOTE_CHAR_CAP),
            other => panic!("unexpected ops {other:?}"),
        }
        assert_eq!(r.warnings.len(), 2);
    }

    #[test]
    fn architect_clamps_and_falls_back() {
        let prev = ArchSpec {
            layer_widths: vec![64, 64],
            dropout: 0.2,
            activation: Activation::Relu,
        };
        let r = parse_architect_response(r#"{"layer_widths": [1024, 128], "dropout": 0.4}"#, &space(), &prev);
        assert_eq!(r.arch.layer_widths, vec![512, 128]);
        assert_eq!(r.arch.dropout, 0.4);
        assert_eq!(r.warnings.len(), 1);
        let f = parse_architect_response("nothing", &space(), &prev);
        assert_eq!(f.arch, prev);
        assert!(!f.parsed);
        let c = parse_architect_response(r#"{"layer_widths": [64], "activation": "gelu"}"#, &space(), &prev);
        assert_eq!(c.arch.layer_widths, vec![64, 64]);
        assert_eq!(c.arch.activation, Activation::Relu);
    }
}
