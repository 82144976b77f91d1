//! Deterministic rule-based responder.
//!
//! Rules are tried in order for the requested agent; the first whose
//! condition holds produces the response. Every agent's rule list must end
//! with an `always` rule so a response is always produced.

use crate::agents::state::{recall_skew, AdvisorState, ArchitectState, EpochSummary};
use crate::agents::{extract_state, AgentKind, AgentState};
use crate::space::{
    AugMethod, CategoricalField, ConfigDelta, FieldChange, LossKind, NumericFamily, NumericField,
    OptimizerKind,
};
use crate::trainer::EpochMetrics;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Backend, BackendError, Generation, GenerationRequest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Always,
    All(Vec<Condition>),
    Not(Box<Condition>),
    /// Current epoch number is at most this.
    EpochAtMost(usize),
    /// Spread between the best and worst validation per-class recall.
    RecallSkewAbove(f64),
    /// Train minus validation accuracy (classification) or
    /// `1 - train_loss / val_loss` (regression).
    OverfitGapAbove(f64),
    /// Validation loss rose in each of the last `epochs` epochs.
    ValLossRising { epochs: usize },
    /// Relative weight-norm growth across the metric window.
    WeightNormGrowthAbove(f64),
    /// Relative validation-loss improvement across the window is below this
    /// (needs at least two epochs).
    ImprovementBelow(f64),
    MethodActive(AugMethod),
    /// Evaluator: current validation loss is below the baseline's.
    ValLossBelowBaseline,
    /// Architect: final train loss is at least `ratio` times the first.
    TrainLossFlat { ratio: f64 },
    /// Architect: overfit gap of the final epoch exceeds `gap`.
    FinalGapAbove(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Heuristic {
    /// Focal loss, AdamW, and a larger weight for the worst-recall class.
    RebalanceClasses { weight_factor: f64 },
    /// Optimizer note describing the last applied change and its outcome.
    SummarizeLastOutcome,
    /// Architect: multiply every width, capped.
    WidenLayers { factor: f64, cap: usize },
    /// Architect: add to dropout.
    RaiseDropout { step: f64 },
    /// Architect: keep the current architecture.
    KeepArchitecture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseTemplate {
    /// Verbatim text.
    Static(String),
    /// Advisor delta rendered in canonical form.
    Changes {
        rationale: String,
        changes: Vec<FieldChange>,
    },
    Heuristic(Heuristic),
    /// Chooses by epoch (iteration for the architect), cycling.
    Cycle(Vec<ResponseTemplate>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub name: String,
    pub agent: AgentKind,
    pub when: Condition,
    pub respond: ResponseTemplate,
}

impl Rule {
    pub fn new(name: &str, agent: AgentKind, when: Condition, respond: ResponseTemplate) -> Self {
        Self {
            name: name.to_string(),
            agent,
            when,
            respond,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedRuleSet {
    pub rules: Vec<Rule>,
}

fn changes(rationale: &str, changes: Vec<FieldChange>) -> ResponseTemplate {
    ResponseTemplate::Changes {
        rationale: rationale.to_string(),
        changes,
    }
}

fn scale(family: NumericFamily, factor: f64) -> FieldChange {
    FieldChange::ScaleNumeric {
        field: NumericField::new(family),
        factor,
    }
}

fn set(family: NumericFamily, value: f64) -> FieldChange {
    FieldChange::SetNumeric {
        field: NumericField::new(family),
        value,
    }
}

impl ScriptedRuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self, BackendError> {
        let set = Self { rules };
        set.check()?;
        Ok(set)
    }

    /// Every agent's last rule must be a catch-all.
    pub fn check(&self) -> Result<(), BackendError> {
        for kind in AgentKind::ALL {
            let last = self.rules.iter().rev().find(|r| r.agent == kind);
            match last {
                Some(r) if r.when == Condition::Always => {}
                _ => {
                    return Err(BackendError::InvalidRules(format!(
                        "the last {kind} rule must use the `always` condition"
                    )))
                }
            }
            for r in self.rules.iter().filter(|r| r.agent == kind) {
                if let ResponseTemplate::Cycle(items) = &r.respond {
                    if items.is_empty() {
                        return Err(BackendError::InvalidRules(format!("rule `{}` cycles over nothing", r.name)));
                    }
                }
            }
        }
        Ok(())
    }

    /// The built-in heuristics.
    pub fn default_rules() -> Self {
        use AgentKind::*;
        use Condition::*;
        use NumericFamily as F;
        let rules = vec![
            Rule::new(
                "rebalance-classes",
                Advisor,
                RecallSkewAbove(0.3),
                ResponseTemplate::Heuristic(Heuristic::RebalanceClasses { weight_factor: 1.5 }),
            ),
            Rule::new(
                "regularize-overfit",
                Advisor,
                All(vec![OverfitGapAbove(0.15), Not(Box::new(MethodActive(AugMethod::Noise)))]),
                changes(
                    "train and validation diverge: add input noise and weight decay",
                    vec![FieldChange::AddMethod(AugMethod::Noise), set(F::WeightDecay, 0.01)],
                ),
            ),
            Rule::new(
                "strengthen-regularization",
                Advisor,
                OverfitGapAbove(0.15),
                changes(
                    "still overfitting with noise on: more noise, smaller steps",
                    vec![scale(F::AugNoise, 1.5), scale(F::LearningRate, 0.5), set(F::WeightDecay, 0.01)],
                ),
            ),
            Rule::new(
                "decay-on-rising-loss",
                Advisor,
                ValLossRising { epochs: 2 },
                changes(
                    "validation loss rose two epochs in a row: halve the learning rate",
                    vec![scale(F::LearningRate, 0.5)],
                ),
            ),
            Rule::new(
                "decoupled-decay-on-weight-growth",
                Advisor,
                WeightNormGrowthAbove(0.25),
                changes(
                    "weights are growing quickly: switch to AdamW with weight decay",
                    vec![
                        FieldChange::SetCategorical {
                            field: CategoricalField::OptimizerKind,
                            value: OptimizerKind::Adamw.to_string(),
                        },
                        set(F::WeightDecay, 0.01),
                    ],
                ),
            ),
            Rule::new(
                "speed-up-slow-start",
                Advisor,
                All(vec![EpochAtMost(3), ImprovementBelow(0.02)]),
                changes(
                    "little progress early on: double the learning rate",
                    vec![scale(F::LearningRate, 2.0)],
                ),
            ),
            Rule::new(
                "hold",
                Advisor,
                Always,
                changes("training is progressing: keep the configuration", vec![FieldChange::NoChange]),
            ),
            Rule::new(
                "improved",
                Evaluator,
                ValLossBelowBaseline,
                ResponseTemplate::Static(
                    json!({"success": true, "reason": "validation loss is below the baseline"}).to_string(),
                ),
            ),
            Rule::new(
                "not-improved",
                Evaluator,
                Always,
                ResponseTemplate::Static(
                    json!({"success": false, "reason": "validation loss is not below the baseline"}).to_string(),
                ),
            ),
            Rule::new(
                "summarize",
                Optimizer,
                Always,
                ResponseTemplate::Heuristic(Heuristic::SummarizeLastOutcome),
            ),
            Rule::new(
                "widen-underfit",
                Architect,
                TrainLossFlat { ratio: 0.9 },
                ResponseTemplate::Heuristic(Heuristic::WidenLayers { factor: 2.0, cap: 512 }),
            ),
            Rule::new(
                "dropout-overfit",
                Architect,
                FinalGapAbove(0.15),
                ResponseTemplate::Heuristic(Heuristic::RaiseDropout { step: 0.2 }),
            ),
            Rule::new(
                "keep",
                Architect,
                Always,
                ResponseTemplate::Heuristic(Heuristic::KeepArchitecture),
            ),
        ];
        Self::new(rules).expect("built-in rules are total")
    }
}

fn metrics_gap(m: &EpochMetrics) -> f64 {
    match (m.train_metric_set.accuracy(), m.metric_set.accuracy()) {
        (Some(train), Some(val)) => train - val,
        _ => loss_gap(m.train_loss, m.val_loss),
    }
}

fn summary_gap(s: &EpochSummary) -> f64 {
    match (s.train_accuracy, s.val_accuracy) {
        (Some(train), Some(val)) => train - val,
        _ => loss_gap(s.train_loss, s.val_loss),
    }
}

fn loss_gap(train: f64, val: f64) -> f64 {
    if val > 0.0 {
        1.0 - train / val
    } else {
        0.0
    }
}

fn epoch_of(state: &AgentState) -> usize {
    match state {
        AgentState::Advisor(s) => s.current_metrics.epoch,
        AgentState::Evaluator(s) => s.current_metrics.epoch,
        AgentState::Optimizer(s) => s.current_metrics.epoch,
        AgentState::Architect(s) => s.iteration,
    }
}

fn current_metrics(state: &AgentState) -> Option<&EpochMetrics> {
    match state {
        AgentState::Advisor(s) => Some(&s.current_metrics),
        AgentState::Evaluator(s) => Some(&s.current_metrics),
        AgentState::Optimizer(s) => Some(&s.current_metrics),
        AgentState::Architect(_) => None,
    }
}

fn window(state: &AgentState) -> &[EpochMetrics] {
    match state {
        AgentState::Advisor(s) => &s.recent_metrics,
        _ => &[],
    }
}

impl Condition {
    pub fn holds(&self, state: &AgentState) -> bool {
        match self {
            Condition::Always => true,
            Condition::All(items) => items.iter().all(|c| c.holds(state)),
            Condition::Not(c) => !c.holds(state),
            Condition::EpochAtMost(e) => epoch_of(state) <= *e,
            Condition::RecallSkewAbove(t) => current_metrics(state)
                .and_then(|m| recall_skew(&m.metric_set))
                .is_some_and(|s| s > *t),
            Condition::OverfitGapAbove(t) => current_metrics(state).is_some_and(|m| metrics_gap(m) > *t),
            Condition::ValLossRising { epochs } => {
                let w = window(state);
                *epochs >= 1
                    && w.len() > *epochs
                    && w[w.len() - epochs - 1..]
                        .windows(2)
                        .all(|p| p[1].val_loss > p[0].val_loss)
            }
            Condition::WeightNormGrowthAbove(r) => match window(state) {
                [first, .., last] if first.param_norm > 0.0 => {
                    last.param_norm / first.param_norm - 1.0 > *r
                }
                _ => false,
            },
            Condition::ImprovementBelow(x) => match window(state) {
                [first, .., last] if first.val_loss > 0.0 => {
                    (first.val_loss - last.val_loss) / first.val_loss < *x
                }
                _ => false,
            },
            Condition::MethodActive(m) => match state {
                AgentState::Advisor(s) => s.current_config.feature.methods.contains(m),
                AgentState::Evaluator(s) => s.current_config.feature.methods.contains(m),
                _ => false,
            },
            Condition::ValLossBelowBaseline => match state {
                AgentState::Evaluator(s) => s.current_metrics.val_loss < s.baseline_metrics.val_loss,
                _ => false,
            },
            Condition::TrainLossFlat { ratio } => match state {
                AgentState::Architect(ArchitectState { epochs, .. }) => match epochs.as_slice() {
                    [first, .., last] => last.train_loss >= ratio * first.train_loss,
                    _ => false,
                },
                _ => false,
            },
            Condition::FinalGapAbove(g) => match state {
                AgentState::Architect(s) => s.epochs.last().is_some_and(|e| summary_gap(e) > *g),
                _ => false,
            },
        }
    }
}

fn rebalance(state: &AdvisorState, weight_factor: f64) -> String {
    let mut out = Vec::new();
    let strategy = &state.current_config.strategy;
    if strategy.loss_kind != LossKind::Focal {
        out.push(FieldChange::SetCategorical {
            field: CategoricalField::LossKind,
            value: LossKind::Focal.to_string(),
        });
    }
    if strategy.optimizer_kind != OptimizerKind::Adamw {
        out.push(FieldChange::SetCategorical {
            field: CategoricalField::OptimizerKind,
            value: OptimizerKind::Adamw.to_string(),
        });
    }
    if let crate::trainer::MetricSet::Classification {
        per_class_recall, ..
    } = &state.current_metrics.metric_set
    {
        // Lowest recall; ties go to the lowest class index.
        let worst = per_class_recall
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, &r)| if r < best.1 { (i, r) } else { best })
            .0;
        out.push(FieldChange::ScaleNumeric {
            field: NumericField::element(NumericFamily::ClassWeights, worst),
            factor: weight_factor,
        });
    }
    render_changes(
        "per-class recall is skewed: focal loss, AdamW and a larger weight for the weakest class",
        out,
    )
}

fn render_changes(rationale: &str, changes: Vec<FieldChange>) -> String {
    let delta = ConfigDelta { changes };
    json!({"rationale": rationale, "changes": delta.changes}).to_string()
}

fn summarize(state: &AgentState) -> String {
    let AgentState::Optimizer(s) = state else {
        return json!({"ops": []}).to_string();
    };
    let note = match s.history_digest.last() {
        None => format!(
            "epoch {}: no history yet, validation loss {:.4}",
            s.current_metrics.epoch, s.current_metrics.val_loss
        ),
        Some(last) => {
            let applied: Vec<String> = last
                .delta
                .changes
                .iter()
                .filter(|c| **c != FieldChange::NoChange)
                .map(|c| c.to_string())
                .collect();
            let what = if applied.is_empty() {
                "no change".to_string()
            } else {
                applied.join(", ")
            };
            let verdict = if last.success { "helped" } else { "did not help" };
            format!(
                "epoch {}: {what} {verdict} (validation loss {:.4})",
                last.epoch, last.val_loss
            )
        }
    };
    json!({ "append": note }).to_string()
}

fn architect(state: &AgentState, heuristic: Heuristic) -> String {
    let AgentState::Architect(s) = state else {
        return json!({"rationale": "not an architecture request"}).to_string();
    };
    let arch = &s.current_arch;
    match heuristic {
        Heuristic::WidenLayers { factor, cap } => {
            let widths: Vec<usize> = arch
                .layer_widths
                .iter()
                .map(|&w| ((w as f64 * factor).round() as usize).min(cap))
                .collect();
            json!({"rationale": "training loss stayed high: widen the hidden layers", "layer_widths": widths})
                .to_string()
        }
        Heuristic::RaiseDropout { step } => {
            let dropout = ((arch.dropout + step) * 1e9).round() / 1e9;
            json!({"rationale": "validation lags training: raise dropout", "dropout": dropout}).to_string()
        }
        _ => json!({"rationale": "architecture is adequate", "layer_widths": arch.layer_widths})
            .to_string(),
    }
}

fn render(template: &ResponseTemplate, state: &AgentState) -> String {
    match template {
        ResponseTemplate::Static(text) => text.clone(),
        ResponseTemplate::Changes { rationale, changes } => render_changes(rationale, changes.clone()),
        ResponseTemplate::Cycle(items) => {
            let i = epoch_of(state).saturating_sub(1) % items.len().max(1);
            items
                .get(i)
                .map(|t| render(t, state))
                .unwrap_or_else(|| render_changes("empty cycle", vec![FieldChange::NoChange]))
        }
        ResponseTemplate::Heuristic(h) => match (h, state) {
            (Heuristic::RebalanceClasses { weight_factor }, AgentState::Advisor(s)) => {
                rebalance(s, *weight_factor)
            }
            (Heuristic::RebalanceClasses { .. }, _) => {
                render_changes("not an advisor request", vec![FieldChange::NoChange])
            }
            (Heuristic::SummarizeLastOutcome, _) => summarize(state),
            (h, _) => architect(state, *h),
        },
    }
}

/// First matching rule's response for `kind`.
pub fn scripted_generate(rules: &ScriptedRuleSet, kind: AgentKind, state: &AgentState) -> String {
    rules
        .rules
        .iter()
        .filter(|r| r.agent == kind)
        .find(|r| r.when.holds(state))
        .map(|r| render(&r.respond, state))
        .unwrap_or_else(|| super::FAILURE_SENTINEL.to_string())
}

/// Name of the rule that fires, for diagnostics.
pub fn matching_rule<'a>(rules: &'a ScriptedRuleSet, state: &AgentState) -> Option<&'a str> {
    let kind = state.kind();
    rules
        .rules
        .iter()
        .filter(|r| r.agent == kind)
        .find(|r| r.when.holds(state))
        .map(|r| r.name.as_str())
}

#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    rules: ScriptedRuleSet,
}

impl ScriptedBackend {
    pub fn new(rules: ScriptedRuleSet) -> Self {
        Self { rules }
    }

    pub fn rules(&self) -> &ScriptedRuleSet {
        &self.rules
    }
}

impl Default for ScriptedBackend {
    fn default() -> Self {
        Self::new(ScriptedRuleSet::default_rules())
    }
}

impl Backend for ScriptedBackend {
    fn generate(&self, request: &GenerationRequest) -> Generation {
        match extract_state(&request.user_text) {
            Some(state) => Generation::ok(scripted_generate(&self.rules, state.kind(), &state), 1),
            None => Generation::failed(1, "prompt carries no readable state block".into()),
        }
    }

    fn describe(&self) -> String {
        format!("scripted ({} rules)", self.rules.rules.len())
    }
}
