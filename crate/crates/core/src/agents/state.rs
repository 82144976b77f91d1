//! Structured inputs handed to each agent.

use crate::space::{ArchSpec, ConfigDelta, Configuration, ConfigurationSpace, NumericFamily};
use crate::trainer::{EpochMetrics, MetricSet};
use serde::{Deserialize, Serialize};

use super::METRIC_WINDOW;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorState {
    pub current_metrics: EpochMetrics,
    /// The last `METRIC_WINDOW` epochs, oldest first, ending with the
    /// current one.
    pub recent_metrics: Vec<EpochMetrics>,
    pub current_config: Configuration,
    pub space_summary: String,
    /// Epochs dropped from `recent_metrics` to fit the prompt budget.
    #[serde(default)]
    pub elided_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatorState {
    pub current_metrics: EpochMetrics,
    pub current_config: Configuration,
    pub baseline_metrics: EpochMetrics,
    pub baseline_config: Configuration,
}

/// One epoch as seen by the prompt optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DigestEntry {
    pub epoch: usize,
    pub delta: ConfigDelta,
    pub success: bool,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_accuracy: Option<f64>,
}

impl DigestEntry {
    pub fn new(metrics: &EpochMetrics, delta: &ConfigDelta, success: bool) -> Self {
        Self {
            epoch: metrics.epoch,
            delta: delta.clone(),
            success,
            train_loss: metrics.train_loss,
            val_loss: metrics.val_loss,
            val_accuracy: metrics.metric_set.accuracy(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerAgentState {
    pub history_digest: Vec<DigestEntry>,
    pub current_metrics: EpochMetrics,
    #[serde(default)]
    pub elided_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub train_accuracy: Option<f64>,
    pub val_accuracy: Option<f64>,
}

impl From<&EpochMetrics> for EpochSummary {
    fn from(m: &EpochMetrics) -> Self {
        Self {
            epoch: m.epoch,
            train_loss: m.train_loss,
            val_loss: m.val_loss,
            train_accuracy: m.train_metric_set.accuracy(),
            val_accuracy: m.metric_set.accuracy(),
        }
    }
}

/// Input of the between-iteration architecture pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectState {
    /// One-based index of the iteration that just finished.
    pub iteration: usize,
    pub current_arch: ArchSpec,
    pub epochs: Vec<EpochSummary>,
    pub width_bounds: (f64, f64),
    pub layer_count_bounds: (f64, f64),
    pub dropout_bounds: (f64, f64),
    pub activations: Vec<String>,
    #[serde(default)]
    pub elided_epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Advisor,
    Evaluator,
    Optimizer,
    Architect,
}

impl AgentKind {
    pub const ALL: [AgentKind; 4] = [
        AgentKind::Advisor,
        AgentKind::Evaluator,
        AgentKind::Optimizer,
        AgentKind::Architect,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AgentKind::Advisor => "advisor",
            AgentKind::Evaluator => "evaluator",
            AgentKind::Optimizer => "optimizer",
            AgentKind::Architect => "architect",
        }
    }
}

impl std::fmt::Display for AgentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "agent", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum AgentState {
    Advisor(AdvisorState),
    Evaluator(EvaluatorState),
    Optimizer(OptimizerAgentState),
    Architect(ArchitectState),
}

impl AgentState {
    pub fn kind(&self) -> AgentKind {
        match self {
            AgentState::Advisor(_) => AgentKind::Advisor,
            AgentState::Evaluator(_) => AgentKind::Evaluator,
            AgentState::Optimizer(_) => AgentKind::Optimizer,
            AgentState::Architect(_) => AgentKind::Architect,
        }
    }

    /// Canonical JSON: field order follows the type definitions.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("agent state serializes")
    }

    /// Drops the oldest per-epoch entry, keeping at least the latest one.
    /// Returns false when nothing is left to drop.
    pub fn elide_oldest(&mut self) -> bool {
        fn drop_first<T>(items: &mut Vec<T>, counter: &mut usize) -> bool {
            if items.len() > 1 {
                items.remove(0);
                *counter += 1;
                true
            } else {
                false
            }
        }
        match self {
            AgentState::Advisor(s) => drop_first(&mut s.recent_metrics, &mut s.elided_epochs),
            AgentState::Optimizer(s) => drop_first(&mut s.history_digest, &mut s.elided_epochs),
            AgentState::Architect(s) => drop_first(&mut s.epochs, &mut s.elided_epochs),
            AgentState::Evaluator(_) => false,
        }
    }
}

/// Builds the Advisor input from the metrics recorded so far (oldest first).
///
/// # Panics
/// When `metrics` is empty.
pub fn build_advisor_state(
    metrics: &[EpochMetrics],
    config: &Configuration,
    space: &ConfigurationSpace,
) -> AdvisorState {
    let current = metrics.last().expect("at least one epoch of metrics").clone();
    let start = metrics.len().saturating_sub(METRIC_WINDOW);
    AdvisorState {
        current_metrics: current,
        recent_metrics: metrics[start..].to_vec(),
        current_config: config.clone(),
        space_summary: space.summary(),
        elided_epochs: 0,
    }
}

pub fn build_evaluator_state(
    current: &EpochMetrics,
    config: &Configuration,
    baseline: &EpochMetrics,
    baseline_config: &Configuration,
) -> EvaluatorState {
    EvaluatorState {
        current_metrics: current.clone(),
        current_config: config.clone(),
        baseline_metrics: baseline.clone(),
        baseline_config: baseline_config.clone(),
    }
}

pub fn build_optimizer_state(digest: &[DigestEntry], current: &EpochMetrics) -> OptimizerAgentState {
    OptimizerAgentState {
        history_digest: digest.to_vec(),
        current_metrics: current.clone(),
        elided_epochs: 0,
    }
}

pub fn build_architect_state(
    iteration: usize,
    arch: &ArchSpec,
    metrics: &[EpochMetrics],
    space: &ConfigurationSpace,
) -> ArchitectState {
    let bounds = |f: NumericFamily| {
        space
            .domain(f)
            .map(|d| (d.min, d.max))
            .unwrap_or((0.0, 0.0))
    };
    ArchitectState {
        iteration,
        current_arch: arch.clone(),
        epochs: metrics.iter().map(EpochSummary::from).collect(),
        width_bounds: bounds(NumericFamily::LayerWidths),
        layer_count_bounds: (space.layer_count.min, space.layer_count.max),
        dropout_bounds: bounds(NumericFamily::Dropout),
        activations: space.activations.iter().map(|a| a.to_string()).collect(),
        elided_epochs: 0,
    }
}

/// Largest gap between per-class recalls on validation, if classification.
pub fn recall_skew(metrics: &MetricSet) -> Option<f64> {
    match metrics {
        MetricSet::Classification {
            per_class_recall, ..
        } if per_class_recall.len() > 1 => {
            let max = per_class_recall.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let min = per_class_recall.iter().cloned().fold(f64::INFINITY, f64::min);
            Some(max - min)
        }
        _ => None,
    }
}
