//! The epoch-level tuning loop, run records and budget accounting.

pub mod lgt;
pub mod train;
pub mod transcript;

pub use lgt::{optimize_architecture, run_lgt, ArchitectOutcome};
pub use train::{train_configuration, TrainedConfiguration};
pub use transcript::{Step, Transcript, TranscriptEntry};

use crate::agents::PromptState;
use crate::baselines::SearchResult;
use crate::space::{ApplyReport, ArchSpec, ConfigDelta, Configuration};
use crate::trainer::{EpochMetrics, MetricSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NoTuning,
    Random,
    Grid,
    Lgt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::NoTuning, Method::Random, Method::Grid, Method::Lgt];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::NoTuning => "no_tuning",
            Method::Random => "random",
            Method::Grid => "grid",
            Method::Lgt => "lgt",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected no_tuning, random, grid or lgt)"))
    }
}

fn default_max_configurations() -> usize {
    50
}
fn default_epochs() -> usize {
    10
}
fn default_iterations() -> usize {
    3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budget {
    #[serde(default = "default_max_configurations")]
    pub max_configurations: usize,
    #[serde(default = "default_epochs")]
    pub epochs_per_evaluation: usize,
    /// Outer architecture iterations of the tuning loop.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            max_configurations: default_max_configurations(),
            epochs_per_evaluation: default_epochs(),
            iterations: default_iterations(),
        }
    }
}

impl Budget {
    pub fn check(&self) -> Result<(), String> {
        if self.max_configurations < 1 {
            return Err("budget.max_configurations must be >= 1".into());
        }
        if self.epochs_per_evaluation < 1 {
            return Err("budget.epochs_per_evaluation must be >= 1".into());
        }
        if self.iterations < 1 {
            return Err("budget.iterations must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("configuration budget of {max} exhausted")]
pub struct BudgetExhausted {
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    /// Zero-based evaluation index.
    pub index: usize,
    pub label: String,
    pub epochs: usize,
}

/// Counts trained configurations against the cap. Entries are only ever
/// added through [`BudgetLedger::consume`], which refuses past the cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetLedger {
    pub max_configurations: usize,
    pub entries: Vec<LedgerEntry>,
}

impl BudgetLedger {
    pub fn new(max_configurations: usize) -> Self {
        Self {
            max_configurations,
            entries: Vec::new(),
        }
    }

    pub fn used(&self) -> usize {
        self.entries.len()
    }

    pub fn remaining(&self) -> usize {
        self.max_configurations.saturating_sub(self.used())
    }

    pub fn consume(&mut self, label: impl Into<String>, epochs: usize) -> Result<usize, BudgetExhausted> {
        if self.remaining() == 0 {
            return Err(BudgetExhausted {
                max: self.max_configurations,
            });
        }
        let index = self.entries.len();
        self.entries.push(LedgerEntry {
            index,
            label: label.into(),
            epochs,
        });
        Ok(index)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Rationales {
    pub advisor: String,
    pub evaluator: String,
    pub optimizer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    /// One-based.
    pub epoch: usize,
    /// Configuration the epoch was trained under.
    pub config: Configuration,
    pub delta_applied: ConfigDelta,
    pub apply_report: ApplyReport,
    /// Configuration staged for the next epoch.
    pub next_config: Configuration,
    pub metrics: EpochMetrics,
    pub success_bit: bool,
    /// Advisor prompt in force when the delta was proposed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub advisor_prompt_snapshot: Option<PromptState>,
    #[serde(default)]
    pub rationales: Rationales,
}

impl HistoryEntry {
    /// Entry for an epoch with no agent involvement.
    pub fn untuned(config: &Configuration, metrics: EpochMetrics) -> Self {
        Self {
            epoch: metrics.epoch,
            config: config.clone(),
            delta_applied: ConfigDelta::no_change(),
            apply_report: ApplyReport::default(),
            next_config: config.clone(),
            metrics,
            success_bit: false,
            advisor_prompt_snapshot: None,
            rationales: Rationales::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("history has {len} entries; the next entry must be epoch {expected}, got {got}")]
pub struct HistoryError {
    pub len: usize,
    pub expected: usize,
    pub got: usize,
}

/// Appends `entry`, which must carry epoch `history.len() + 1`.
pub fn append_history(history: &mut Vec<HistoryEntry>, entry: HistoryEntry) -> Result<(), HistoryError> {
    let expected = history.len() + 1;
    if entry.epoch != expected || entry.metrics.epoch != expected {
        return Err(HistoryError {
            len: history.len(),
            expected,
            got: entry.epoch,
        });
    }
    history.push(entry);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed { reason: String },
}

impl RunStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, RunStatus::Completed)
    }
}

/// What a single run was asked to do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub dataset: String,
    pub method: Method,
    pub seed: u64,
    pub budget: Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// One-based.
    pub index: usize,
    pub arch: ArchSpec,
    pub history: Vec<HistoryEntry>,
    pub completed: bool,
}

impl IterationRecord {
    pub fn final_val_loss(&self) -> Option<f64> {
        self.history.last().map(|e| e.metrics.val_loss)
    }

    pub fn metrics(&self) -> Vec<EpochMetrics> {
        self.history.iter().map(|e| e.metrics.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_config: RunConfig,
    pub dataset_hash: String,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    pub initial_config: Configuration,
    /// Configuration the reported model was trained under at its last epoch.
    pub final_config: Configuration,
    /// Per-epoch history of the reported model.
    pub history: Vec<HistoryEntry>,
    /// Every outer iteration (tuning loop only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub iterations: Vec<IterationRecord>,
    /// One-based index of the reported iteration or search evaluation.
    pub iteration_index: usize,
    pub final_test_metrics: Option<MetricSet>,
    pub final_test_loss: Option<f64>,
    pub budget: BudgetLedger,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchResult>,
    /// Relative to the record's own directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcript_path: Option<String>,
}

impl RunRecord {
    pub fn method(&self) -> Method {
        self.run_config.method
    }

    pub fn seed(&self) -> u64 {
        self.run_config.seed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("run records serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_refuses_past_the_cap() {
        let mut l = BudgetLedger::new(2);
        assert_eq!(l.consume("a", 10), Ok(0));
        assert_eq!(l.consume("b", 10), Ok(1));
        assert!(l.consume("c", 10).is_err());
        assert_eq!(l.used(), 2);
    }

    #[test]
    fn methods_round_trip_through_strings() {
        for m in Method::ALL {
            assert_eq!(m.as_str().parse::<Method>(), Ok(m));
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
    }
}
