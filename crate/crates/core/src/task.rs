use serde::{Deserialize, Serialize};
use std::fmt;

/// Learning task of a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    Classification { classes: usize },
    Regression,
}

impl TaskType {
    pub fn is_classification(&self) -> bool {
        matches!(self, TaskType::Classification { .. })
    }

    /// Number of classes, or `None` for regression.
    pub fn classes(&self) -> Option<usize> {
        match self {
            TaskType::Classification { classes } => Some(*classes),
            TaskType::Regression => None,
        }
    }

    /// Width of the model's output layer.
    pub fn output_dim(&self) -> usize {
        match self {
            TaskType::Classification { classes } => *classes,
            TaskType::Regression => 1,
        }
    }

    pub fn kind(&self) -> TaskKind {
        match self {
            TaskType::Classification { .. } => TaskKind::Classification,
            TaskType::Regression => TaskKind::Regression,
        }
    }
}

impl fmt::Display for TaskType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskType::Classification { classes } => write!(f, "classification({classes})"),
            TaskType::Regression => f.write_str("regression"),
        }
    }
}

/// Task family without the class count, as written in dataset manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Classification,
    Regression,
}
