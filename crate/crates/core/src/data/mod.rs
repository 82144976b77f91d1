//! Dataset ingestion, splitting and synthetic generators.

pub mod csv;
pub mod split;
pub mod synthetic;

pub use self::csv::{load_csv, load_csv_from_reader};
pub use split::{partition, split_and_standardize, Splits};
pub use synthetic::{make_linear_regression, make_synthetic, SyntheticKind, SyntheticParams};

use crate::task::TaskType;
use crate::trainer::{Dataset, ImageShape, TrainError};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("target column `{0}` not found")]
    MissingTarget(String),
    #[error("row {row}, column `{column}`: cannot parse {value:?} as a number")]
    NonNumeric {
        /// One-based data row (the header is row 0).
        row: usize,
        column: String,
        value: String,
    },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Train(#[from] TrainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetColumn {
    Index(usize),
    Name(String),
}

impl Default for TargetColumn {
    fn default() -> Self {
        TargetColumn::Name("target".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DatasetSource {
    CsvPath { path: PathBuf },
    Builtin {
        kind: SyntheticKind,
        #[serde(default)]
        params: SyntheticParams,
        #[serde(default)]
        seed: u64,
    },
}

fn default_split_ratio() -> f64 {
    0.8
}

fn default_split_seed() -> u64 {
    42
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub source: DatasetSource,
    #[serde(default)]
    pub target_column: TargetColumn,
    pub task: TaskType,
    #[serde(default = "default_split_ratio")]
    pub split_ratio: f64,
    #[serde(default = "default_split_seed")]
    pub split_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_shape: Option<ImageShape>,
}

impl DatasetManifest {
    pub fn builtin(name: &str, kind: SyntheticKind, params: SyntheticParams, seed: u64) -> Self {
        let task = params.task(kind);
        Self {
            name: name.to_string(),
            source: DatasetSource::Builtin { kind, params, seed },
            target_column: TargetColumn::default(),
            task,
            split_ratio: default_split_ratio(),
            split_seed: default_split_seed(),
            image_shape: None,
        }
    }

    pub fn csv(name: &str, path: impl Into<PathBuf>, target: TargetColumn, task: TaskType) -> Self {
        Self {
            name: name.to_string(),
            source: DatasetSource::CsvPath { path: path.into() },
            target_column: target,
            task,
            split_ratio: default_split_ratio(),
            split_seed: default_split_seed(),
            image_shape: None,
        }
    }

    pub fn check(&self) -> Result<(), DataError> {
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(DataError::Invalid(format!(
                "split_ratio {} must lie in (0, 1)",
                self.split_ratio
            )));
        }
        if let DatasetSource::Builtin { kind, params, .. } = &self.source {
            if params.task(*kind) != self.task {
                return Err(DataError::Invalid(format!(
                    "manifest task {} does not match the {kind:?} generator ({})",
                    self.task,
                    params.task(*kind)
                )));
            }
        }
        Ok(())
    }

    /// Loads or generates the full dataset (before splitting).
    pub fn load(&self) -> Result<Dataset, DataError> {
        self.check()?;
        let data = match &self.source {
            DatasetSource::CsvPath { path } => load_csv(self, path)?,
            DatasetSource::Builtin { kind, params, seed } => make_synthetic(*kind, params, *seed),
        };
        match self.image_shape {
            Some(shape) => Ok(data.with_image_shape(shape)?),
            None => Ok(data),
        }
    }
}
