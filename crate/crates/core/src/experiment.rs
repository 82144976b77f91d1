//! Experiment configuration and the (method, seed) runner.

use crate::backend::{BackendConfig, BackendError, GenerationRequest, SYSTEM_TEXT};
use crate::baselines::run_baseline;
use crate::data::{DataError, DatasetManifest, Splits};
use crate::orchestrator::{run_lgt, Budget, Method, RunConfig, RunRecord, Transcript};
use crate::space::{ConfigurationSpace, GridResolution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

pub const RECORD_FILE: &str = "record.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    (42..=51).collect()
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Grid used when none is configured: 3 learning rates x 2 weight decays x
/// 2 dropouts x 2 optimizers = 24 points.
pub fn default_grid() -> GridResolution {
    [("learning_rate", 3), ("weight_decay", 2), ("dropout", 2), ("optimizer_kind", 2)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetManifest,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub budget: Budget,
    #[serde(default)]
    pub backend: BackendConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_grid")]
    pub grid_resolution: GridResolution,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetManifest) -> Self {
        Self {
            dataset,
            methods: default_methods(),
            seeds: default_seeds(),
            budget: Budget::default(),
            backend: BackendConfig::default(),
            output_dir: default_output_dir(),
            grid_resolution: default_grid(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut config: Self = serde_json::from_str(&text).map_err(|source| ExperimentError::Json {
            path: path.display().to_string(),
            source,
        })?;
        // Relative CSV paths resolve against the config file's directory.
        if let crate::data::DatasetSource::CsvPath { path: csv } = &mut config.dataset.source {
            if csv.is_relative() {
                if let Some(dir) = path.parent() {
                    *csv = dir.join(&*csv);
                }
            }
        }
        Ok(config)
    }

    /// Checks everything that can be checked without training.
    pub fn check(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            return bad("seeds must be distinct".into());
        }
        if self.methods.is_empty() {
            return bad("methods must not be empty".into());
        }
        if self.methods.iter().collect::<BTreeSet<_>>().len() != self.methods.len() {
            return bad("methods must be distinct".into());
        }
        self.budget.check().map_err(ExperimentError::Config)?;
        self.dataset.check()?;
        GenerationRequest::new(SYSTEM_TEXT, "", &self.backend)?;
        if let Some(rules) = &self.backend.rules {
            rules.check()?;
        }
        if self.methods.contains(&Method::Grid) {
            let space = self.space();
            crate::space::enumerate_grid(&space, &self.grid_resolution)
                .map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn space(&self) -> ConfigurationSpace {
        let space = ConfigurationSpace::for_task(self.dataset.task);
        if self.dataset.image_shape.is_some() {
            space.with_image_augmentations()
        } else {
            space
        }
    }

    /// Directory of one run, relative to `output_dir`.
    pub fn run_dir(method: Method, seed: u64) -> PathBuf {
        PathBuf::from(method.as_str()).join(format!("seed-{seed}"))
    }
}

/// Every record of an experiment, in (method, seed) order.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub transcripts: Vec<Option<Transcript>>,
}

impl ExperimentOutcome {
    pub fn failures(&self) -> Vec<&RunRecord> {
        self.records.iter().filter(|r| !r.status.is_completed()).collect()
    }
}

/// Runs one (method, seed) pair on prepared splits.
pub fn run_one(
    config: &ExperimentConfig,
    splits: &Splits,
    space: &ConfigurationSpace,
    backend: &dyn crate::backend::Backend,
    method: Method,
    seed: u64,
) -> (RunRecord, Option<Transcript>) {
    let run = RunConfig {
        dataset: config.dataset.name.clone(),
        method,
        seed,
        budget: config.budget,
    };
    match method {
        Method::Lgt => {
            let mut transcript = Transcript::new();
            let mut record = run_lgt(&run, splits, space, backend, &config.backend, &mut transcript);
            record.transcript_path = Some(TRANSCRIPT_FILE.into());
            (record, Some(transcript))
        }
        _ => {
            let record = run_baseline(&run, splits, space, &config.grid_resolution)
                .expect("grid resolution was checked with the config");
            (record, None)
        }
    }
}

/// Runs every (method, seed) pair in memory. Pairs run in parallel; each is
/// a pure function of the config, so the order of completion is irrelevant.
pub fn execute(config: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    execute_pairs(config, &pairs(config))
}

pub fn pairs(config: &ExperimentConfig) -> Vec<(Method, u64)> {
    config
        .methods
        .iter()
        .flat_map(|&m| config.seeds.iter().map(move |&s| (m, s)))
        .collect()
}

pub fn execute_pairs(config: &ExperimentConfig, pairs: &[(Method, u64)]) -> Result<ExperimentOutcome, ExperimentError> {
    config.check()?;
    let data = config.dataset.load()?;
    let splits = Splits::prepare(&data, config.dataset.split_ratio, config.dataset.split_seed)?;
    let space = config.space();
    let backend = if pairs.iter().any(|(m, _)| *m == Method::Lgt) {
        Some(config.backend.build()?)
    } else {
        None
    };
    let results: Vec<(RunRecord, Option<Transcript>)> = pairs
        .par_iter()
        .map(|&(method, seed)| {
            let backend: &dyn crate::backend::Backend = match &backend {
                Some(b) => b.as_ref(),
                None => &crate::backend::FailingBackend,
            };
            run_one(config, &splits, &space, backend, method, seed)
        })
        .collect();
    let (records, transcripts) = results.into_iter().unzip();
    Ok(ExperimentOutcome { records, transcripts })
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    std::fs::write(path, contents).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `<out>/<method>/seed-<seed>/record.json` (plus `transcript.jsonl`
/// for the tuning loop) and `<out>/experiment.json`.
pub fn write_outcome(config: &ExperimentConfig, outcome: &ExperimentOutcome, out: &Path) -> Result<(), ExperimentError> {
    let mkdir = |p: &Path| {
        std::fs::create_dir_all(p).map_err(|source| ExperimentError::Io {
            path: p.display().to_string(),
            source,
        })
    };
    mkdir(out)?;
    write_file(
        &out.join("experiment.json"),
        &serde_json::to_string_pretty(config).expect("config serializes"),
    )?;
    for (record, transcript) in outcome.records.iter().zip(&outcome.transcripts) {
        let dir = out.join(ExperimentConfig::run_dir(record.method(), record.seed()));
        mkdir(&dir)?;
        write_file(&dir.join(RECORD_FILE), &record.to_json())?;
        if let Some(t) = transcript {
            write_file(&dir.join(TRANSCRIPT_FILE), &t.to_jsonl())?;
        }
    }
    Ok(())
}

/// Runs the whole experiment and writes it under `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>, ExperimentError> {
    let outcome = execute(config)?;
    write_outcome(config, &outcome, &config.output_dir)?;
    for r in outcome.failures() {
        log::warn!("{} seed {} failed: {:?}", r.method(), r.seed(), r.status);
    }
    Ok(outcome.records)
}

/// Reads every `record.json` below `dir`, sorted by (method, seed).
pub fn load_records(dir: &Path) -> Result<Vec<RunRecord>, ExperimentError> {
    let mut records = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| ExperimentError::Io {
            path: dir.display().to_string(),
            source: std::io::Error::other(e),
        })?;
        if entry.file_name() != RECORD_FILE {
            continue;
        }
        let path = entry.path();
        let text = std::fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let record: RunRecord = serde_json::from_str(&text).map_err(|source| ExperimentError::Json {
            path: path.display().to_string(),
            source,
        })?;
        records.push(record);
    }
    records.sort_by_key(|r| (r.method(), r.seed()));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SyntheticKind, SyntheticParams};

    fn config() -> ExperimentConfig {
        ExperimentConfig::new(DatasetManifest::builtin(
            "blobs",
            SyntheticKind::BlobsClassification,
            SyntheticParams::default(),
            1,
        ))
    }

    #[test]
    fn seeds_default_to_42_through_51() {
        let json = r#"{"dataset": {"name": "b", "source": {"type": "builtin", "kind": "blobs_classification"}, "task": {"classification": {"classes": 3}}}}"#;
        let parsed: Result<ExperimentConfig, _> = serde_json::from_str(json);
        let c = parsed.unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(c.seeds, (42..=51).collect::<Vec<_>>());
        assert_eq!(c.methods.len(), 4);
    }

    #[test]
    fn duplicate_seeds_are_rejected() {
        let mut c = config();
        c.seeds = vec![1, 1];
        assert!(c.check().is_err());
        c.seeds = vec![];
        assert!(c.check().is_err());
    }

    #[test]
    fn default_grid_is_valid() {
        let c = config();
        c.check().unwrap();
        assert_eq!(crate::space::enumerate_grid(&c.space(), &c.grid_resolution).unwrap().len(), 24);
    }
}
