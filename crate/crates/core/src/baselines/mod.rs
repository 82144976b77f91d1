//! Comparison methods sharing the trainer, splits and budget accounting of
//! the tuning loop: default configuration, random search and grid search.

use crate::data::Splits;
use crate::orchestrator::{
    train_configuration, BudgetLedger, HistoryEntry, Method, RunConfig, RunRecord, RunStatus,
};
use crate::rng::{derived, stream};
use crate::space::{
    default_config, enumerate_grid, sample_random, Configuration, ConfigurationSpace, GridResolution, SpaceError,
};
use crate::trainer::{evaluate, EpochMetrics, MetricSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEntry {
    pub config: Configuration,
    /// Validation loss after the last epoch; `None` when training failed.
    pub val_loss: Option<f64>,
    pub val_metrics: Option<MetricSet>,
    pub test_loss: Option<f64>,
    pub test_metrics: Option<MetricSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub evaluated: Vec<SearchEntry>,
    /// Index of the entry with the lowest validation loss.
    pub best: Option<usize>,
    pub budget_used: usize,
}

/// Lowest validation loss, earliest on ties; failed entries never win.
pub fn best_index(entries: &[SearchEntry]) -> Option<usize> {
    entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| e.val_loss.filter(|v| v.is_finite()).map(|v| (i, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, best)) if best <= v => acc,
            _ => Some((i, v)),
        })
        .map(|(i, _)| i)
}

struct Evaluated {
    entry: SearchEntry,
    metrics: Vec<EpochMetrics>,
}

fn evaluate_candidate(config: &Configuration, splits: &Splits, run: &RunConfig, index: usize) -> Evaluated {
    let epochs = run.budget.epochs_per_evaluation;
    let trained = train_configuration(config, splits, epochs, run.seed, &[index as u64]).and_then(|t| {
        let test = evaluate(&t.model, &splits.test)?;
        Ok((t, test))
    });
    match trained {
        Ok((t, test)) => {
            let last = t.metrics.last().expect("at least one epoch");
            Evaluated {
                entry: SearchEntry {
                    config: config.clone(),
                    val_loss: Some(last.val_loss),
                    val_metrics: Some(last.metric_set.clone()),
                    test_loss: Some(test.loss),
                    test_metrics: Some(test.metrics),
                    error: None,
                },
                metrics: t.metrics,
            }
        }
        Err(e) => Evaluated {
            entry: SearchEntry {
                config: config.clone(),
                val_loss: None,
                val_metrics: None,
                test_loss: None,
                test_metrics: None,
                error: Some(e.to_string()),
            },
            metrics: Vec::new(),
        },
    }
}

/// Trains the candidates in order until the budget runs out. Evaluations
/// run in parallel; each draws from streams keyed by its index, so the
/// outcome matches a sequential run.
fn search(run: &RunConfig, splits: &Splits, space: &ConfigurationSpace, candidates: Vec<Configuration>) -> (RunRecord, SearchResult) {
    let mut ledger = BudgetLedger::new(run.budget.max_configurations);
    let mut admitted = Vec::new();
    for (i, c) in candidates.into_iter().enumerate() {
        if ledger.consume(format!("{} #{}", run.method, i + 1), run.budget.epochs_per_evaluation).is_err() {
            break;
        }
        admitted.push(c);
    }
    let evaluated: Vec<Evaluated> = admitted
        .par_iter()
        .enumerate()
        .map(|(i, c)| evaluate_candidate(c, splits, run, i))
        .collect();
    let entries: Vec<SearchEntry> = evaluated.iter().map(|e| e.entry.clone()).collect();
    let best = best_index(&entries);
    let result = SearchResult {
        evaluated: entries,
        best,
        budget_used: ledger.used(),
    };

    let initial = default_config(space);
    let record = match best {
        Some(b) => {
            let chosen = &evaluated[b];
            RunRecord {
                run_config: run.clone(),
                dataset_hash: splits.dataset_hash.clone(),
                status: RunStatus::Completed,
                backend: None,
                initial_config: initial,
                final_config: chosen.entry.config.clone(),
                history: chosen
                    .metrics
                    .iter()
                    .map(|m| HistoryEntry::untuned(&chosen.entry.config, m.clone()))
                    .collect(),
                iterations: Vec::new(),
                iteration_index: b + 1,
                final_test_metrics: chosen.entry.test_metrics.clone(),
                final_test_loss: chosen.entry.test_loss,
                budget: ledger,
                search: Some(result.clone()),
                transcript_path: None,
            }
        }
        None => RunRecord {
            run_config: run.clone(),
            dataset_hash: splits.dataset_hash.clone(),
            status: RunStatus::Failed {
                reason: result
                    .evaluated
                    .iter()
                    .find_map(|e| e.error.clone())
                    .unwrap_or_else(|| "no configuration was evaluated".into()),
            },
            backend: None,
            final_config: initial.clone(),
            initial_config: initial,
            history: Vec::new(),
            iterations: Vec::new(),
            iteration_index: 0,
            final_test_metrics: None,
            final_test_loss: None,
            budget: ledger,
            search: Some(result.clone()),
            transcript_path: None,
        },
    };
    (record, result)
}

/// Trains the default configuration once.
pub fn run_no_tuning(run: &RunConfig, splits: &Splits, space: &ConfigurationSpace) -> RunRecord {
    let (mut record, _) = search(run, splits, space, vec![default_config(space)]);
    record.search = None;
    record
}

/// Samples `max_configurations` configurations and keeps the one with the
/// lowest validation loss.
pub fn run_random_search(run: &RunConfig, splits: &Splits, space: &ConfigurationSpace) -> (RunRecord, SearchResult) {
    let candidates = (0..run.budget.max_configurations)
        .map(|k| sample_random(space, &mut derived(run.seed, &[stream::SAMPLE, k as u64])))
        .collect();
    search(run, splits, space, candidates)
}

/// Evaluates the grid in enumeration order, truncated at the budget.
pub fn run_grid_search(
    run: &RunConfig,
    splits: &Splits,
    space: &ConfigurationSpace,
    resolution: &GridResolution,
) -> Result<(RunRecord, SearchResult), SpaceError> {
    let grid = enumerate_grid(space, resolution)?;
    Ok(search(run, splits, space, grid))
}

/// Dispatches a non-agent method.
pub fn run_baseline(
    run: &RunConfig,
    splits: &Splits,
    space: &ConfigurationSpace,
    resolution: &GridResolution,
) -> Result<RunRecord, SpaceError> {
    Ok(match run.method {
        Method::NoTuning => run_no_tuning(run, splits, space),
        Method::Random => run_random_search(run, splits, space).0,
        Method::Grid => run_grid_search(run, splits, space, resolution)?.0,
        Method::Lgt => panic!("the tuning loop is not a baseline"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(v: Option<f64>) -> SearchEntry {
        SearchEntry {
            config: default_config(&ConfigurationSpace::for_task(crate::TaskType::Regression)),
            val_loss: v,
            val_metrics: None,
            test_loss: None,
            test_metrics: None,
            error: None,
        }
    }

    #[test]
    fn best_skips_failures_and_prefers_earliest() {
        let e = vec![entry(None), entry(Some(0.5)), entry(Some(0.2)), entry(Some(0.2)), entry(Some(f64::NAN))];
        assert_eq!(best_index(&e), Some(2));
        assert_eq!(best_index(&[entry(None)]), None);
    }
}
