//! Report files built from run records: a per-method summary, loss curves
//! and the configuration changes applied by the tuning loop.

use crate::orchestrator::{Method, RunRecord};
use crate::trainer::MetricSet;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub const SUMMARY_CSV: &str = "summary.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const CONFIG_EVOLUTION_CSV: &str = "config_evolution.csv";
pub const LOSS_CURVE_DIR: &str = "loss_curves";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no run records to report")]
    Empty,
    #[error("records mix classification and regression runs")]
    MixedTasks,
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Mean and sample standard deviation (n - 1). With one value the standard
/// deviation is 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: Method,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

fn is_classification(record: &RunRecord) -> bool {
    match &record.final_test_metrics {
        Some(MetricSet::Classification { .. }) => true,
        Some(MetricSet::Regression { .. }) => false,
        None => record.initial_config.strategy.loss_kind.is_classification(),
    }
}

/// Per (method, metric) statistics over the completed records, with
/// `test_loss` first and the task metrics after it.
pub fn summarize(records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut grouped: BTreeMap<Method, Vec<(String, f64)>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.status.is_completed()) {
        let values = grouped.entry(r.method()).or_default();
        if let Some(loss) = r.final_test_loss {
            values.push(("test_loss".into(), loss));
        }
        if let Some(m) = &r.final_test_metrics {
            values.extend(m.named_values().into_iter().map(|(k, v)| (k.to_string(), v)));
        }
    }
    let mut rows = Vec::new();
    for (method, values) in grouped {
        let mut order: Vec<String> = Vec::new();
        for (k, _) in &values {
            if !order.contains(k) {
                order.push(k.clone());
            }
        }
        for metric in order {
            let xs: Vec<f64> = values.iter().filter(|(k, _)| *k == metric).map(|(_, v)| *v).collect();
            let (mean, std) = mean_std(&xs);
            rows.push(SummaryRow {
                method,
                metric,
                mean,
                std,
                n: xs.len(),
            });
        }
    }
    rows
}

/// Paths of the files written by [`emit_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub summary_csv: PathBuf,
    pub summary_txt: PathBuf,
    pub config_evolution_csv: PathBuf,
    pub loss_curves: Vec<PathBuf>,
}

pub fn loss_curve_name(method: Method, seed: u64) -> String {
    format!("{method}_seed{seed}.csv")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the summary CSV and text table, one loss-curve CSV per run and
/// the configuration-evolution CSV under `out_dir`.
pub fn emit_report(records: &[RunRecord], out_dir: &Path) -> Result<ReportFiles, ReportError> {
    let first = records.first().ok_or(ReportError::Empty)?;
    let classification = is_classification(first);
    if records.iter().any(|r| is_classification(r) != classification) {
        return Err(ReportError::MixedTasks);
    }
    let curves_dir = out_dir.join(LOSS_CURVE_DIR);
    std::fs::create_dir_all(&curves_dir).map_err(io_err(&curves_dir))?;

    let rows = summarize(records);
    let summary_csv = out_dir.join(SUMMARY_CSV);
    let mut w = csv::Writer::from_path(&summary_csv)?;
    w.write_record(["method", "metric", "mean", "std", "n", "single_sample"])?;
    for r in &rows {
        w.write_record([
            r.method.to_string(),
            r.metric.clone(),
            r.mean.to_string(),
            r.std.to_string(),
            r.n.to_string(),
            (r.n == 1).to_string(),
        ])?;
    }
    w.flush().map_err(io_err(&summary_csv))?;

    let mut loss_curves = Vec::new();
    for r in records {
        let path = curves_dir.join(loss_curve_name(r.method(), r.seed()));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["epoch", "train_loss", "val_loss"])?;
        for e in &r.history {
            w.write_record([
                e.epoch.to_string(),
                e.metrics.train_loss.to_string(),
                e.metrics.val_loss.to_string(),
            ])?;
        }
        w.flush().map_err(io_err(&path))?;
        loss_curves.push(path);
    }

    let config_evolution_csv = out_dir.join(CONFIG_EVOLUTION_CSV);
    let mut w = csv::Writer::from_path(&config_evolution_csv)?;
    w.write_record(["method", "seed", "iteration", "epoch", "delta", "applied", "success", "rationale"])?;
    for r in records {
        for it in &r.iterations {
            for e in &it.history {
                let applied: Vec<String> = e.apply_report.events.iter().map(ToString::to_string).collect();
                w.write_record([
                    r.method().to_string(),
                    r.seed().to_string(),
                    it.index.to_string(),
                    e.epoch.to_string(),
                    e.delta_applied.to_json(),
                    applied.join("; "),
                    e.success_bit.to_string(),
                    e.rationales.advisor.clone(),
                ])?;
            }
        }
    }
    w.flush().map_err(io_err(&config_evolution_csv))?;

    let summary_txt = out_dir.join(SUMMARY_TXT);
    std::fs::write(&summary_txt, summary_table(records, &rows)).map_err(io_err(&summary_txt))?;

    Ok(ReportFiles {
        summary_csv,
        summary_txt,
        config_evolution_csv,
        loss_curves,
    })
}

/// Plain-text table of `mean ± std` per method and metric.
pub fn summary_table(records: &[RunRecord], rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    let failed = records.iter().filter(|r| !r.status.is_completed()).count();
    let _ = writeln!(out, "{} runs, {} failed", records.len(), failed);
    let _ = writeln!(out, "{:<10} {:<10} {:>22} {:>4}", "method", "metric", "mean ± std", "n");
    for r in rows {
        let cell = format!("{:.4} ± {:.4}", r.mean, r.std);
        let _ = writeln!(out, "{:<10} {:<10} {:>22} {:>4}", r.method.as_str(), r.metric, cell, r.n);
    }
    out
}
