use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use lgt_core::backend::BackendKind;
use lgt_core::experiment::{self, ExperimentConfig};
use lgt_core::fuzz::fuzz_parsers;
use lgt_core::orchestrator::Method;
use lgt_core::report::{emit_report, summarize, summary_table};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lgt", version, about = "Agent-driven training configuration tuning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendArg {
    Scripted,
    Http,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write one record per (method, seed).
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Restrict to these methods (comma separated).
        #[arg(long, value_delimiter = ',')]
        method: Vec<Method>,
        /// Restrict to these seeds (comma separated).
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        /// Output directory; overrides the config's `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize the records under a run directory.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Feed generated responses to every parser.
    FuzzParsers {
        #[arg(long, default_value_t = 10_000)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check an experiment config without running it.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(
    config: PathBuf,
    methods: Vec<Method>,
    seeds: Vec<u64>,
    backend: Option<BackendArg>,
    endpoint: Option<String>,
    model: Option<String>,
    out: Option<PathBuf>,
) -> Result<bool> {
    let mut cfg = ExperimentConfig::from_path(&config)?;
    if !methods.is_empty() {
        cfg.methods = methods;
    }
    if !seeds.is_empty() {
        cfg.seeds = seeds;
    }
    match backend {
        Some(BackendArg::Scripted) => cfg.backend.kind = BackendKind::Scripted,
        Some(BackendArg::Http) => cfg.backend.kind = BackendKind::Http,
        None => {}
    }
    if let Some(e) = endpoint {
        cfg.backend.endpoint_url = e;
    }
    if let Some(m) = model {
        cfg.backend.model_name = m;
    }
    if let Some(o) = out {
        cfg.output_dir = o;
    }
    let records = experiment::run_experiment(&cfg)?;
    let rows = summarize(&records);
    print!("{}", summary_table(&records, &rows));
    println!("records written to {}", cfg.output_dir.display());
    let failed: Vec<_> = records.iter().filter(|r| !r.status.is_completed()).collect();
    for r in &failed {
        eprintln!("failed: {} seed {}: {:?}", r.method(), r.seed(), r.status);
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            method,
            seed,
            backend,
            endpoint,
            model,
            out,
        } => run(config, method, seed, backend, endpoint, model, out),
        Command::Report { input, out } => (|| {
            let records = experiment::load_records(&input)?;
            if records.is_empty() {
                bail!("no record.json files under {}", input.display());
            }
            let files = emit_report(&records, &out).context("writing report")?;
            print!("{}", std::fs::read_to_string(&files.summary_txt)?);
            println!("report written to {}", out.display());
            Ok(true)
        })(),
        Command::FuzzParsers { iterations, seed } => {
            let report = fuzz_parsers(iterations, seed);
            print!("{report}");
            Ok(report.is_clean())
        }
        Command::ValidateConfig { config } => (|| {
            let cfg = ExperimentConfig::from_path(&config)?;
            cfg.check()?;
            println!(
                "ok: {} methods x {} seeds on `{}`",
                cfg.methods.len(),
                cfg.seeds.len(),
                cfg.dataset.name
            );
            Ok(true)
        })(),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
