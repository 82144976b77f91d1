use crate::agents::{
    apply_prompt_delta, base_prompt, build_advisor_state, build_architect_state, build_evaluator_state,
    build_optimizer_state, parse_advisor_response, parse_architect_response, parse_evaluator_response,
    parse_optimizer_response, render_prompt, AgentKind, AgentState, ArchitectResponse, DigestEntry,
    PromptState,
};
use crate::backend::{Backend, BackendConfig, Generation, GenerationRequest, SYSTEM_TEXT};
use crate::data::Splits;
use crate::rng::{derived, stream};
use crate::space::{apply_delta_with, default_config, validate, ApplyOptions, ArchSpec, ConfigurationSpace};
use crate::trainer::{build_model, evaluate, train_epoch, EpochMetrics, MlpModel, OptimizerState, TrainError};
use serde_json::json;

use super::transcript::{Step, Transcript, TranscriptEntry};
use super::{
    append_history, BudgetLedger, HistoryEntry, IterationRecord, Rationales, RunConfig, RunRecord, RunStatus,
};

fn generate(backend: &dyn Backend, config: &BackendConfig, user_text: &str) -> Generation {
    match GenerationRequest::new(SYSTEM_TEXT, user_text, config) {
        Ok(request) => backend.generate(&request),
        Err(e) => Generation::failed(0, e.to_string()),
    }
}

#[allow(clippy::too_many_arguments)]
fn agent_entry(
    iteration: usize,
    epoch: usize,
    step: Step,
    agent: AgentKind,
    request: String,
    generation: &Generation,
    parsed: bool,
    warnings: Vec<String>,
) -> TranscriptEntry {
    let mut e = TranscriptEntry::step(iteration, epoch, step);
    e.agent = Some(agent);
    e.request = Some(request);
    e.response = Some(generation.text.clone());
    e.attempts = Some(generation.attempts);
    e.parsed = Some(parsed);
    e.warnings = warnings;
    if let Some(err) = &generation.error {
        e.warnings.push(format!("backend: {err}"));
    }
    e
}

/// Result of one architecture pass, with what it took to produce it.
#[derive(Debug, Clone)]
pub struct ArchitectOutcome {
    pub arch: ArchSpec,
    pub request: String,
    pub generation: Generation,
    pub response: ArchitectResponse,
}

/// Proposes the architecture for the next iteration from the most recent
/// completed iteration. Any failure yields that iteration's architecture.
pub fn optimize_architecture(
    iterations: &[IterationRecord],
    space: &ConfigurationSpace,
    backend: &dyn Backend,
    config: &BackendConfig,
) -> ArchitectOutcome {
    let last = iterations
        .iter()
        .rev()
        .find(|it| it.completed)
        .or(iterations.last())
        .expect("at least one iteration");
    let state = build_architect_state(last.index, &last.arch, &last.metrics(), space);
    let prompt = PromptState::new(base_prompt(AgentKind::Architect));
    let request = render_prompt(&prompt, &AgentState::Architect(state));
    let generation = generate(backend, config, &request);
    let response = parse_architect_response(&generation.text, space, &last.arch);
    ArchitectOutcome {
        arch: response.arch.clone(),
        request,
        generation,
        response,
    }
}

struct Best {
    iteration: usize,
    val_loss: f64,
    model: MlpModel,
}

/// Runs the agent-guided tuning loop: `budget.iterations` outer iterations
/// of `budget.epochs_per_evaluation` epochs each. Every epoch performs
/// train, advise, apply, evaluate, prompt update and history append in that
/// order. The architecture changes only between iterations. The model of
/// the iteration with the lowest final validation loss is evaluated once on
/// the test split.
pub fn run_lgt(
    run: &RunConfig,
    splits: &Splits,
    space: &ConfigurationSpace,
    backend: &dyn Backend,
    backend_config: &BackendConfig,
    transcript: &mut Transcript,
) -> RunRecord {
    let seed = run.seed;
    let epochs = run.budget.epochs_per_evaluation;
    let initial = default_config(space);
    let mut ledger = BudgetLedger::new(run.budget.max_configurations);
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut status = RunStatus::Completed;
    let mut best: Option<Best> = None;

    let mut advisor_prompt = PromptState::new(base_prompt(AgentKind::Advisor));
    let evaluator_prompt = PromptState::new(base_prompt(AgentKind::Evaluator));
    let optimizer_prompt = PromptState::new(base_prompt(AgentKind::Optimizer));
    let freeze = ApplyOptions {
        freeze_architecture: true,
    };

    let mut config = initial.clone();
    'outer: for it in 0..run.budget.iterations {
        let iteration = it + 1;
        if it > 0 {
            let outcome = optimize_architecture(&iterations, space, backend, backend_config);
            transcript.push(
                agent_entry(
                    iteration,
                    0,
                    Step::Architect,
                    AgentKind::Architect,
                    outcome.request.clone(),
                    &outcome.generation,
                    outcome.response.parsed,
                    outcome.response.warnings.clone(),
                )
                .detail(json!({ "arch": outcome.arch, "rationale": outcome.response.rationale })),
            );
            config.arch = outcome.arch;
        }
        if ledger.consume(format!("iteration {iteration}"), epochs).is_err() {
            break;
        }

        let model_seed = [stream::MODEL_INIT, it as u64];
        let mut model = match build_model(
            &config.arch,
            splits.fit.n_features(),
            splits.fit.task.output_dim(),
            &mut derived(seed, &model_seed),
        ) {
            Ok(m) => m,
            Err(e) => {
                status = RunStatus::Failed { reason: e.to_string() };
                break;
            }
        };
        let mut opt_state = OptimizerState::new();
        let mut rng = derived(seed, &[stream::EPOCH, it as u64]);
        let mut record = IterationRecord {
            index: iteration,
            arch: config.arch.clone(),
            history: Vec::new(),
            completed: false,
        };
        let mut metrics_so_far: Vec<EpochMetrics> = Vec::new();
        let mut digest: Vec<DigestEntry> = Vec::new();

        for t in 0..epochs {
            let epoch = t + 1;
            // 1. train
            let metrics = match train_epoch(&mut model, &splits.fit, &splits.val, &config, t, epochs, &mut opt_state, &mut rng) {
                Ok(m) => m,
                Err(e) => {
                    transcript.push(
                        TranscriptEntry::step(iteration, epoch, Step::Train).detail(json!({ "error": e.to_string() })),
                    );
                    status = RunStatus::Failed { reason: e.to_string() };
                    iterations.push(record);
                    break 'outer;
                }
            };
            transcript.push(TranscriptEntry::step(iteration, epoch, Step::Train).detail(json!({
                "train_loss": metrics.train_loss,
                "val_loss": metrics.val_loss,
            })));
            metrics_so_far.push(metrics.clone());

            // 2. advise
            let advisor_snapshot = advisor_prompt.clone();
            let state = build_advisor_state(&metrics_so_far, &config, space);
            let request = render_prompt(&advisor_prompt, &AgentState::Advisor(state));
            let generation = generate(backend, backend_config, &request);
            let advice = parse_advisor_response(&generation.text, space);
            transcript.push(agent_entry(
                iteration,
                epoch,
                Step::Advise,
                AgentKind::Advisor,
                request,
                &generation,
                advice.parsed,
                advice.warnings.clone(),
            ));

            // 3. apply
            let (staged, report) = apply_delta_with(&config, &advice.delta, space, freeze);
            let validation = validate(&staged, space);
            transcript.push(TranscriptEntry::step(iteration, epoch, Step::Apply).detail(json!({
                "delta": advice.delta,
                "report": report,
                "valid": validation.is_ok(),
            })));
            let staged = if validation.is_ok() {
                staged
            } else {
                log::error!("staged configuration failed validation; keeping the current one");
                config.clone()
            };

            // 4. evaluate against this iteration's first epoch
            let baseline = &record.history.first().map_or(&metrics, |e| &e.metrics);
            let baseline_config = record.history.first().map_or(&config, |e| &e.config);
            let state = build_evaluator_state(&metrics, &config, baseline, baseline_config);
            let request = render_prompt(&evaluator_prompt, &AgentState::Evaluator(state));
            let generation = generate(backend, backend_config, &request);
            let verdict = parse_evaluator_response(&generation.text);
            transcript.push(agent_entry(
                iteration,
                epoch,
                Step::Evaluate,
                AgentKind::Evaluator,
                request,
                &generation,
                verdict.parsed,
                Vec::new(),
            ));

            // 5. refine the advisor prompt
            digest.push(DigestEntry::new(&metrics, &advice.delta, verdict.success));
            let state = build_optimizer_state(&digest, &metrics);
            let request = render_prompt(&optimizer_prompt, &AgentState::Optimizer(state));
            let generation = generate(backend, backend_config, &request);
            let prompt_delta = parse_optimizer_response(&generation.text);
            let (updated, outcomes) = apply_prompt_delta(&advisor_prompt, &prompt_delta);
            advisor_prompt = updated;
            transcript.push(
                agent_entry(
                    iteration,
                    epoch,
                    Step::PromptUpdate,
                    AgentKind::Optimizer,
                    request,
                    &generation,
                    prompt_delta.parsed,
                    prompt_delta.warnings.clone(),
                )
                .detail(json!({ "outcomes": outcomes })),
            );

            // 6. history
            let entry = HistoryEntry {
                epoch,
                config: config.clone(),
                delta_applied: advice.delta,
                apply_report: report,
                next_config: staged.clone(),
                metrics,
                success_bit: verdict.success,
                advisor_prompt_snapshot: Some(advisor_snapshot),
                rationales: Rationales {
                    advisor: advice.rationale,
                    evaluator: verdict.reason,
                    optimizer: if prompt_delta.parsed {
                        format!("{} note op(s)", prompt_delta.ops.len())
                    } else {
                        crate::agents::PARSE_FAILURE.to_string()
                    },
                },
            };
            append_history(&mut record.history, entry).expect("epochs are appended in order");
            transcript.push(
                TranscriptEntry::step(iteration, epoch, Step::HistoryAppend)
                    .detail(json!({ "history_len": record.history.len() })),
            );
            config = staged;
        }

        record.completed = true;
        let val_loss = record.final_val_loss().unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|b| val_loss < b.val_loss) {
            best = Some(Best {
                iteration,
                val_loss,
                model,
            });
        }
        iterations.push(record);
    }

    finish(run, splits, backend, initial, iterations, best, ledger, status, transcript)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    run: &RunConfig,
    splits: &Splits,
    backend: &dyn Backend,
    initial: crate::space::Configuration,
    iterations: Vec<IterationRecord>,
    best: Option<Best>,
    ledger: BudgetLedger,
    mut status: RunStatus,
    transcript: &mut Transcript,
) -> RunRecord {
    let (iteration_index, test) = match &best {
        Some(b) => (b.iteration, Some(evaluate(&b.model, &splits.test))),
        None => (iterations.len().max(1), None),
    };
    let (final_test_metrics, final_test_loss) = match test {
        Some(Ok(ev)) => (Some(ev.metrics), Some(ev.loss)),
        Some(Err(e)) => {
            status = RunStatus::Failed {
                reason: TrainError::to_string(&e),
            };
            (None, None)
        }
        None => (None, None),
    };
    if let Some(loss) = final_test_loss {
        transcript.push(
            TranscriptEntry::step(iteration_index, 0, Step::Test).detail(json!({ "test_loss": loss })),
        );
    }
    let selected = iterations.iter().find(|it| it.index == iteration_index);
    let history = selected.map(|it| it.history.clone()).unwrap_or_default();
    let final_config = history.last().map_or_else(|| initial.clone(), |e| e.config.clone());
    if status.is_completed() && history.len() != run.budget.epochs_per_evaluation {
        status = RunStatus::Failed {
            reason: "no iteration completed within the budget".into(),
        };
    }
    RunRecord {
        run_config: run.clone(),
        dataset_hash: splits.dataset_hash.clone(),
        status,
        backend: Some(backend.describe()),
        initial_config: initial,
        final_config,
        history,
        iterations,
        iteration_index,
        final_test_metrics,
        final_test_loss,
        budget: ledger,
        search: None,
        transcript_path: None,
    }
}
