//! Oracles shared by the integration tests and the acceptance harness.
#![allow(dead_code)]

use lgt_core::data::{make_synthetic, DatasetManifest, Splits, SyntheticKind, SyntheticParams};
use lgt_core::rng::seeded;
use lgt_core::space::{default_config, Activation, ArchSpec, ConfigurationSpace, HyperSpec, LossKind};
use lgt_core::trainer::model::flatten;
use lgt_core::trainer::{build_model, loss_and_grad};
use lgt_core::TaskType;
use ndarray::Array2;
use rand::Rng;

/// Largest relative error between analytic and central-difference
/// gradients of `kind` for a random small model drawn from `seed`. The
/// denominator is floored at 1e-5: below that a central difference with
/// h = 1e-6 is dominated by round-off (one ulp of the loss over 2h is about
/// 1e-10), so near-zero gradients are compared in absolute terms.
pub fn gradient_check(kind: LossKind, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    let classification = kind.is_classification();
    let classes = if classification { rng.random_range(2..=4) } else { 1 };
    let input = rng.random_range(2..=5);
    let n = rng.random_range(3..=8);
    let layers = rng.random_range(1..=2);
    let arch = ArchSpec {
        layer_widths: (0..layers).map(|_| rng.random_range(2..=6)).collect(),
        dropout: 0.0,
        activation: Activation::Tanh,
    };
    let mut model = build_model(&arch, input, classes, &mut rng).unwrap();
    let x = Array2::from_shape_simple_fn((n, input), || rng.random_range(-2.0..2.0));
    let targets: Vec<f64> = (0..n)
        .map(|_| {
            if classification {
                rng.random_range(0..classes) as f64
            } else {
                rng.random_range(-3.0..3.0)
            }
        })
        .collect();
    let hyper = HyperSpec {
        learning_rate: 0.01,
        weight_decay: 0.0,
        momentum: 0.9,
        class_weights: (0..classes).map(|_| rng.random_range(0.5..2.0)).collect(),
        batch_size: n,
        focal_gamma: rng.random_range(0.5..3.0),
    };

    let cache = model.forward_train(&x, None).unwrap();
    let (_, g_out) = loss_and_grad(kind, &cache.outputs, &targets, &hyper).unwrap();
    let analytic = flatten(&model.backward(&cache, &g_out));

    let params = model.flat_params();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let mut loss_at = |delta: f64| {
            let mut p = params.clone();
            p[i] += delta;
            model.set_flat_params(&p);
            let out = model.forward(&x).unwrap();
            loss_and_grad(kind, &out, &targets, &hyper).unwrap().0
        };
        let numeric = (loss_at(h) - loss_at(-h)) / (2.0 * h);
        let a = analytic[i];
        let err = (a - numeric).abs() / (a.abs() + numeric.abs()).max(1e-5);
        worst = worst.max(err);
    }
    model.set_flat_params(&params);
    worst
}

/// AUC as the share of (positive, negative) pairs ranked correctly, ties
/// counting one half.
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut pairs = 0usize;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    (pairs > 0).then(|| wins / pairs as f64)
}

/// One-pass (Welford) mean and sample standard deviation.
pub fn welford(values: &[f64]) -> (f64, f64) {
    let (mut n, mut mean, mut m2) = (0.0, 0.0, 0.0);
    for &x in values {
        n += 1.0;
        let d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    let std = if n > 1.0 { (m2 / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

pub fn iris_path() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/iris.csv")
}

pub fn iris_manifest() -> DatasetManifest {
    DatasetManifest::csv(
        "iris",
        iris_path(),
        lgt_core::data::TargetColumn::Name("species".into()),
        TaskType::Classification { classes: 3 },
    )
}

pub fn blobs_splits(seed: u64) -> Splits {
    let d = make_synthetic(SyntheticKind::BlobsClassification, &SyntheticParams::default(), seed);
    Splits::prepare(&d, 0.8, seed).unwrap()
}

pub fn blobs_space() -> ConfigurationSpace {
    ConfigurationSpace::for_task(TaskType::Classification { classes: 3 })
}

pub fn blobs_default() -> lgt_core::space::Configuration {
    default_config(&blobs_space())
}

/// Advisor rules that keep asking for extreme or invalid changes.
pub fn adversarial_rules() -> lgt_core::backend::ScriptedRuleSet {
    use lgt_core::agents::AgentKind;
    use lgt_core::backend::{Condition, ResponseTemplate, Rule, ScriptedRuleSet};
    let advice = [
        r#"{"rationale": "huge", "changes": [{"scale_numeric": {"field": "learning_rate", "factor": 1000}}, {"scale_numeric": {"field": "weight_decay", "factor": 1e9}}]}"#,
        r#"{"rationale": "tiny", "changes": [{"scale_numeric": {"field": "learning_rate", "factor": 1e-9}}, {"set_numeric": {"field": "batch_size", "value": 1e9}}]}"#,
        r#"{"rationale": "weights", "changes": [{"set_numeric": {"field": "class_weights", "value": 1e6}}, {"set_numeric": {"field": "class_weights[7]", "value": 3}}]}"#,
        r#"{"rationale": "negative", "changes": [{"set_numeric": {"field": "weight_decay", "value": -5}}, {"set_numeric": {"field": "momentum", "value": 7}}, {"set_numeric": {"field": "focal_gamma", "value": -1}}]}"#,
        r#"{"rationale": "arch", "changes": [{"set_numeric": {"field": "dropout", "value": 0.99}}, {"set_numeric": {"field": "layer_widths", "value": 4096}}, {"set_categorical": {"field": "activation", "value": "tanh"}}]}"#,
        r#"{"rationale": "vocab", "changes": [{"set_categorical": {"field": "loss_kind", "value": "mse"}}, {"add_method": "rotation"}, {"set_categorical": {"field": "optimizer_kind", "value": "sgd"}}]}"#,
        r#"{"rationale": "aug", "changes": [{"add_method": "noise"}, {"set_numeric": {"field": "augment.noise", "value": 50}}, {"add_method": "duplication"}, {"scale_numeric": {"field": "augment.duplication", "factor": 10}}]}"#,
        r#"{"rationale": "sched", "changes": [{"set_categorical": {"field": "scheduler_kind", "value": "step"}}, {"set_numeric": {"field": "scheduler.gamma", "value": 0}}, {"set_numeric": {"field": "scheduler.step_size", "value": 0}}]}"#,
        r#"not json at all {"changes": [{"scale_numeric": {"field": "learning_rate", "factor": "NaN"}}"#,
        r#"{"rationale": "all at once", "changes": [{"scale_numeric": {"field": "learning_rate", "factor": 100}}, {"scale_numeric": {"field": "learning_rate", "factor": 100}}, {"scale_numeric": {"field": "learning_rate", "factor": 100}}]}"#,
    ];
    let mut rules: Vec<Rule> = ScriptedRuleSet::default_rules()
        .rules
        .into_iter()
        .filter(|r| r.agent != AgentKind::Advisor)
        .collect();
    rules.insert(
        0,
        Rule::new(
            "adversarial",
            AgentKind::Advisor,
            Condition::Always,
            ResponseTemplate::Cycle(advice.iter().map(|s| ResponseTemplate::Static(s.to_string())).collect()),
        ),
    );
    ScriptedRuleSet::new(rules).unwrap()
}

/// Checks every applied numeric change of a run against its trust region
/// and bounds, and every recorded configuration against the space. Returns
/// the number of epochs checked.
pub fn check_bounded(
    record: &lgt_core::orchestrator::RunRecord,
    space: &ConfigurationSpace,
) -> Result<usize, String> {
    use lgt_core::space::{relative_change, validate, ApplyEvent};
    let mut epochs = 0;
    for it in &record.iterations {
        for e in &it.history {
            epochs += 1;
            for cfg in [&e.config, &e.next_config] {
                let v = validate(cfg, space);
                if !v.is_ok() {
                    return Err(format!("epoch {}: {:?}", e.epoch, v.violations));
                }
            }
            for ev in &e.apply_report.events {
                if let ApplyEvent::Numeric { field, old, capped, new, .. } = ev {
                    let d = space.domain(field.family).unwrap();
                    let eps = space.trust(field.family).unwrap();
                    for v in [*capped, *new] {
                        if relative_change(*old, v, d) > eps * (1.0 + 1e-9) {
                            return Err(format!("{field}: {old} -> {v} exceeds trust region {eps}"));
                        }
                    }
                    if !d.contains(*new) {
                        return Err(format!("{field}: {new} outside [{}, {}]", d.min, d.max));
                    }
                }
            }
        }
    }
    Ok(epochs)
}

/// Checks that every epoch's transcript entries are exactly the six steps
/// in order, and that history grows by one per epoch. Returns the number
/// of epochs seen.
pub fn check_epoch_order(entries: &[lgt_core::orchestrator::TranscriptEntry]) -> Result<usize, String> {
    use lgt_core::orchestrator::Step;
    let mut groups: Vec<((usize, usize), Vec<&lgt_core::orchestrator::TranscriptEntry>)> = Vec::new();
    for e in entries.iter().filter(|e| e.epoch > 0) {
        match groups.last_mut() {
            Some((key, g)) if *key == (e.iteration, e.epoch) => g.push(e),
            _ => groups.push(((e.iteration, e.epoch), vec![e])),
        }
    }
    for ((iteration, epoch), g) in &groups {
        let steps: Vec<Step> = g.iter().map(|e| e.step).collect();
        if steps != Step::EPOCH_ORDER {
            return Err(format!("iteration {iteration} epoch {epoch}: {steps:?}"));
        }
        let len = g[5].detail["history_len"].as_u64();
        if len != Some(*epoch as u64) {
            return Err(format!("iteration {iteration} epoch {epoch}: history_len {len:?}"));
        }
    }
    if entries.windows(2).any(|w| w[1].seq <= w[0].seq) {
        return Err("sequence numbers are not increasing".into());
    }
    Ok(groups.len())
}
