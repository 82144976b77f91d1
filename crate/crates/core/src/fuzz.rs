//! Randomized robustness check for the response parsers.

use crate::agents::{
    parse_advisor_response, parse_architect_response, parse_evaluator_response, parse_optimizer_response,
    AgentKind, NoteOp, NOTE_CHAR_CAP,
};
use crate::backend::FAILURE_SENTINEL;
use crate::rng::{derived, SeededRng};
use crate::space::{apply_delta, default_config, validate, Configuration, ConfigurationSpace, NumericFamily};
use crate::TaskType;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde::Serialize;

const CORPUS: &[&str] = &[
    r#"{"rationale": "shrink steps", "changes": [{"scale_numeric": {"field": "learning_rate", "factor": 0.5}}]}"#,
    r#"{"rationale": "regularize", "changes": [{"add_method": "noise"}, {"set_numeric": {"field": "weight_decay", "value": 0.01}}]}"#,
    r#"{"rationale": "x", "changes": [{"set_categorical": {"field": "optimizer_kind", "value": "adamw"}}, {"set_numeric": {"field": "class_weights[1]", "value": 2.0}}]}"#,
    r#"{"rationale": "hold", "changes": ["no_change"]}"#,
    r#""no_change""#,
    r#"{"success": true, "reason": "val loss fell"}"#,
    r#"{"success": false, "reason": "worse"}"#,
    r#"{"append": "lower the learning rate when validation loss rises"}"#,
    r#"{"replace": {"index": 0, "note": "keep weight decay"}}"#,
    r#"{"ops": [{"append": "a"}, {"replace": {"index": 3, "note": "b"}}]}"#,
    r#"{"rationale": "wider", "layer_widths": [128, 128], "dropout": 0.4, "activation": "tanh"}"#,
    r#"{"layer_widths": [1, 100000, 3, 4, 5, 6, 7], "dropout": -3}"#,
];

const FRAGMENTS: &[&str] = &[
    "{", "}", "[", "]", "\"", ":", ",", "null", "true", "false", "1e308", "-1e308", "NaN", "-0", "\\u0000",
    "\"changes\"", "\"field\"", "\"value\"", "\"factor\"", "\"learning_rate\"", "\"class_weights[99]\"",
    "\"layer_widths[-1]\"", "\"success\"", "\"append\"", "\"replace\"", "\"index\"", "\"ops\"", "```json\n",
    "\n```", "Sure! Here is the JSON:", "é", "🙂", FAILURE_SENTINEL,
];

fn mutate(text: &str, rng: &mut SeededRng) -> String {
    let mut chars: Vec<char> = text.chars().collect();
    for _ in 0..rng.random_range(1..=4) {
        match rng.random_range(0..6) {
            0 if !chars.is_empty() => {
                let cut = rng.random_range(0..chars.len());
                chars.truncate(cut);
            }
            1 if !chars.is_empty() => {
                let i = rng.random_range(0..chars.len());
                chars.remove(i);
            }
            2 => {
                let i = rng.random_range(0..=chars.len());
                let frag = FRAGMENTS.choose(rng).expect("non-empty");
                for (k, c) in frag.chars().enumerate() {
                    chars.insert(i + k, c);
                }
            }
            3 => {
                let i = rng.random_range(0..=chars.len());
                let c = char::from_u32(rng.random_range(0..0x2000)).unwrap_or('?');
                chars.insert(i, c);
            }
            4 => {
                // Swap a number for an extreme one.
                if let Some(pos) = chars.iter().position(|c| c.is_ascii_digit()) {
                    let extreme = ["1e400", "-5", "0", "999999999999", "0.0000001"].choose(rng).expect("non-empty");
                    chars.splice(pos..=pos, extreme.chars());
                }
            }
            _ => {
                let s: String = chars.iter().collect();
                chars = format!("prefix text {s} trailing {{ \"junk\": [").chars().collect();
            }
        }
    }
    chars.into_iter().collect()
}

fn random_text(rng: &mut SeededRng) -> String {
    match rng.random_range(0..4) {
        0 => mutate(CORPUS.choose(rng).expect("non-empty"), rng),
        1 => (0..rng.random_range(0..30)).map(|_| *FRAGMENTS.choose(rng).expect("non-empty")).collect(),
        2 => (0..rng.random_range(0..200)).map(|_| char::from_u32(rng.random_range(0..0x800)).unwrap_or(' ')).collect(),
        _ => {
            let base = CORPUS.choose(rng).expect("non-empty");
            format!("Here you go:\n```json\n{base}\n```\nand also {}", mutate(base, rng))
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct FuzzReport {
    pub iterations: usize,
    /// Responses that parsed into the expected shape, per agent.
    pub parsed: [usize; 4],
    /// Panics or invalid outputs; empty on success.
    pub violations: Vec<String>,
}

impl FuzzReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn check_one(text: &str, space: &ConfigurationSpace, base: &Configuration) -> Result<[bool; 4], String> {
    let advice = parse_advisor_response(text, space);
    let (applied, _) = apply_delta(base, &advice.delta, space);
    let v = validate(&applied, space);
    if !v.is_ok() {
        return Err(format!("advisor delta produced an invalid configuration: {:?}", v.violations));
    }
    if !advice.parsed && !advice.delta.is_noop() {
        return Err("unparsed advisor response carried changes".into());
    }

    let verdict = parse_evaluator_response(text);
    if !verdict.parsed && verdict.success {
        return Err("unparsed evaluator response reported success".into());
    }

    let notes = parse_optimizer_response(text);
    for op in &notes.ops {
        let note = match op {
            NoteOp::Append(n) | NoteOp::Replace { note: n, .. } => n,
        };
        if note.trim().is_empty() || note.chars().count() > NOTE_CHAR_CAP {
            return Err(format!("note of {} chars", note.chars().count()));
        }
    }

    let arch = parse_architect_response(text, space, &base.arch);
    let mut with_arch = base.clone();
    with_arch.arch = arch.arch.clone();
    let v = validate(&with_arch, space);
    if !v.is_ok() {
        return Err(format!("architect produced an invalid architecture: {:?}", v.violations));
    }
    let width = space.domain(NumericFamily::LayerWidths).expect("width domain");
    if arch.arch.layer_widths.iter().any(|&w| !width.contains(w as f64)) {
        return Err("layer width out of bounds".into());
    }
    Ok([advice.parsed, verdict.parsed, notes.parsed, arch.parsed])
}

/// Feeds `iterations` generated responses to every parser and checks that
/// none panics and every output is valid.
pub fn fuzz_parsers(iterations: usize, seed: u64) -> FuzzReport {
    let space = ConfigurationSpace::for_task(TaskType::Classification { classes: 3 });
    let base = default_config(&space);
    let mut rng = derived(seed, &[0xF022]);
    let mut report = FuzzReport {
        iterations,
        ..Default::default()
    };
    for i in 0..iterations {
        let text = random_text(&mut rng);
        let outcome = std::panic::catch_unwind(|| check_one(&text, &space, &base));
        match outcome {
            Ok(Ok(parsed)) => {
                for (k, p) in parsed.into_iter().enumerate() {
                    report.parsed[k] += p as usize;
                }
            }
            Ok(Err(e)) => report.violations.push(format!("#{i} {e}: {text:?}")),
            Err(_) => report.violations.push(format!("#{i} panic: {text:?}")),
        }
    }
    report
}

impl std::fmt::Display for FuzzReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} responses, {} violations", self.iterations, self.violations.len())?;
        for (k, kind) in AgentKind::ALL.iter().enumerate() {
            writeln!(f, "  {kind}: {} parsed, {} fell back", self.parsed[k], self.iterations - self.parsed[k])?;
        }
        for v in self.violations.iter().take(10) {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_fuzz_run_is_clean() {
        let r = fuzz_parsers(500, 1);
        assert!(r.is_clean(), "{r}");
        assert!(r.parsed.iter().all(|&p| p > 0), "{r}");
    }
}
