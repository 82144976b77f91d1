//! Agent inputs, prompt rendering and response parsing.

pub mod parse;
pub mod prompt;
pub mod state;

pub use parse::{
    parse_advisor_response, parse_architect_response, parse_evaluator_response,
    parse_optimizer_response, AdvisorResponse, ArchitectResponse, EvalResponse, NoteOp,
    PromptDeltaResponse, PARSE_FAILURE,
};
pub use prompt::{
    apply_prompt_delta, extract_state, render_prompt, render_prompt_with_budget, NoteOutcome,
    PromptState,
};
pub use state::{
    build_advisor_state, build_architect_state, build_evaluator_state, build_optimizer_state,
    AdvisorState, AgentKind, AgentState, ArchitectState, DigestEntry, EpochSummary,
    EvaluatorState, OptimizerAgentState,
};

/// Epochs of metrics shown to the Advisor.
pub const METRIC_WINDOW: usize = 5;
/// Maximum number of guidance notes in a prompt.
pub const NOTE_CAPACITY: usize = 8;
/// Notes longer than this many characters are truncated.
pub const NOTE_CHAR_CAP: usize = 280;
/// Default rendered prompt size in bytes.
pub const DEFAULT_PROMPT_BUDGET: usize = 24_000;

/// Versioned role text shipped with the crate.
pub fn base_prompt(kind: AgentKind) -> &'static str {
    match kind {
        AgentKind::Advisor => include_str!("../../assets/prompts/advisor.v1.txt"),
        AgentKind::Evaluator => include_str!("../../assets/prompts/evaluator.v1.txt"),
        AgentKind::Optimizer => include_str!("../../assets/prompts/optimizer.v1.txt"),
        AgentKind::Architect => include_str!("../../assets/prompts/architect.v1.txt"),
    }
}

/// JSON schema of each agent's response.
pub fn response_schema(kind: AgentKind) -> &'static str {
    match kind {
        AgentKind::Advisor => include_str!("../../assets/schemas/advisor.schema.json"),
        AgentKind::Evaluator => include_str!("../../assets/schemas/evaluator.schema.json"),
        AgentKind::Optimizer => include_str!("../../assets/schemas/optimizer.schema.json"),
        AgentKind::Architect => include_str!("../../assets/schemas/architect.schema.json"),
    }
}

/// Version tag of the shipped prompt assets.
pub const PROMPT_VERSION: &str = "v1";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemas_are_valid_json() {
        for kind in AgentKind::ALL {
            let v: serde_json::Value = serde_json::from_str(response_schema(kind)).unwrap();
            assert!(v.get("$id").is_some());
            assert!(!base_prompt(kind).is_empty());
        }
    }
}
