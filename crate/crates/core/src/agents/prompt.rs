//! Prompt text, its bounded guidance notes, and rendering.

use serde::{Deserialize, Serialize};
use std::fmt::Write;

use super::parse::{NoteOp, PromptDeltaResponse};
use super::state::AgentState;
use super::{DEFAULT_PROMPT_BUDGET, NOTE_CAPACITY};

/// Marker preceding the JSON state block in a rendered prompt.
pub const STATE_HEADER: &str = "## State\n```json\n";
const STATE_FOOTER: &str = "\n```\n";

/// Fixed role text plus an ordered, capacity-bounded list of notes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptState {
    base_text: String,
    guidance_notes: Vec<String>,
    capacity: usize,
}

impl PromptState {
    pub fn new(base_text: impl Into<String>) -> Self {
        Self::with_capacity(base_text, NOTE_CAPACITY)
    }

    pub fn with_capacity(base_text: impl Into<String>, capacity: usize) -> Self {
        Self {
            base_text: base_text.into(),
            guidance_notes: Vec::new(),
            capacity: capacity.max(1),
        }
    }

    pub fn base_text(&self) -> &str {
        &self.base_text
    }

    pub fn guidance_notes(&self) -> &[String] {
        &self.guidance_notes
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends a note, evicting the oldest one when full. Returns the
    /// evicted note.
    pub fn push_note(&mut self, note: String) -> Option<String> {
        let evicted = if self.guidance_notes.len() >= self.capacity {
            Some(self.guidance_notes.remove(0))
        } else {
            None
        };
        self.guidance_notes.push(note);
        evicted
    }

    /// Replaces note `index`; returns false when it does not exist.
    pub fn replace_note(&mut self, index: usize, note: String) -> bool {
        match self.guidance_notes.get_mut(index) {
            Some(slot) => {
                *slot = note;
                true
            }
            None => false,
        }
    }
}

fn assemble(prompt: &PromptState, state_json: &str) -> String {
    let mut out = String::with_capacity(prompt.base_text.len() + state_json.len() + 64);
    out.push_str(prompt.base_text.trim_end());
    out.push_str("\n\n");
    if !prompt.guidance_notes.is_empty() {
        out.push_str("## Guidance\n");
        for (i, note) in prompt.guidance_notes.iter().enumerate() {
            let _ = writeln!(out, "{}. {}", i + 1, note);
        }
        out.push('\n');
    }
    out.push_str(STATE_HEADER);
    out.push_str(state_json);
    out.push_str(STATE_FOOTER);
    out
}

/// Renders with the default size budget.
pub fn render_prompt(prompt: &PromptState, state: &AgentState) -> String {
    render_prompt_with_budget(prompt, state, DEFAULT_PROMPT_BUDGET)
}

/// Base text, numbered notes, then the state as JSON. While the result is
/// longer than `budget` bytes the oldest per-epoch entries of the state are
/// elided; if that is not enough the prompt is returned over budget.
pub fn render_prompt_with_budget(prompt: &PromptState, state: &AgentState, budget: usize) -> String {
    let mut state = state.clone();
    loop {
        let text = assemble(prompt, &state.to_canonical_json());
        if text.len() <= budget || !state.elide_oldest() {
            return text;
        }
    }
}

/// Recovers the state JSON block from a rendered prompt.
pub fn extract_state(rendered: &str) -> Option<AgentState> {
    let start = rendered.rfind(STATE_HEADER)? + STATE_HEADER.len();
    let rest = &rendered[start..];
    let end = rest.find("\n```")?;
    serde_json::from_str(&rest[..end]).ok()
}

/// What happened to one note operation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum NoteOutcome {
    Appended,
    AppendedWithEviction { evicted: String },
    Replaced { index: usize },
    IgnoredOutOfRange { index: usize },
}

/// Applies note operations in order. The base text is never touched and
/// the note list never exceeds its capacity.
pub fn apply_prompt_delta(
    prompt: &PromptState,
    delta: &PromptDeltaResponse,
) -> (PromptState, Vec<NoteOutcome>) {
    let mut next = prompt.clone();
    let outcomes = delta
        .ops
        .iter()
        .map(|op| match op {
            NoteOp::Append(note) => match next.push_note(note.clone()) {
                Some(evicted) => NoteOutcome::AppendedWithEviction { evicted },
                None => NoteOutcome::Appended,
            },
            NoteOp::Replace { index, note } => {
                if next.replace_note(*index, note.clone()) {
                    NoteOutcome::Replaced { index: *index }
                } else {
                    log::warn!("ignoring replacement of missing note {index}");
                    NoteOutcome::IgnoredOutOfRange { index: *index }
                }
            }
        })
        .collect();
    (next, outcomes)
}
