use crate::agents::AgentKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Train,
    Advise,
    Apply,
    Evaluate,
    PromptUpdate,
    HistoryAppend,
    Architect,
    Test,
}

impl Step {
    /// Steps of one epoch, in the order they must appear.
    pub const EPOCH_ORDER: [Step; 6] = [
        Step::Train,
        Step::Advise,
        Step::Apply,
        Step::Evaluate,
        Step::PromptUpdate,
        Step::HistoryAppend,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub seq: u64,
    /// Logical timestamp; equals `seq`.
    pub ts: u64,
    pub iteration: usize,
    /// One-based; 0 for steps outside an epoch.
    pub epoch: usize,
    pub step: Step,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent: Option<AgentKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attempts: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parsed: Option<bool>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

impl TranscriptEntry {
    pub fn step(iteration: usize, epoch: usize, step: Step) -> Self {
        Self {
            seq: 0,
            ts: 0,
            iteration,
            epoch,
            step,
            agent: None,
            request: None,
            response: None,
            attempts: None,
            parsed: None,
            warnings: Vec::new(),
            detail: Value::Null,
        }
    }

    pub fn detail(mut self, detail: Value) -> Self {
        self.detail = detail;
        self
    }
}

/// Ordered log of everything a run did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, mut entry: TranscriptEntry) {
        let seq = self.entries.len() as u64;
        entry.seq = seq;
        entry.ts = seq;
        self.entries.push(entry);
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_jsonl().as_bytes())?;
        f.flush()
    }

    pub fn read(path: &Path) -> std::io::Result<Vec<TranscriptEntry>> {
        std::fs::read_to_string(path)?
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(std::io::Error::other))
            .collect()
    }
}
