use serde::{Deserialize, Serialize};

use super::messages::ProtocolMessage;

/// One protocol message as observed on the wire.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub time: u64,
    pub from: String,
    pub to: String,
    pub protocol: String,
    pub msg_tag: String,
    pub run_id: String,
    pub byte_len: usize,
}

/// Append-only log of protocol messages.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, time: u64, from: &str, to: &str, run_id: &str, msg: &ProtocolMessage, byte_len: usize) {
        self.entries.push(TranscriptEntry {
            time,
            from: from.to_owned(),
            to: to.to_owned(),
            protocol: msg.protocol().as_str().to_owned(),
            msg_tag: msg.tag(),
            run_id: run_id.to_owned(),
            byte_len,
        });
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn run(&self, run_id: &str) -> impl Iterator<Item = &TranscriptEntry> {
        let run_id = run_id.to_owned();
        self.entries.iter().filter(move |e| e.run_id == run_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entry serializes"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(s: &str) -> serde_json::Result<Self> {
        let entries = s
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(Self { entries })
    }
}
