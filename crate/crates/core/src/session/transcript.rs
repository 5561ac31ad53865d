//! Run transcripts and their line-delimited JSON form.
//!
//! One record per line, `{"seq":..,"actor":..,"kind":..,"payload":..}`, with
//! `seq` dense from 0. The first record is always the `config` echo and the
//! last the `verdict`. See `docs/transcript-format.md` for the full schema.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{AbortReason, ClassicalMessage, Phase, ProtocolConfig, ProtocolError};
use crate::adversary::Leg;
use crate::codec::MessageBits;
use crate::qsim::{Basis, BellState, PauliOp, QubitSlot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Actor {
    System,
    Alice,
    Bob,
    Eve,
}

/// Why a party applied an operation to a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpPurpose {
    /// Carries the party's message bits.
    Message,
    /// Uniformly random op filling capacity beyond the message.
    Filler,
    /// Random op on a second-check decoy position.
    Decoy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub config: ProtocolConfig,
    pub alice_msg: MessageBits,
    pub bob_msg: MessageBits,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckStats {
    pub first_checked: usize,
    pub first_violations: usize,
    pub decoys_checked: usize,
    pub decoy_mismatches: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Verdict {
    /// `alice_decoded` is what Alice recovered (Bob's message) and vice versa.
    Completed {
        alice_decoded: MessageBits,
        bob_decoded: MessageBits,
    },
    Aborted {
        phase: Phase,
        reason: AbortReason,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    Config(ConfigEcho),
    Prepare {
        pairs: usize,
    },
    Send {
        leg: Leg,
        indices: Vec<usize>,
    },
    Receive {
        leg: Leg,
        indices: Vec<usize>,
    },
    Intercept {
        pair: usize,
        leg: Leg,
        basis: Basis,
        outcome: u8,
    },
    Substitute {
        pair: usize,
        leg: Leg,
        outcome: u8,
    },
    Measure {
        pair: usize,
        slot: QubitSlot,
        basis: Basis,
        outcome: u8,
    },
    ApplyOp {
        pair: usize,
        slot: QubitSlot,
        op: PauliOp,
        purpose: OpPurpose,
    },
    BellMeasure {
        pair: usize,
        result: BellState,
    },
    Message(ClassicalMessage),
    Verdict {
        verdict: Verdict,
        stats: CheckStats,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub seq: u64,
    pub actor: Actor,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: expected seq {expected}, found {found}")]
    Sequence {
        line: usize,
        expected: u64,
        found: u64,
    },
    #[error("transcript must start with a config record and end with a verdict")]
    Structure,
    #[error("replay failed: {0}")]
    Replay(#[from] ProtocolError),
}

/// Parses line-delimited records, accepting the file only if sequence numbers
/// run densely from 0.
pub fn read_records(text: &str) -> Result<Vec<Record>, TranscriptError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line).map_err(|source| TranscriptError::Parse {
            line: i + 1,
            source,
        })?;
        let expected = out.len() as u64;
        if rec.seq != expected {
            return Err(TranscriptError::Sequence {
                line: i + 1,
                expected,
                found: rec.seq,
            });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Full ordered record of one protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    records: Vec<Record>,
}

impl Transcript {
    pub fn from_records(records: Vec<Record>) -> Result<Self, TranscriptError> {
        let dense = records.iter().enumerate().all(|(i, r)| r.seq == i as u64);
        let starts = matches!(records.first().map(|r| &r.event), Some(Event::Config(_)));
        let ends = matches!(
            records.last().map(|r| &r.event),
            Some(Event::Verdict { .. })
        );
        if !(dense && starts && ends) {
            return Err(TranscriptError::Structure);
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn config_echo(&self) -> &ConfigEcho {
        match &self.records[0].event {
            Event::Config(echo) => echo,
            _ => unreachable!("checked in from_records"),
        }
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config_echo().config
    }

    fn tail(&self) -> (&Verdict, &CheckStats) {
        match &self.records[self.records.len() - 1].event {
            Event::Verdict { verdict, stats } => (verdict, stats),
            _ => unreachable!("checked in from_records"),
        }
    }

    pub fn verdict(&self) -> &Verdict {
        self.tail().0
    }

    pub fn stats(&self) -> &CheckStats {
        self.tail().1
    }

    pub fn is_completed(&self) -> bool {
        matches!(self.verdict(), Verdict::Completed { .. })
    }

    pub fn messages(&self) -> impl Iterator<Item = (u64, Actor, &ClassicalMessage)> + '_ {
        self.records.iter().filter_map(|r| match &r.event {
            Event::Message(m) => Some((r.seq, r.actor, m)),
            _ => None,
        })
    }

    fn ops_by(&self, actor: Actor) -> Vec<(usize, PauliOp, OpPurpose)> {
        self.records
            .iter()
            .filter(|r| r.actor == actor)
            .filter_map(|r| match r.event {
                Event::ApplyOp {
                    pair, op, purpose, ..
                } => Some((pair, op, purpose)),
                _ => None,
            })
            .collect()
    }

    /// Alice's encoding ops, in pair order.
    pub fn alice_ops(&self) -> Vec<(usize, PauliOp, OpPurpose)> {
        self.ops_by(Actor::Alice)
    }

    pub fn bob_ops(&self) -> Vec<(usize, PauliOp, OpPurpose)> {
        self.ops_by(Actor::Bob)
    }

    /// Bob's public Bell announcements.
    pub fn announced(&self) -> Vec<(usize, BellState)> {
        self.messages()
            .find_map(|(_, _, m)| match m {
                ClassicalMessage::BellResults { results } => Some(results.clone()),
                _ => None,
            })
            .unwrap_or_default()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records always serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TranscriptError> {
        Self::from_records(read_records(text)?)
    }

    pub fn write_to(&self, path: impl AsRef<Path>) -> io::Result<()> {
        fs::write(path, self.to_jsonl())
    }

    pub fn read_from(path: impl AsRef<Path>) -> Result<Self, TranscriptError> {
        Self::from_jsonl(&fs::read_to_string(path)?)
    }
}

/// Re-runs the protocol from a transcript's config echo.
pub fn replay(transcript: &Transcript) -> Result<Transcript, TranscriptError> {
    let echo = transcript.config_echo();
    Ok(super::run_protocol(
        &echo.config,
        &echo.alice_msg,
        &echo.bob_msg,
    )?)
}
