//! The two-party protocol engine.
//!
//! Alice and Bob are explicit state machines that exchange
//! [`ClassicalMessage`]s and hand photons to each other through the
//! adversary's channel. Every quantum event and classical message of a run is
//! appended to a [`Transcript`].

mod audit;
mod config;
mod custody;
mod message;
mod protocol;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use audit::{audit_custody, AuditError};
pub use config::ProtocolConfig;
pub use custody::{CustodyMap, Holder};
pub use message::{AbortReason, CheckStage, CheckVerdict, ClassicalMessage};
pub use protocol::{
    decode_both, run_protocol, run_protocol_with, AliceState, BobState, PartyState, Session,
};
pub use transcript::{
    read_records, replay, Actor, CheckStats, ConfigEcho, Event, OpPurpose, Record, Transcript,
    TranscriptError, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Alice,
    Bob,
}

/// Protocol phases in the order every party moves through them. `Aborted` is
/// reachable from any non-terminal phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Init,
    FirstTransmission,
    FirstCheck,
    Encoding,
    SecondTransmission,
    BellAnnounce,
    SecondCheck,
    Done,
    Aborted,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Aborted)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("{role:?}'s message needs {needed} bits but capacity is {capacity}")]
    CapacityExceeded {
        role: Role,
        needed: usize,
        capacity: usize,
    },
    #[error("custody violation: {0}")]
    Custody(String),
    #[error("{role:?} cannot move from {from:?} to {to:?}")]
    PhaseOrder { role: Role, from: Phase, to: Phase },
}
