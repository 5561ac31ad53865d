use serde::{Deserialize, Serialize};

use crate::qsim::{Basis, BellState, PauliOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStage {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckVerdict {
    pub stage: CheckStage,
    pub passed: bool,
    /// Anticorrelation violations (first check) or decoy mismatches (second).
    pub violations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    FirstCheckViolations,
    SecondCheckMismatch,
}

/// Everything said on the public channel. Per-index payloads are
/// `[index, value]` pairs sorted by index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassicalMessage {
    CheckIndices { indices: Vec<usize> },
    BasisAnnounce { bases: Vec<(usize, Basis)> },
    OutcomeAnnounce { outcomes: Vec<(usize, u8)> },
    CheckVerdict(CheckVerdict),
    SecondCheckIndices { indices: Vec<usize> },
    SecondCheckReveal { ops: Vec<(usize, PauliOp)> },
    BellResults { results: Vec<(usize, BellState)> },
    Abort { reason: AbortReason },
}

impl ClassicalMessage {
    /// Indices carried by the message, in order.
    pub fn indices(&self) -> Vec<usize> {
        fn firsts<V>(v: &[(usize, V)]) -> Vec<usize> {
            v.iter().map(|(i, _)| *i).collect()
        }
        match self {
            Self::CheckIndices { indices } | Self::SecondCheckIndices { indices } => {
                indices.clone()
            }
            Self::BasisAnnounce { bases } => firsts(bases),
            Self::OutcomeAnnounce { outcomes } => firsts(outcomes),
            Self::SecondCheckReveal { ops } => firsts(ops),
            Self::BellResults { results } => firsts(results),
            Self::CheckVerdict(_) | Self::Abort { .. } => Vec::new(),
        }
    }

    /// Indices strictly increasing and below `n_pairs`.
    pub fn is_well_formed(&self, n_pairs: usize) -> bool {
        let idx = self.indices();
        idx.windows(2).all(|w| w[0] < w[1]) && idx.last().is_none_or(|&i| i < n_pairs)
    }
}
