use serde::{Deserialize, Serialize};

use super::{ProtocolError, Role};
use crate::qsim::QubitSlot;

/// Who currently holds a photon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Holder {
    Alice,
    Bob,
    Channel,
    /// Destroyed by a Bell measurement.
    Consumed,
}

impl From<Role> for Holder {
    fn from(r: Role) -> Self {
        match r {
            Role::Alice => Holder::Alice,
            Role::Bob => Holder::Bob,
        }
    }
}

fn slot_index(slot: QubitSlot) -> usize {
    match slot {
        QubitSlot::C => 0,
        QubitSlot::M => 1,
    }
}

/// Holder of every photon of the block, indexed by pair then slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CustodyMap {
    holders: Vec<[Holder; 2]>,
}

impl CustodyMap {
    /// A freshly prepared block: Alice holds everything.
    pub fn prepared(n_pairs: usize) -> Self {
        Self {
            holders: vec![[Holder::Alice; 2]; n_pairs],
        }
    }

    pub fn len(&self) -> usize {
        self.holders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.holders.is_empty()
    }

    pub fn holder(&self, pair: usize, slot: QubitSlot) -> Option<Holder> {
        self.holders.get(pair).map(|h| h[slot_index(slot)])
    }

    pub fn require(&self, who: Holder, pair: usize, slot: QubitSlot) -> Result<(), ProtocolError> {
        match self.holder(pair, slot) {
            Some(h) if h == who => Ok(()),
            Some(h) => Err(ProtocolError::Custody(format!(
                "{who:?} acted on pair {pair} photon {slot:?} held by {h:?}"
            ))),
            None => Err(ProtocolError::Custody(format!(
                "pair {pair} does not exist"
            ))),
        }
    }

    pub fn transfer(
        &mut self,
        pair: usize,
        slot: QubitSlot,
        from: Holder,
        to: Holder,
    ) -> Result<(), ProtocolError> {
        self.require(from, pair, slot)?;
        self.holders[pair][slot_index(slot)] = to;
        Ok(())
    }

    /// Bell measurement needs both photons and destroys them.
    pub fn consume(&mut self, who: Holder, pair: usize) -> Result<(), ProtocolError> {
        self.require(who, pair, QubitSlot::C)?;
        self.require(who, pair, QubitSlot::M)?;
        self.holders[pair] = [Holder::Consumed; 2];
        Ok(())
    }
}
