use thiserror::Error;

use super::custody::{CustodyMap, Holder};
use super::transcript::{Actor, Event, Transcript};
use super::ProtocolError;

#[derive(Debug, Error, PartialEq)]
#[error("seq {seq}: {source}")]
pub struct AuditError {
    pub seq: u64,
    #[source]
    pub source: ProtocolError,
}

fn holder_of(actor: Actor) -> Option<Holder> {
    match actor {
        Actor::Alice => Some(Holder::Alice),
        Actor::Bob => Some(Holder::Bob),
        Actor::Eve => Some(Holder::Channel),
        Actor::System => None,
    }
}

/// Replays photon custody over a transcript and fails on the first event in
/// which an actor touches a photon it does not hold.
pub fn audit_custody(transcript: &Transcript) -> Result<(), AuditError> {
    let mut custody = CustodyMap::prepared(0);
    for r in transcript.records() {
        let fail = |source| AuditError { seq: r.seq, source };
        let who = holder_of(r.actor);
        let actor_err = || {
            fail(ProtocolError::Custody(format!(
                "{:?} cannot perform quantum events",
                r.actor
            )))
        };
        match &r.event {
            Event::Prepare { pairs } => custody = CustodyMap::prepared(*pairs),
            Event::Send { leg, indices } => {
                let who = who.ok_or_else(actor_err)?;
                for &p in indices {
                    custody
                        .transfer(p, leg.slot(), who, Holder::Channel)
                        .map_err(fail)?;
                }
            }
            Event::Receive { leg, indices } => {
                let who = who.ok_or_else(actor_err)?;
                for &p in indices {
                    custody
                        .transfer(p, leg.slot(), Holder::Channel, who)
                        .map_err(fail)?;
                }
            }
            Event::Intercept { pair, leg, .. } | Event::Substitute { pair, leg, .. } => {
                if r.actor != Actor::Eve {
                    return Err(actor_err());
                }
                custody
                    .require(Holder::Channel, *pair, leg.slot())
                    .map_err(fail)?;
            }
            Event::Measure { pair, slot, .. } | Event::ApplyOp { pair, slot, .. } => {
                let who = who.ok_or_else(actor_err)?;
                custody.require(who, *pair, *slot).map_err(fail)?;
            }
            Event::BellMeasure { pair, .. } => {
                let who = who.ok_or_else(actor_err)?;
                custody.consume(who, *pair).map_err(fail)?;
            }
            Event::Config(_) | Event::Message(_) | Event::Verdict { .. } => {}
        }
    }
    Ok(())
}
