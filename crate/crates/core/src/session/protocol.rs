use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::Rng;

use super::custody::{CustodyMap, Holder};
use super::message::{AbortReason, CheckStage, CheckVerdict, ClassicalMessage};
use super::transcript::{
    Actor, CheckStats, ConfigEcho, Event, OpPurpose, Record, Transcript, Verdict,
};
use super::{Phase, ProtocolConfig, ProtocolError, Role};
use crate::adversary::{transit, EveRecord, Leg};
use crate::codec::{decode_alice, decode_bob, op_for_bits, BitPair, MessageBits};
use crate::qsim::{make_singlet, Basis, BellState, PauliOp, QubitSlot, TwoQubitState};
use crate::rng::{streams, RandomStream};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartyState {
    pub role: Role,
    pub phase: Phase,
}

impl PartyState {
    fn new(role: Role) -> Self {
        Self {
            role,
            phase: Phase::Init,
        }
    }

    /// Moves forward in the fixed phase order; `Aborted` from any live phase.
    pub fn advance(&mut self, to: Phase) -> Result<(), ProtocolError> {
        let ok = !self.phase.is_terminal() && (to == Phase::Aborted || to > self.phase);
        if !ok {
            return Err(ProtocolError::PhaseOrder {
                role: self.role,
                from: self.phase,
                to,
            });
        }
        self.phase = to;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct AliceState {
    pub party: PartyState,
    /// Pairs left after the first check, ascending.
    pub survivors: Vec<usize>,
    pub decoys: Vec<usize>,
    /// Survivors that are not decoys; both parties' message pairs go here.
    pub message_positions: Vec<usize>,
    pub ops: BTreeMap<usize, (PauliOp, OpPurpose)>,
    /// Bob's bit pairs, one per message position, once decoded.
    pub decoded: Vec<BitPair>,
}

#[derive(Debug, Clone)]
pub struct BobState {
    pub party: PartyState,
    pub survivors: Vec<usize>,
    /// Decoy positions as announced by Alice.
    pub decoys: Vec<usize>,
    pub message_positions: Vec<usize>,
    pub ops: BTreeMap<usize, (PauliOp, OpPurpose, QubitSlot)>,
    pub results: BTreeMap<usize, BellState>,
    /// Alice's bit pairs, one per message position, once decoded.
    pub decoded: Vec<BitPair>,
}

/// Bob's decoding of Alice and Alice's decoding of Bob, per message position.
/// Returns `(alice_decoded, bob_decoded)`, i.e. Bob's pairs as Alice reads
/// them and Alice's pairs as Bob reads them. The order of `announced` does
/// not matter.
pub fn decode_both(
    alice: &AliceState,
    bob: &BobState,
    announced: &[(usize, BellState)],
) -> (Vec<BitPair>, Vec<BitPair>) {
    let results: BTreeMap<usize, BellState> = announced.iter().copied().collect();
    let alice_decoded = alice
        .message_positions
        .iter()
        .filter_map(|p| Some(decode_bob(alice.ops.get(p)?.0, *results.get(p)?)))
        .collect();
    let bob_decoded = bob
        .message_positions
        .iter()
        .filter_map(|p| Some(decode_alice(bob.ops.get(p)?.0, *results.get(p)?)))
        .collect();
    (alice_decoded, bob_decoded)
}

fn random_op(rng: &mut impl Rng) -> PauliOp {
    PauliOp::ALL[rng.random_range(0..4)]
}

fn random_basis(rng: &mut impl Rng) -> Basis {
    if rng.random_bool(0.5) {
        Basis::X
    } else {
        Basis::Z
    }
}

/// One protocol run in progress. The step methods must be called in protocol
/// order; [`run_protocol`] drives them.
pub struct Session<T: Scalar> {
    config: ProtocolConfig,
    alice_msg: MessageBits,
    bob_msg: MessageBits,
    pairs: Vec<TwoQubitState<T>>,
    custody: CustodyMap,
    pub alice: AliceState,
    pub bob: BobState,
    eve: EveRecord,
    records: Vec<Record>,
    stats: CheckStats,
    alice_rng: RandomStream,
    bob_rng: RandomStream,
    eve_rng: RandomStream,
    nature: RandomStream,
    /// Bob's first-check sample and his outcomes there.
    bob_checks: Vec<(usize, Basis, u8)>,
}

impl<T: Scalar> Session<T> {
    pub fn new(
        config: &ProtocolConfig,
        alice_msg: &MessageBits,
        bob_msg: &MessageBits,
    ) -> Result<Self, ProtocolError> {
        config.validate()?;
        for (role, msg, capacity) in [
            (Role::Alice, alice_msg, config.alice_capacity_bits()),
            (Role::Bob, bob_msg, config.bob_capacity_bits()),
        ] {
            if msg.padded_bits().len() > capacity {
                return Err(ProtocolError::CapacityExceeded {
                    role,
                    needed: msg.padded_bits().len(),
                    capacity,
                });
            }
        }
        let seed = config.seed;
        let mut s = Self {
            config: config.clone(),
            alice_msg: alice_msg.clone(),
            bob_msg: bob_msg.clone(),
            pairs: Vec::new(),
            custody: CustodyMap::prepared(0),
            alice: AliceState {
                party: PartyState::new(Role::Alice),
                survivors: Vec::new(),
                decoys: Vec::new(),
                message_positions: Vec::new(),
                ops: BTreeMap::new(),
                decoded: Vec::new(),
            },
            bob: BobState {
                party: PartyState::new(Role::Bob),
                survivors: Vec::new(),
                decoys: Vec::new(),
                message_positions: Vec::new(),
                ops: BTreeMap::new(),
                results: BTreeMap::new(),
                decoded: Vec::new(),
            },
            eve: EveRecord::default(),
            records: Vec::new(),
            stats: CheckStats::default(),
            alice_rng: RandomStream::derive(seed, streams::ALICE),
            bob_rng: RandomStream::derive(seed, streams::BOB),
            eve_rng: RandomStream::derive(seed, streams::EVE),
            nature: RandomStream::derive(seed, streams::NATURE),
            bob_checks: Vec::new(),
        };
        s.log(
            Actor::System,
            Event::Config(ConfigEcho {
                config: config.clone(),
                alice_msg: alice_msg.clone(),
                bob_msg: bob_msg.clone(),
            }),
        );
        Ok(s)
    }

    fn log(&mut self, actor: Actor, event: Event) {
        let seq = self.records.len() as u64;
        self.records.push(Record { seq, actor, event });
    }

    fn say(&mut self, actor: Actor, message: ClassicalMessage) {
        debug_assert!(message.is_well_formed(self.config.n_pairs));
        self.log(actor, Event::Message(message));
    }

    fn advance_both(&mut self, to: Phase) -> Result<(), ProtocolError> {
        self.alice.party.advance(to)?;
        self.bob.party.advance(to)
    }

    pub fn eve_record(&self) -> &EveRecord {
        &self.eve
    }

    fn apply(
        &mut self,
        role: Role,
        pair: usize,
        slot: QubitSlot,
        op: PauliOp,
        purpose: OpPurpose,
    ) -> Result<(), ProtocolError> {
        self.custody.require(role.into(), pair, slot)?;
        self.pairs[pair] = self.pairs[pair].apply_pauli(op, slot);
        let actor = match role {
            Role::Alice => Actor::Alice,
            Role::Bob => Actor::Bob,
        };
        self.log(
            actor,
            Event::ApplyOp {
                pair,
                slot,
                op,
                purpose,
            },
        );
        Ok(())
    }

    fn measure(
        &mut self,
        role: Role,
        pair: usize,
        slot: QubitSlot,
        basis: Basis,
    ) -> Result<u8, ProtocolError> {
        self.custody.require(role.into(), pair, slot)?;
        let (outcome, collapsed) = self.pairs[pair].measure_qubit(slot, basis, &mut self.nature);
        self.pairs[pair] = collapsed;
        let actor = match role {
            Role::Alice => Actor::Alice,
            Role::Bob => Actor::Bob,
        };
        self.log(
            actor,
            Event::Measure {
                pair,
                slot,
                basis,
                outcome,
            },
        );
        Ok(outcome)
    }

    /// Moves the `leg` photons of `indices` from Alice through the channel
    /// (and Eve) to Bob.
    fn transmit(&mut self, leg: Leg, indices: &[usize]) -> Result<(), ProtocolError> {
        let slot = leg.slot();
        for &p in indices {
            self.custody
                .transfer(p, slot, Holder::Alice, Holder::Channel)?;
        }
        self.log(
            Actor::Alice,
            Event::Send {
                leg,
                indices: indices.to_vec(),
            },
        );

        let mut in_flight: Vec<(usize, TwoQubitState<T>)> =
            indices.iter().map(|&p| (p, self.pairs[p])).collect();
        let record = transit(&mut in_flight, leg, &self.config.eve, &mut self.eve_rng);
        for (p, state) in in_flight {
            self.pairs[p] = state;
        }
        for e in &record.entries {
            self.custody.require(Holder::Channel, e.pair, slot)?;
            let event = if e.substituted {
                Event::Substitute {
                    pair: e.pair,
                    leg,
                    outcome: e.outcome,
                }
            } else {
                Event::Intercept {
                    pair: e.pair,
                    leg,
                    basis: e.basis,
                    outcome: e.outcome,
                }
            };
            self.log(Actor::Eve, event);
        }
        self.eve.extend(record);

        for &p in indices {
            self.custody
                .transfer(p, slot, Holder::Channel, Holder::Bob)?;
        }
        self.log(
            Actor::Bob,
            Event::Receive {
                leg,
                indices: indices.to_vec(),
            },
        );
        Ok(())
    }

    /// Alice prepares the block of singlets.
    pub fn prepare(&mut self) -> Result<(), ProtocolError> {
        let n = self.config.n_pairs;
        self.pairs = vec![make_singlet(); n];
        self.custody = CustodyMap::prepared(n);
        self.log(Actor::Alice, Event::Prepare { pairs: n });
        Ok(())
    }

    /// Alice sends the C sequence to Bob.
    pub fn first_transmission(&mut self) -> Result<(), ProtocolError> {
        self.advance_both(Phase::FirstTransmission)?;
        let all: Vec<usize> = (0..self.config.n_pairs).collect();
        self.transmit(Leg::First, &all)
    }

    /// Bob samples C photons, measures each in a random basis and announces
    /// the indices, bases and outcomes; Alice measures the partners in the
    /// same bases and counts equal outcomes as violations.
    pub fn first_check(&mut self) -> Result<CheckVerdict, ProtocolError> {
        self.advance_both(Phase::FirstCheck)?;
        let n = self.config.n_pairs;
        let k = self.config.first_check_count();
        let mut indices = sample(&mut self.bob_rng, n, k).into_vec();
        indices.sort_unstable();
        self.say(
            Actor::Bob,
            ClassicalMessage::CheckIndices {
                indices: indices.clone(),
            },
        );

        let bases: Vec<(usize, Basis)> = indices
            .iter()
            .map(|&i| (i, random_basis(&mut self.bob_rng)))
            .collect();
        let mut outcomes = Vec::with_capacity(k);
        for &(i, basis) in &bases {
            let bit = self.measure(Role::Bob, i, QubitSlot::C, basis)?;
            outcomes.push((i, bit));
            self.bob_checks.push((i, basis, bit));
        }
        self.say(
            Actor::Bob,
            ClassicalMessage::BasisAnnounce {
                bases: bases.clone(),
            },
        );
        self.say(
            Actor::Bob,
            ClassicalMessage::OutcomeAnnounce {
                outcomes: outcomes.clone(),
            },
        );

        let mut violations = 0;
        for (&(i, basis), &(_, bob_bit)) in bases.iter().zip(&outcomes) {
            let alice_bit = self.measure(Role::Alice, i, QubitSlot::M, basis)?;
            violations += usize::from(alice_bit == bob_bit);
        }
        self.stats.first_checked = k;
        self.stats.first_violations = violations;

        let checked: BTreeSet<usize> = indices.into_iter().collect();
        let survivors: Vec<usize> = (0..n).filter(|i| !checked.contains(i)).collect();
        self.alice.survivors = survivors.clone();
        self.bob.survivors = survivors;

        let verdict = CheckVerdict {
            stage: CheckStage::First,
            passed: violations <= self.config.abort_threshold,
            violations,
        };
        self.say(Actor::Alice, ClassicalMessage::CheckVerdict(verdict));
        Ok(verdict)
    }

    /// Alice picks decoy positions among the survivors and applies her
    /// message ops (then random filler) to the remaining M photons in index
    /// order, and a random recorded op at each decoy.
    pub fn alice_encode(&mut self) -> Result<(), ProtocolError> {
        self.alice.party.advance(Phase::Encoding)?;
        let survivors = self.alice.survivors.clone();
        let mut decoys: Vec<usize> = sample(
            &mut self.alice_rng,
            survivors.len(),
            self.config.check_count_2,
        )
        .into_iter()
        .map(|i| survivors[i])
        .collect();
        decoys.sort_unstable();
        let decoy_set: BTreeSet<usize> = decoys.iter().copied().collect();
        self.alice.message_positions = survivors
            .iter()
            .copied()
            .filter(|p| !decoy_set.contains(p))
            .collect();
        self.alice.decoys = decoys;

        let mut message = self.alice_msg.pairs().collect::<Vec<_>>().into_iter();
        for p in survivors {
            let (op, purpose) = if decoy_set.contains(&p) {
                (random_op(&mut self.alice_rng), OpPurpose::Decoy)
            } else if let Some(bits) = message.next() {
                (op_for_bits(bits), OpPurpose::Message)
            } else {
                (random_op(&mut self.alice_rng), OpPurpose::Filler)
            };
            self.apply(Role::Alice, p, QubitSlot::M, op, purpose)?;
            self.alice.ops.insert(p, (op, purpose));
        }
        Ok(())
    }

    /// Alice sends the encoded M photons; once Bob holds them she announces
    /// the decoy positions.
    pub fn second_transmission(&mut self) -> Result<(), ProtocolError> {
        self.advance_both(Phase::SecondTransmission)?;
        let survivors = self.alice.survivors.clone();
        self.transmit(Leg::Second, &survivors)?;
        let decoys = self.alice.decoys.clone();
        self.say(
            Actor::Alice,
            ClassicalMessage::SecondCheckIndices {
                indices: decoys.clone(),
            },
        );
        let decoy_set: BTreeSet<usize> = decoys.iter().copied().collect();
        self.bob.message_positions = self
            .bob
            .survivors
            .iter()
            .copied()
            .filter(|p| !decoy_set.contains(p))
            .collect();
        self.bob.decoys = decoys;
        Ok(())
    }

    /// Bob applies his op to a random photon of each pair, Bell-measures it
    /// and announces every result.
    pub fn bob_encode_measure_announce(
        &mut self,
    ) -> Result<Vec<(usize, BellState)>, ProtocolError> {
        self.advance_both(Phase::BellAnnounce)?;
        let decoy_set: BTreeSet<usize> = self.bob.decoys.iter().copied().collect();
        let mut message = self.bob_msg.pairs().collect::<Vec<_>>().into_iter();
        let mut results = Vec::with_capacity(self.bob.survivors.len());
        for p in self.bob.survivors.clone() {
            let (op, purpose) = if decoy_set.contains(&p) {
                (random_op(&mut self.bob_rng), OpPurpose::Decoy)
            } else if let Some(bits) = message.next() {
                (op_for_bits(bits), OpPurpose::Message)
            } else {
                (random_op(&mut self.bob_rng), OpPurpose::Filler)
            };
            let slot = if self.bob_rng.random_bool(0.5) {
                QubitSlot::M
            } else {
                QubitSlot::C
            };
            self.apply(Role::Bob, p, slot, op, purpose)?;
            self.bob.ops.insert(p, (op, purpose, slot));

            self.custody.consume(Holder::Bob, p)?;
            let result = self.pairs[p].bell_measure(&mut self.nature);
            self.log(Actor::Bob, Event::BellMeasure { pair: p, result });
            self.bob.results.insert(p, result);
            results.push((p, result));
        }
        self.say(
            Actor::Bob,
            ClassicalMessage::BellResults {
                results: results.clone(),
            },
        );
        Ok(results)
    }

    /// Bob reveals his ops at the decoys, then Alice reveals hers and checks
    /// each announced result against the table.
    pub fn second_check(
        &mut self,
        announced: &[(usize, BellState)],
    ) -> Result<CheckVerdict, ProtocolError> {
        self.advance_both(Phase::SecondCheck)?;
        let decoys = self.alice.decoys.clone();
        let bob_reveal: Vec<(usize, PauliOp)> = self
            .bob
            .decoys
            .iter()
            .map(|p| (*p, self.bob.ops[p].0))
            .collect();
        self.say(
            Actor::Bob,
            ClassicalMessage::SecondCheckReveal {
                ops: bob_reveal.clone(),
            },
        );
        let alice_reveal: Vec<(usize, PauliOp)> =
            decoys.iter().map(|p| (*p, self.alice.ops[p].0)).collect();
        self.say(
            Actor::Alice,
            ClassicalMessage::SecondCheckReveal {
                ops: alice_reveal.clone(),
            },
        );

        let results: BTreeMap<usize, BellState> = announced.iter().copied().collect();
        let mismatches = alice_reveal
            .iter()
            .zip(&bob_reveal)
            .filter(|((p, a), (_, b))| results.get(p) != Some(&crate::codec::expected_bell(*a, *b)))
            .count();
        self.stats.decoys_checked = decoys.len();
        self.stats.decoy_mismatches = mismatches;
        let verdict = CheckVerdict {
            stage: CheckStage::Second,
            passed: mismatches == 0,
            violations: mismatches,
        };
        self.say(Actor::Alice, ClassicalMessage::CheckVerdict(verdict));
        Ok(verdict)
    }

    fn finish(mut self, verdict: Verdict) -> Transcript {
        let stats = self.stats;
        self.log(Actor::System, Event::Verdict { verdict, stats });
        Transcript::from_records(self.records)
            .expect("session always writes config first and verdict last")
    }

    /// Publishes the abort and ends the run, discarding everything.
    pub fn abort(mut self, reason: AbortReason) -> Result<Transcript, ProtocolError> {
        let phase = self.alice.party.phase;
        self.say(Actor::Alice, ClassicalMessage::Abort { reason });
        self.advance_both(Phase::Aborted)?;
        Ok(self.finish(Verdict::Aborted { phase, reason }))
    }

    /// Both parties decode and the run completes.
    pub fn complete(
        mut self,
        announced: &[(usize, BellState)],
    ) -> Result<Transcript, ProtocolError> {
        self.advance_both(Phase::Done)?;
        let (alice_decoded, bob_decoded) = decode_both(&self.alice, &self.bob, announced);
        self.alice.decoded = alice_decoded;
        self.bob.decoded = bob_decoded;
        debug_assert_eq!(
            2 * self.alice.decoded.len(),
            self.config.bob_capacity_bits()
        );
        debug_assert_eq!(
            2 * self.bob.decoded.len(),
            self.config.alice_capacity_bits()
        );

        // Message lengths are agreed framing; the rest is filler.
        let frame = |pairs: &[BitPair], msg: &MessageBits| {
            MessageBits::from_pairs(&pairs[..msg.pair_count()], msg.pad())
                .expect("pad fits a non-empty frame")
        };
        let verdict = Verdict::Completed {
            alice_decoded: frame(&self.alice.decoded, &self.bob_msg),
            bob_decoded: frame(&self.bob.decoded, &self.alice_msg),
        };
        Ok(self.finish(verdict))
    }
}

/// Runs the whole protocol with scalar type `T`.
pub fn run_protocol_with<T: Scalar>(
    config: &ProtocolConfig,
    alice_msg: &MessageBits,
    bob_msg: &MessageBits,
) -> Result<Transcript, ProtocolError> {
    let mut s = Session::<T>::new(config, alice_msg, bob_msg)?;
    s.prepare()?;
    s.first_transmission()?;
    if !s.first_check()?.passed {
        return s.abort(AbortReason::FirstCheckViolations);
    }
    s.alice_encode()?;
    s.second_transmission()?;
    let announced = s.bob_encode_measure_announce()?;
    if !s.second_check(&announced)?.passed {
        return s.abort(AbortReason::SecondCheckMismatch);
    }
    s.complete(&announced)
}

/// Runs the whole protocol in double precision.
pub fn run_protocol(
    config: &ProtocolConfig,
    alice_msg: &MessageBits,
    bob_msg: &MessageBits,
) -> Result<Transcript, ProtocolError> {
    run_protocol_with::<f64>(config, alice_msg, bob_msg)
}
