//! Eavesdropper models on the quantum channel and detection/information
//! estimators built on top of full protocol runs.
//!
//! Only individual attacks are modelled: Eve acts on each transiting photon
//! on its own, either measuring it and forwarding the collapsed photon
//! (intercept-resend) or keeping it and forwarding a fresh `|0>` instead.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{BitPair, MessageBits};
use crate::qsim::{Basis, QubitSlot, TwoQubitState};
use crate::rng::{streams, RandomStream};
use crate::scalar::Scalar;
use crate::session::{
    run_protocol_with, AbortReason, Event, OpPurpose, Phase, ProtocolConfig, ProtocolError,
    Transcript, Verdict,
};
use crate::stats::{wilson_interval, Interval, JointCounts, Z_95};

/// Which transmission a photon is on: the C sequence goes out first, the
/// encoded M sequence second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leg {
    First,
    Second,
}

impl Leg {
    /// The photon that travels on this leg.
    pub fn slot(self) -> QubitSlot {
        match self {
            Leg::First => QubitSlot::C,
            Leg::Second => QubitSlot::M,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LegSelection {
    First,
    Second,
    Both,
}

impl LegSelection {
    pub fn includes(self, leg: Leg) -> bool {
        matches!(
            (self, leg),
            (LegSelection::Both, _)
                | (LegSelection::First, Leg::First)
                | (LegSelection::Second, Leg::Second)
        )
    }
}

impl FromStr for LegSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(Self::First),
            "second" => Ok(Self::Second),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown leg selection {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Attack {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "intercept-z")]
    InterceptResendZ,
    #[serde(rename = "intercept-x")]
    InterceptResendX,
    #[serde(rename = "intercept-rand")]
    InterceptResendRandom,
    #[serde(rename = "substitute")]
    SubstituteFresh,
}

impl Attack {
    pub const ALL: [Attack; 5] = [
        Attack::None,
        Attack::InterceptResendZ,
        Attack::InterceptResendX,
        Attack::InterceptResendRandom,
        Attack::SubstituteFresh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Attack::None => "none",
            Attack::InterceptResendZ => "intercept-z",
            Attack::InterceptResendX => "intercept-x",
            Attack::InterceptResendRandom => "intercept-rand",
            Attack::SubstituteFresh => "substitute",
        }
    }

    /// Intercept-resend attacks target the C sequence; substitution targets
    /// the encoded M sequence, which only the decoy check can catch.
    pub fn default_legs(self) -> LegSelection {
        match self {
            Attack::SubstituteFresh => LegSelection::Second,
            _ => LegSelection::First,
        }
    }
}

impl fmt::Display for Attack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Attack {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Attack::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown eve strategy {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStrategy {
    pub attack: Attack,
    /// Per-photon attack probability.
    pub prob: f64,
    pub legs: LegSelection,
}

impl EveStrategy {
    pub fn none() -> Self {
        Self::new(Attack::None)
    }

    pub fn new(attack: Attack) -> Self {
        Self {
            attack,
            prob: 1.0,
            legs: attack.default_legs(),
        }
    }

    pub fn with_prob(mut self, prob: f64) -> Self {
        self.prob = prob;
        self
    }

    pub fn with_legs(mut self, legs: LegSelection) -> Self {
        self.legs = legs;
        self
    }

    pub fn is_none(&self) -> bool {
        self.attack == Attack::None
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.prob) {
            return Err(format!("eve probability {} outside [0, 1]", self.prob));
        }
        Ok(())
    }

    /// Closed-form probability that a first-check photon shows an
    /// anticorrelation violation under this strategy.
    pub fn analytic_violation_rate(&self) -> f64 {
        if !self.legs.includes(Leg::First) {
            return 0.0;
        }
        let per_attack = match self.attack {
            Attack::None => 0.0,
            Attack::InterceptResendZ | Attack::InterceptResendX | Attack::InterceptResendRandom => {
                0.25
            }
            Attack::SubstituteFresh => 0.5,
        };
        per_attack * self.prob
    }

    /// Probability that a first check over `checked` photons aborts at
    /// threshold 0.
    pub fn analytic_first_check_abort_rate(&self, checked: usize) -> f64 {
        1.0 - (1.0 - self.analytic_violation_rate()).powi(checked as i32)
    }
}

impl Default for EveStrategy {
    fn default() -> Self {
        Self::none()
    }
}

/// One photon touched by Eve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveEntry {
    pub pair: usize,
    pub leg: Leg,
    pub basis: Basis,
    pub outcome: u8,
    /// The original photon was kept and a fresh `|0>` sent on.
    pub substituted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EveRecord {
    pub entries: Vec<EveEntry>,
}

impl EveRecord {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: EveRecord) {
        self.entries.extend(other.entries);
    }

    /// Rebuilds Eve's log from the eavesdropping events of a transcript.
    pub fn from_transcript(transcript: &Transcript) -> Self {
        let entries = transcript
            .records()
            .iter()
            .filter_map(|r| match r.event {
                Event::Intercept {
                    pair,
                    leg,
                    basis,
                    outcome,
                    ..
                } => Some(EveEntry {
                    pair,
                    leg,
                    basis,
                    outcome,
                    substituted: false,
                }),
                Event::Substitute {
                    pair, leg, outcome, ..
                } => Some(EveEntry {
                    pair,
                    leg,
                    basis: Basis::Z,
                    outcome,
                    substituted: true,
                }),
                _ => None,
            })
            .collect();
        Self { entries }
    }

    /// Eve's guess of Alice's bits per pair, where she has one.
    ///
    /// Measuring the same pair in the same basis on both legs reveals whether
    /// Alice's op flipped that basis: a Z flip is the high code bit, an X
    /// flip the low one. The unobserved bit is guessed as 0.
    pub fn guesses(&self) -> BTreeMap<usize, BitPair> {
        let mut first: BTreeMap<usize, &EveEntry> = BTreeMap::new();
        let mut out = BTreeMap::new();
        for e in &self.entries {
            match e.leg {
                Leg::First if !e.substituted => {
                    first.insert(e.pair, e);
                }
                Leg::Second if !e.substituted => {
                    if let Some(f) = first.get(&e.pair) {
                        if f.basis == e.basis {
                            // untouched singlet partners are anticorrelated
                            let flipped = f.outcome == e.outcome;
                            let guess = match e.basis {
                                Basis::Z => BitPair::from_bits(flipped, false),
                                Basis::X => BitPair::from_bits(false, flipped),
                            };
                            out.insert(e.pair, guess);
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }
}

/// Passes the photons of one leg through the channel, letting Eve act on each
/// independently with probability `strategy.prob`.
pub fn transit<T: Scalar, R: Rng + ?Sized>(
    pairs: &mut [(usize, TwoQubitState<T>)],
    leg: Leg,
    strategy: &EveStrategy,
    rng: &mut R,
) -> EveRecord {
    let mut record = EveRecord::default();
    if strategy.is_none() || !strategy.legs.includes(leg) {
        return record;
    }
    let slot = leg.slot();
    for (pair, state) in pairs.iter_mut() {
        if !rng.random_bool(strategy.prob) {
            continue;
        }
        let basis = match strategy.attack {
            Attack::InterceptResendZ | Attack::SubstituteFresh => Basis::Z,
            Attack::InterceptResendX => Basis::X,
            Attack::InterceptResendRandom => {
                if rng.random_bool(0.5) {
                    Basis::X
                } else {
                    Basis::Z
                }
            }
            Attack::None => unreachable!(),
        };
        let substituted = strategy.attack == Attack::SubstituteFresh;
        let (outcome, next) = if substituted {
            state.substitute_fresh(slot, rng)
        } else {
            state.measure_qubit(slot, basis, rng)
        };
        *state = next;
        record.entries.push(EveEntry {
            pair: *pair,
            leg,
            basis,
            outcome,
            substituted,
        });
    }
    record
}

/// Aggregated outcome of many independent protocol runs under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionStats {
    pub trials: u64,
    pub photons_checked: u64,
    pub violations: u64,
    pub per_photon_rate: f64,
    pub per_photon_ci: Interval,
    pub aborts: u64,
    pub whole_protocol_abort_rate: f64,
    pub abort_ci: Interval,
    pub first_check_aborts: u64,
    pub first_check_abort_rate: f64,
    pub first_check_abort_ci: Interval,
    pub decoys_checked: u64,
    pub decoy_mismatches: u64,
    pub decoy_mismatch_rate: f64,
}

#[derive(Debug, Default, Clone, Copy)]
struct TrialCounts {
    photons_checked: u64,
    violations: u64,
    aborts: u64,
    first_check_aborts: u64,
    decoys_checked: u64,
    decoy_mismatches: u64,
}

impl TrialCounts {
    fn add(self, o: Self) -> Self {
        Self {
            photons_checked: self.photons_checked + o.photons_checked,
            violations: self.violations + o.violations,
            aborts: self.aborts + o.aborts,
            first_check_aborts: self.first_check_aborts + o.first_check_aborts,
            decoys_checked: self.decoys_checked + o.decoys_checked,
            decoy_mismatches: self.decoy_mismatches + o.decoy_mismatches,
        }
    }
}

/// Uniformly random messages filling both parties' capacities.
pub fn random_messages(config: &ProtocolConfig, rng: &mut impl Rng) -> (MessageBits, MessageBits) {
    let alice = (0..config.alice_capacity_bits())
        .map(|_| rng.random())
        .collect();
    let bob = (0..config.bob_capacity_bits())
        .map(|_| rng.random())
        .collect();
    (MessageBits::from_bits(alice), MessageBits::from_bits(bob))
}

/// Seeds for `trials` independent runs, drawn in order from `rng`.
pub fn trial_seeds(trials: u64, rng: &mut impl Rng) -> Vec<u64> {
    (0..trials).map(|_| rng.random()).collect()
}

/// Runs one protocol instance per seed with uniformly random messages.
/// Results come back in seed order.
pub fn run_trials(
    config: &ProtocolConfig,
    seeds: &[u64],
) -> Result<Vec<Transcript>, ProtocolError> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ProtocolConfig {
                seed,
                ..config.clone()
            };
            let mut msg_rng = RandomStream::derive(seed, streams::FILLER);
            let (a, b) = random_messages(&cfg, &mut msg_rng);
            run_protocol_with::<f64>(&cfg, &a, &b)
        })
        .collect()
}

/// Monte Carlo detection statistics for `strategy` over `trials` runs.
pub fn estimate_detection(
    strategy: &EveStrategy,
    config: &ProtocolConfig,
    trials: u64,
    rng: &mut impl Rng,
) -> Result<DetectionStats, ProtocolError> {
    if trials == 0 {
        return Err(ProtocolError::ConfigInvalid(
            "trials must be at least 1".into(),
        ));
    }
    let config = ProtocolConfig {
        eve: *strategy,
        ..config.clone()
    };
    config.validate()?;
    let seeds = trial_seeds(trials, rng);
    let counts = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ProtocolConfig {
                seed,
                ..config.clone()
            };
            let mut msg_rng = RandomStream::derive(seed, streams::FILLER);
            let (a, b) = random_messages(&cfg, &mut msg_rng);
            let t = run_protocol_with::<f64>(&cfg, &a, &b)?;
            let stats = t.stats();
            let (aborted, first) = match t.verdict() {
                Verdict::Aborted { phase, .. } => (1, u64::from(*phase == Phase::FirstCheck)),
                Verdict::Completed { .. } => (0, 0),
            };
            Ok(TrialCounts {
                photons_checked: stats.first_checked as u64,
                violations: stats.first_violations as u64,
                aborts: aborted,
                first_check_aborts: first,
                decoys_checked: stats.decoys_checked as u64,
                decoy_mismatches: stats.decoy_mismatches as u64,
            })
        })
        .try_reduce(TrialCounts::default, |a, b| Ok(a.add(b)))?;

    let rate = |k: u64, n: u64| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    Ok(DetectionStats {
        trials,
        photons_checked: counts.photons_checked,
        violations: counts.violations,
        per_photon_rate: rate(counts.violations, counts.photons_checked),
        per_photon_ci: wilson_interval(counts.violations, counts.photons_checked, Z_95),
        aborts: counts.aborts,
        whole_protocol_abort_rate: rate(counts.aborts, trials),
        abort_ci: wilson_interval(counts.aborts, trials, Z_95),
        first_check_aborts: counts.first_check_aborts,
        first_check_abort_rate: rate(counts.first_check_aborts, trials),
        first_check_abort_ci: wilson_interval(counts.first_check_aborts, trials, Z_95),
        decoys_checked: counts.decoys_checked,
        decoy_mismatches: counts.decoy_mismatches,
        decoy_mismatch_rate: rate(counts.decoy_mismatches, counts.decoys_checked),
    })
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InfoError {
    #[error("need at least {required} completed runs, got {got}")]
    InsufficientSamples { required: usize, got: usize },
}

/// Mutual information estimate, in bits per encoded pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoEstimate {
    pub bits_per_pair: f64,
    pub pairs: u64,
    pub runs: usize,
}

fn completed(t: &Transcript) -> bool {
    matches!(t.verdict(), Verdict::Completed { .. })
}

/// Empirical I(Eve's guess; Alice's bits) over Alice's non-decoy pairs of
/// completed runs. Pairs Eve has no guess for count as a fifth symbol.
pub fn eve_information<'a, I>(runs: I, min_runs: usize) -> Result<InfoEstimate, InfoError>
where
    I: IntoIterator<Item = (&'a EveRecord, &'a Transcript)>,
{
    let mut counts = JointCounts::new(5, 4);
    let mut n_runs = 0;
    for (record, transcript) in runs {
        if !completed(transcript) {
            continue;
        }
        n_runs += 1;
        let guesses = record.guesses();
        for (pair, op, purpose) in transcript.alice_ops() {
            if purpose == OpPurpose::Decoy {
                continue;
            }
            let guess = guesses.get(&pair).map_or(4, |g| g.value() as usize);
            counts.add(guess, op.code() as usize);
        }
    }
    if n_runs < min_runs {
        return Err(InfoError::InsufficientSamples {
            required: min_runs,
            got: n_runs,
        });
    }
    Ok(InfoEstimate {
        bits_per_pair: counts.mutual_information(),
        pairs: counts.total(),
        runs: n_runs,
    })
}

/// What a passive listener on the classical channel learns about each party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalInfo {
    pub about_alice: InfoEstimate,
    pub about_bob: InfoEstimate,
}

/// Empirical I(announced Bell index; Alice's bits) and I(announced; Bob's
/// bits) over non-decoy pairs of completed runs.
pub fn classical_information<'a, I>(runs: I, min_runs: usize) -> Result<ClassicalInfo, InfoError>
where
    I: IntoIterator<Item = &'a Transcript>,
{
    let mut alice = JointCounts::new(4, 4);
    let mut bob = JointCounts::new(4, 4);
    let mut n_runs = 0;
    for t in runs {
        if !completed(t) {
            continue;
        }
        n_runs += 1;
        let announced: BTreeMap<usize, _> = t.announced().into_iter().collect();
        let bob_ops: BTreeMap<usize, _> = t
            .bob_ops()
            .into_iter()
            .map(|(p, op, purpose)| (p, (op, purpose)))
            .collect();
        for (pair, a_op, purpose) in t.alice_ops() {
            if purpose == OpPurpose::Decoy {
                continue;
            }
            let (Some(result), Some((b_op, _))) = (announced.get(&pair), bob_ops.get(&pair)) else {
                continue;
            };
            alice.add(result.index() as usize, a_op.code() as usize);
            bob.add(result.index() as usize, b_op.code() as usize);
        }
    }
    if n_runs < min_runs {
        return Err(InfoError::InsufficientSamples {
            required: min_runs,
            got: n_runs,
        });
    }
    Ok(ClassicalInfo {
        about_alice: InfoEstimate {
            bits_per_pair: alice.mutual_information(),
            pairs: alice.total(),
            runs: n_runs,
        },
        about_bob: InfoEstimate {
            bits_per_pair: bob.mutual_information(),
            pairs: bob.total(),
            runs: n_runs,
        },
    })
}

/// Reason the most recent abort happened, if any; handy for reporting.
pub fn abort_reason(t: &Transcript) -> Option<AbortReason> {
    match t.verdict() {
        Verdict::Aborted { reason, .. } => Some(*reason),
        Verdict::Completed { .. } => None,
    }
}
