use std::collections::BTreeMap;

use proptest::prelude::*;
use qsdc_core::adversary::{
    classical_information, estimate_detection, eve_information, run_trials, trial_seeds,
};
use qsdc_core::session::{audit_custody, replay, Actor, Event, OpPurpose, Phase, Record};
use qsdc_core::stats::within_sigma;
use qsdc_core::{
    Attack, EveRecord, EveStrategy, LegSelection, MessageBits, ProtocolConfig, RandomStream,
    Transcript, Verdict,
};

fn random_bits(n: usize, rng: &mut RandomStream) -> MessageBits {
    use rand::Rng;
    MessageBits::from_bits((0..n).map(|_| rng.random()).collect())
}

#[test]
fn twenty_bit_messages_at_sixteen_pairs() {
    let cfg = ProtocolConfig::default().with_pairs(16).with_seed(99);
    let mut rng = RandomStream::from_seed(5);
    let a = random_bits(20, &mut rng);
    let b = random_bits(20, &mut rng);
    let t = qsdc_core::run_protocol(&cfg, &a, &b).unwrap();
    assert_eq!(
        t.verdict(),
        &Verdict::Completed {
            alice_decoded: b,
            bob_decoded: a
        }
    );
    audit_custody(&t).unwrap();
}

#[test]
fn thousand_pair_run_decodes_exactly() {
    let cfg = ProtocolConfig::default()
        .with_pairs(1000)
        .with_decoys(20)
        .with_seed(1);
    let mut rng = RandomStream::from_seed(6);
    let a = random_bits(cfg.alice_capacity_bits(), &mut rng);
    let b = random_bits(cfg.bob_capacity_bits(), &mut rng);
    let t = qsdc_core::run_protocol(&cfg, &a, &b).unwrap();
    assert_eq!(
        t.verdict(),
        &Verdict::Completed {
            alice_decoded: b,
            bob_decoded: a
        }
    );
}

#[test]
fn f32_engine_agrees() {
    let cfg = ProtocolConfig::default().with_pairs(40).with_seed(12);
    let mut rng = RandomStream::from_seed(6);
    let a = random_bits(30, &mut rng);
    let b = random_bits(17, &mut rng);
    let t = qsdc_core::session::run_protocol_with::<f32>(&cfg, &a, &b).unwrap();
    assert_eq!(
        t.verdict(),
        &Verdict::Completed {
            alice_decoded: b,
            bob_decoded: a
        }
    );
}

#[test]
fn replay_is_byte_identical() {
    let cfg = ProtocolConfig::default()
        .with_pairs(24)
        .with_seed(77)
        .with_eve(EveStrategy::new(Attack::InterceptResendRandom).with_prob(0.1));
    let a: MessageBits = "1100101".parse().unwrap();
    let b: MessageBits = "00111".parse().unwrap();
    let t1 = qsdc_core::run_protocol(&cfg, &a, &b).unwrap();
    let t2 = qsdc_core::run_protocol(&cfg, &a, &b).unwrap();
    assert_eq!(t1.to_jsonl(), t2.to_jsonl());
    let parsed = Transcript::from_jsonl(&t1.to_jsonl()).unwrap();
    assert_eq!(parsed, t1);
    assert_eq!(replay(&parsed).unwrap().to_jsonl(), t1.to_jsonl());
}

#[test]
fn audit_catches_foreign_custody() {
    let cfg = ProtocolConfig::default().with_seed(2);
    let t = qsdc_core::run_protocol(&cfg, &MessageBits::empty(), &MessageBits::empty()).unwrap();
    audit_custody(&t).unwrap();

    // Re-attribute one of Alice's encoding ops to Bob: he does not hold M then.
    let mut records: Vec<Record> = t.records().to_vec();
    let pos = records
        .iter()
        .position(|r| r.actor == Actor::Alice && matches!(r.event, Event::ApplyOp { .. }))
        .unwrap();
    records[pos].actor = Actor::Bob;
    let forged = Transcript::from_records(records).unwrap();
    let err = audit_custody(&forged).unwrap_err();
    assert_eq!(err.seq, pos as u64);
}

#[test]
fn classical_messages_are_sequenced_and_well_formed() {
    let cfg = ProtocolConfig::default().with_pairs(48).with_seed(3);
    let t = qsdc_core::run_protocol(&cfg, &MessageBits::empty(), &MessageBits::empty()).unwrap();
    let mut last = None;
    for (seq, _, m) in t.messages() {
        assert!(m.is_well_formed(48));
        assert!(last.is_none_or(|l| seq > l));
        last = Some(seq);
    }
}

#[test]
fn decoys_and_message_positions_partition_survivors() {
    let cfg = ProtocolConfig::default()
        .with_pairs(64)
        .with_decoys(7)
        .with_seed(8);
    let t = qsdc_core::run_protocol(&cfg, &MessageBits::empty(), &MessageBits::empty()).unwrap();
    let ops = t.alice_ops();
    let decoys = ops.iter().filter(|o| o.2 == OpPurpose::Decoy).count();
    assert_eq!(decoys, 7);
    assert_eq!(ops.len(), cfg.surviving_pairs());
    let mut pairs: Vec<usize> = ops.iter().map(|o| o.0).collect();
    pairs.dedup();
    assert_eq!(pairs.len(), ops.len());
}

#[test]
fn substitution_is_caught_by_decoys() {
    let cfg = ProtocolConfig::default()
        .with_pairs(64)
        .with_decoys(16)
        .with_eve(EveStrategy::new(Attack::SubstituteFresh));
    let stats = estimate_detection(&cfg.eve, &cfg, 400, &mut RandomStream::from_seed(4)).unwrap();
    assert_eq!(
        stats.violations, 0,
        "second-leg attack is invisible to the first check"
    );
    assert!(
        within_sigma(stats.decoy_mismatch_rate, 0.75, stats.decoys_checked, 3.0),
        "mismatch rate {}",
        stats.decoy_mismatch_rate
    );
    // 1 - 0.25^16
    assert_eq!(stats.aborts, 400);
}

#[test]
fn abort_frequency_grows_with_check_size() {
    let eve = EveStrategy::new(Attack::InterceptResendZ);
    let mut last = 0.0;
    for c in [1usize, 2, 4, 8] {
        let cfg = ProtocolConfig::default()
            .with_pairs(64)
            .with_decoys(0)
            .with_check_fraction(c as f64 / 64.0);
        let stats =
            estimate_detection(&eve, &cfg, 4000, &mut RandomStream::from_seed(c as u64)).unwrap();
        let expected = 1.0 - 0.75f64.powi(c as i32);
        assert!(
            within_sigma(stats.first_check_abort_rate, expected, 4000, 3.0),
            "c={c}: {} vs {expected}",
            stats.first_check_abort_rate
        );
        assert!(stats.first_check_abort_rate > last);
        last = stats.first_check_abort_rate;
    }
}

#[test]
fn no_eve_never_aborts() {
    let cfg = ProtocolConfig::default().with_pairs(32);
    let stats = estimate_detection(
        &EveStrategy::none(),
        &cfg,
        500,
        &mut RandomStream::from_seed(1),
    )
    .unwrap();
    assert_eq!(stats.aborts, 0);
    assert_eq!(stats.violations, 0);
    assert_eq!(stats.whole_protocol_abort_rate, 0.0);
    assert!(estimate_detection(
        &EveStrategy::none(),
        &cfg,
        0,
        &mut RandomStream::from_seed(1)
    )
    .is_err());
}

#[test]
fn announcements_hide_both_parties() {
    // For each announced index, the four (a, b) combinations consistent with it
    // appear equally often over uniform messages.
    let cfg = ProtocolConfig::default().with_pairs(128);
    let seeds = trial_seeds(300, &mut RandomStream::from_seed(10));
    let runs = run_trials(&cfg, &seeds).unwrap();
    let mut counts: BTreeMap<(u8, u8), u64> = BTreeMap::new();
    for t in &runs {
        let bob: BTreeMap<usize, _> = t.bob_ops().into_iter().map(|(p, o, _)| (p, o)).collect();
        let announced: BTreeMap<usize, _> = t.announced().into_iter().collect();
        for (p, a, purpose) in t.alice_ops() {
            if purpose == OpPurpose::Decoy {
                continue;
            }
            assert_eq!(announced[&p].index(), a.code() ^ bob[&p].code());
            *counts.entry((announced[&p].index(), a.code())).or_default() += 1;
        }
    }
    let total: u64 = counts.values().sum();
    let cell = total as f64 / 16.0;
    for (&k, &n) in &counts {
        // each cell has p = 1/16
        assert!(
            (n as f64 - cell).abs() < 4.0 * (cell * 15.0 / 16.0).sqrt(),
            "{k:?}: {n} vs {cell}"
        );
    }
    let info = classical_information(&runs, 100).unwrap();
    assert!(info.about_alice.bits_per_pair < 0.01);
    assert!(info.about_bob.bits_per_pair < 0.01);
    assert!(classical_information(&runs, 1000).is_err());
}

#[test]
fn eve_information_none_is_zero_and_two_leg_intercept_leaks() {
    let cfg = ProtocolConfig::default().with_pairs(32);
    let seeds = trial_seeds(50, &mut RandomStream::from_seed(3));
    let runs = run_trials(&cfg, &seeds).unwrap();
    let records: Vec<EveRecord> = runs.iter().map(EveRecord::from_transcript).collect();
    let est = eve_information(records.iter().zip(&runs), 10).unwrap();
    assert_eq!(est.bits_per_pair, 0.0);

    // Both legs, attacked rarely enough that some runs survive.
    let eve = EveStrategy::new(Attack::InterceptResendZ)
        .with_prob(0.05)
        .with_legs(LegSelection::Both);
    let cfg = ProtocolConfig::default()
        .with_pairs(64)
        .with_decoys(1)
        .with_eve(eve);
    let seeds = trial_seeds(400, &mut RandomStream::from_seed(4));
    let runs = run_trials(&cfg, &seeds).unwrap();
    let records: Vec<EveRecord> = runs.iter().map(EveRecord::from_transcript).collect();
    let est = eve_information(records.iter().zip(&runs), 10).unwrap();
    assert!(est.runs >= 10);
    assert!(est.bits_per_pair > 0.0, "eve learns something: {est:?}");
}

#[test]
fn aborted_runs_record_phase() {
    let cfg = ProtocolConfig::default()
        .with_pairs(64)
        .with_check_fraction(0.5)
        .with_eve(EveStrategy::new(Attack::InterceptResendX))
        .with_seed(17);
    let t = qsdc_core::run_protocol(&cfg, &MessageBits::empty(), &MessageBits::empty()).unwrap();
    assert!(matches!(
        t.verdict(),
        Verdict::Aborted {
            phase: Phase::FirstCheck,
            ..
        }
    ));
    // nothing after the first check
    assert!(t.alice_ops().is_empty());
    audit_custody(&t).unwrap();
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn end_to_end_fidelity(
        seed in any::<u64>(),
        n in 4usize..80,
        a_frac in 0.0f64..=1.0,
        b_frac in 0.0f64..=1.0,
        bits_seed in any::<u64>(),
    ) {
        let cfg = ProtocolConfig::default().with_pairs(n).with_decoys(1).with_seed(seed);
        prop_assume!(cfg.validate().is_ok());
        let mut rng = RandomStream::from_seed(bits_seed);
        let a = random_bits((cfg.alice_capacity_bits() as f64 * a_frac) as usize, &mut rng);
        let b = random_bits((cfg.bob_capacity_bits() as f64 * b_frac) as usize, &mut rng);
        let t = qsdc_core::run_protocol(&cfg, &a, &b).unwrap();
        prop_assert_eq!(t.verdict(), &Verdict::Completed { alice_decoded: b, bob_decoded: a });
        prop_assert!(audit_custody(&t).is_ok());
    }
}
