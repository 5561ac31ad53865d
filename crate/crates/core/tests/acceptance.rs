//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

use std::time::{Duration, Instant};

use qsdc_core::adversary::{
    classical_information, estimate_detection, random_messages, trial_seeds,
};
use qsdc_core::codec::expected_bell;
use qsdc_core::stats::within_sigma;
use qsdc_core::{
    make_singlet, Attack, Basis, BellState, EveStrategy, MessageBits, PauliOp, ProtocolConfig,
    QubitSlot, RandomStream, State, Transcript, Verdict,
};
use rand::Rng;
use rayon::prelude::*;

const TABLE: [[BellState; 4]; 4] = {
    use BellState::*;
    [
        [PsiMinus, PsiPlus, PhiMinus, PhiPlus],
        [PsiPlus, PsiMinus, PhiPlus, PhiMinus],
        [PhiMinus, PhiPlus, PsiMinus, PsiPlus],
        [PhiPlus, PhiMinus, PsiPlus, PsiMinus],
    ]
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn deterministic_bell(s: &State) -> Option<BellState> {
    let p = s.bell_probabilities();
    p.iter()
        .position(|x| (x - 1.0).abs() < 1e-12)
        .map(|i| BellState::ALL[i])
}

fn table_reproduction() -> Outcome {
    let mut checked = 0;
    for a in PauliOp::ALL {
        for b in PauliOp::ALL {
            let want = TABLE[a.code() as usize][b.code() as usize];
            for slot in QubitSlot::ALL {
                let s = make_singlet::<f64>()
                    .apply_pauli(a, QubitSlot::M)
                    .apply_pauli(b, slot);
                match deterministic_bell(&s) {
                    Some(got) if got == want && expected_bell(a, b) == want => checked += 1,
                    got => return Err(format!("{a},{b} on {slot:?}: got {got:?}, want {want}")),
                }
            }
        }
    }
    Ok(format!(
        "{checked}/32 cases deterministic and equal to the table"
    ))
}

fn pauli_to_bell() -> Outcome {
    for (op, want) in PauliOp::ALL.into_iter().zip(BellState::ALL) {
        let s = make_singlet::<f64>().apply_pauli(op, QubitSlot::M);
        let p = s.bell_probabilities()[want.index() as usize];
        if (p - 1.0).abs() > 1e-12 {
            return Err(format!("{op}: P({want}) = {p}"));
        }
    }
    Ok("U0..U3 -> Psi-, Psi+, Phi-, Phi+ with probability 1".into())
}

fn anticorrelation() -> Outcome {
    let mut rng = RandomStream::from_seed(0xC4EC);
    let rounds = 10_000;
    let mut violations = 0;
    for _ in 0..rounds {
        let basis = if rng.random::<bool>() {
            Basis::X
        } else {
            Basis::Z
        };
        let (bob, rest) = make_singlet::<f64>().measure_qubit(QubitSlot::C, basis, &mut rng);
        let (alice, _) = rest.measure_qubit(QubitSlot::M, basis, &mut rng);
        violations += usize::from(bob == alice);
    }
    // and through the full first check of the engine
    let cfg = ProtocolConfig::default()
        .with_pairs(64)
        .with_check_fraction(0.5);
    let stats = estimate_detection(
        &EveStrategy::none(),
        &cfg,
        313,
        &mut RandomStream::from_seed(3),
    )
    .map_err(|e| e.to_string())?;
    if violations == 0 && stats.violations == 0 {
        Ok(format!(
            "{rounds} rounds + {} engine check photons, 0 violations",
            stats.photons_checked
        ))
    } else {
        Err(format!(
            "{violations} direct, {} engine violations",
            stats.violations
        ))
    }
}

fn round_trip() -> Outcome {
    let cfg = ProtocolConfig::default().with_pairs(128);
    let seeds = trial_seeds(1000, &mut RandomStream::from_seed(4));
    let failures: Vec<String> = seeds
        .par_iter()
        .filter_map(|&seed| {
            let cfg = cfg.clone().with_seed(seed);
            let (a, b) = random_messages(&cfg, &mut RandomStream::derive(seed, 99));
            let t = qsdc_core::run_protocol(&cfg, &a, &b).ok()?;
            let ok = t.verdict()
                == &Verdict::Completed {
                    alice_decoded: b,
                    bob_decoded: a,
                };
            (!ok).then(|| format!("seed {seed}"))
        })
        .collect();
    let ran = seeds.len();
    if failures.is_empty() {
        Ok(format!(
            "{ran}/{ran} runs completed, {} + {} bits decoded exactly per run",
            cfg.alice_capacity_bits(),
            cfg.bob_capacity_bits()
        ))
    } else {
        Err(format!(
            "{} of {ran} failed, first {}",
            failures.len(),
            failures[0]
        ))
    }
}

fn intercept_detection() -> Outcome {
    let mut notes = Vec::new();
    for (i, attack) in [Attack::InterceptResendZ, Attack::InterceptResendRandom]
        .into_iter()
        .enumerate()
    {
        let eve = EveStrategy::new(attack);
        // 32 check photons per run
        let cfg = ProtocolConfig::default()
            .with_pairs(64)
            .with_check_fraction(0.5)
            .with_eve(eve);
        let stats = estimate_detection(
            &eve,
            &cfg,
            3125,
            &mut RandomStream::from_seed(50 + i as u64),
        )
        .map_err(|e| e.to_string())?;
        if stats.photons_checked < 100_000 {
            return Err(format!("only {} photons", stats.photons_checked));
        }
        if !within_sigma(stats.per_photon_rate, 0.25, stats.photons_checked, 3.0) {
            return Err(format!(
                "{attack}: per-photon rate {:.5}",
                stats.per_photon_rate
            ));
        }
        notes.push(format!("{attack} {:.4}", stats.per_photon_rate));

        for c in [4usize, 8, 16] {
            let cfg = ProtocolConfig::default()
                .with_pairs(64)
                .with_check_fraction(c as f64 / 64.0)
                .with_decoys(0)
                .with_eve(eve);
            let trials = 4000;
            let stats = estimate_detection(
                &eve,
                &cfg,
                trials,
                &mut RandomStream::from_seed(c as u64 + 10 * i as u64),
            )
            .map_err(|e| e.to_string())?;
            let expected = 1.0 - 0.75f64.powi(c as i32);
            if stats.whole_protocol_abort_rate != stats.first_check_abort_rate
                || !within_sigma(stats.whole_protocol_abort_rate, expected, trials, 3.0)
            {
                return Err(format!(
                    "{attack} c={c}: abort rate {:.4} vs {expected:.4}",
                    stats.whole_protocol_abort_rate
                ));
            }
        }
    }
    Ok(format!(
        "per-photon {}; abort rate matches 1-(3/4)^c for c=4,8,16",
        notes.join(", ")
    ))
}

fn transcript_secrecy() -> Outcome {
    let cfg = ProtocolConfig::default().with_pairs(128);
    let seeds = trial_seeds(1100, &mut RandomStream::from_seed(6));
    let runs: Vec<Transcript> = seeds
        .par_iter()
        .map(|&seed| {
            let cfg = cfg.clone().with_seed(seed);
            let (a, b) = random_messages(&cfg, &mut RandomStream::derive(seed, 98));
            qsdc_core::run_protocol(&cfg, &a, &b).expect("valid config")
        })
        .collect();
    let info = classical_information(&runs, 1).map_err(|e| e.to_string())?;
    let pairs = info.about_alice.pairs;
    if pairs < 100_000 {
        return Err(format!("only {pairs} pairs"));
    }
    let (ia, ib) = (info.about_alice.bits_per_pair, info.about_bob.bits_per_pair);
    if ia < 0.01 && ib < 0.01 {
        Ok(format!(
            "I(announce;Alice) = {ia:.5}, I(announce;Bob) = {ib:.5} bits/pair over {pairs} pairs"
        ))
    } else {
        Err(format!("leak: {ia:.5} / {ib:.5}"))
    }
}

fn replay_determinism() -> Outcome {
    let cfg = ProtocolConfig::default()
        .with_pairs(96)
        .with_seed(2718)
        .with_eve(EveStrategy::new(Attack::InterceptResendRandom).with_prob(0.02));
    let a: MessageBits = "1011001110001111000011111"
        .parse()
        .map_err(|e| format!("{e}"))?;
    let b: MessageBits = "0110".parse().map_err(|e| format!("{e}"))?;
    let dir = std::env::temp_dir().join(format!("qsdc-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let mut bytes = Vec::new();
    for i in 0..2 {
        let path = dir.join(format!("run{i}.jsonl"));
        let t = qsdc_core::run_protocol(&cfg, &a, &b).map_err(|e| e.to_string())?;
        t.write_to(&path).map_err(|e| e.to_string())?;
        bytes.push(std::fs::read(&path).map_err(|e| e.to_string())?);
    }
    let replayed = qsdc_core::session::replay(
        &Transcript::read_from(dir.join("run0.jsonl")).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let _ = std::fs::remove_dir_all(&dir);
    if bytes[0] == bytes[1] && replayed.to_jsonl().as_bytes() == bytes[0] {
        Ok(format!(
            "two writes and a replay identical ({} bytes)",
            bytes[0].len()
        ))
    } else {
        Err("transcripts differ".into())
    }
}

fn main() {
    let criteria: [Criterion; 7] = [
        (
            "1 table reproduction",
            Some(Duration::from_secs(1)),
            table_reproduction,
        ),
        ("2 pauli-to-bell map", None, pauli_to_bell),
        (
            "3 anticorrelation check",
            Some(Duration::from_secs(5)),
            anticorrelation,
        ),
        (
            "4 bidirectional round trip",
            Some(Duration::from_secs(30)),
            round_trip,
        ),
        (
            "5 intercept-resend detection",
            Some(Duration::from_secs(60)),
            intercept_detection,
        ),
        ("6 classical-transcript secrecy", None, transcript_secrecy),
        ("7 replay determinism", None, replay_determinism),
    ];
    let mut failed = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let mut outcome = check();
        let elapsed = start.elapsed();
        if let (Ok(_), Some(limit)) = (&outcome, budget) {
            if elapsed > limit {
                outcome = Err(format!("took {elapsed:.2?}, budget {limit:?}"));
            }
        }
        match outcome {
            Ok(msg) => println!("PASS  {name}: {msg} [{elapsed:.2?}]"),
            Err(msg) => {
                failed += 1;
                println!("FAIL  {name}: {msg} [{elapsed:.2?}]");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
