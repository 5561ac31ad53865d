use std::fs;

use anyhow::Context;
use qsdc_core::adversary::{
    classical_information, estimate_detection, eve_information, run_trials, trial_seeds,
};
use qsdc_core::codec::{expected_bell, pack_bits, unpack_bits};
use qsdc_core::session::{audit_custody, Phase};
use qsdc_core::{
    make_singlet, BellState, EveRecord, MessageBits, PauliOp, ProtocolError, QubitSlot,
    RandomStream, Verdict,
};
use rand::Rng;

use crate::output::{fmt_rate, write_table, Table};
use crate::spec::{legs_name, MessageSource, Mode, RunSpec};
use crate::Failure;

/// Stream ids for seeded-random CLI messages, clear of the protocol's own.
const ALICE_MSG_STREAM: u64 = 101;
const BOB_MSG_STREAM: u64 = 102;

pub fn run(spec: &RunSpec) -> Result<(), Failure> {
    match spec.mode {
        Mode::Roundtrip => roundtrip(spec),
        Mode::TableCheck => table_check(spec),
        Mode::SecuritySweep => security_sweep(spec),
        Mode::InfoEstimate => info_estimate(spec),
    }
}

fn emit(spec: &RunSpec, table: &Table, echo_csv: bool) -> Result<(), Failure> {
    match &spec.out {
        Some(path) => write_table(spec, table, path)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Output),
        None => {
            if echo_csv {
                print!("{}", table.render());
            }
            Ok(())
        }
    }
}

fn load_message(
    src: &MessageSource,
    capacity: usize,
    stream: u64,
    seed: u64,
) -> Result<MessageBits, Failure> {
    Ok(match src {
        MessageSource::Hex(bytes) => pack_bits(bytes),
        MessageSource::Bits(s) => s.parse().map_err(|e| Failure::Config(format!("{e}")))?,
        MessageSource::File(path) => {
            let bytes = fs::read(path).map_err(|e| {
                Failure::Config(format!("cannot read message {}: {e}", path.display()))
            })?;
            pack_bits(&bytes)
        }
        MessageSource::Random(n) => {
            let mut rng = RandomStream::derive(seed, stream);
            let n = n.unwrap_or(capacity);
            MessageBits::from_bits((0..n).map(|_| rng.random()).collect())
        }
    })
}

fn show(m: &MessageBits) -> String {
    if m.bit_len().is_multiple_of(8) {
        format!("hex:{}", hex_of(m))
    } else {
        format!("bits:{m}")
    }
}

fn hex_of(m: &MessageBits) -> String {
    unpack_bits(m).iter().map(|b| format!("{b:02x}")).collect()
}

fn protocol_failure(e: ProtocolError) -> Failure {
    match e {
        ProtocolError::ConfigInvalid(_) | ProtocolError::CapacityExceeded { .. } => {
            Failure::Config(e.to_string())
        }
        other => Failure::Internal(anyhow::anyhow!("internal fault: {other}")),
    }
}

fn roundtrip(spec: &RunSpec) -> Result<(), Failure> {
    let cfg = &spec.protocol;
    let a = load_message(
        &spec.alice_msg,
        cfg.alice_capacity_bits(),
        ALICE_MSG_STREAM,
        cfg.seed,
    )?;
    let b = load_message(
        &spec.bob_msg,
        cfg.bob_capacity_bits(),
        BOB_MSG_STREAM,
        cfg.seed,
    )?;
    let t = qsdc_core::run_protocol(cfg, &a, &b).map_err(protocol_failure)?;
    audit_custody(&t).map_err(|e| Failure::Internal(anyhow::anyhow!("internal fault: {e}")))?;

    if let Some(path) = &spec.transcript {
        t.write_to(path)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Output)?;
    }

    println!("seed: {}", cfg.seed);
    println!(
        "pairs: {}  check photons: {}  decoys: {}",
        cfg.n_pairs,
        cfg.first_check_count(),
        cfg.check_count_2
    );
    println!("alice sent: {}", show(&a));
    println!("bob sent:   {}", show(&b));
    let stats = t.stats();
    let (verdict, phase, bob_ok, alice_ok) = match t.verdict() {
        Verdict::Completed {
            alice_decoded,
            bob_decoded,
        } => {
            println!("bob decoded:   {}", show(bob_decoded));
            println!("alice decoded: {}", show(alice_decoded));
            (
                "completed",
                String::new(),
                *bob_decoded == a,
                *alice_decoded == b,
            )
        }
        Verdict::Aborted { phase, reason } => {
            println!("aborted in {phase:?}: {reason:?}");
            ("aborted", phase_name(*phase), false, false)
        }
    };
    println!("verdict: {verdict}");

    let mut table = Table::new(
        spec,
        &[
            "pairs",
            "check_photons",
            "decoys",
            "eve",
            "eve_prob",
            "verdict",
            "abort_phase",
            "alice_msg_bits",
            "bob_msg_bits",
            "bob_decoded_ok",
            "alice_decoded_ok",
            "first_violations",
            "decoy_mismatches",
        ],
    );
    table.push(vec![
        cfg.n_pairs.to_string(),
        cfg.first_check_count().to_string(),
        cfg.check_count_2.to_string(),
        cfg.eve.attack.to_string(),
        cfg.eve.prob.to_string(),
        verdict.to_string(),
        phase,
        a.bit_len().to_string(),
        b.bit_len().to_string(),
        bob_ok.to_string(),
        alice_ok.to_string(),
        stats.first_violations.to_string(),
        stats.decoy_mismatches.to_string(),
    ]);
    emit(spec, &table, false)?;

    if t.is_completed() {
        Ok(())
    } else {
        Err(Failure::Aborted)
    }
}

fn phase_name(p: Phase) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

const TABLE_1: [[BellState; 4]; 4] = {
    use BellState::*;
    [
        [PsiMinus, PsiPlus, PhiMinus, PhiPlus],
        [PsiPlus, PsiMinus, PhiPlus, PhiMinus],
        [PhiMinus, PhiPlus, PsiMinus, PsiPlus],
        [PhiPlus, PhiMinus, PsiPlus, PsiMinus],
    ]
};

/// The Bell state a pair measures to with certainty, if any.
fn simulate(alice: PauliOp, bob: PauliOp, slot: QubitSlot) -> Option<BellState> {
    let state = make_singlet::<f64>()
        .apply_pauli(alice, QubitSlot::M)
        .apply_pauli(bob, slot);
    let probs = state.bell_probabilities();
    probs
        .iter()
        .position(|p| (p - 1.0).abs() <= 1e-12)
        .map(|i| BellState::ALL[i])
}

fn table_check(spec: &RunSpec) -> Result<(), Failure> {
    let mut table = Table::new(
        spec,
        &[
            "alice_op",
            "alice_bits",
            "bob_op",
            "bob_bits",
            "table_entry",
            "codec",
            "sim_slot_c",
            "sim_slot_m",
            "match",
        ],
    );
    let mut all_ok = true;
    println!(
        "{:<10}{:>10}{:>10}{:>10}{:>10}",
        "Alice\\Bob", "U0(00)", "U1(01)", "U2(10)", "U3(11)"
    );
    for a in PauliOp::ALL {
        let mut line = format!("{:<10}", format!("{a}({:02b})", a.code()));
        for b in PauliOp::ALL {
            let entry = TABLE_1[a.code() as usize][b.code() as usize];
            let codec = expected_bell(a, b);
            let on_c = simulate(a, b, QubitSlot::C);
            let on_m = simulate(a, b, QubitSlot::M);
            let ok = codec == entry && on_c == Some(entry) && on_m == Some(entry);
            all_ok &= ok;
            line.push_str(&format!("{:>10}", entry.to_string()));
            let name =
                |s: Option<BellState>| s.map_or("nondeterministic".to_string(), |b| b.to_string());
            table.push(vec![
                a.to_string(),
                format!("{:02b}", a.code()),
                b.to_string(),
                format!("{:02b}", b.code()),
                entry.to_string(),
                codec.to_string(),
                name(on_c),
                name(on_m),
                ok.to_string(),
            ]);
        }
        println!("{line}");
    }
    println!("table check: {}", if all_ok { "PASS" } else { "FAIL" });
    emit(spec, &table, false)?;
    if all_ok {
        Ok(())
    } else {
        Err(Failure::Internal(anyhow::anyhow!(
            "simulated Bell outcomes disagree with the table"
        )))
    }
}

fn security_sweep(spec: &RunSpec) -> Result<(), Failure> {
    let cfg = &spec.protocol;
    let mut rng = RandomStream::from_seed(cfg.seed);
    let stats =
        estimate_detection(&cfg.eve, cfg, spec.trials, &mut rng).map_err(protocol_failure)?;
    let c = cfg.first_check_count();
    let mut table = Table::new(
        spec,
        &[
            "eve",
            "eve_prob",
            "eve_leg",
            "pairs",
            "check_photons",
            "decoys",
            "trials",
            "photons_checked",
            "violations",
            "per_photon_rate",
            "per_photon_ci_low",
            "per_photon_ci_high",
            "expected_per_photon_rate",
            "aborts",
            "abort_rate",
            "abort_ci_low",
            "abort_ci_high",
            "first_check_aborts",
            "first_check_abort_rate",
            "expected_first_check_abort_rate",
            "decoys_checked",
            "decoy_mismatches",
            "decoy_mismatch_rate",
        ],
    );
    table.push(vec![
        cfg.eve.attack.to_string(),
        cfg.eve.prob.to_string(),
        legs_name(cfg.eve.legs).to_string(),
        cfg.n_pairs.to_string(),
        c.to_string(),
        cfg.check_count_2.to_string(),
        stats.trials.to_string(),
        stats.photons_checked.to_string(),
        stats.violations.to_string(),
        fmt_rate(stats.per_photon_rate),
        fmt_rate(stats.per_photon_ci.low),
        fmt_rate(stats.per_photon_ci.high),
        fmt_rate(cfg.eve.analytic_violation_rate()),
        stats.aborts.to_string(),
        fmt_rate(stats.whole_protocol_abort_rate),
        fmt_rate(stats.abort_ci.low),
        fmt_rate(stats.abort_ci.high),
        stats.first_check_aborts.to_string(),
        fmt_rate(stats.first_check_abort_rate),
        fmt_rate(cfg.eve.analytic_first_check_abort_rate(c)),
        stats.decoys_checked.to_string(),
        stats.decoy_mismatches.to_string(),
        fmt_rate(stats.decoy_mismatch_rate),
    ]);
    emit(spec, &table, true)
}

fn info_estimate(spec: &RunSpec) -> Result<(), Failure> {
    let cfg = &spec.protocol;
    let seeds = trial_seeds(spec.trials, &mut RandomStream::from_seed(cfg.seed));
    let runs = run_trials(cfg, &seeds).map_err(protocol_failure)?;
    let records: Vec<EveRecord> = runs.iter().map(EveRecord::from_transcript).collect();
    let classical = classical_information(&runs, 1)
        .map_err(|e| Failure::Internal(anyhow::anyhow!("{e}: every run aborted")))?;
    let eve = eve_information(records.iter().zip(&runs), 1)
        .map_err(|e| Failure::Internal(anyhow::anyhow!("{e}")))?;
    let mut table = Table::new(
        spec,
        &[
            "eve",
            "eve_prob",
            "eve_leg",
            "pairs",
            "trials",
            "completed_runs",
            "pairs_observed",
            "classical_mi_alice",
            "classical_mi_bob",
            "eve_mi_alice",
        ],
    );
    table.push(vec![
        cfg.eve.attack.to_string(),
        cfg.eve.prob.to_string(),
        legs_name(cfg.eve.legs).to_string(),
        cfg.n_pairs.to_string(),
        spec.trials.to_string(),
        classical.about_alice.runs.to_string(),
        classical.about_alice.pairs.to_string(),
        fmt_rate(classical.about_alice.bits_per_pair),
        fmt_rate(classical.about_bob.bits_per_pair),
        fmt_rate(eve.bits_per_pair),
    ]);
    emit(spec, &table, true)
}
