//! Flag and config-file handling. Flags override the config file, which
//! overrides built-in defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use qsdc_core::{Attack, EveStrategy, LegSelection, ProtocolConfig};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Roundtrip,
    TableCheck,
    SecuritySweep,
    InfoEstimate,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Roundtrip => "roundtrip",
            Mode::TableCheck => "table-check",
            Mode::SecuritySweep => "security-sweep",
            Mode::InfoEstimate => "info-estimate",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Mode as ValueEnum>::from_str(s, false).map_err(|_| format!("unknown mode {s:?}"))
    }
}

/// Where a party's message comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MessageSource {
    Hex(Vec<u8>),
    Bits(String),
    File(PathBuf),
    /// Seeded random bits; `None` fills the capacity.
    Random(Option<usize>),
}

impl FromStr for MessageSource {
    type Err = String;

    /// `a5` or `hex:a5`, `bits:0101`, `@path`, `random` or `random:<n>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(path) = s.strip_prefix('@') {
            return Ok(Self::File(path.into()));
        }
        if s == "random" {
            return Ok(Self::Random(None));
        }
        if let Some(n) = s.strip_prefix("random:") {
            return n
                .parse()
                .map(|n| Self::Random(Some(n)))
                .map_err(|_| format!("bad random bit count {n:?}"));
        }
        if let Some(bits) = s.strip_prefix("bits:") {
            if bits.chars().all(|c| c == '0' || c == '1') {
                return Ok(Self::Bits(bits.to_string()));
            }
            return Err(format!("malformed bit string {bits:?}"));
        }
        let hex_str = s.strip_prefix("hex:").unwrap_or(s);
        hex::decode(hex_str)
            .map(Self::Hex)
            .map_err(|e| format!("malformed hex message {hex_str:?}: {e}"))
    }
}

impl fmt::Display for MessageSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Hex(b) => write!(f, "hex:{}", hex::encode(b)),
            Self::Bits(b) => write!(f, "bits:{b}"),
            Self::File(p) => write!(f, "@{}", p.display()),
            Self::Random(None) => f.write_str("random"),
            Self::Random(Some(n)) => write!(f, "random:{n}"),
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub mode: Option<Mode>,
    /// key=value file mirroring the flag names
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub check_fraction: Option<f64>,
    #[arg(long)]
    pub decoys: Option<usize>,
    #[arg(long)]
    pub abort_threshold: Option<usize>,
    #[arg(long, value_parser = parse_attack)]
    pub eve: Option<Attack>,
    #[arg(long)]
    pub eve_prob: Option<f64>,
    #[arg(long, value_parser = parse_legs)]
    pub eve_leg: Option<LegSelection>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub alice_msg: Option<MessageSource>,
    #[arg(long)]
    pub bob_msg: Option<MessageSource>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

fn parse_attack(s: &str) -> Result<Attack, String> {
    s.parse()
}

fn parse_legs(s: &str) -> Result<LegSelection, String> {
    s.parse()
}

/// Fully resolved run description.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub mode: Mode,
    pub protocol: ProtocolConfig,
    pub trials: u64,
    pub alice_msg: MessageSource,
    pub bob_msg: MessageSource,
    pub out: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
}

const KEYS: [&str; 15] = [
    "mode",
    "pairs",
    "check-fraction",
    "decoys",
    "abort-threshold",
    "eve",
    "eve-prob",
    "eve-leg",
    "seed",
    "trials",
    "alice-msg",
    "bob-msg",
    "out",
    "transcript",
    "config",
];

pub const DEFAULT_TRIALS: u64 = 1000;

/// Parses `key=value` lines; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim().trim_start_matches("--").to_string();
        if k == "config" || !KEYS.contains(&k.as_str()) {
            return Err(format!("config line {}: unknown key {k:?}", i + 1));
        }
        out.insert(k, v.trim().to_string());
    }
    Ok(out)
}

fn pick<T: FromStr>(
    flag: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, String>
where
    T::Err: fmt::Display,
{
    if flag.is_some() {
        return Ok(flag);
    }
    file.get(key)
        .map(|v| v.parse::<T>().map_err(|e| format!("config key {key}: {e}")))
        .transpose()
}

impl RunSpec {
    pub fn resolve(args: RunArgs, file_text: Option<&str>) -> Result<Self, String> {
        let file = match file_text {
            Some(t) => parse_config_file(t)?,
            None => BTreeMap::new(),
        };
        let mode: Mode = pick(args.mode, &file, "mode")?
            .ok_or("--mode is required (roundtrip, table-check, security-sweep, info-estimate)")?;
        let defaults = ProtocolConfig::default();
        let pairs = pick(args.pairs, &file, "pairs")?;
        let check_fraction = pick(args.check_fraction, &file, "check-fraction")?;
        let decoys = pick(args.decoys, &file, "decoys")?;
        let abort_threshold = pick(args.abort_threshold, &file, "abort-threshold")?;
        let attack = pick(args.eve, &file, "eve")?;
        let eve_prob = pick(args.eve_prob, &file, "eve-prob")?;
        let eve_leg = pick(args.eve_leg, &file, "eve-leg")?;
        let seed = pick(args.seed, &file, "seed")?;
        let trials = pick(args.trials, &file, "trials")?;
        let alice_msg = pick(args.alice_msg, &file, "alice-msg")?;
        let bob_msg = pick(args.bob_msg, &file, "bob-msg")?;
        let out = pick(args.out, &file, "out")?;
        let transcript = pick(args.transcript, &file, "transcript")?;

        let only = |present: bool, flag: &str, modes: &[Mode]| -> Result<(), String> {
            if present && !modes.contains(&mode) {
                return Err(format!("--{flag} is not used by --mode {}", mode.name()));
            }
            Ok(())
        };
        only(
            trials.is_some(),
            "trials",
            &[Mode::SecuritySweep, Mode::InfoEstimate],
        )?;
        only(alice_msg.is_some(), "alice-msg", &[Mode::Roundtrip])?;
        only(bob_msg.is_some(), "bob-msg", &[Mode::Roundtrip])?;
        only(transcript.is_some(), "transcript", &[Mode::Roundtrip])?;
        if trials == Some(0) {
            return Err("--trials must be at least 1".into());
        }

        let attack = attack.unwrap_or(Attack::None);
        let mut eve = EveStrategy::new(attack).with_prob(eve_prob.unwrap_or(1.0));
        if let Some(legs) = eve_leg {
            eve = eve.with_legs(legs);
        }
        let protocol = ProtocolConfig {
            n_pairs: pairs.unwrap_or(defaults.n_pairs),
            check_fraction_1: check_fraction.unwrap_or(defaults.check_fraction_1),
            check_count_2: decoys.unwrap_or(defaults.check_count_2),
            abort_threshold: abort_threshold.unwrap_or(defaults.abort_threshold),
            seed: seed.unwrap_or(defaults.seed),
            eve,
        };
        protocol.validate().map_err(|e| e.to_string())?;

        Ok(Self {
            mode,
            protocol,
            trials: trials.unwrap_or(DEFAULT_TRIALS),
            alice_msg: alice_msg.unwrap_or(MessageSource::Random(None)),
            bob_msg: bob_msg.unwrap_or(MessageSource::Random(None)),
            out,
            transcript,
        })
    }

    /// Canonical `key=value` lines of everything that affects results.
    pub fn canonical(&self) -> String {
        let p = &self.protocol;
        let mut lines = vec![
            format!("mode={}", self.mode.name()),
            format!("pairs={}", p.n_pairs),
            format!("check-fraction={}", p.check_fraction_1),
            format!("decoys={}", p.check_count_2),
            format!("abort-threshold={}", p.abort_threshold),
            format!("eve={}", p.eve.attack),
            format!("eve-prob={}", p.eve.prob),
            format!("eve-leg={}", legs_name(p.eve.legs)),
            format!("seed={}", p.seed),
        ];
        match self.mode {
            Mode::SecuritySweep | Mode::InfoEstimate => {
                lines.push(format!("trials={}", self.trials))
            }
            Mode::Roundtrip => {
                lines.push(format!("alice-msg={}", self.alice_msg));
                lines.push(format!("bob-msg={}", self.bob_msg));
            }
            Mode::TableCheck => {}
        }
        lines.join("\n") + "\n"
    }

    /// First 16 hex digits of the SHA-256 of [`RunSpec::canonical`].
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        hex::encode(digest)[..16].to_string()
    }
}

pub fn legs_name(legs: LegSelection) -> &'static str {
    match legs {
        LegSelection::First => "first",
        LegSelection::Second => "second",
        LegSelection::Both => "both",
    }
}

pub fn read_config(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))
}
