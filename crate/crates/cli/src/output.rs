use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::spec::{legs_name, RunSpec};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Columns every statistics row starts with.
pub const PROVENANCE: [&str; 3] = ["tool_version", "config_hash", "seed"];

/// A CSV table whose rows are stamped with provenance columns.
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    stamp: [String; 3],
}

impl Table {
    pub fn new(spec: &RunSpec, columns: &[&'static str]) -> Self {
        let mut all = PROVENANCE.to_vec();
        all.extend_from_slice(columns);
        Self {
            columns: all,
            rows: Vec::new(),
            stamp: [
                TOOL_VERSION.to_string(),
                spec.config_hash(),
                spec.protocol.seed.to_string(),
            ],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(
            row.len() + PROVENANCE.len(),
            self.columns.len(),
            "row width"
        );
        let mut full = self.stamp.to_vec();
        full.extend(row);
        self.rows.push(full);
    }

    pub fn columns(&self) -> &[&'static str] {
        &self.columns
    }

    pub fn render(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

#[derive(Serialize)]
struct Meta<'a> {
    tool: &'static str,
    tool_version: &'static str,
    mode: &'static str,
    seed: u64,
    config_hash: String,
    config: MetaConfig,
    trials: Option<u64>,
    columns: &'a [&'static str],
}

#[derive(Serialize)]
struct MetaConfig {
    pairs: usize,
    check_fraction: f64,
    check_photons: usize,
    decoys: usize,
    abort_threshold: usize,
    eve: String,
    eve_prob: f64,
    eve_leg: &'static str,
}

pub fn meta_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes the CSV and its `<out>.meta.json` sidecar.
pub fn write_table(spec: &RunSpec, table: &Table, out: &Path) -> io::Result<()> {
    fs::write(out, table.render())?;
    let p = &spec.protocol;
    let meta = Meta {
        tool: "qsdc",
        tool_version: TOOL_VERSION,
        mode: spec.mode.name(),
        seed: p.seed,
        config_hash: spec.config_hash(),
        config: MetaConfig {
            pairs: p.n_pairs,
            check_fraction: p.check_fraction_1,
            check_photons: p.first_check_count(),
            decoys: p.check_count_2,
            abort_threshold: p.abort_threshold,
            eve: p.eve.attack.to_string(),
            eve_prob: p.eve.prob,
            eve_leg: legs_name(p.eve.legs),
        },
        trials: matches!(
            spec.mode,
            crate::spec::Mode::SecuritySweep | crate::spec::Mode::InfoEstimate
        )
        .then_some(spec.trials),
        columns: table.columns(),
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("meta serializes");
    text.push('\n');
    fs::write(meta_path(out), text)
}

pub fn fmt_rate(x: f64) -> String {
    format!("{x:.6}")
}
