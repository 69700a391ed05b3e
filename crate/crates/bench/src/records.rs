//! Output rows and CSV I/O.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mimo_qubo::{Mode, Scheme};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, SchemeSpec};
use crate::error::Result;

pub const MMSE: &str = "mmse";
pub const FULL: &str = "full";
pub const NOT_APPLICABLE: &str = "-";
pub const NONE: &str = "none";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub n_t: usize,
    pub n_r: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub ebn0_db: f64,
    pub scheme: String,
    pub mode: String,
    pub n_b: String,
    pub realizations: u64,
    pub total_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub solver_tag: String,
}

/// What a BER row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Arm {
    Mmse,
    FullPrecision,
    Quantized { scheme: Scheme, mode: Mode, n_b: u32 },
}

impl Arm {
    pub fn spec(self) -> Option<SchemeSpec> {
        match self {
            Arm::Mmse => None,
            Arm::FullPrecision => Some(SchemeSpec::FullPrecision),
            Arm::Quantized { scheme, mode, .. } => Some(SchemeSpec::Quantized { scheme, mode }),
        }
    }

    fn columns(self) -> (String, String, String) {
        match self {
            Arm::Mmse => (MMSE.into(), NOT_APPLICABLE.into(), NOT_APPLICABLE.into()),
            Arm::FullPrecision => (SchemeSpec::FULL_PRECISION.into(), NOT_APPLICABLE.into(), FULL.into()),
            Arm::Quantized { scheme, mode, n_b } => (scheme.to_string(), mode.to_string(), n_b.to_string()),
        }
    }
}

impl BerRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n_t: usize, n_r: usize, m: usize, ebn0_db: f64, arm: Arm, realizations: u64, total_bits: u64, bit_errors: u64, solver_tag: &str) -> Self {
        let (scheme, mode, n_b) = arm.columns();
        Self {
            n_t,
            n_r,
            m,
            ebn0_db,
            scheme,
            mode,
            n_b,
            realizations,
            total_bits,
            bit_errors,
            ber: if total_bits == 0 { 0.0 } else { bit_errors as f64 / total_bits as f64 },
            solver_tag: solver_tag.into(),
        }
    }

    /// Parses the scheme, mode and n_b columns back.
    pub fn arm(&self) -> Option<Arm> {
        match self.scheme.as_str() {
            MMSE => Some(Arm::Mmse),
            SchemeSpec::FULL_PRECISION => Some(Arm::FullPrecision),
            s => Some(Arm::Quantized {
                scheme: s.parse().ok()?,
                mode: self.mode.parse().ok()?,
                n_b: self.n_b.parse().ok()?,
            }),
        }
    }

    pub fn system(&self) -> (usize, usize, usize) {
        (self.n_t, self.n_r, self.m)
    }

    fn sort_key(&self) -> ((usize, usize, usize), Option<Arm>, &str) {
        (self.system(), self.arm(), &self.solver_tag)
    }

    /// Canonical order: system, scheme, mode, n_b, E_b/N_0.
    pub fn canonical_cmp(&self, other: &Self) -> Ordering {
        let (sa, aa, ta) = self.sort_key();
        let (sb, ab, tb) = other.sort_key();
        sa.cmp(&sb)
            .then(aa.cmp(&ab))
            .then(self.ebn0_db.total_cmp(&other.ebn0_db))
            .then(ta.cmp(tb))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub n_t: usize,
    pub n_r: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub ebn0_db: f64,
    pub scheme: String,
    pub mode: String,
    pub n_b: u32,
    pub p: f64,
    pub delta_max: f64,
    pub epsilon_min: f64,
    pub satisfied: bool,
}

/// Empirical versus closed-form moments of one sampled entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub n_t: usize,
    pub n_r: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub ebn0_db: f64,
    pub i: usize,
    pub j: usize,
    pub class: String,
    pub samples: u64,
    pub empirical_mean: f64,
    pub empirical_std: f64,
    pub theory_mean: f64,
    pub theory_std: f64,
    pub zero_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub n_t: usize,
    pub n_r: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub ebn0_db: f64,
    pub i: usize,
    pub j: usize,
    pub class: String,
    pub bin: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub count: u64,
    pub empirical_density: f64,
    pub theory_density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n_t: usize,
    pub n_r: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub ebn0_db: f64,
    pub scheme: String,
    pub mode: String,
    pub solver_tag: String,
    pub mmse_ber: f64,
    pub full_precision_ber: f64,
    pub last_worse_than_mmse: String,
    pub first_better_than_mmse: String,
    pub first_matching_full_precision: String,
}

/// `#`-prefixed header lines written above every CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: String,
}

impl Provenance {
    pub fn new(command: &str, cfg: &ExperimentConfig) -> Self {
        let mut seeds: Vec<u64> = cfg.systems.iter().map(|s| s.base_seed).collect();
        seeds.dedup();
        let base = seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",");
        Self {
            command: command.into(),
            config_hash: cfg.hash(),
            seed: format!("base={base} solver={}", cfg.solver.seed),
        }
    }

    fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        writeln!(w, "# mimo-qubo-bench {}", env!("CARGO_PKG_VERSION"))?;
        writeln!(w, "# command: {}", self.command)?;
        writeln!(w, "# config_sha256: {}", self.config_hash)?;
        writeln!(w, "# seed: {}", self.seed)?;
        writeln!(w, "# generated_unix: {now}")
    }
}

pub fn write_csv<S: Serialize>(path: &Path, provenance: &Provenance, rows: &[S]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut file = BufWriter::new(File::create(path)?);
    provenance.write(&mut file)?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<D: DeserializeOwned>(path: &Path) -> Result<Vec<D>> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
