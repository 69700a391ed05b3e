//! Experiment configuration (JSON).

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use mimo_qubo::{Mode, Modulation, Scheme, SolverConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

/// One column of the scheme grid: the unquantized problem or a (scheme, mode) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SchemeSpec {
    FullPrecision,
    Quantized { scheme: Scheme, mode: Mode },
}

impl SchemeSpec {
    pub const FULL_PRECISION: &'static str = "full_precision";

    /// The six quantized combinations.
    pub fn all_quantized() -> Vec<SchemeSpec> {
        Scheme::ALL
            .into_iter()
            .flat_map(|scheme| Mode::ALL.into_iter().map(move |mode| SchemeSpec::Quantized { scheme, mode }))
            .collect()
    }
}

impl fmt::Display for SchemeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeSpec::FullPrecision => f.write_str(Self::FULL_PRECISION),
            SchemeSpec::Quantized { scheme, mode } => write!(f, "{scheme}/{mode}"),
        }
    }
}

impl FromStr for SchemeSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        if s == Self::FULL_PRECISION || s == "full-precision" {
            return Ok(SchemeSpec::FullPrecision);
        }
        let (scheme, mode) = s
            .split_once('/')
            .ok_or_else(|| BenchError::ConfigInvalid(format!("scheme '{s}' is not '<scheme>/<mode>' or '{}'", Self::FULL_PRECISION)))?;
        Ok(SchemeSpec::Quantized {
            scheme: scheme.parse()?,
            mode: mode.parse()?,
        })
    }
}

impl TryFrom<String> for SchemeSpec {
    type Error = BenchError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SchemeSpec> for String {
    fn from(s: SchemeSpec) -> String {
        s.to_string()
    }
}

/// Source of `ε_min` in the threshold analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSource {
    /// Per-realization schemes use the empirical lower percentile of per-instance
    /// neighbour gaps (each with its own α); statistical schemes use the closed form.
    #[default]
    PerScheme,
    /// Closed form with the statistical α for every scheme.
    Analytic,
}

/// Storage scalar of the QUBO coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Precision {
    F32,
    #[default]
    F64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_t: usize,
    pub n_r: usize,
    #[serde(alias = "M")]
    pub m: usize,
    pub ebn0_db: Vec<f64>,
    #[serde(default)]
    pub n_b: Vec<u32>,
    pub schemes: Vec<SchemeSpec>,
    pub realizations: u64,
    #[serde(default)]
    pub base_seed: u64,
}

impl SystemConfig {
    pub fn bits_per_realization(&self) -> u64 {
        (self.m.trailing_zeros() as usize * self.n_t) as u64
    }

    pub fn label(&self) -> String {
        format!("{}x{} M={}", self.n_t, self.n_r, self.m)
    }
}

fn default_percentile() -> f64 {
    99.0
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_exhaustive_limit() -> usize {
    mimo_qubo::solvers::DEFAULT_EXHAUSTIVE_LIMIT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub systems: Vec<SystemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_percentile", alias = "p")]
    pub percentile: f64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_exhaustive_limit")]
    pub exhaustive_limit: usize,
    #[serde(default)]
    pub preserve_exact_zeros: bool,
    #[serde(default)]
    pub epsilon_source: EpsilonSource,
    #[serde(default)]
    pub precision: Precision,
}

impl ExperimentConfig {
    pub fn new(systems: Vec<SystemConfig>) -> Self {
        Self {
            systems,
            solver: SolverConfig::default(),
            percentile: default_percentile(),
            output_dir: default_output_dir(),
            exhaustive_limit: default_exhaustive_limit(),
            preserve_exact_zeros: false,
            epsilon_source: EpsilonSource::default(),
            precision: Precision::default(),
        }
    }

    /// The full experiment grid: three array sizes, four modulations each.
    pub fn table_one() -> Self {
        let mut schemes = vec![SchemeSpec::FullPrecision];
        schemes.extend(SchemeSpec::all_quantized());
        let mut systems = Vec::new();
        for n in [4usize, 16, 32] {
            for m in [4usize, 16, 64, 256] {
                let wide = n > 4 && m >= 64;
                let (ebn0_db, n_b) = if wide {
                    (vec![5.0, 10.0, 15.0, 20.0, 25.0, 30.0], (1..=12).map(|k| 2 * k).collect())
                } else {
                    (vec![5.0, 10.0, 15.0], (1..=8).map(|k| 2 * k).collect())
                };
                systems.push(SystemConfig {
                    n_t: n,
                    n_r: n,
                    m,
                    ebn0_db,
                    n_b,
                    schemes: schemes.clone(),
                    realizations: if m <= 16 { 10_000 } else { 1000 },
                    base_seed: 1,
                });
            }
        }
        Self::new(systems)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(BenchError::ConfigInvalid(msg));
        if self.systems.is_empty() {
            return bad("no systems configured".into());
        }
        if !(self.percentile > 0.0 && self.percentile < 100.0) {
            return bad(format!("percentile {} outside (0, 100)", self.percentile));
        }
        self.solver.validate().map_err(|e| BenchError::ConfigInvalid(e.to_string()))?;
        for s in &self.systems {
            let label = s.label();
            Modulation::<f64>::new(s.m).map_err(|e| BenchError::ConfigInvalid(format!("{label}: {e}")))?;
            if s.n_t == 0 || s.n_r < s.n_t {
                return bad(format!("{label}: need 1 <= n_t <= n_r"));
            }
            if s.realizations == 0 {
                return bad(format!("{label}: realizations must be at least 1"));
            }
            if s.ebn0_db.is_empty() || s.ebn0_db.iter().any(|v| !v.is_finite()) {
                return bad(format!("{label}: ebn0_db must be a non-empty list of finite values"));
            }
            if s.schemes.is_empty() {
                return bad(format!("{label}: no schemes"));
            }
            let quantized = s.schemes.iter().any(|x| matches!(x, SchemeSpec::Quantized { .. }));
            if quantized && s.n_b.is_empty() {
                return bad(format!("{label}: quantized schemes need a non-empty n_b list"));
            }
            if let Some(b) = s.n_b.iter().find(|&&b| !(1..=52).contains(&b)) {
                return bad(format!("{label}: n_b = {b} outside 1..=52"));
            }
        }
        Ok(())
    }

    /// Replaces every realization seed and the solver seed.
    pub fn apply_seed(&mut self, seed: u64) {
        for s in &mut self.systems {
            s.base_seed = seed;
        }
        self.solver.seed = seed;
    }

    /// SHA-256 of the canonical JSON encoding with the output directory blanked, hex.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scheme_spec_strings() {
        for s in SchemeSpec::all_quantized() {
            assert_eq!(s.to_string().parse::<SchemeSpec>().unwrap(), s);
        }
        assert_eq!("full-precision".parse::<SchemeSpec>().unwrap(), SchemeSpec::FullPrecision);
        assert_eq!(
            "large_off_diag/statistical".parse::<SchemeSpec>().unwrap(),
            SchemeSpec::Quantized {
                scheme: Scheme::LargeOffDiag,
                mode: Mode::Statistical
            }
        );
        assert!("homogeneous".parse::<SchemeSpec>().is_err());
        assert!("bogus/statistical".parse::<SchemeSpec>().is_err());
    }

    #[test]
    fn table_one_grid() {
        let c = ExperimentConfig::table_one();
        c.validate().unwrap();
        assert_eq!(c.systems.len(), 12);
        let big = c.systems.iter().find(|s| s.n_t == 32 && s.m == 256).unwrap();
        assert_eq!(big.n_b.last(), Some(&24));
        assert_eq!(big.ebn0_db.len(), 6);
        assert_eq!(big.realizations, 1000);
        let small = c.systems.iter().find(|s| s.n_t == 4 && s.m == 256).unwrap();
        assert_eq!(small.n_b.last(), Some(&16));
        assert_eq!(small.schemes.len(), 7);
    }

    #[test]
    fn json_round_trip_and_defaults() {
        let json = r#"{
            "systems": [{"n_t": 2, "n_r": 2, "M": 4, "ebn0_db": [10], "n_b": [4],
                         "schemes": ["full_precision", "homogeneous/per_realization"],
                         "realizations": 3}],
            "solver": {"num_reads": 2}
        }"#;
        let c: ExperimentConfig = serde_json::from_str(json).unwrap();
        c.validate().unwrap();
        assert_eq!(c.percentile, 99.0);
        assert_eq!(c.solver.num_replicas, 5);
        assert_eq!(c.solver.num_reads, 2);
        assert_eq!(c.systems[0].m, 4);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        assert_eq!(c.hash().len(), 64);
        let mut moved = c.clone();
        moved.output_dir = PathBuf::from("elsewhere");
        assert_eq!(moved.hash(), c.hash());
        moved.apply_seed(9);
        assert_ne!(moved.hash(), c.hash());
    }

    #[test]
    fn invalid_configs() {
        let mut c = ExperimentConfig::table_one();
        c.systems[0].realizations = 0;
        assert!(matches!(c.validate(), Err(BenchError::ConfigInvalid(_))));
        let mut c = ExperimentConfig::table_one();
        c.systems[0].m = 8;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::table_one();
        c.percentile = 100.0;
        assert!(c.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"systems": [], "bogus": 1}"#).is_err());
    }
}
