//! Detectors: linear MMSE, exhaustive QUBO enumeration and parallel tempering.

mod exhaustive;
mod mmse;
mod tempering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboProblem;
use crate::scalar::Real;

pub use exhaustive::{exhaustive_solve, ExhaustiveResult, DEFAULT_EXHAUSTIVE_LIMIT};
pub use mmse::{mmse_detect, MmseDetection};
pub use tempering::{parallel_tempering, temperature_ladder, LocalFieldState, SymmetricQubo};

/// Total single-flip budget per replica and read, divided by the problem size.
pub const SWEEP_BUDGET: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub num_replicas: usize,
    pub num_reads: usize,
    /// Sweeps per read; `None` means `max(1, 200000 / N)`.
    pub num_sweeps: Option<usize>,
    /// Acceptance probability of the largest single-flip move at the hottest temperature.
    pub p_hot: f64,
    /// Acceptance probability of the smallest nonzero move at the coldest temperature.
    pub p_cold: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            num_replicas: 5,
            num_reads: 20,
            num_sweeps: None,
            p_hot: 0.5,
            p_cold: 0.01,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn sweeps_for(&self, n: usize) -> usize {
        self.num_sweeps.unwrap_or_else(|| (SWEEP_BUDGET / n.max(1)).max(1))
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_replicas < 2 {
            return Err(Error::InvalidParameter("num_replicas must be at least 2".into()));
        }
        if self.num_reads < 1 {
            return Err(Error::InvalidParameter("num_reads must be at least 1".into()));
        }
        if self.num_sweeps == Some(0) {
            return Err(Error::InvalidParameter("num_sweeps must be at least 1".into()));
        }
        if !(0.0 < self.p_cold && self.p_cold < self.p_hot && self.p_hot < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < p_cold < p_hot < 1, got p_cold={} p_hot={}",
                self.p_cold, self.p_hot
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    Mmse,
    Exhaustive,
    ParallelTempering,
}

impl SolverTag {
    pub fn name(self) -> &'static str {
        match self {
            SolverTag::Mmse => "mmse",
            SolverTag::Exhaustive => "exhaustive",
            SolverTag::ParallelTempering => "parallel_tempering",
        }
    }
}

impl std::fmt::Display for SolverTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Bits returned by a detector together with their energy under the problem it solved.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionOutcome {
    pub bits: Vec<u8>,
    pub energy: f64,
    /// `energy / scale + offset`.
    pub ml_residual: f64,
    pub solver_tag: SolverTag,
    pub sweeps_used: usize,
}

impl DetectionOutcome {
    pub fn evaluate<T: Real>(p: &QuboProblem<T>, bits: Vec<u8>, solver_tag: SolverTag, sweeps_used: usize) -> Result<Self> {
        let energy = p.energy(&bits)?;
        Ok(Self {
            ml_residual: p.ml_residual(energy),
            bits,
            energy,
            solver_tag,
            sweeps_used,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config() {
        let c = SolverConfig::default();
        assert_eq!(c.sweeps_for(16), 12_500);
        assert_eq!(c.sweeps_for(64), 3125);
        assert_eq!(c.sweeps_for(1_000_000), 1);
        c.validate().unwrap();
        assert!(SolverConfig { p_cold: 0.6, ..c.clone() }.validate().is_err());
        assert!(SolverConfig { num_replicas: 1, ..c.clone() }.validate().is_err());
    }
}
