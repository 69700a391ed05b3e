//! Experiment harness for quantized QUBO MIMO detection: BER grids, exhaustive
//! studies, quantization-error thresholds, entry-distribution checks and
//! precision summaries, all written as CSV.

pub mod config;
pub mod error;
pub mod experiments;
pub mod records;

pub use config::{EpsilonSource, ExperimentConfig, Precision, SchemeSpec, SystemConfig};
pub use error::{BenchError, Result};
pub use experiments::{
    run_ber_experiment, run_ber_experiment_with_progress, run_delta_analysis, run_distribution_validation, run_exhaustive_study,
    run_exhaustive_study_with_progress, run_arm, summarize_bits, ArmTally, DistributionReport, QuboSolver,
};
pub use records::{read_csv, write_csv, Arm, BerRecord, DeltaRecord, DistributionSummary, HistogramRow, Provenance, SummaryRow};
