//! QUBO formulation of MIMO maximum-likelihood detection and the effect of
//! limited coefficient precision on it.
//!
//! The pipeline is: sample a [`ChannelRealization`], compile it into a
//! [`QuboProblem`], normalize and quantize it with a [`QuantizationPlan`], then
//! solve with [`parallel_tempering`] (warm-started from [`mmse_detect`]) or
//! [`exhaustive_solve`]. [`distributions`] holds the closed-form statistics of
//! the QUBO entries and [`preservation`] the error bounds.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod channel;
pub mod distributions;
pub mod error;
pub mod linalg;
pub mod modulation;
pub mod preservation;
pub mod quantization;
pub mod qubo;
pub mod scalar;
pub mod solvers;

pub use channel::{noise_variance, realization_seed, ChannelRealization};
pub use distributions::{GaussianSpec, OffDiagDistribution};
pub use error::{Error, Result};
pub use linalg::CMatrix;
pub use modulation::{bit_index_info, BitIndexInfo, Modulation};
pub use preservation::{GapReport, ThresholdReport};
pub use quantization::{apply_plan, Mode, QuantizationPlan, QuantizerSpec, Scheme};
pub use qubo::{EntryClass, QuboMatrix, QuboProblem};
pub use scalar::Real;
pub use solvers::{
    exhaustive_solve, mmse_detect, parallel_tempering, DetectionOutcome, ExhaustiveResult, SolverConfig, SolverTag,
};

pub type Modulation64 = Modulation<f64>;
pub type Modulation32 = Modulation<f32>;
pub type ChannelRealization64 = ChannelRealization<f64>;
pub type ChannelRealization32 = ChannelRealization<f32>;
pub type QuboProblem64 = QuboProblem<f64>;
pub type QuboProblem32 = QuboProblem<f32>;
pub type QuboMatrix64 = QuboMatrix<f64>;
pub type QuboMatrix32 = QuboMatrix<f32>;
pub type QuantizationPlan64 = QuantizationPlan<f64>;
pub type QuantizationPlan32 = QuantizationPlan<f32>;
pub type CMatrix64 = CMatrix<f64>;
pub type CMatrix32 = CMatrix<f32>;
