use num_complex::Complex;

use crate::error::Result;
use crate::linalg::{solve_hermitian, CMatrix};
use crate::modulation::Modulation;
use crate::qubo::QuboProblem;
use crate::scalar::Real;

use super::{DetectionOutcome, SolverTag};

/// Linear MMSE estimate and its sliced decision.
#[derive(Debug, Clone, PartialEq)]
pub struct MmseDetection<T> {
    /// `(HᴴH + σ²I)⁻¹ Hᴴ y` before slicing.
    pub soft: Vec<Complex<T>>,
    pub symbols: Vec<Complex<T>>,
    pub bits: Vec<u8>,
}

impl<T: Real> MmseDetection<T> {
    /// Scores the detected bits against a QUBO problem built from the same `(H, y)`.
    pub fn outcome(&self, p: &QuboProblem<T>) -> Result<DetectionOutcome> {
        DetectionOutcome::evaluate(p, self.bits.clone(), SolverTag::Mmse, 0)
    }
}

pub fn mmse_detect<T: Real>(
    h: &CMatrix<T>,
    y: &[Complex<T>],
    noise_variance: f64,
    modulation: &Modulation<T>,
) -> Result<MmseDetection<T>> {
    let mut a = h.gram();
    let reg = T::of_f64(noise_variance);
    for i in 0..a.rows() {
        a[(i, i)].re += reg;
    }
    let rhs = h.adjoint_mul_vec(y)?;
    let soft = solve_hermitian(&a, &rhs)?;
    let bits = modulation.slice_to_bits(&soft);
    let symbols = modulation.bits_to_symbols(&bits)?;
    Ok(MmseDetection { soft, symbols, bits })
}
