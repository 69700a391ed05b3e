//! Quantization-error bounds, optimality gaps and the preservation condition
//! `δ < ε/2`.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::distributions::GaussianSpec;
use crate::error::{check_len, Error, Result};
use crate::linalg::CMatrix;
use crate::modulation::Modulation;
use crate::quantization::{Mode, Scheme};
use crate::qubo::{QuboMatrix, QuboProblem};
use crate::scalar::Real;
use crate::solvers::exhaustive_solve;

/// `Σ_{i≤j} |Q_ij - Q̂_ij|`.
pub fn delta_up<T: Real>(q_norm: &QuboProblem<T>, q_hat: &QuboProblem<T>) -> Result<f64> {
    delta_up_matrix(&q_norm.matrix, &q_hat.matrix)
}

pub fn delta_up_matrix<T: Real>(a: &QuboMatrix<T>, b: &QuboMatrix<T>) -> Result<f64> {
    check_len(a.n(), b.n())?;
    Ok(a.upper()
        .zip(b.upper())
        .map(|((_, _, x), (_, _, y))| (x.as_f64() - y.as_f64()).abs())
        .sum())
}

/// Second-lowest minus lowest energy, by full enumeration.
pub fn epsilon_exact<T: Real>(p: &QuboProblem<T>, limit: usize) -> Result<f64> {
    let r = exhaustive_solve(&p.matrix, limit)?;
    Ok(r.e_second - r.e_opt)
}

/// Gap to the neighbour that moves the weakest antenna by one `d_min` step:
/// `α (d_min² ‖H_j*‖² + 2 d_min Re(Σ_k H_kj* conj(n_k)))`.
pub fn epsilon_neighbor<T: Real>(h: &CMatrix<T>, n: &[Complex<T>], modulation: &Modulation<T>, alpha: f64) -> Result<f64> {
    check_len(h.rows(), n.len())?;
    let j = (0..h.cols())
        .map(|j| (j, h.column_norm_sqr(j).as_f64()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::DimensionMismatch { expected: 1, found: 0 })?;
    let cross: f64 = (0..h.rows())
        .map(|k| {
            let hk = h[(k, j.0)];
            hk.re.as_f64() * n[k].re.as_f64() + hk.im.as_f64() * n[k].im.as_f64()
        })
        .sum();
    let d = modulation.d_min().as_f64();
    Ok(alpha * (d * d * j.1 + 2.0 * d * cross))
}

fn check_percentile(p: f64) -> Result<()> {
    if p > 0.0 && p < 100.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("percentile {p} outside (0, 100)")))
    }
}

/// Nearest-rank percentile: element `⌈p/100 · n⌉ - 1` of the sorted samples.
pub fn percentile_nearest_rank(samples: &[f64], p: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("percentile {p} outside [0, 100]")));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let rank = (p / 100.0 * s.len() as f64).ceil() as usize;
    Ok(s[rank.saturating_sub(1).min(s.len() - 1)])
}

/// Lower `(100-p)` quantile of the gap distribution, clamped at 0.
pub fn epsilon_min(dist: &GaussianSpec, p: f64) -> f64 {
    dist.quantile((100.0 - p) / 100.0).max(0.0)
}

/// Empirical counterpart of [`epsilon_min`] for per-realization gap samples.
pub fn epsilon_min_empirical(samples: &[f64], p: f64) -> Result<f64> {
    check_percentile(p)?;
    Ok(percentile_nearest_rank(samples, 100.0 - p)?.max(0.0))
}

/// `p`-th percentile of `δ_up` samples.
pub fn delta_max(samples: &[f64], p: f64) -> Result<f64> {
    check_percentile(p)?;
    percentile_nearest_rank(samples, p)
}

/// Strict sufficient condition `delta < epsilon / 2`.
pub fn preservation_check(delta: f64, epsilon: f64) -> bool {
    delta < epsilon / 2.0
}

/// Per-instance gap versus quantization error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub epsilon: f64,
    pub delta_up: f64,
    pub condition_holds: bool,
    pub alpha: f64,
}

impl GapReport {
    /// Exact report for a normalized problem and its quantized counterpart.
    pub fn exact<T: Real>(q_norm: &QuboProblem<T>, q_hat: &QuboProblem<T>, limit: usize) -> Result<Self> {
        let epsilon = epsilon_exact(q_norm, limit)?;
        let delta_up = delta_up(q_norm, q_hat)?;
        Ok(Self {
            epsilon,
            delta_up,
            condition_holds: preservation_check(delta_up, epsilon),
            alpha: q_norm.scale.as_f64(),
        })
    }
}

/// Statistical preservation threshold for one scheme, mode and precision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub scheme: Scheme,
    pub mode: Mode,
    pub n_b: u32,
    pub p: f64,
    pub delta_max: f64,
    pub epsilon_min: f64,
    pub satisfied: bool,
}

impl ThresholdReport {
    pub fn new(scheme: Scheme, mode: Mode, n_b: u32, p: f64, delta_samples: &[f64], epsilon_min: f64) -> Result<Self> {
        let delta_max = delta_max(delta_samples, p)?;
        Ok(Self {
            scheme,
            mode,
            n_b,
            p,
            delta_max,
            epsilon_min,
            satisfied: preservation_check(delta_max, epsilon_min),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn problem(m: QuboMatrix<f64>) -> QuboProblem<f64> {
        QuboProblem {
            matrix: m,
            offset: 0.0,
            scale: 1.0,
            modulation: Modulation::new(4).unwrap(),
            n_t: 1,
            n_r: 1,
        }
    }

    #[test]
    fn delta_up_examples() {
        let a = problem(QuboMatrix::from_dense(2, &[1.0, 2.0, 0.0, 3.0]).unwrap());
        assert_eq!(delta_up(&a, &a).unwrap(), 0.0);
        let b = problem(QuboMatrix::from_dense(2, &[1.1, 1.8, 0.0, 3.3]).unwrap());
        assert_abs_diff_eq!(delta_up(&a, &b).unwrap(), 0.6, epsilon = 1e-12);
        let c = problem(QuboMatrix::zeros(3));
        assert!(matches!(delta_up(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn epsilon_exact_examples() {
        let p = problem(QuboMatrix::from_dense(2, &[-1.0, 0.0, 0.0, 2.0]).unwrap());
        assert_eq!(epsilon_exact(&p, 24).unwrap(), 1.0);
        let p = problem(QuboMatrix::from_dense(2, &[-1.0, 3.0, 0.0, -1.0]).unwrap());
        assert_eq!(epsilon_exact(&p, 24).unwrap(), 0.0);
        assert!(matches!(epsilon_exact(&p, 1), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn epsilon_neighbor_zero_noise() {
        let m = Modulation::<f64>::new(4).unwrap();
        let h = CMatrix::from_row_major(
            2,
            2,
            vec![Complex::new(1.0, 0.0), Complex::new(0.5, 0.0), Complex::new(0.0, 1.0), Complex::new(0.0, 0.5)],
        )
        .unwrap();
        let n = vec![Complex::new(0.0, 0.0); 2];
        assert_abs_diff_eq!(epsilon_neighbor(&h, &n, &m, 0.5).unwrap(), 0.5 * 2.0 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_min_examples() {
        assert_abs_diff_eq!(epsilon_min(&GaussianSpec::new(6.4, 2.88), 99.0), 2.452, epsilon = 1e-3);
        assert_eq!(epsilon_min(&GaussianSpec::new(8.0, 16.8), 99.0), 0.0);
        assert_abs_diff_eq!(epsilon_min(&GaussianSpec::new(3.0, 1.0), 50.0), 3.0, epsilon = 1e-9);
        assert_eq!(epsilon_min(&GaussianSpec::new(-3.0, 1.0), 50.0), 0.0);
    }

    #[test]
    fn delta_max_examples() {
        let s: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(delta_max(&s, 99.0).unwrap(), 99.0);
        assert_eq!(delta_max(&[7.0], 1.0).unwrap(), 7.0);
        assert_eq!(delta_max(&[7.0], 99.9).unwrap(), 7.0);
        assert_eq!(delta_max(&[], 99.0), Err(Error::EmptySample));
        assert!(delta_max(&s, 100.0).is_err());
        assert_eq!(epsilon_min_empirical(&s, 99.0).unwrap(), 1.0);
        assert_eq!(epsilon_min_empirical(&s, 90.0).unwrap(), 10.0);
    }

    #[test]
    fn check_is_strict() {
        assert!(preservation_check(0.4, 1.0));
        assert!(!preservation_check(0.5, 1.0));
        assert!(!preservation_check(0.0, 0.0));
    }

    #[test]
    fn threshold_report() {
        let s: Vec<f64> = (1..=100).map(|v| v as f64 / 100.0).collect();
        let t = ThresholdReport::new(Scheme::Homogeneous, Mode::Statistical, 8, 99.0, &s, 2.0).unwrap();
        assert_eq!(t.delta_max, 0.99);
        assert!(t.satisfied);
        let t = ThresholdReport::new(Scheme::Homogeneous, Mode::Statistical, 8, 99.0, &s, 0.0).unwrap();
        assert!(!t.satisfied);
    }
}
