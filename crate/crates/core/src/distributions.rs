//! Closed-form Gaussian approximations of QUBO entry distributions under
//! Rayleigh fading, and of the optimality gap between neighbouring symbol vectors.
//!
//! The second parameter of every distribution is a variance. Statistics are
//! evaluated in f64 whatever the storage scalar of the modulation.
//!
//! The diagonal variance follows the CLT-based closed form, which treats the
//! `(a x'* + |a|²/2)·|H|²` term as circular and independent across receive
//! antennas. Both assumptions are approximate; the closed form is below the
//! true spread by roughly 10-15% for the systems of interest. Off-diagonal
//! forms are exact in mean and variance.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::modulation::{bit_info_unchecked, Modulation};
use crate::qubo::{classify_unchecked, EntryClass};
use crate::scalar::Real;

/// Normal distribution given by mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpec {
    pub mean: f64,
    pub variance: f64,
}

impl GaussianSpec {
    pub fn new(mean: f64, variance: f64) -> Self {
        debug_assert!(variance >= 0.0);
        Self { mean, variance }
    }

    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = self.std();
        if s == 0.0 {
            return if x == self.mean { f64::INFINITY } else { 0.0 };
        }
        let z = (x - self.mean) / s;
        (-0.5 * z * z).exp() / (s * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Quantile at probability `prob` in (0, 1).
    pub fn quantile(&self, prob: f64) -> f64 {
        if self.variance == 0.0 {
            return self.mean;
        }
        Normal::new(self.mean, self.std())
            .expect("finite positive std")
            .inverse_cdf(prob)
    }
}

/// Per-bit constants of the diagonal-entry distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionParams {
    pub a: Complex<f64>,
    pub g: Complex<f64>,
    pub f: f64,
    /// `E|x'|²` of the shifted constellation `x' = x + (d_min/2)(√M-1)(1+j)`.
    pub shifted_symbol_power: f64,
    /// `E[x'*]`.
    pub shifted_symbol_mean: Complex<f64>,
}

impl DistributionParams {
    pub fn new<T: Real>(b: usize, modulation: &Modulation<T>) -> Self {
        let a = coeff_a_unchecked(b, modulation);
        let side = modulation.side() as f64;
        let d = modulation.d_min().as_f64();
        let power = 2.0 * (2.0 * side - 1.0) / (side + 1.0);
        let mean_conj = Complex::new(1.0, -1.0) * (d * (side - 1.0) / 2.0);
        let a2 = a.norm_sqr();
        let g = a * mean_conj + a2 / 2.0;
        // E|H|⁴ = 2 multiplies E|a x'* + |a|²/2|².
        let f = 2.0 * (a2 * power + a2 * a2 / 4.0 + a2 * (a * mean_conj).re);
        Self {
            a,
            g,
            f,
            shifted_symbol_power: power,
            shifted_symbol_mean: mean_conj,
        }
    }
}

fn coeff_a_unchecked<T: Real>(b: usize, modulation: &Modulation<T>) -> Complex<f64> {
    let info = bit_info_unchecked(b, modulation.bits_per_symbol());
    let mag = (1u64 << info.weight_exp) as f64 * modulation.d_min().as_f64();
    if info.component == 0 {
        Complex::new(-mag, 0.0)
    } else {
        Complex::new(0.0, -mag)
    }
}

fn check_bit<T: Real>(b: usize, modulation: &Modulation<T>, n_t: usize) -> Result<()> {
    let n = modulation.bits_per_symbol() * n_t;
    if b < n {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { index: b, len: n })
    }
}

/// `a_b = -(j^component) · 2^(weight_exp+1) · d_min/2`.
pub fn coeff_a<T: Real>(b: usize, modulation: &Modulation<T>, n_t: usize) -> Result<Complex<f64>> {
    check_bit(b, modulation, n_t)?;
    Ok(coeff_a_unchecked(b, modulation))
}

/// Gaussian approximation of diagonal entry `Q_bb`.
pub fn diag_distribution<T: Real>(
    b: usize,
    modulation: &Modulation<T>,
    n_t: usize,
    n_r: usize,
    noise_variance: f64,
) -> GaussianSpec {
    let p = DistributionParams::new(b, modulation);
    let a2 = p.a.norm_sqr();
    let (nt, nr) = (n_t as f64, n_r as f64);
    let mean = 2.0 * nr * p.g.re;
    let variance = 2.0
        * (a2 * (nt - 1.0) * p.shifted_symbol_power * nr
            + nr * noise_variance * a2
            + nr * (p.f - p.g.norm_sqr()));
    GaussianSpec::new(mean, variance)
}

/// Distribution of an off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OffDiagDistribution {
    Gaussian(GaussianSpec),
    ExactZero,
}

impl OffDiagDistribution {
    pub fn gaussian(self) -> Option<GaussianSpec> {
        match self {
            OffDiagDistribution::Gaussian(g) => Some(g),
            OffDiagDistribution::ExactZero => None,
        }
    }
}

/// Distribution of `Q_ij`, `i < j`.
pub fn offdiag_distribution<T: Real>(
    i: usize,
    j: usize,
    modulation: &Modulation<T>,
    n_t: usize,
    n_r: usize,
) -> Result<OffDiagDistribution> {
    check_bit(j, modulation, n_t)?;
    if i >= j {
        return Err(Error::IndexOutOfRange { index: i, len: j });
    }
    let ai = coeff_a_unchecked(i, modulation).norm();
    let aj = coeff_a_unchecked(j, modulation).norm();
    let nr = n_r as f64;
    Ok(match classify_unchecked(i, j, modulation.bits_per_symbol()) {
        EntryClass::Case1 => OffDiagDistribution::Gaussian(GaussianSpec::new(0.0, 2.0 * nr * ai * ai * aj * aj)),
        EntryClass::Case2 => OffDiagDistribution::ExactZero,
        EntryClass::Case3 => {
            OffDiagDistribution::Gaussian(GaussianSpec::new(2.0 * nr * ai * aj, 4.0 * nr * ai * ai * aj * aj))
        }
        EntryClass::Diagonal => unreachable!("i < j"),
    })
}

/// Statistical minimum, maximum and absolute maximum `μ ± kσ`, `|μ| + kσ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema {
    pub lo: f64,
    pub hi: f64,
    pub abs_max: f64,
}

pub fn statistical_extrema(d: &GaussianSpec, k: f64) -> Extrema {
    let s = k * d.std();
    Extrema {
        lo: d.mean - s,
        hi: d.mean + s,
        abs_max: d.mean.abs() + s,
    }
}

/// Gap between the optimum and its nearest neighbour in normalized units.
pub fn epsilon_distribution<T: Real>(
    modulation: &Modulation<T>,
    n_r: usize,
    noise_variance: f64,
    alpha: f64,
) -> GaussianSpec {
    let d2 = modulation.d_min().as_f64().powi(2);
    let nr = n_r as f64;
    GaussianSpec::new(
        alpha * d2 * nr,
        (d2 * d2 + 2.0 * d2 * noise_variance) * alpha * alpha * nr,
    )
}

/// One distinct entry distribution of a system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassDistribution {
    pub class: EntryClass,
    /// Representative index pair.
    pub i: usize,
    pub j: usize,
    pub dist: GaussianSpec,
}

/// Distributions of every distinct diagonal, Case-1 and Case-3 entry kind.
///
/// Every antenna is statistically identical, so representatives are taken from
/// antennas 0 and 1. Case-2 entries are exact zeros and are not listed.
pub fn class_distributions<T: Real>(
    modulation: &Modulation<T>,
    n_t: usize,
    n_r: usize,
    noise_variance: f64,
) -> Vec<ClassDistribution> {
    let r = modulation.bits_per_symbol();
    let mut out = Vec::new();
    for b in 0..r {
        out.push(ClassDistribution {
            class: EntryClass::Diagonal,
            i: b,
            j: b,
            dist: diag_distribution(b, modulation, n_t, n_r, noise_variance),
        });
    }
    let mut push_pair = |i: usize, j: usize| {
        if let Ok(OffDiagDistribution::Gaussian(dist)) = offdiag_distribution(i, j, modulation, n_t, n_r) {
            out.push(ClassDistribution {
                class: classify_unchecked(i, j, r),
                i,
                j,
                dist,
            });
        }
    };
    for i in 0..r {
        for j in (i + 1)..r {
            push_pair(i, j);
        }
    }
    if n_t >= 2 {
        for i in 0..r {
            for j in r..2 * r {
                push_pair(i, j);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(order: usize) -> Modulation<f64> {
        Modulation::new(order).unwrap()
    }

    #[test]
    fn coeff_a_examples() {
        let a = coeff_a(0, &m(4), 1).unwrap();
        assert_abs_diff_eq!(a.re, -std::f64::consts::SQRT_2, epsilon = 1e-6);
        assert_eq!(a.im, 0.0);
        let a = coeff_a(1, &m(16), 1).unwrap();
        assert_abs_diff_eq!(a.re, -1.264911, epsilon = 1e-6);
        let a = coeff_a(2, &m(16), 1).unwrap();
        assert_eq!(a.re, 0.0);
        assert_abs_diff_eq!(a.im, -0.632456, epsilon = 1e-6);
        assert!(coeff_a(4, &m(16), 1).is_err());
    }

    #[test]
    fn coeff_a_magnitude() {
        for order in [4, 16, 64, 256] {
            let md = m(order);
            for b in 0..md.bits_per_symbol() {
                let info = bit_info_unchecked(b, md.bits_per_symbol());
                let a = coeff_a(b, &md, 1).unwrap();
                assert_abs_diff_eq!(a.norm(), (1 << info.weight_exp) as f64 * md.d_min(), epsilon = 1e-12);
                let p = DistributionParams::new(b, &md);
                assert!(p.f >= p.g.norm_sqr());
            }
        }
    }

    #[test]
    fn shifted_constellation_moments_by_enumeration() {
        for order in [4, 16, 64, 256] {
            let md = m(order);
            let shift = md.d_min() / 2.0 * (md.side() as f64 - 1.0);
            let pts = md.constellation();
            let p = DistributionParams::new(0, &md);
            let power = pts
                .iter()
                .map(|x| (x + Complex::new(shift, shift)).norm_sqr())
                .sum::<f64>()
                / order as f64;
            let mean: Complex<f64> = pts.iter().map(|x| (x + Complex::new(shift, shift)).conj()).sum::<Complex<f64>>()
                / order as f64;
            assert_abs_diff_eq!(power, p.shifted_symbol_power, epsilon = 1e-12);
            assert_abs_diff_eq!(mean.re, p.shifted_symbol_mean.re, epsilon = 1e-12);
            assert_abs_diff_eq!(mean.im, p.shifted_symbol_mean.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn diag_examples() {
        for b in 0..2 {
            let d = diag_distribution(b, &m(4), 4, 4, 0.05);
            assert_abs_diff_eq!(d.mean, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(d.variance, 136.8, epsilon = 1e-9);
        }
        let p = DistributionParams::new(0, &m(4));
        assert_abs_diff_eq!(p.f, 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.g.norm_sqr(), 1.0, epsilon = 1e-12);

        let p16 = DistributionParams::new(0, &m(16));
        assert_abs_diff_eq!(p16.g.re, -0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(p16.g.im, 0.6, epsilon = 1e-12);
        let d = diag_distribution(0, &m(16), 16, 16, 0.025);
        assert_abs_diff_eq!(d.mean, -12.8, epsilon = 1e-9);
        let d2 = diag_distribution(0, &m(16), 16, 16, 0.5);
        assert_eq!(d.mean, d2.mean);
        assert!(d2.variance > d.variance);
    }

    #[test]
    fn offdiag_examples() {
        let g = offdiag_distribution(0, 2, &m(4), 2, 4).unwrap().gaussian().unwrap();
        assert_abs_diff_eq!(g.mean, 0.0);
        assert_abs_diff_eq!(g.variance, 32.0, epsilon = 1e-9);
        let g = offdiag_distribution(0, 1, &m(16), 1, 16).unwrap().gaussian().unwrap();
        assert_abs_diff_eq!(g.mean, 25.6, epsilon = 1e-9);
        assert_abs_diff_eq!(g.variance, 40.96, epsilon = 1e-9);
        assert_eq!(offdiag_distribution(0, 2, &m(16), 1, 16).unwrap(), OffDiagDistribution::ExactZero);
        assert!(offdiag_distribution(1, 1, &m(16), 1, 16).is_err());
        assert!(offdiag_distribution(0, 4, &m(16), 1, 16).is_err());
    }

    #[test]
    fn extrema_examples() {
        let e = statistical_extrema(&GaussianSpec::new(25.6, 40.96), 5.0);
        assert_abs_diff_eq!(e.lo, -6.4, epsilon = 1e-9);
        assert_abs_diff_eq!(e.hi, 57.6, epsilon = 1e-9);
        assert_abs_diff_eq!(e.abs_max, 57.6, epsilon = 1e-9);
        let e = statistical_extrema(&GaussianSpec::new(0.0, 32.0), 5.0);
        assert_abs_diff_eq!(e.hi, 28.284271, epsilon = 1e-6);
        assert_abs_diff_eq!(e.lo, -28.284271, epsilon = 1e-6);
        let v = 9.0;
        let e = statistical_extrema(&GaussianSpec::new(-12.8, v), 5.0);
        assert_abs_diff_eq!(e.abs_max, 12.8 + 5.0 * 3.0, epsilon = 1e-12);
    }

    #[test]
    fn epsilon_examples() {
        let e = epsilon_distribution(&m(4), 4, 0.05, 1.0);
        assert_abs_diff_eq!(e.mean, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.variance, 16.8, epsilon = 1e-9);
        let e = epsilon_distribution(&m(4), 4, 0.05, 0.5);
        assert_abs_diff_eq!(e.mean, 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e.variance, 4.2, epsilon = 1e-9);
        let e = epsilon_distribution(&m(16), 16, 0.025, 1.0);
        assert_abs_diff_eq!(e.mean, 6.4, epsilon = 1e-9);
        assert_abs_diff_eq!(e.variance, 2.88, epsilon = 1e-9);
    }

    #[test]
    fn variances_nonnegative() {
        for order in [4, 16, 64, 256] {
            for (nt, nr) in [(1, 1), (1, 4), (4, 4), (16, 16), (32, 32)] {
                for s2 in [0.0, 0.001, 0.05, 1.0] {
                    for c in class_distributions(&m(order), nt, nr, s2) {
                        assert!(c.dist.variance >= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn quantile_and_pdf() {
        let g = GaussianSpec::new(6.4, 2.88);
        assert_abs_diff_eq!(g.quantile(0.01), 6.4 - 2.326348 * 2.88f64.sqrt(), epsilon = 1e-5);
        assert_abs_diff_eq!(g.quantile(0.5), 6.4, epsilon = 1e-9);
        assert_abs_diff_eq!(GaussianSpec::new(0.0, 1.0).pdf(0.0), 0.398942, epsilon = 1e-6);
    }
}
