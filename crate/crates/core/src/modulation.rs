//! Square M-QAM constellations and the linear (natural-binary) bit mapping.
//!
//! Each symbol carries `r = log2 M` bits. Bits `[i*r, i*r + r/2)` encode the
//! in-phase axis of symbol `i`, bits `[i*r + r/2, (i+1)*r)` the quadrature axis.
//! Within one axis, bit `k` has weight `2^k`, giving an axis index
//! `v ∈ {0, .., √M - 1}` mapped to the level `(d_min/2)(2v - (√M - 1))`.
//! The mapping is affine in the bits, which is what makes the detection
//! objective quadratic in them.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square M-QAM parameters under unit average symbol power.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulation<T> {
    order: usize,
    bits_per_symbol: usize,
    side: usize,
    d_min: T,
    levels: Vec<T>,
}

impl<T: Real> Modulation<T> {
    /// Builds the M-QAM scheme; `order` must be an even power of two, at least 4.
    pub fn new(order: usize) -> Result<Self> {
        if order < 4 || !order.is_power_of_two() || !order.trailing_zeros().is_multiple_of(2) {
            return Err(Error::InvalidModulation(order));
        }
        let bits_per_symbol = order.trailing_zeros() as usize;
        let side = 1usize << (bits_per_symbol / 2);
        let d_min = T::of_f64((6.0 / (order as f64 - 1.0)).sqrt());
        let half = d_min / T::of_f64(2.0);
        let levels = (0..side)
            .map(|v| half * T::of_f64(2.0 * v as f64 - (side as f64 - 1.0)))
            .collect();
        Ok(Self {
            order,
            bits_per_symbol,
            side,
            d_min,
            levels,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Bits per symbol, `r`.
    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Bits per axis, `r/2`.
    pub fn bits_per_axis(&self) -> usize {
        self.bits_per_symbol / 2
    }

    /// Number of levels per axis, `√M`.
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn d_min(&self) -> T {
        self.d_min
    }

    /// Per-axis amplitude levels, ascending.
    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    /// Axis amplitude of integer index `v`.
    pub fn level(&self, v: usize) -> T {
        self.levels[v]
    }

    /// All `M` constellation points, in-phase index major.
    pub fn constellation(&self) -> Vec<Complex<T>> {
        let mut pts = Vec::with_capacity(self.order);
        for &re in &self.levels {
            for &im in &self.levels {
                pts.push(Complex::new(re, im));
            }
        }
        pts
    }

    /// Index of the nearest level to `value`; exact midpoints resolve to the lower level.
    pub fn nearest_level_index(&self, value: T) -> usize {
        let u = ((value / (self.d_min / T::of_f64(2.0))).as_f64() + (self.side as f64 - 1.0)) / 2.0;
        let idx = (u - 0.5).ceil();
        idx.clamp(0.0, (self.side - 1) as f64) as usize
    }

    /// Maps a bit vector (length a multiple of `r`) to symbols.
    pub fn bits_to_symbols(&self, bits: &[u8]) -> Result<Vec<Complex<T>>> {
        let r = self.bits_per_symbol;
        if !bits.len().is_multiple_of(r) {
            return Err(Error::DimensionMismatch {
                expected: (bits.len() / r + 1) * r,
                found: bits.len(),
            });
        }
        let h = r / 2;
        Ok(bits
            .chunks_exact(r)
            .map(|sym| {
                let re = axis_index(&sym[..h]);
                let im = axis_index(&sym[h..]);
                Complex::new(self.levels[re], self.levels[im])
            })
            .collect())
    }

    /// Inverse of [`Modulation::bits_to_symbols`]; every symbol must be a constellation point.
    pub fn symbols_to_bits(&self, symbols: &[Complex<T>]) -> Result<Vec<u8>> {
        let h = self.bits_per_axis();
        let mut bits = Vec::with_capacity(symbols.len() * self.bits_per_symbol);
        for s in symbols {
            for axis in [s.re, s.im] {
                let v = self.exact_level_index(axis).ok_or_else(|| {
                    Error::NotAConstellationPoint(format!("{}{:+}j", s.re, s.im))
                })?;
                bits.extend((0..h).map(|k| ((v >> k) & 1) as u8));
            }
        }
        Ok(bits)
    }

    /// Slices each axis to the nearest level and returns the resulting bits.
    pub fn slice_to_bits(&self, estimates: &[Complex<T>]) -> Vec<u8> {
        let h = self.bits_per_axis();
        let mut bits = Vec::with_capacity(estimates.len() * self.bits_per_symbol);
        for s in estimates {
            for axis in [s.re, s.im] {
                let v = self.nearest_level_index(axis);
                bits.extend((0..h).map(|k| ((v >> k) & 1) as u8));
            }
        }
        bits
    }

    fn exact_level_index(&self, value: T) -> Option<usize> {
        let v = self.nearest_level_index(value);
        let tol = self.d_min.as_f64() * 1e-6;
        ((self.levels[v] - value).abs().as_f64() <= tol).then_some(v)
    }
}

fn axis_index(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (k, &b)| acc | (((b & 1) as usize) << k))
}

/// Decomposition of a 0-based bit index into antenna, axis and weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BitIndexInfo {
    pub antenna: usize,
    /// 0 = in-phase, 1 = quadrature.
    pub component: usize,
    /// The bit carries axis weight `2^weight_exp`.
    pub weight_exp: usize,
}

/// Decomposes bit index `b` of a problem with `n_t` transmit antennas.
pub fn bit_index_info<T: Real>(b: usize, modulation: &Modulation<T>, n_t: usize) -> Result<BitIndexInfo> {
    let r = modulation.bits_per_symbol();
    if b >= r * n_t {
        return Err(Error::IndexOutOfRange { index: b, len: r * n_t });
    }
    Ok(bit_info_unchecked(b, r))
}

#[inline]
pub(crate) fn bit_info_unchecked(b: usize, r: usize) -> BitIndexInfo {
    let half = r / 2;
    let t = b % r;
    BitIndexInfo {
        antenna: b / r,
        component: t / half,
        weight_exp: t % half,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn qpsk_parameters() {
        let m = Modulation::<f64>::new(4).unwrap();
        assert_eq!(m.bits_per_symbol(), 2);
        assert_abs_diff_eq!(m.d_min(), std::f64::consts::SQRT_2, epsilon = 1e-6);
    }

    #[test]
    fn qam16_levels() {
        let m = Modulation::<f64>::new(16).unwrap();
        assert_eq!(m.bits_per_symbol(), 4);
        assert_abs_diff_eq!(m.d_min(), 0.632456, epsilon = 1e-6);
        let expected = [-0.948683, -0.316228, 0.316228, 0.948683];
        for (l, e) in m.levels().iter().zip(expected) {
            assert_abs_diff_eq!(*l, e, epsilon = 1e-6);
        }
    }

    #[test]
    fn rejects_odd_powers_and_non_powers() {
        for order in [0, 1, 2, 8, 12, 32, 128] {
            assert_eq!(Modulation::<f64>::new(order), Err(Error::InvalidModulation(order)));
        }
    }

    #[test]
    fn unit_average_power_and_spacing() {
        for order in [4, 16, 64, 256, 1024] {
            let m = Modulation::<f64>::new(order).unwrap();
            let pts = m.constellation();
            assert_eq!(pts.len(), order);
            let power = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert_abs_diff_eq!(power, 1.0, epsilon = 1e-12);
            let lv = m.levels();
            assert_eq!(lv.len(), m.side());
            for w in lv.windows(2) {
                assert_abs_diff_eq!(w[1] - w[0], m.d_min(), epsilon = 1e-12);
            }
            for (a, b) in lv.iter().zip(lv.iter().rev()) {
                assert_abs_diff_eq!(*a, -*b, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn bit_index_examples() {
        let m4 = Modulation::<f64>::new(4).unwrap();
        let m16 = Modulation::<f64>::new(16).unwrap();
        let info = |b, m: &Modulation<f64>, nt| {
            let i = bit_index_info(b, m, nt).unwrap();
            (i.antenna, i.component, i.weight_exp)
        };
        assert_eq!(info(0, &m16, 1), (0, 0, 0));
        assert_eq!(info(3, &m16, 1), (0, 1, 1));
        assert_eq!(info(5, &m4, 3), (2, 1, 0));
        assert_eq!(
            bit_index_info(8, &m16, 2),
            Err(Error::IndexOutOfRange { index: 8, len: 8 })
        );
    }

    #[test]
    fn bits_to_symbol_examples() {
        let m4 = Modulation::<f64>::new(4).unwrap();
        let s = m4.bits_to_symbols(&[1, 0]).unwrap();
        assert_abs_diff_eq!(s[0].re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);
        assert_abs_diff_eq!(s[0].im, -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-6);

        let m16 = Modulation::<f64>::new(16).unwrap();
        let s = m16.bits_to_symbols(&[1, 1, 0, 0]).unwrap();
        assert_abs_diff_eq!(s[0].re, 0.948683, epsilon = 1e-6);
        assert_abs_diff_eq!(s[0].im, -0.948683, epsilon = 1e-6);
    }

    #[test]
    fn round_trip_random_bits() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for order in [4, 16, 64, 256] {
            let m = Modulation::<f64>::new(order).unwrap();
            for _ in 0..250 {
                let n = m.bits_per_symbol() * rng.random_range(1..6);
                let bits: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
                let syms = m.bits_to_symbols(&bits).unwrap();
                assert_eq!(m.symbols_to_bits(&syms).unwrap(), bits);
                assert_eq!(m.slice_to_bits(&syms), bits);
            }
        }
    }

    #[test]
    fn non_constellation_point_rejected() {
        let m = Modulation::<f64>::new(4).unwrap();
        assert!(matches!(
            m.symbols_to_bits(&[Complex::new(0.1, std::f64::consts::FRAC_1_SQRT_2)]),
            Err(Error::NotAConstellationPoint(_))
        ));
        assert!(matches!(m.bits_to_symbols(&[1, 0, 1]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn midpoint_slices_down() {
        let m = Modulation::<f64>::new(16).unwrap();
        assert_eq!(m.nearest_level_index(0.0), 1);
        assert_eq!(m.nearest_level_index(0.632456 + 1e-9), 3);
        assert_eq!(m.nearest_level_index(-5.0), 0);
        assert_eq!(m.nearest_level_index(5.0), 3);
    }
}
