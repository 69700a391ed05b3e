//! Compilation of ML detection into an upper-triangular QUBO matrix.

use std::io::{BufRead, Write};

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::{check_len, Error, Result};
use crate::linalg::CMatrix;
use crate::modulation::{bit_info_unchecked, Modulation};
use crate::scalar::Real;

/// Upper-triangular QUBO coefficient matrix; entries below the diagonal are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> QuboMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    /// Builds from a dense row-major `n × n` array; the lower triangle is discarded.
    pub fn from_dense(n: usize, dense: &[T]) -> Result<Self> {
        check_len(n * n, dense.len())?;
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.data[i * n + j] = dense[i * n + j];
            }
        }
        Ok(m)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.data[i * n + j] = f(i, j);
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `(i, j)` for `i <= j`; zero below the diagonal.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        if i <= j {
            self.data[i * self.n + j]
        } else {
            T::zero()
        }
    }

    /// Coupling between bits `i` and `j` regardless of argument order.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> T {
        if i <= j {
            self.data[i * self.n + j]
        } else {
            self.data[j * self.n + i]
        }
    }

    /// Sets `(i, j)`; panics if `i > j`.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        assert!(i <= j, "QUBO storage is upper-triangular");
        self.data[i * self.n + j] = v;
    }

    /// Iterates `(i, j, value)` over the upper triangle including the diagonal.
    pub fn upper(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j, self.data[i * self.n + j])))
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn max_abs(&self) -> T {
        self.upper().fold(T::zero(), |m, (_, _, v)| m.max(v.abs()))
    }

    pub fn map_upper(&self, mut f: impl FnMut(usize, usize, T) -> T) -> Self {
        Self::from_fn(self.n, |i, j| f(i, j, self.get(i, j)))
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map_upper(|_, _, v| v * s)
    }

    /// `Σ_{i≤j} Q_ij q_i q_j`, accumulated in f64.
    pub fn energy(&self, q: &[u8]) -> Result<f64> {
        check_len(self.n, q.len())?;
        Ok(self.energy_unchecked(q))
    }

    pub(crate) fn energy_unchecked(&self, q: &[u8]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if q[i] == 0 {
                continue;
            }
            let row = &self.data[i * self.n..(i + 1) * self.n];
            for j in i..self.n {
                if q[j] != 0 {
                    e += row[j].as_f64();
                }
            }
        }
        e
    }

    /// Symmetric f64 copy: diagonal holds `Q_ii`, off-diagonals the coupling.
    pub fn to_symmetric_f64(&self) -> Vec<f64> {
        let n = self.n;
        let mut s = vec![0.0; n * n];
        for (i, j, v) in self.upper() {
            s[i * n + j] = v.as_f64();
            s[j * n + i] = v.as_f64();
        }
        s
    }

    /// Writes the sparse triplet text format: a header line `N offset`, then one
    /// `i j value` line per nonzero upper-triangular entry (0-based).
    pub fn write_triplets<W: Write>(&self, offset: T, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{} {}", self.n, offset.as_f64())?;
        for (i, j, v) in self.upper() {
            if v != T::zero() {
                writeln!(w, "{} {} {}", i, j, v.as_f64())?;
            }
        }
        Ok(())
    }

    /// Parses the triplet format written by [`QuboMatrix::write_triplets`].
    pub fn read_triplets<R: BufRead>(r: R) -> Result<(Self, T)> {
        let mut lines = r.lines().map(|l| l.map_err(|e| Error::Parse(e.to_string())));
        let header = lines.next().ok_or_else(|| Error::Parse("missing header".into()))??;
        let mut parts = header.split_whitespace();
        let n: usize = parse_field(parts.next(), "N")?;
        let offset: f64 = parse_field(parts.next(), "offset")?;
        let mut m = Self::zeros(n);
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut p = line.split_whitespace();
            let i: usize = parse_field(p.next(), "i")?;
            let j: usize = parse_field(p.next(), "j")?;
            let v: f64 = parse_field(p.next(), "value")?;
            if i > j || j >= n {
                return Err(Error::Parse(format!("entry ({i}, {j}) outside upper triangle of size {n}")));
            }
            m.set(i, j, T::of_f64(v));
        }
        Ok((m, T::of_f64(offset)))
    }
}

fn parse_field<F: std::str::FromStr>(s: Option<&str>, name: &str) -> Result<F> {
    s.ok_or_else(|| Error::Parse(format!("missing {name}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad {name}")))
}

/// Relationship of an index pair `(i, j)`, `i <= j`, for coefficient statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntryClass {
    Diagonal,
    /// Bits of different transmit antennas.
    Case1,
    /// Same antenna, opposite axes: always exactly zero.
    Case2,
    /// Same antenna, same axis, distinct bits.
    Case3,
}

impl EntryClass {
    pub fn name(self) -> &'static str {
        match self {
            EntryClass::Diagonal => "diagonal",
            EntryClass::Case1 => "case1",
            EntryClass::Case2 => "case2",
            EntryClass::Case3 => "case3",
        }
    }
}

#[inline]
pub(crate) fn classify_unchecked(i: usize, j: usize, r: usize) -> EntryClass {
    if i == j {
        return EntryClass::Diagonal;
    }
    let (a, b) = (bit_info_unchecked(i, r), bit_info_unchecked(j, r));
    if a.antenna != b.antenna {
        EntryClass::Case1
    } else if a.component != b.component {
        EntryClass::Case2
    } else {
        EntryClass::Case3
    }
}

/// Classifies `(i, j)` of a problem with `n_t` transmit antennas.
pub fn classify_entry<T: Real>(
    i: usize,
    j: usize,
    modulation: &Modulation<T>,
    n_t: usize,
) -> Result<EntryClass> {
    let n = modulation.bits_per_symbol() * n_t;
    if j >= n {
        return Err(Error::IndexOutOfRange { index: j, len: n });
    }
    if i > j {
        return Err(Error::IndexOutOfRange { index: i, len: j + 1 });
    }
    Ok(classify_unchecked(i, j, modulation.bits_per_symbol()))
}

/// Coefficient `a_b` multiplying `H_{k, antenna(b)}` in the linear residual term.
pub fn bit_coefficient<T: Real>(b: usize, modulation: &Modulation<T>) -> Complex<T> {
    let info = bit_info_unchecked(b, modulation.bits_per_symbol());
    let mag = T::of_f64((1u64 << info.weight_exp) as f64) * modulation.d_min();
    if info.component == 0 {
        Complex::new(-mag, T::zero())
    } else {
        Complex::new(T::zero(), -mag)
    }
}

/// Bias vector `c_k = y_k + (d_min/2)(√M-1)(1+j) Σ_l H_kl`.
pub fn bias_vector<T: Real>(h: &CMatrix<T>, y: &[Complex<T>], modulation: &Modulation<T>) -> Result<Vec<Complex<T>>> {
    check_len(h.rows(), y.len())?;
    let shift = modulation.d_min() / T::of_f64(2.0) * T::of_usize(modulation.side() - 1);
    let shift = Complex::new(shift, shift);
    Ok((0..h.rows())
        .map(|k| {
            let row_sum: Complex<T> = h.row(k).iter().fold(Complex::zero(), |a, &v| a + v);
            y[k] + shift * row_sum
        })
        .collect())
}

/// Explicit weights `W_{k,b} = a_b · H_{k, antenna(b)}`, an `n_r × r·n_t` matrix.
pub fn weight_matrix<T: Real>(h: &CMatrix<T>, modulation: &Modulation<T>) -> CMatrix<T> {
    let r = modulation.bits_per_symbol();
    CMatrix::from_fn(h.rows(), r * h.cols(), |k, b| bit_coefficient(b, modulation) * h[(k, b / r)])
}

/// QUBO problem for one channel realization.
///
/// `energy(q) / scale + offset` equals `‖y - H x(q)‖²`; `scale` is 1 for a freshly
/// built problem and becomes the normalization multiplier after scaling.
#[derive(Debug, Clone)]
pub struct QuboProblem<T> {
    pub matrix: QuboMatrix<T>,
    pub offset: T,
    pub scale: T,
    pub modulation: Modulation<T>,
    pub n_t: usize,
    pub n_r: usize,
}

impl<T: Real> QuboProblem<T> {
    /// Compiles `‖y - Hx‖²` into QUBO form.
    ///
    /// Off-diagonal entries are formed from the channel Gram matrix with the phase
    /// of `a_i* a_j` applied symbolically, so same-antenna cross-axis entries come
    /// out exactly zero.
    pub fn build(real: &ChannelRealization<T>) -> Self {
        Self::from_channel(&real.h, &real.y, &real.modulation).expect("realization is well formed")
    }

    pub fn from_channel(h: &CMatrix<T>, y: &[Complex<T>], modulation: &Modulation<T>) -> Result<Self> {
        let (n_r, n_t) = (h.rows(), h.cols());
        let r = modulation.bits_per_symbol();
        let n = r * n_t;
        let c = bias_vector(h, y, modulation)?;
        let two = T::of_f64(2.0);

        let mut gram = h.gram();
        for a in 0..n_t {
            gram[(a, a)] = Complex::new(h.column_norm_sqr(a), T::zero());
        }
        let hc = h.adjoint_mul_vec(&c)?;

        let mags: Vec<T> = (0..n).map(|b| bit_coefficient(b, modulation).norm()).collect();
        let mut m = QuboMatrix::zeros(n);
        for i in 0..n {
            let bi = bit_info_unchecked(i, r);
            let a = bit_coefficient(i, modulation);
            // Σ_k 2Re(c_k* W_ki) + |W_ki|²
            let lin = two * (a * hc[bi.antenna].conj()).re + mags[i] * mags[i] * gram[(bi.antenna, bi.antenna)].re;
            m.set(i, i, lin);
            for j in (i + 1)..n {
                let bj = bit_info_unchecked(j, r);
                let g = gram[(bi.antenna, bj.antenna)];
                // Re(j^(c_j - c_i) · g)
                let re = match (bi.component, bj.component) {
                    (0, 0) | (1, 1) => g.re,
                    (0, 1) => -g.im,
                    _ => g.im,
                };
                // `+ 0` folds a signed zero into +0.
                m.set(i, j, two * mags[i] * mags[j] * re + T::zero());
            }
        }
        let offset = c.iter().map(|v| v.norm_sqr()).sum();
        Ok(Self {
            matrix: m,
            offset,
            scale: T::one(),
            modulation: modulation.clone(),
            n_t,
            n_r,
        })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn energy(&self, q: &[u8]) -> Result<f64> {
        self.matrix.energy(q)
    }

    /// Maps a QUBO energy of this problem back to ML-residual units.
    pub fn ml_residual(&self, energy: f64) -> f64 {
        energy / self.scale.as_f64() + self.offset.as_f64()
    }

    pub fn classify(&self, i: usize, j: usize) -> Result<EntryClass> {
        classify_entry(i, j, &self.modulation, self.n_t)
    }

    /// Same problem with a different coefficient matrix (e.g. after quantization).
    pub fn with_matrix(&self, matrix: QuboMatrix<T>, scale: T) -> Self {
        Self {
            matrix,
            offset: self.offset,
            scale,
            modulation: self.modulation.clone(),
            n_t: self.n_t,
            n_r: self.n_r,
        }
    }
}

/// `‖y - Hx‖²` in f64.
pub fn ml_objective<T: Real>(h: &CMatrix<T>, y: &[Complex<T>], x: &[Complex<T>]) -> Result<f64> {
    check_len(h.rows(), y.len())?;
    let hx = h.mul_vec(x)?;
    Ok(y.iter()
        .zip(&hx)
        .map(|(a, b)| {
            let d = Complex::new(a.re.as_f64() - b.re.as_f64(), a.im.as_f64() - b.im.as_f64());
            d.norm_sqr()
        })
        .sum())
}

/// Hamming distance between two bit vectors.
pub fn bit_errors(reference: &[u8], detected: &[u8]) -> Result<usize> {
    check_len(reference.len(), detected.len())?;
    Ok(reference.iter().zip(detected).filter(|(a, b)| a != b).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{rng_from_seed, ChannelRealization};
    use rand::Rng;

    fn naive_energy(m: &QuboMatrix<f64>, q: &[u8]) -> f64 {
        let n = m.n();
        let mut e = 0.0;
        for i in 0..n {
            for j in 0..n {
                e += m.get(i, j) * q[i] as f64 * q[j] as f64;
            }
        }
        e
    }

    #[test]
    fn energy_examples() {
        let m = QuboMatrix::from_fn(3, |i, j| (i * 3 + j) as f64 - 2.5);
        assert_eq!(m.energy(&[0, 0, 0]).unwrap(), 0.0);
        for i in 0..3 {
            let mut q = [0u8; 3];
            q[i] = 1;
            assert_eq!(m.energy(&q).unwrap(), m.get(i, i));
        }
        assert!(matches!(m.energy(&[1, 0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn energy_matches_dense_quadratic_form() {
        let mut rng = rng_from_seed(4);
        for _ in 0..50 {
            let n = rng.random_range(1..20);
            let m = QuboMatrix::from_fn(n, |_, _| rng.random_range(-5.0..5.0));
            let q: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let (a, b) = (m.energy(&q).unwrap(), naive_energy(&m, &q));
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn classify_examples() {
        let m16 = Modulation::<f64>::new(16).unwrap();
        assert_eq!(classify_entry(0, 0, &m16, 2).unwrap(), EntryClass::Diagonal);
        assert_eq!(classify_entry(0, 4, &m16, 2).unwrap(), EntryClass::Case1);
        assert_eq!(classify_entry(0, 2, &m16, 2).unwrap(), EntryClass::Case2);
        assert_eq!(classify_entry(0, 1, &m16, 2).unwrap(), EntryClass::Case3);
        assert!(classify_entry(0, 8, &m16, 2).is_err());
        assert!(classify_entry(3, 2, &m16, 2).is_err());
    }

    #[test]
    fn bit_error_examples() {
        assert_eq!(bit_errors(&[1, 0, 1], &[1, 0, 1]).unwrap(), 0);
        assert_eq!(bit_errors(&[0; 8], &[1; 8]).unwrap(), 8);
        assert_eq!(bit_errors(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap(), 2);
        assert!(bit_errors(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn ml_objective_examples() {
        let m = Modulation::<f64>::new(4).unwrap();
        let r = ChannelRealization::generate_with_noise(&m, 2, 3, 0.0, 1);
        assert!(ml_objective(&r.h, &r.y, &r.x).unwrap() < 1e-24);
        let id = CMatrix::identity(2);
        let zero = vec![Complex::new(0.0, 0.0); 2];
        let x = m.bits_to_symbols(&[1, 0, 0, 1]).unwrap();
        assert!((ml_objective(&id, &zero, &x).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimensions_and_case2_zeros() {
        let m = Modulation::<f64>::new(16).unwrap();
        let r = ChannelRealization::generate(&m, 4, 4, 10.0, 17);
        let p = QuboProblem::build(&r);
        assert_eq!(p.n(), 16);
        for (i, j, v) in p.matrix.upper() {
            if p.classify(i, j).unwrap() == EntryClass::Case2 {
                assert_eq!(v, 0.0, "({i},{j})");
            }
        }
    }

    #[test]
    fn weights_agree_with_gram_construction() {
        let m = Modulation::<f64>::new(16).unwrap();
        let r = ChannelRealization::generate(&m, 3, 5, 8.0, 23);
        let p = QuboProblem::build(&r);
        let w = weight_matrix(&r.h, &m);
        let c = bias_vector(&r.h, &r.y, &m).unwrap();
        for i in 0..p.n() {
            for j in i..p.n() {
                let e: f64 = (0..r.n_r())
                    .map(|k| {
                        if i == j {
                            2.0 * (c[k].conj() * w[(k, i)]).re + w[(k, i)].norm_sqr()
                        } else {
                            2.0 * (w[(k, i)].conj() * w[(k, j)]).re
                        }
                    })
                    .sum();
                assert!((p.matrix.get(i, j) - e).abs() < 1e-10 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn triplet_round_trip() {
        let m = Modulation::<f64>::new(4).unwrap();
        let r = ChannelRealization::generate(&m, 2, 2, 10.0, 5);
        let p = QuboProblem::build(&r);
        let mut buf = Vec::new();
        p.matrix.write_triplets(p.offset, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("4 "));
        let (back, offset) = QuboMatrix::<f64>::read_triplets(buf.as_slice()).unwrap();
        assert_eq!(back, p.matrix);
        assert_eq!(offset, p.offset);
        assert!(QuboMatrix::<f64>::read_triplets("2 0\n1 0 3.0\n".as_bytes()).is_err());
    }
}
