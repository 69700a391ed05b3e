//! Small dense complex linear algebra used by the channel model and the MMSE detector.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{check_len, Error, Result};
use crate::scalar::Real;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex::zero(), |acc, (&h, &v)| acc + h * v)
            })
            .collect())
    }

    /// `selfᴴ · y`.
    pub fn adjoint_mul_vec(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.rows, y.len())?;
        let mut out = vec![Complex::zero(); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, h) in out.iter_mut().zip(self.row(i)) {
                *o += h.conj() * yi;
            }
        }
        Ok(out)
    }

    /// `selfᴴ · self`.
    pub fn gram(&self) -> CMatrix<T> {
        let n = self.cols;
        let mut g = CMatrix::zeros(n, n);
        for k in 0..self.rows {
            let row = self.row(k);
            for i in 0..n {
                let hi = row[i].conj();
                for j in 0..n {
                    g.data[i * n + j] += hi * row[j];
                }
            }
        }
        g
    }

    /// Squared Euclidean norm of column `j`.
    pub fn column_norm_sqr(&self, j: usize) -> T {
        (0..self.rows).map(|i| self[(i, j)].norm_sqr()).sum()
    }

    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// Solves `A x = b` for Hermitian positive-definite `A` by Cholesky factorization.
///
/// Fails with [`Error::SingularSystem`] when a pivot is not safely positive.
pub fn solve_hermitian<T: Real>(a: &CMatrix<T>, b: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
    let n = a.rows();
    check_len(n, a.cols())?;
    check_len(n, b.len())?;
    let scale = (0..n).map(|i| a[(i, i)].re.abs()).fold(T::zero(), T::max);
    let tiny = scale * T::epsilon() * T::of_usize(n.max(1));

    // Lower factor L with A = L Lᴴ.
    let mut l = CMatrix::<T>::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > tiny) || !d.is_finite() {
            return Err(Error::SingularSystem);
        }
        let d = d.sqrt();
        l[(j, j)] = Complex::new(d, T::zero());
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }

    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)].conj() * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn cholesky_solves_hermitian_system() {
        let a = CMatrix::from_row_major(2, 2, vec![c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)])
            .unwrap();
        let x = vec![c(0.5, -1.0), c(2.0, 0.25)];
        let b = a.mul_vec(&x).unwrap();
        let got = solve_hermitian(&a, &b).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn singular_system_detected() {
        let a = CMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)])
            .unwrap();
        assert_eq!(solve_hermitian(&a, &[c(1.0, 0.0), c(1.0, 0.0)]), Err(Error::SingularSystem));
    }

    #[test]
    fn gram_matches_adjoint_products() {
        let h = CMatrix::from_fn(3, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let g = h.gram();
        for i in 0..2 {
            for j in 0..2 {
                let e: Complex<f64> = (0..3).map(|k| h[(k, i)].conj() * h[(k, j)]).sum();
                assert!((g[(i, j)] - e).norm() < 1e-12);
            }
        }
    }
}
