//! Rayleigh-fading MIMO channel, symbol generation and AWGN.
//!
//! Conventions: channel entries are circularly-symmetric complex Gaussian with
//! `E|H_ij|² = 1` (variance 1/2 per component); noise has total complex variance
//! `σ_n² = N_0`, split evenly between real and imaginary parts.

use num_complex::Complex;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Result};
use crate::linalg::CMatrix;
use crate::modulation::Modulation;
use crate::scalar::Real;

/// Random stream used for every sampling operation in the crate.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 finalizer; the mixing function behind all derived seeds.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `base_seed`: `splitmix64(base_seed ^ index)`.
pub fn realization_seed(base_seed: u64, index: u64) -> u64 {
    splitmix64(base_seed ^ index)
}

/// Seed of an independent substream keyed by `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Noise variance `N_0 = E_b / 10^(ebn0_db/10)` with `E_b = 1/r`.
pub fn noise_variance<T: Real>(modulation: &Modulation<T>, ebn0_db: f64) -> f64 {
    let eb = 1.0 / modulation.bits_per_symbol() as f64;
    eb / 10f64.powf(ebn0_db / 10.0)
}

/// Circularly-symmetric complex Gaussian sample with total variance `variance`.
pub fn complex_gaussian<T: Real, R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex<T> {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(T::of_f64(re * s), T::of_f64(im * s))
}

/// `n_r × n_t` i.i.d. Rayleigh channel with unit-power entries.
pub fn sample_channel<T: Real, R: Rng + ?Sized>(n_t: usize, n_r: usize, rng: &mut R) -> CMatrix<T> {
    CMatrix::from_fn(n_r, n_t, |_, _| complex_gaussian(rng, 1.0))
}

/// Uniform random bits and their symbols.
pub fn sample_symbols<T: Real, R: Rng + ?Sized>(
    modulation: &Modulation<T>,
    n_t: usize,
    rng: &mut R,
) -> (Vec<Complex<T>>, Vec<u8>) {
    let bits: Vec<u8> = (0..n_t * modulation.bits_per_symbol())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    let symbols = modulation
        .bits_to_symbols(&bits)
        .expect("bit count is a multiple of r by construction");
    (symbols, bits)
}

/// Returns `(y, n)` with `y = H x + n` and `n` i.i.d. with total variance `noise_var`.
pub fn transmit<T: Real, R: Rng + ?Sized>(
    h: &CMatrix<T>,
    x: &[Complex<T>],
    noise_var: f64,
    rng: &mut R,
) -> Result<(Vec<Complex<T>>, Vec<Complex<T>>)> {
    check_len(h.cols(), x.len())?;
    let hx = h.mul_vec(x)?;
    let n: Vec<Complex<T>> = (0..h.rows()).map(|_| complex_gaussian(rng, noise_var)).collect();
    let y = hx.iter().zip(&n).map(|(a, b)| a + b).collect();
    Ok((y, n))
}

/// One sampled `(H, x, n, y)` tuple.
#[derive(Debug, Clone)]
pub struct ChannelRealization<T> {
    pub modulation: Modulation<T>,
    pub h: CMatrix<T>,
    pub x: Vec<Complex<T>>,
    pub true_bits: Vec<u8>,
    pub n: Vec<Complex<T>>,
    pub y: Vec<Complex<T>>,
    pub noise_variance: f64,
    pub seed: u64,
}

impl<T: Real> ChannelRealization<T> {
    /// Samples channel, bits and noise (in that order) from a stream seeded with `seed`.
    pub fn generate(
        modulation: &Modulation<T>,
        n_t: usize,
        n_r: usize,
        ebn0_db: f64,
        seed: u64,
    ) -> Self {
        let noise_var = noise_variance(modulation, ebn0_db);
        Self::generate_with_noise(modulation, n_t, n_r, noise_var, seed)
    }

    pub fn generate_with_noise(
        modulation: &Modulation<T>,
        n_t: usize,
        n_r: usize,
        noise_variance: f64,
        seed: u64,
    ) -> Self {
        let mut rng = rng_from_seed(seed);
        let h = sample_channel(n_t, n_r, &mut rng);
        let (x, true_bits) = sample_symbols(modulation, n_t, &mut rng);
        let (y, n) = transmit(&h, &x, noise_variance, &mut rng).expect("dimensions agree");
        Self {
            modulation: modulation.clone(),
            h,
            x,
            true_bits,
            n,
            y,
            noise_variance,
            seed,
        }
    }

    pub fn n_t(&self) -> usize {
        self.h.cols()
    }

    pub fn n_r(&self) -> usize {
        self.h.rows()
    }
}
