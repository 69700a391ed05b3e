use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::channel::derive_seed;
use crate::error::{check_len, Error, Result};
use crate::qubo::{QuboMatrix, QuboProblem};
use crate::scalar::Real;

use super::{DetectionOutcome, SolverConfig, SolverTag};

/// Sweeps between exact recomputations of replica energies and fields.
const RESYNC_SWEEPS: usize = 256;

/// Moves with `βΔE` above this are rejected without drawing (`e^-40 ≈ 4e-18`).
const MAX_BOLTZMANN_EXPONENT: f64 = 40.0;

/// Dense f64 copy of a QUBO matrix laid out for single-flip updates.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricQubo {
    n: usize,
    diag: Vec<f64>,
    /// Row-major couplings with a zero diagonal.
    coupling: Vec<f64>,
}

impl SymmetricQubo {
    pub fn new<T: Real>(m: &QuboMatrix<T>) -> Self {
        let n = m.n();
        let mut coupling = m.to_symmetric_f64();
        let mut diag = vec![0.0; n];
        for i in 0..n {
            diag[i] = coupling[i * n + i];
            coupling[i * n + i] = 0.0;
        }
        Self { n, diag, coupling }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.coupling[i * self.n..(i + 1) * self.n]
    }

    pub fn energy(&self, q: &[u8]) -> f64 {
        let mut e = 0.0;
        for i in 0..self.n {
            if q[i] == 0 {
                continue;
            }
            e += self.diag[i];
            let row = self.row(i);
            for j in (i + 1)..self.n {
                if q[j] != 0 {
                    e += row[j];
                }
            }
        }
        e
    }
}

/// Lowest-energy configuration seen so far.
#[derive(Debug, Clone, PartialEq)]
pub struct BestSeen {
    pub energy: f64,
    pub bits: Vec<u8>,
}

impl BestSeen {
    #[inline]
    fn offer(&mut self, energy: f64, bits: &[u8]) {
        if energy < self.energy {
            self.energy = energy;
            self.bits.copy_from_slice(bits);
        }
    }
}

/// Binary state with cached local fields: `field[i]` is the energy change of
/// setting `q_i` from 0 to 1 with the other bits fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFieldState {
    q: Vec<u8>,
    field: Vec<f64>,
    energy: f64,
}

impl LocalFieldState {
    pub fn new(sym: &SymmetricQubo, q: &[u8]) -> Result<Self> {
        check_len(sym.n, q.len())?;
        let mut s = Self {
            q: q.iter().map(|&b| b & 1).collect(),
            field: vec![0.0; sym.n],
            energy: 0.0,
        };
        s.resync(sym);
        Ok(s)
    }

    pub fn bits(&self) -> &[u8] {
        &self.q
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Recomputes energy and fields from scratch.
    pub fn resync(&mut self, sym: &SymmetricQubo) {
        for i in 0..sym.n {
            let row = sym.row(i);
            self.field[i] = sym.diag[i] + (0..sym.n).filter(|&j| self.q[j] != 0).map(|j| row[j]).sum::<f64>();
        }
        self.energy = sym.energy(&self.q);
    }

    #[inline]
    pub fn flip_delta(&self, k: usize) -> f64 {
        if self.q[k] == 0 {
            self.field[k]
        } else {
            -self.field[k]
        }
    }

    #[inline]
    pub fn flip(&mut self, sym: &SymmetricQubo, k: usize) {
        let d = self.flip_delta(k);
        let s = if self.q[k] == 0 { 1.0 } else { -1.0 };
        self.q[k] ^= 1;
        self.energy += d;
        for (f, c) in self.field.iter_mut().zip(sym.row(k)) {
            *f += s * c;
        }
    }

    /// One Metropolis sweep at inverse temperature `beta`: every site once, in a
    /// fresh random order. Returns the number of accepted flips.
    pub fn sweep<R: Rng + ?Sized>(
        &mut self,
        sym: &SymmetricQubo,
        beta: f64,
        order: &mut [usize],
        rng: &mut R,
        best: Option<&mut BestSeen>,
    ) -> usize {
        shuffle(order, rng);
        let mut accepted = 0;
        let mut best = best;
        for &k in order.iter() {
            let d = self.flip_delta(k);
            if metropolis_accept(beta * d, rng) {
                self.flip(sym, k);
                accepted += 1;
                if let Some(b) = best.as_deref_mut() {
                    b.offer(self.energy, &self.q);
                }
            }
        }
        accepted
    }
}

/// Accepts with probability `min(1, e^-x)`. The bounds `1 - x ≤ e^-x ≤ 1/(1+x)`
/// settle most draws without evaluating the exponential.
#[inline]
fn metropolis_accept<R: Rng + ?Sized>(x: f64, rng: &mut R) -> bool {
    if x <= 0.0 {
        return true;
    }
    if x >= MAX_BOLTZMANN_EXPONENT {
        return false;
    }
    let u: f64 = rng.random();
    if u < 1.0 - x {
        true
    } else if u * (1.0 + x) > 1.0 {
        false
    } else {
        u < (-x).exp()
    }
}

/// Fisher-Yates with multiply-shift index draws; the bias is below `n / 2^32`.
#[inline]
fn shuffle<R: Rng + ?Sized>(order: &mut [usize], rng: &mut R) {
    for i in (1..order.len()).rev() {
        let j = ((rng.next_u32() as u64 * (i as u64 + 1)) >> 32) as usize;
        order.swap(i, j);
    }
}

/// Geometric ladder from `T_cold = ΔE_cold / ln(1/p_cold)` to
/// `T_hot = ΔE_hot / ln(1/p_hot)`, where `ΔE_hot` is the largest possible
/// single-flip change and `ΔE_cold` the smallest nonzero coefficient magnitude.
pub fn temperature_ladder<T: Real>(m: &QuboMatrix<T>, cfg: &SolverConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let n = m.n();
    let mut de_cold = f64::INFINITY;
    let mut row_sum = vec![0.0f64; n];
    for (i, j, v) in m.upper() {
        let a = v.as_f64().abs();
        if a > 0.0 {
            de_cold = de_cold.min(a);
        }
        row_sum[i] += a;
        if i != j {
            row_sum[j] += a;
        }
    }
    if !de_cold.is_finite() {
        return Err(Error::AllZeroMatrix);
    }
    let de_hot = row_sum.into_iter().fold(0.0, f64::max);
    let t_cold = de_cold / (1.0 / cfg.p_cold).ln();
    let t_hot = de_hot / (1.0 / cfg.p_hot).ln();
    let k = cfg.num_replicas;
    let ratio = t_hot / t_cold;
    Ok((0..k)
        .map(|i| t_cold * ratio.powf(i as f64 / (k - 1) as f64))
        .collect())
}

/// Replica-exchange Monte Carlo started from `init_bits` in every replica.
///
/// Each of `num_reads` restarts draws from its own stream keyed by the config
/// seed and the read index. The returned energy is recomputed exactly on `p`.
/// `sweeps_used` counts sweeps per replica over all reads.
pub fn parallel_tempering<T: Real>(p: &QuboProblem<T>, cfg: &SolverConfig, init_bits: &[u8]) -> Result<DetectionOutcome> {
    let n = p.n();
    check_len(n, init_bits.len())?;
    let temps = temperature_ladder(&p.matrix, cfg)?;
    let betas: Vec<f64> = temps.iter().map(|t| 1.0 / t).collect();
    let sym = SymmetricQubo::new(&p.matrix);
    let sweeps = cfg.sweeps_for(n);
    let start = LocalFieldState::new(&sym, init_bits)?;
    let mut best = BestSeen {
        energy: start.energy(),
        bits: start.bits().to_vec(),
    };
    let mut order: Vec<usize> = (0..n).collect();

    for read in 0..cfg.num_reads {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(derive_seed(cfg.seed, read as u64));
        let mut replicas = vec![start.clone(); betas.len()];
        for sweep in 1..=sweeps {
            for (rep, &beta) in replicas.iter_mut().zip(&betas) {
                rep.sweep(&sym, beta, &mut order, &mut rng, Some(&mut best));
            }
            for k in 0..replicas.len() - 1 {
                let x = (betas[k] - betas[k + 1]) * (replicas[k].energy - replicas[k + 1].energy);
                if x >= 0.0 || rng.random::<f64>() < x.exp() {
                    replicas.swap(k, k + 1);
                }
            }
            if sweep % RESYNC_SWEEPS == 0 {
                for rep in &mut replicas {
                    rep.resync(&sym);
                }
            }
        }
    }
    DetectionOutcome::evaluate(p, best.bits, SolverTag::ParallelTempering, sweeps * cfg.num_reads)
}
