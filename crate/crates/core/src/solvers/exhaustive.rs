use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::QuboMatrix;
use crate::scalar::Real;

pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 24;

/// Steps between exact recomputations of the running energy and local fields.
const RESYNC_PERIOD: u64 = 4096;

/// Best and second-best configurations of a QUBO problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub q_opt: Vec<u8>,
    pub e_opt: f64,
    pub q_second: Vec<u8>,
    pub e_second: f64,
}

/// Bit `i` of the mask is `q_i`. Lexicographic order on `(q_0, q_1, ..)`:
/// at the lowest differing index the vector holding 0 is smaller.
#[inline]
fn lex_less(a: u64, b: u64) -> bool {
    let d = a ^ b;
    d != 0 && a & (d & d.wrapping_neg()) == 0
}

#[inline]
fn better(e: f64, s: u64, e_ref: f64, s_ref: u64) -> bool {
    e < e_ref || (e == e_ref && lex_less(s, s_ref))
}

fn unpack(mask: u64, n: usize) -> Vec<u8> {
    (0..n).map(|i| ((mask >> i) & 1) as u8).collect()
}

fn pack(q: &[u8]) -> u64 {
    q.iter().enumerate().fold(0, |m, (i, &b)| m | ((b as u64 & 1) << i))
}

/// Enumerates all `2^n` configurations in Gray-code order, updating the energy
/// through local fields in O(n) per step. Ties resolve to the lexicographically
/// smallest bit vector; the second best is the best among the remaining vectors.
pub fn exhaustive_solve<T: Real>(m: &QuboMatrix<T>, limit: usize) -> Result<ExhaustiveResult> {
    let n = m.n();
    if n > limit || n > 62 {
        return Err(Error::TooLarge { n, limit: limit.min(62) });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("empty problem".into()));
    }
    let sym = m.to_symmetric_f64();
    let diag: Vec<f64> = (0..n).map(|i| sym[i * n + i]).collect();
    // field[i] = ΔE of setting q_i from 0 to 1 given the other bits.
    let mut field = diag.clone();
    let mut state = 0u64;
    let mut energy = 0.0f64;
    let (mut best, mut best_e) = (0u64, 0.0f64);
    let (mut second, mut second_e) = (u64::MAX, f64::INFINITY);

    let resync = |state: u64, field: &mut [f64]| -> f64 {
        let mut e = 0.0;
        for i in 0..n {
            let mut f = diag[i];
            for j in 0..n {
                if j != i && (state >> j) & 1 == 1 {
                    f += sym[i * n + j];
                }
            }
            field[i] = f;
            if (state >> i) & 1 == 1 {
                e += diag[i];
                for j in (i + 1)..n {
                    if (state >> j) & 1 == 1 {
                        e += sym[i * n + j];
                    }
                }
            }
        }
        e
    };

    let total = 1u64 << n;
    for step in 1..total {
        let k = step.trailing_zeros() as usize;
        let was_set = (state >> k) & 1 == 1;
        let sign = if was_set { -1.0 } else { 1.0 };
        energy += sign * field[k];
        state ^= 1 << k;
        let row = &sym[k * n..(k + 1) * n];
        for (j, f) in field.iter_mut().enumerate() {
            if j != k {
                *f += sign * row[j];
            }
        }
        if step % RESYNC_PERIOD == 0 {
            energy = resync(state, &mut field);
        }
        if better(energy, state, best_e, best) {
            second = best;
            second_e = best_e;
            best = state;
            best_e = energy;
        } else if better(energy, state, second_e, second) {
            second = state;
            second_e = energy;
        }
    }

    // Report exact energies; re-order in case accumulated rounding flipped a near tie.
    let q_opt = unpack(best, n);
    let mut e_opt = m.energy_unchecked(&q_opt);
    let mut q_second = if second == u64::MAX { Vec::new() } else { unpack(second, n) };
    let mut e_second = if q_second.is_empty() { f64::INFINITY } else { m.energy_unchecked(&q_second) };
    let mut q_opt = q_opt;
    if !q_second.is_empty() && better(e_second, pack(&q_second), e_opt, pack(&q_opt)) {
        std::mem::swap(&mut q_opt, &mut q_second);
        std::mem::swap(&mut e_opt, &mut e_second);
    }
    Ok(ExhaustiveResult {
        q_opt,
        e_opt,
        q_second,
        e_second,
    })
}
