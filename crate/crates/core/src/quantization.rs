//! Normalization and uniform quantization of QUBO coefficients.
//!
//! Six schemes: {homogeneous, large off-diagonal, small off-diagonal} ×
//! {per-realization, statistical}. Homogeneous quantizes every entry on
//! `[-1, 1]`; the heterogeneous schemes keep the diagonal at full precision and
//! quantize off-diagonal entries on a scheme-specific range.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{class_distributions, statistical_extrema};
use crate::error::{Error, Result};
use crate::modulation::Modulation;
use crate::qubo::{classify_unchecked, EntryClass, QuboProblem};
use crate::scalar::Real;

/// Number of standard deviations used for statistical extrema.
pub const STAT_K: f64 = 5.0;

/// Uniform midrise quantizer with `2^n_b` levels on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec<T> {
    n_b: u32,
    lo: T,
    hi: T,
    step: T,
}

impl<T: Real> QuantizerSpec<T> {
    pub fn new(n_b: u32, lo: T, hi: T) -> Result<Self> {
        if !(1..=52).contains(&n_b) {
            return Err(Error::InvalidParameter(format!("n_b = {n_b} outside 1..=52")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
        }
        let step = (hi - lo) / T::of_f64((n_b as f64).exp2());
        Ok(Self { n_b, lo, hi, step })
    }

    pub fn n_b(&self) -> u32 {
        self.n_b
    }

    pub fn lo(&self) -> T {
        self.lo
    }

    pub fn hi(&self) -> T {
        self.hi
    }

    /// Interval width Δ.
    pub fn step(&self) -> T {
        self.step
    }

    pub fn levels(&self) -> u64 {
        1u64 << self.n_b
    }

    #[inline]
    pub fn quantize(&self, v: T) -> T {
        let top = (self.levels() - 1) as f64;
        let idx = ((v - self.lo) / self.step).floor().as_f64();
        // NaN compares false both ways and lands on level 0.
        let idx = if idx >= top { top } else if idx > 0.0 { idx } else { 0.0 };
        self.lo + (T::of_f64(idx) + T::of_f64(0.5)) * self.step
    }
}

pub fn quantize_uniform<T: Real>(v: T, spec: &QuantizerSpec<T>) -> T {
    spec.quantize(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Homogeneous,
    LargeOffDiag,
    SmallOffDiag,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::Homogeneous, Scheme::LargeOffDiag, Scheme::SmallOffDiag];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Homogeneous => "homogeneous",
            Scheme::LargeOffDiag => "large_off_diag",
            Scheme::SmallOffDiag => "small_off_diag",
        }
    }

    pub fn is_heterogeneous(self) -> bool {
        self != Scheme::Homogeneous
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown scheme '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    PerRealization,
    Statistical,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::PerRealization, Mode::Statistical];

    pub fn name(self) -> &'static str {
        match self {
            Mode::PerRealization => "per_realization",
            Mode::Statistical => "statistical",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown mode '{s}'")))
    }
}

/// Everything needed to turn a raw QUBO matrix into its quantized counterpart.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationPlan<T> {
    pub scheme: Scheme,
    pub mode: Mode,
    pub n_b: u32,
    /// Normalization multiplier `s`.
    pub scale: T,
    /// Energy-scale factor of the normalized problem; equal to `scale`.
    pub alpha: T,
    /// Off-diagonal quantizer range; `None` for the homogeneous scheme.
    pub offdiag_range: Option<(T, T)>,
    /// Keep exactly-zero entries at zero instead of mapping them to ±Δ/2.
    pub preserve_exact_zeros: bool,
}

impl<T: Real> QuantizationPlan<T> {
    fn build(scheme: Scheme, mode: Mode, n_b: u32, scale: T, offdiag_range: Option<(T, T)>) -> Result<Self> {
        if !(scale > T::zero()) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("scale {scale} must be positive")));
        }
        let plan = Self {
            scheme,
            mode,
            n_b,
            scale,
            alpha: scale,
            offdiag_range,
            preserve_exact_zeros: false,
        };
        plan.spec()?;
        Ok(plan)
    }

    /// Plan for one realization; returns it together with the normalized problem.
    pub fn per_realization(p: &QuboProblem<T>, scheme: Scheme, n_b: u32) -> Result<(Self, QuboProblem<T>)> {
        let s = per_realization_scale(p)?;
        let (norm, _) = normalize(p, s, false);
        let range = if scheme.is_heterogeneous() {
            Some(per_realization_offdiag_range(&norm, scheme)?)
        } else {
            None
        };
        Ok((Self::build(scheme, Mode::PerRealization, n_b, s, range)?, norm))
    }

    /// Plan shared by every realization of a system.
    pub fn statistical(
        modulation: &Modulation<T>,
        n_t: usize,
        n_r: usize,
        noise_variance: f64,
        scheme: Scheme,
        n_b: u32,
    ) -> Result<Self> {
        let s = statistical_scale(modulation, n_t, n_r, noise_variance);
        let range = if scheme.is_heterogeneous() {
            Some(statistical_offdiag_range(modulation, n_t, n_r, noise_variance, scheme, s)?)
        } else {
            None
        };
        Self::build(scheme, Mode::Statistical, n_b, s, range)
    }

    pub fn with_preserve_exact_zeros(mut self, on: bool) -> Self {
        self.preserve_exact_zeros = on;
        self
    }

    /// Quantizer applied to the entries this plan touches.
    pub fn spec(&self) -> Result<QuantizerSpec<T>> {
        match (self.scheme, self.offdiag_range) {
            (Scheme::Homogeneous, _) => QuantizerSpec::new(self.n_b, -T::one(), T::one()),
            (_, Some((lo, hi))) => QuantizerSpec::new(self.n_b, lo, hi),
            (s, None) => Err(Error::PlanMismatch(format!("{s} requires an off-diagonal range"))),
        }
    }

    /// Normalizes a raw problem as this plan expects (statistical plans clip to `[-1, 1]`).
    pub fn normalize(&self, p: &QuboProblem<T>) -> (QuboProblem<T>, usize) {
        normalize(p, self.scale, self.mode == Mode::Statistical)
    }
}

/// `1 / max |Q_ij|`.
pub fn per_realization_scale<T: Real>(p: &QuboProblem<T>) -> Result<T> {
    let m = p.matrix.max_abs();
    if m == T::zero() {
        return Err(Error::AllZeroMatrix);
    }
    Ok(T::one() / m)
}

/// `1 / max(|μ| + 5σ)` over all entry classes of the system.
pub fn statistical_scale<T: Real>(modulation: &Modulation<T>, n_t: usize, n_r: usize, noise_variance: f64) -> T {
    let m = class_distributions(modulation, n_t, n_r, noise_variance)
        .iter()
        .map(|c| statistical_extrema(&c.dist, STAT_K).abs_max)
        .fold(0.0, f64::max);
    T::of_f64(1.0 / m)
}

/// Multiplies `p` by `scale`, optionally clipping to `[-1, 1]`; returns the
/// scaled problem and the number of clipped entries.
pub fn normalize<T: Real>(p: &QuboProblem<T>, scale: T, clip: bool) -> (QuboProblem<T>, usize) {
    let mut clipped = 0;
    let m = p.matrix.map_upper(|_, _, v| {
        let v = v * scale;
        if clip && v.abs() > T::one() {
            clipped += 1;
            v.signum()
        } else {
            v
        }
    });
    (p.with_matrix(m, p.scale * scale), clipped)
}

fn check_range<T: Real>(lo: T, hi: T) -> Result<(T, T)> {
    if lo < hi {
        Ok((lo, hi))
    } else {
        Err(Error::NoOffDiagonalEntries)
    }
}

/// Min/max of the normalized off-diagonal entries the scheme is built from.
pub fn per_realization_offdiag_range<T: Real>(p_norm: &QuboProblem<T>, scheme: Scheme) -> Result<(T, T)> {
    let r = p_norm.modulation.bits_per_symbol();
    let (mut lo, mut hi) = (T::infinity(), T::neg_infinity());
    for (i, j, v) in p_norm.matrix.upper() {
        if i == j {
            continue;
        }
        let keep = match scheme {
            Scheme::Homogeneous => {
                return Err(Error::PlanMismatch("homogeneous scheme has no off-diagonal range".into()))
            }
            Scheme::LargeOffDiag => true,
            Scheme::SmallOffDiag => classify_unchecked(i, j, r) != EntryClass::Case3,
        };
        if keep {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    check_range(lo, hi)
}

/// Statistical off-diagonal range, already multiplied by `scale`.
pub fn statistical_offdiag_range<T: Real>(
    modulation: &Modulation<T>,
    n_t: usize,
    n_r: usize,
    noise_variance: f64,
    scheme: Scheme,
    scale: T,
) -> Result<(T, T)> {
    let classes: &[EntryClass] = match scheme {
        Scheme::Homogeneous => {
            return Err(Error::PlanMismatch("homogeneous scheme has no off-diagonal range".into()))
        }
        Scheme::LargeOffDiag => &[EntryClass::Case1, EntryClass::Case3],
        Scheme::SmallOffDiag => &[EntryClass::Case1],
    };
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for c in class_distributions(modulation, n_t, n_r, noise_variance) {
        if classes.contains(&c.class) {
            let e = statistical_extrema(&c.dist, STAT_K);
            lo = lo.min(e.lo);
            hi = hi.max(e.hi);
        }
    }
    if scheme == Scheme::SmallOffDiag {
        // Case-2 entries are exact zeros and must lie inside the range.
        lo = lo.min(0.0);
        hi = hi.max(0.0);
    }
    let s = scale.as_f64();
    check_range(T::of_f64(lo * s), T::of_f64(hi * s))
}

/// Quantizes a normalized problem according to `plan`.
pub fn apply_plan<T: Real>(p_norm: &QuboProblem<T>, plan: &QuantizationPlan<T>) -> Result<QuboProblem<T>> {
    let spec = plan.spec()?;
    let hetero = plan.scheme.is_heterogeneous();
    let m = p_norm.matrix.map_upper(|i, j, v| {
        if (hetero && i == j) || (plan.preserve_exact_zeros && v == T::zero()) {
            v
        } else {
            spec.quantize(v)
        }
    });
    Ok(p_norm.with_matrix(m, p_norm.scale))
}

/// Number of entries `apply_plan` would clip.
pub fn count_clipped<T: Real>(p_norm: &QuboProblem<T>, plan: &QuantizationPlan<T>) -> Result<usize> {
    let spec = plan.spec()?;
    let hetero = plan.scheme.is_heterogeneous();
    Ok(p_norm
        .matrix
        .upper()
        .filter(|&(i, j, v)| !(hetero && i == j) && (v < spec.lo() || v > spec.hi()))
        .count())
}

/// Result of normalizing and quantizing one realization.
#[derive(Debug, Clone)]
pub struct Quantized<T> {
    pub normalized: QuboProblem<T>,
    pub quantized: QuboProblem<T>,
    pub plan: QuantizationPlan<T>,
    /// Entries clipped by normalization plus entries clipped by the quantizer range.
    pub clipped: usize,
}

/// Normalizes and quantizes `p`; statistical modes require `shared` to be the
/// system's statistical plan.
pub fn quantize_problem<T: Real>(
    p: &QuboProblem<T>,
    scheme: Scheme,
    mode: Mode,
    n_b: u32,
    shared: Option<&QuantizationPlan<T>>,
) -> Result<Quantized<T>> {
    let (plan, normalized, norm_clipped) = match mode {
        Mode::PerRealization => {
            let (plan, norm) = QuantizationPlan::per_realization(p, scheme, n_b)?;
            (plan, norm, 0)
        }
        Mode::Statistical => {
            let plan = shared
                .filter(|s| s.mode == Mode::Statistical && s.scheme == scheme && s.n_b == n_b)
                .ok_or_else(|| Error::PlanMismatch(format!("no statistical plan for {scheme}/{n_b}")))?
                .clone();
            let (norm, c) = plan.normalize(p);
            (plan, norm, c)
        }
    };
    let clipped = norm_clipped + count_clipped(&normalized, &plan)?;
    let quantized = apply_plan(&normalized, &plan)?;
    Ok(Quantized {
        normalized,
        quantized,
        plan,
        clipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelRealization;
    use approx::assert_abs_diff_eq;

    fn q(v: f64, lo: f64, hi: f64, n_b: u32) -> f64 {
        QuantizerSpec::new(n_b, lo, hi).unwrap().quantize(v)
    }

    #[test]
    fn quantizer_examples() {
        assert_eq!(q(0.3, -1.0, 1.0, 2), 0.25);
        assert_eq!(q(-3.0, -1.0, 1.0, 2), -0.75);
        assert_eq!(q(1.0, -1.0, 1.0, 2), 0.75);
        // Interior boundary falls into the upper interval.
        assert_eq!(q(0.0, -1.0, 1.0, 2), 0.25);
        assert_eq!(q(0.0, -1.0, 1.0, 1), 0.5);
        assert!(QuantizerSpec::new(0, -1.0, 1.0).is_err());
        assert!(QuantizerSpec::new(4, 1.0, 1.0).is_err());
    }

    #[test]
    fn per_realization_scale_examples() {
        let m = Modulation::<f64>::new(16).unwrap();
        let r = ChannelRealization::generate(&m, 2, 2, 10.0, 1);
        let p = QuboProblem::build(&r);
        let s = per_realization_scale(&p).unwrap();
        let (n, _) = normalize(&p, s, false);
        assert_eq!(n.matrix.max_abs(), 1.0);
        assert_eq!(per_realization_scale(&n).unwrap(), 1.0);
        let zero = p.with_matrix(crate::qubo::QuboMatrix::zeros(p.n()), 1.0);
        assert_eq!(per_realization_scale(&zero), Err(Error::AllZeroMatrix));
    }

    #[test]
    fn statistical_scale_example() {
        let m = Modulation::<f64>::new(4).unwrap();
        let s: f64 = statistical_scale(&m, 4, 4, 0.05);
        assert_abs_diff_eq!(1.0 / s, 5.0 * 136.8f64.sqrt(), epsilon = 1e-9);
        assert_abs_diff_eq!(1.0 / s, 58.481, epsilon = 1e-3);
    }

    #[test]
    fn statistical_ranges() {
        let m = Modulation::<f64>::new(16).unwrap();
        let (lo, hi) = statistical_offdiag_range(&m, 4, 16, 0.025, Scheme::SmallOffDiag, 1.0).unwrap();
        let expected = 5.0 * (2.0 * 16.0 * 1.6 * 1.6f64).sqrt();
        assert_abs_diff_eq!(hi, expected, epsilon = 1e-9);
        assert_abs_diff_eq!(lo, -expected, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 45.255, epsilon = 1e-3);
        let (_, hi_l) = statistical_offdiag_range(&m, 4, 16, 0.025, Scheme::LargeOffDiag, 1.0).unwrap();
        assert!(hi_l > hi);
        // Single antenna QPSK has only a Case-2 pair.
        let m4 = Modulation::<f64>::new(4).unwrap();
        assert_eq!(
            statistical_offdiag_range(&m4, 1, 4, 0.05, Scheme::LargeOffDiag, 1.0),
            Err(Error::NoOffDiagonalEntries)
        );
    }

    #[test]
    fn per_realization_ranges_cover_their_entries() {
        let m = Modulation::<f64>::new(16).unwrap();
        let r = ChannelRealization::generate(&m, 3, 3, 10.0, 8);
        let p = QuboProblem::build(&r);
        for scheme in [Scheme::LargeOffDiag, Scheme::SmallOffDiag] {
            let (plan, norm) = QuantizationPlan::per_realization(&p, scheme, 4).unwrap();
            let (lo, hi) = plan.offdiag_range.unwrap();
            for (i, j, v) in norm.matrix.upper() {
                let c = classify_unchecked(i, j, 4);
                let included = c != EntryClass::Diagonal && (scheme == Scheme::LargeOffDiag || c != EntryClass::Case3);
                if included {
                    assert!(lo <= v && v <= hi);
                }
            }
            if scheme == Scheme::LargeOffDiag {
                assert_eq!(count_clipped(&norm, &plan).unwrap(), 0);
            }
        }
    }

    #[test]
    fn apply_plan_properties() {
        let m = Modulation::<f64>::new(16).unwrap();
        let r = ChannelRealization::generate(&m, 2, 2, 10.0, 3);
        let p = QuboProblem::build(&r);
        let (plan, norm) = QuantizationPlan::per_realization(&p, Scheme::Homogeneous, 16).unwrap();
        let qh = apply_plan(&norm, &plan).unwrap();
        for ((_, _, a), (_, _, b)) in norm.matrix.upper().zip(qh.matrix.upper()) {
            assert!((a - b).abs() <= 2.0 / 65536.0 / 2.0);
        }
        assert_eq!(apply_plan(&qh, &plan).unwrap().matrix, qh.matrix);

        let (plan, norm) = QuantizationPlan::per_realization(&p, Scheme::SmallOffDiag, 3).unwrap();
        let qs = apply_plan(&norm, &plan).unwrap();
        assert_eq!(qs.matrix.diagonal(), norm.matrix.diagonal());
        assert_eq!(apply_plan(&qs, &plan).unwrap().matrix, qs.matrix);

        let mut bad = plan.clone();
        bad.offdiag_range = None;
        assert!(matches!(apply_plan(&norm, &bad), Err(Error::PlanMismatch(_))));
    }

    #[test]
    fn exact_zeros_switch() {
        let m = Modulation::<f64>::new(16).unwrap();
        let r = ChannelRealization::generate(&m, 2, 2, 10.0, 3);
        let p = QuboProblem::build(&r);
        let (plan, norm) = QuantizationPlan::per_realization(&p, Scheme::Homogeneous, 4).unwrap();
        let off = apply_plan(&norm, &plan).unwrap();
        let on = apply_plan(&norm, &plan.clone().with_preserve_exact_zeros(true)).unwrap();
        assert_eq!(off.matrix.get(0, 2), 0.0625);
        assert_eq!(on.matrix.get(0, 2), 0.0);
    }

    #[test]
    fn statistical_normalization_clips() {
        let m = Modulation::<f64>::new(4).unwrap();
        let plan = QuantizationPlan::statistical(&m, 2, 2, 0.05, Scheme::Homogeneous, 8).unwrap();
        let r = ChannelRealization::generate(&m, 2, 2, 10.0, 1);
        let p = QuboProblem::build(&r);
        let big = p.with_matrix(p.matrix.scaled(1e3), 1.0);
        let (n, clipped) = plan.normalize(&big);
        assert!(clipped > 0);
        assert!(n.matrix.max_abs() <= 1.0);
        let out = quantize_problem(&big, Scheme::Homogeneous, Mode::Statistical, 8, Some(&plan)).unwrap();
        assert_eq!(out.clipped, clipped);
        assert!(quantize_problem(&big, Scheme::Homogeneous, Mode::Statistical, 7, Some(&plan)).is_err());
    }

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        assert!("bogus".parse::<Scheme>().is_err());
    }
}
