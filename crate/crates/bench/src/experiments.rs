//! Experiment drivers behind the CLI commands.

use std::collections::BTreeMap;

use mimo_qubo::channel::derive_seed;
use mimo_qubo::distributions::{diag_distribution, epsilon_distribution, offdiag_distribution, OffDiagDistribution};
use mimo_qubo::preservation::{delta_up, epsilon_min, epsilon_min_empirical, epsilon_neighbor};
use mimo_qubo::quantization::{per_realization_scale, statistical_scale};
use mimo_qubo::qubo::bit_errors;
use mimo_qubo::{
    apply_plan, exhaustive_solve, mmse_detect, noise_variance, parallel_tempering, realization_seed, ChannelRealization, EntryClass, GaussianSpec,
    Mode, Modulation, QuantizationPlan, QuboProblem, Real, SolverTag, ThresholdReport,
};
use rayon::prelude::*;

use crate::config::{EpsilonSource, ExperimentConfig, Precision, SchemeSpec, SystemConfig};
use crate::error::{BenchError, Result};
use crate::records::{Arm, BerRecord, DeltaRecord, DistributionSummary, HistogramRow, SummaryRow, MMSE, NONE};

/// Realizations evaluated between two progress reports.
pub const PROGRESS_CHUNK: u64 = 64;

pub const HISTOGRAM_BINS: usize = 64;

/// Histogram range is `μ ± HISTOGRAM_SIGMAS·σ`.
pub const HISTOGRAM_SIGMAS: f64 = 5.0;

/// Solver applied to the full-precision and quantized problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuboSolver {
    ParallelTempering,
    Exhaustive,
}

impl QuboSolver {
    pub fn tag(self) -> SolverTag {
        match self {
            QuboSolver::ParallelTempering => SolverTag::ParallelTempering,
            QuboSolver::Exhaustive => SolverTag::Exhaustive,
        }
    }
}

macro_rules! with_scalar {
    ($cfg:expr, $f:ident($($arg:expr),*)) => {
        match $cfg.precision {
            Precision::F32 => $f::<f32>($($arg),*),
            Precision::F64 => $f::<f64>($($arg),*),
        }
    };
}

/// One column of a detection cell with its shared statistical plan, if any.
#[derive(Debug, Clone)]
struct CellArm<T> {
    arm: Arm,
    plan: Option<QuantizationPlan<T>>,
}

fn cell_arms<T: Real>(
    cfg: &ExperimentConfig,
    sys: &SystemConfig,
    md: &Modulation<T>,
    noise_var: f64,
    with_baselines: bool,
) -> Result<Vec<CellArm<T>>> {
    let mut arms = Vec::new();
    if with_baselines {
        arms.push(CellArm { arm: Arm::Mmse, plan: None });
    }
    let mut specs = sys.schemes.clone();
    specs.sort();
    specs.dedup();
    let mut n_bs = sys.n_b.clone();
    n_bs.sort_unstable();
    n_bs.dedup();
    for spec in specs {
        match spec {
            SchemeSpec::FullPrecision if with_baselines => arms.push(CellArm {
                arm: Arm::FullPrecision,
                plan: None,
            }),
            SchemeSpec::FullPrecision => {}
            SchemeSpec::Quantized { scheme, mode } => {
                for &n_b in &n_bs {
                    let plan = match mode {
                        Mode::Statistical => Some(
                            QuantizationPlan::statistical(md, sys.n_t, sys.n_r, noise_var, scheme, n_b)?
                                .with_preserve_exact_zeros(cfg.preserve_exact_zeros),
                        ),
                        Mode::PerRealization => None,
                    };
                    arms.push(CellArm {
                        arm: Arm::Quantized { scheme, mode, n_b },
                        plan,
                    });
                }
            }
        }
    }
    Ok(arms)
}

/// Normalized and quantized problems of one arm.
fn quantize_arm<T: Real>(p: &QuboProblem<T>, arm: &CellArm<T>, preserve_exact_zeros: bool) -> Result<(QuboProblem<T>, QuboProblem<T>)> {
    let Arm::Quantized { scheme, n_b, .. } = arm.arm else {
        return Ok((p.clone(), p.clone()));
    };
    Ok(match &arm.plan {
        Some(plan) => {
            let (norm, _) = plan.normalize(p);
            let q = apply_plan(&norm, plan)?;
            (norm, q)
        }
        None => {
            let (plan, norm) = QuantizationPlan::per_realization(p, scheme, n_b)?;
            let q = apply_plan(&norm, &plan.with_preserve_exact_zeros(preserve_exact_zeros))?;
            (norm, q)
        }
    })
}

fn sample<T: Real>(sys: &SystemConfig, md: &Modulation<T>, ebn0_db: f64, k: u64) -> ChannelRealization<T> {
    ChannelRealization::generate(md, sys.n_t, sys.n_r, ebn0_db, realization_seed(sys.base_seed, k))
}

/// Bit errors of every arm on realization `k`. All arms see the same `(H, x, n)`
/// and the same solver stream.
fn realization_errors<T: Real>(
    cfg: &ExperimentConfig,
    sys: &SystemConfig,
    md: &Modulation<T>,
    ebn0_db: f64,
    arms: &[CellArm<T>],
    solver: QuboSolver,
    k: u64,
) -> Result<Vec<u64>> {
    let r = sample(sys, md, ebn0_db, k);
    let p = QuboProblem::build(&r);
    let mmse = mmse_detect(&r.h, &r.y, r.noise_variance, md)?;
    let solver_cfg = cfg.solver.with_seed(derive_seed(cfg.solver.seed, r.seed));
    let solve = |q: &QuboProblem<T>| -> Result<Vec<u8>> {
        Ok(match solver {
            QuboSolver::ParallelTempering => parallel_tempering(q, &solver_cfg, &mmse.bits)?.bits,
            QuboSolver::Exhaustive => exhaustive_solve(&q.matrix, cfg.exhaustive_limit)?.q_opt,
        })
    };
    arms.iter()
        .map(|a| {
            let bits = match a.arm {
                Arm::Mmse => mmse.bits.clone(),
                Arm::FullPrecision => solve(&p)?,
                Arm::Quantized { .. } => solve(&quantize_arm(&p, a, cfg.preserve_exact_zeros)?.1)?,
            };
            Ok(bit_errors(&r.true_bits, &bits)? as u64)
        })
        .collect()
}

fn cell_records<T>(sys: &SystemConfig, ebn0_db: f64, arms: &[CellArm<T>], errors: &[u64], done: u64, solver: QuboSolver) -> Vec<BerRecord> {
    let bits = done * sys.bits_per_realization();
    arms.iter()
        .zip(errors)
        .map(|(a, &e)| {
            let tag = match a.arm {
                Arm::Mmse => MMSE,
                _ => solver.tag().name(),
            };
            BerRecord::new(sys.n_t, sys.n_r, sys.m, ebn0_db, a.arm, done, bits, e, tag)
        })
        .collect()
}

fn sorted(mut rows: Vec<BerRecord>) -> Vec<BerRecord> {
    rows.sort_by(BerRecord::canonical_cmp);
    rows
}

fn detection_grid<T: Real>(cfg: &ExperimentConfig, solver: QuboSolver, progress: &mut dyn FnMut(&[BerRecord])) -> Result<Vec<BerRecord>> {
    let mut done_rows = Vec::new();
    for sys in &cfg.systems {
        let md = Modulation::<T>::new(sys.m)?;
        for &ebn0 in &sys.ebn0_db {
            let arms = cell_arms(cfg, sys, &md, noise_variance(&md, ebn0), true)?;
            let mut totals = vec![0u64; arms.len()];
            let mut start = 0;
            while start < sys.realizations {
                let end = (start + PROGRESS_CHUNK).min(sys.realizations);
                let chunk: Vec<Vec<u64>> = (start..end)
                    .into_par_iter()
                    .map(|k| realization_errors(cfg, sys, &md, ebn0, &arms, solver, k))
                    .collect::<Result<_>>()?;
                for errs in chunk {
                    for (t, e) in totals.iter_mut().zip(errs) {
                        *t += e;
                    }
                }
                start = end;
                let mut partial = done_rows.clone();
                partial.extend(cell_records(sys, ebn0, &arms, &totals, start, solver));
                progress(&sorted(partial));
            }
            done_rows.extend(cell_records(sys, ebn0, &arms, &totals, sys.realizations, solver));
        }
    }
    Ok(sorted(done_rows))
}

/// BER of MMSE, full-precision and quantized detection with parallel tempering.
pub fn run_ber_experiment(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    run_ber_experiment_with_progress(cfg, &mut |_| {})
}

/// As [`run_ber_experiment`]; `progress` receives the sorted partial table after
/// every chunk of realizations.
pub fn run_ber_experiment_with_progress(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&[BerRecord])) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    with_scalar!(cfg, detection_grid(cfg, QuboSolver::ParallelTempering, progress))
}

/// Same grid as the BER experiment, solved exactly.
pub fn run_exhaustive_study(cfg: &ExperimentConfig) -> Result<Vec<BerRecord>> {
    run_exhaustive_study_with_progress(cfg, &mut |_| {})
}

pub fn run_exhaustive_study_with_progress(cfg: &ExperimentConfig, progress: &mut dyn FnMut(&[BerRecord])) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    for sys in &cfg.systems {
        let n = sys.bits_per_realization() as usize;
        if n > cfg.exhaustive_limit {
            return Err(mimo_qubo::Error::TooLarge {
                n,
                limit: cfg.exhaustive_limit,
            }
            .into());
        }
    }
    with_scalar!(cfg, detection_grid(cfg, QuboSolver::Exhaustive, progress))
}

/// Bit-error count of one arm over the realizations of a system.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArmTally {
    pub realizations: u64,
    pub bit_errors: u64,
    /// Evaluation stopped once `bit_errors` exceeded the requested bound.
    pub stopped_early: bool,
}

fn arm_tally<T: Real>(
    cfg: &ExperimentConfig,
    sys: &SystemConfig,
    ebn0_db: f64,
    arm: Arm,
    solver: QuboSolver,
    stop_above: Option<u64>,
) -> Result<ArmTally> {
    let md = Modulation::<T>::new(sys.m)?;
    let plan = match arm {
        Arm::Quantized {
            scheme,
            mode: Mode::Statistical,
            n_b,
        } => Some(
            QuantizationPlan::statistical(&md, sys.n_t, sys.n_r, noise_variance(&md, ebn0_db), scheme, n_b)?
                .with_preserve_exact_zeros(cfg.preserve_exact_zeros),
        ),
        _ => None,
    };
    let arms = [CellArm { arm, plan }];
    let mut tally = ArmTally {
        realizations: 0,
        bit_errors: 0,
        stopped_early: false,
    };
    // Small chunks keep the overshoot past `stop_above` short.
    let chunk = 4 * rayon::current_num_threads().max(1) as u64;
    while tally.realizations < sys.realizations {
        let end = (tally.realizations + chunk).min(sys.realizations);
        let errs: Vec<Vec<u64>> = (tally.realizations..end)
            .into_par_iter()
            .map(|k| realization_errors(cfg, sys, &md, ebn0_db, &arms, solver, k))
            .collect::<Result<_>>()?;
        tally.bit_errors += errs.iter().map(|e| e[0]).sum::<u64>();
        tally.realizations = end;
        if stop_above.is_some_and(|b| tally.bit_errors > b) {
            tally.stopped_early = tally.realizations < sys.realizations;
            break;
        }
    }
    Ok(tally)
}

/// Bit errors of a single arm on the realizations of `sys` (identical to the
/// corresponding column of the BER or exhaustive grid). With `stop_above`, the
/// evaluation ends as soon as the count exceeds that bound, which settles any
/// paired "at most as many errors as" comparison.
pub fn run_arm(
    cfg: &ExperimentConfig,
    sys: &SystemConfig,
    ebn0_db: f64,
    arm: Arm,
    solver: QuboSolver,
    stop_above: Option<u64>,
) -> Result<ArmTally> {
    cfg.validate()?;
    with_scalar!(cfg, arm_tally(cfg, sys, ebn0_db, arm, solver, stop_above))
}

fn delta_grid<T: Real>(cfg: &ExperimentConfig) -> Result<Vec<DeltaRecord>> {
    let mut rows = Vec::new();
    for sys in &cfg.systems {
        let md = Modulation::<T>::new(sys.m)?;
        for &ebn0 in &sys.ebn0_db {
            let s2 = noise_variance(&md, ebn0);
            let arms = cell_arms(cfg, sys, &md, s2, false)?;
            if arms.is_empty() {
                continue;
            }
            let empirical_eps = cfg.epsilon_source == EpsilonSource::PerScheme
                && arms.iter().any(|a| matches!(a.arm, Arm::Quantized { mode: Mode::PerRealization, .. }));
            let per_realization: Vec<(Vec<f64>, Option<f64>)> = (0..sys.realizations)
                .into_par_iter()
                .map(|k| {
                    let r = sample(sys, &md, ebn0, k);
                    let p = QuboProblem::build(&r);
                    let deltas = arms
                        .iter()
                        .map(|a| {
                            let (norm, q) = quantize_arm(&p, a, cfg.preserve_exact_zeros)?;
                            Ok(delta_up(&norm, &q)?)
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    let eps = if empirical_eps {
                        Some(epsilon_neighbor(&r.h, &r.n, &md, per_realization_scale(&p)?.as_f64())?)
                    } else {
                        None
                    };
                    Ok((deltas, eps))
                })
                .collect::<Result<_>>()?;

            let alpha_stat = statistical_scale(&md, sys.n_t, sys.n_r, s2).as_f64();
            let eps_stat = epsilon_min(&epsilon_distribution(&md, sys.n_r, s2, alpha_stat), cfg.percentile);
            let eps_pr = if empirical_eps {
                let samples: Vec<f64> = per_realization.iter().filter_map(|(_, e)| *e).collect();
                epsilon_min_empirical(&samples, cfg.percentile)?
            } else {
                eps_stat
            };
            for (idx, a) in arms.iter().enumerate() {
                let Arm::Quantized { scheme, mode, n_b } = a.arm else { continue };
                let samples: Vec<f64> = per_realization.iter().map(|(d, _)| d[idx]).collect();
                let eps = match mode {
                    Mode::PerRealization => eps_pr,
                    Mode::Statistical => eps_stat,
                };
                let rep = ThresholdReport::new(scheme, mode, n_b, cfg.percentile, &samples, eps)?;
                rows.push(DeltaRecord {
                    n_t: sys.n_t,
                    n_r: sys.n_r,
                    m: sys.m,
                    ebn0_db: ebn0,
                    scheme: scheme.to_string(),
                    mode: mode.to_string(),
                    n_b,
                    p: rep.p,
                    delta_max: rep.delta_max,
                    epsilon_min: rep.epsilon_min,
                    satisfied: rep.satisfied,
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.n_t, a.n_r, a.m, &a.scheme, &a.mode, a.n_b)
            .cmp(&(b.n_t, b.n_r, b.m, &b.scheme, &b.mode, b.n_b))
            .then(a.ebn0_db.total_cmp(&b.ebn0_db))
    });
    Ok(rows)
}

/// Percentile of `δ_up` per scheme, mode and precision against `ε_min`.
pub fn run_delta_analysis(cfg: &ExperimentConfig) -> Result<Vec<DeltaRecord>> {
    cfg.validate()?;
    with_scalar!(cfg, delta_grid(cfg))
}

/// Entries sampled by the distribution validation: `(0,0)`, `(0,r)`, `(0,r/2)`, `(0,1)`,
/// skipping those the system does not have.
pub fn sampled_entries(bits_per_symbol: usize, n_t: usize) -> Vec<(usize, usize)> {
    let r = bits_per_symbol;
    let mut out = vec![(0, 0)];
    if n_t >= 2 {
        out.push((0, r));
    }
    for j in [r / 2, 1] {
        if j > 0 && !out.contains(&(0, j)) {
            out.push((0, j));
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DistributionReport {
    pub summary: Vec<DistributionSummary>,
    pub histogram: Vec<HistogramRow>,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 {
        xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn distribution_grid<T: Real>(cfg: &ExperimentConfig) -> Result<DistributionReport> {
    let mut report = DistributionReport::default();
    for sys in &cfg.systems {
        let md = Modulation::<T>::new(sys.m)?;
        let entries = sampled_entries(md.bits_per_symbol(), sys.n_t);
        for &ebn0 in &sys.ebn0_db {
            let s2 = noise_variance(&md, ebn0);
            let values: Vec<Vec<f64>> = (0..sys.realizations)
                .into_par_iter()
                .map(|k| {
                    let p = QuboProblem::build(&sample(sys, &md, ebn0, k));
                    entries.iter().map(|&(i, j)| p.matrix.get(i, j).as_f64()).collect()
                })
                .collect();
            for (idx, &(i, j)) in entries.iter().enumerate() {
                let xs: Vec<f64> = values.iter().map(|v| v[idx]).collect();
                let class = if i == j {
                    EntryClass::Diagonal
                } else {
                    mimo_qubo::qubo::classify_entry(i, j, &md, sys.n_t)?
                };
                let theory = if i == j {
                    Some(diag_distribution(i, &md, sys.n_t, sys.n_r, s2))
                } else {
                    match offdiag_distribution(i, j, &md, sys.n_t, sys.n_r)? {
                        OffDiagDistribution::Gaussian(g) => Some(g),
                        OffDiagDistribution::ExactZero => None,
                    }
                };
                let (mean, std) = mean_std(&xs);
                let th = theory.unwrap_or(GaussianSpec::new(0.0, 0.0));
                report.summary.push(DistributionSummary {
                    n_t: sys.n_t,
                    n_r: sys.n_r,
                    m: sys.m,
                    ebn0_db: ebn0,
                    i,
                    j,
                    class: class.name().into(),
                    samples: xs.len() as u64,
                    empirical_mean: mean,
                    empirical_std: std,
                    theory_mean: th.mean,
                    theory_std: th.std(),
                    zero_count: xs.iter().filter(|&&x| x == 0.0).count() as u64,
                });
                if let Some(g) = theory {
                    let lo = g.mean - HISTOGRAM_SIGMAS * g.std();
                    let width = 2.0 * HISTOGRAM_SIGMAS * g.std() / HISTOGRAM_BINS as f64;
                    let mut counts = [0u64; HISTOGRAM_BINS];
                    for &x in &xs {
                        let b = ((x - lo) / width).floor();
                        if b >= 0.0 && b < HISTOGRAM_BINS as f64 {
                            counts[b as usize] += 1;
                        }
                    }
                    for (bin, &count) in counts.iter().enumerate() {
                        let bin_lo = lo + bin as f64 * width;
                        report.histogram.push(HistogramRow {
                            n_t: sys.n_t,
                            n_r: sys.n_r,
                            m: sys.m,
                            ebn0_db: ebn0,
                            i,
                            j,
                            class: class.name().into(),
                            bin,
                            bin_lo,
                            bin_hi: bin_lo + width,
                            count,
                            empirical_density: count as f64 / (xs.len() as f64 * width),
                            theory_density: g.pdf(bin_lo + width / 2.0),
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Empirical entry histograms and moments against the closed forms.
pub fn run_distribution_validation(cfg: &ExperimentConfig) -> Result<DistributionReport> {
    cfg.validate()?;
    with_scalar!(cfg, distribution_grid(cfg))
}

type CellKey = ((usize, usize, usize), u64, String);

fn cell_key(r: &BerRecord, tag: &str) -> CellKey {
    (r.system(), r.ebn0_db.to_bits(), tag.to_string())
}

/// Precision markers per system, E_b/N_0, scheme and mode:
/// the largest `n_b` worse than MMSE, the smallest better than MMSE, and the
/// smallest at or below full precision.
pub fn summarize_bits(records: &[BerRecord]) -> Result<Vec<SummaryRow>> {
    let mut mmse = BTreeMap::new();
    let mut full = BTreeMap::new();
    let mut groups: BTreeMap<(CellKey, String, String), Vec<(u32, f64)>> = BTreeMap::new();
    for r in records {
        match r.arm() {
            Some(Arm::Mmse) => {
                mmse.insert(cell_key(r, MMSE), r.ber);
            }
            Some(Arm::FullPrecision) => {
                full.insert(cell_key(r, &r.solver_tag), r.ber);
            }
            Some(Arm::Quantized { n_b, .. }) => groups
                .entry((cell_key(r, &r.solver_tag), r.scheme.clone(), r.mode.clone()))
                .or_default()
                .push((n_b, r.ber)),
            None => {}
        }
    }
    let mut rows = Vec::new();
    for ((key, scheme, mode), mut curve) in groups {
        let ((n_t, n_r, m), ebn0_bits, tag) = key.clone();
        let ebn0_db = f64::from_bits(ebn0_bits);
        let missing = |what: &str| BenchError::MissingBaseline(format!("{what} for {n_t}x{n_r} M={m} at {ebn0_db} dB ({tag})"));
        let mmse_ber = *mmse.get(&(key.0, key.1, MMSE.to_string())).ok_or_else(|| missing("MMSE row"))?;
        let full_ber = *full.get(&key).ok_or_else(|| missing("full-precision row"))?;
        curve.sort_by_key(|&(b, _)| b);
        let show = |b: Option<u32>| b.map_or_else(|| NONE.to_string(), |b| b.to_string());
        rows.push(SummaryRow {
            n_t,
            n_r,
            m,
            ebn0_db,
            scheme,
            mode,
            solver_tag: tag,
            mmse_ber,
            full_precision_ber: full_ber,
            last_worse_than_mmse: show(curve.iter().rev().find(|&&(_, ber)| ber > mmse_ber).map(|&(b, _)| b)),
            first_better_than_mmse: show(curve.iter().find(|&&(_, ber)| ber < mmse_ber).map(|&(b, _)| b)),
            first_matching_full_precision: show(curve.iter().find(|&&(_, ber)| ber <= full_ber).map(|&(b, _)| b)),
        });
    }
    rows.sort_by(|a, b| {
        let scheme_rank = |r: &SummaryRow| (r.scheme.parse::<mimo_qubo::Scheme>().ok(), r.mode.parse::<Mode>().ok());
        (a.n_t, a.n_r, a.m, scheme_rank(a), &a.solver_tag)
            .cmp(&(b.n_t, b.n_r, b.m, scheme_rank(b), &b.solver_tag))
            .then(a.ebn0_db.total_cmp(&b.ebn0_db))
    });
    Ok(rows)
}
