use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mimo_qubo_bench::{
    read_csv, run_ber_experiment_with_progress, run_delta_analysis, run_distribution_validation, run_exhaustive_study_with_progress,
    summarize_bits, write_csv, BerRecord, ExperimentConfig, Provenance, Result,
};

#[derive(Debug, Parser)]
#[command(name = "mimo-qubo-bench", version, about = "Quantized QUBO MIMO detection benchmark")]
struct Cli {
    /// Experiment configuration (JSON). Defaults to the full experiment grid.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides every realization seed and the solver seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// BER of MMSE, full-precision and quantized parallel-tempering detection.
    Ber,
    /// The BER grid solved exactly.
    Exhaustive,
    /// Quantization-error percentiles against the optimality gap.
    DeltaAnalysis,
    /// Empirical QUBO entry histograms against the closed forms.
    Distributions,
    /// Precision markers from a BER CSV.
    Summarize {
        /// BER CSV produced by `ber` or `exhaustive`.
        input: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::table_one(),
    };
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn ber_like(cfg: &ExperimentConfig, name: &str, exhaustive: bool) -> Result<PathBuf> {
    let path = cfg.output_dir.join(format!("{name}.csv"));
    let prov = Provenance::new(name, cfg);
    let mut flush = |rows: &[BerRecord]| {
        if let Err(e) = write_csv(&path, &prov, rows) {
            eprintln!("warning: could not write partial results: {e}");
        }
    };
    let rows = if exhaustive {
        run_exhaustive_study_with_progress(cfg, &mut flush)?
    } else {
        run_ber_experiment_with_progress(cfg, &mut flush)?
    };
    write_csv(&path, &prov, &rows)?;
    Ok(path)
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| mimo_qubo_bench::BenchError::ConfigInvalid(format!("thread pool: {e}")))?;
    }
    let cfg = load_config(&cli)?;
    let out = &cfg.output_dir;
    Ok(match &cli.command {
        Command::Ber => vec![ber_like(&cfg, "ber", false)?],
        Command::Exhaustive => vec![ber_like(&cfg, "exhaustive", true)?],
        Command::DeltaAnalysis => {
            let path = out.join("delta_analysis.csv");
            write_csv(&path, &Provenance::new("delta-analysis", &cfg), &run_delta_analysis(&cfg)?)?;
            vec![path]
        }
        Command::Distributions => {
            let report = run_distribution_validation(&cfg)?;
            let prov = Provenance::new("distributions", &cfg);
            let hist = out.join("distributions.csv");
            let summary = out.join("distributions_summary.csv");
            write_csv(&hist, &prov, &report.histogram)?;
            write_csv(&summary, &prov, &report.summary)?;
            vec![hist, summary]
        }
        Command::Summarize { input } => {
            let records: Vec<BerRecord> = read_csv(input)?;
            let path = out.join("summary.csv");
            write_csv(&path, &Provenance::new("summarize", &cfg), &summarize_bits(&records)?)?;
            vec![path]
        }
    })
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
