//! Batch CLI for the repeated-game simulator: run experiments from a TOML
//! config, re-aggregate persisted traces, and audit traces by replay.
//!
//! Exit codes: 0 success, 1 validation, 2 numerical-failure threshold,
//! 3 I/O.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use r2b2::experiment::{
    aggregate_traces, emit_results, run_experiment, verify_trace, ExperimentConfig,
    ExperimentError, MetricKind, OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "r2b2",
    about = "Recursive-reasoning Bayesian optimization for repeated games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    MeanRegret,
    ExternalRegret,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::MeanRegret => MetricKind::MeanRegret,
            MetricArg::ExternalRegret => MetricKind::ExternalRegret,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every replication of an experiment config and persist traces
    /// plus aggregated results under its output directory.
    Run {
        /// Experiment configuration (TOML).
        config: PathBuf,
        /// Worker threads for replication-level parallelism (0 = all cores).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Additional result format to emit next to the canonical CSV.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        /// Override the config's master seed.
        #[arg(long)]
        master_seed: Option<u64>,
        /// Override the config's aggregated metric.
        #[arg(long, value_enum)]
        metric: Option<MetricArg>,
    },
    /// Recompute aggregated results from persisted trace files.
    Aggregate {
        /// Directory containing .trace files.
        trace_dir: PathBuf,
        /// Experiment config; required for external-regret aggregation.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "mean-regret")]
        metric: MetricArg,
        /// Agent whose metric is aggregated.
        #[arg(long, default_value_t = 0)]
        agent: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay one trace from its config and compare byte-for-byte.
    Verify {
        /// Trace file to audit.
        trace: PathBuf,
        /// Experiment config that produced it.
        config: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Run {
            config,
            workers,
            format,
            master_seed,
            metric,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = master_seed {
                cfg.master_seed = seed;
            }
            if let Some(metric) = metric {
                cfg.metric = metric.into();
            }
            cfg.validate()?;
            let out = run_experiment(&cfg, workers)?;
            let failed = out.reports.iter().filter(|r| r.error.is_some()).count();
            if let Some(format) = format {
                let ext = match format {
                    FormatArg::Csv => "csv",
                    FormatArg::Json => "json",
                };
                let path = cfg.output_dir.join(format!("results.{ext}"));
                emit_results(&out.aggregate, format.into(), &path)?;
            }
            let last = out.aggregate.rows.last().expect("nonempty aggregate");
            println!(
                "ran {} replications ({} failed); final {} of agent {}: {:.6}{}",
                out.reports.len(),
                failed,
                cfg.metric.as_str(),
                cfg.metric_agent,
                last.mean,
                last.stderr
                    .map(|s| format!(" +/- {s:.6} (se)"))
                    .unwrap_or_default()
            );
            println!(
                "regret-bound constant C1 (agent {}): {:.6}",
                cfg.metric_agent,
                r2b2::acquisition::regret_constant_c1(cfg.agents[cfg.metric_agent].noise_variance)
            );
            println!("results: {}", out.csv_path.display());
            Ok(())
        }
        Command::Aggregate {
            trace_dir,
            config,
            metric,
            agent,
            format,
            out,
        } => {
            let cfg = match config {
                Some(path) => Some(ExperimentConfig::load(&path)?),
                None => None,
            };
            let result = aggregate_traces(&trace_dir, metric.into(), agent, cfg.as_ref())?;
            match out {
                Some(path) => {
                    emit_results(&result, OutputFormat::from(format), &path)?;
                    println!("wrote {}", path.display());
                }
                None => {
                    let text = match format {
                        FormatArg::Csv => r2b2::experiment::to_csv(&result),
                        FormatArg::Json => r2b2::experiment::to_json(&result),
                    };
                    print!("{text}");
                }
            }
            Ok(())
        }
        Command::Verify { trace, config } => {
            let cfg = ExperimentConfig::load(&config)?;
            verify_trace(&trace, &cfg)?;
            println!("verified: {} replays byte-identically", trace.display());
            Ok(())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
