//! Command-line entry points wiring ingestion, training, generation,
//! evaluation and statistics.
//!
//! Exit codes: 0 success, 1 usage error, 2 data/schema error, 3 numeric
//! failure (non-finite loss or gradient).

pub mod commands;
pub mod io;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use vqgen_core::{Error, Result, RunConfig};

#[derive(Parser)]
#[command(name = "vqgen", version, about = "Grounded visual question generation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Flat `key = value` config file; flags override file values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed for all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for per-image generation and evaluation.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic synthetic dataset.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Number of synthetic images.
        #[arg(long)]
        n_images: usize,
        /// Output dataset path (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
    },
    /// Train on a dataset and write a checkpoint plus a loss log.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        /// Training dataset path.
        #[arg(long)]
        data: PathBuf,
        /// Output checkpoint path.
        #[arg(long)]
        out: PathBuf,
        /// Loss log path (default: `<out>.log.jsonl`).
        #[arg(long)]
        log: Option<PathBuf>,
        /// Continue from an existing checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Dump bigram counts as `w_prev w count` lines.
        #[arg(long)]
        dump_counts: Option<PathBuf>,
        /// Override the epoch count from the config.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Generate questions for every record of a dataset.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        /// Trained checkpoint.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset to generate questions for.
        #[arg(long)]
        data: PathBuf,
        /// Questions per image (overrides config).
        #[arg(long)]
        n_questions: Option<usize>,
        /// Output file of generated questions.
        #[arg(long)]
        out: PathBuf,
        /// Fusion weight override.
        #[arg(long)]
        beta: Option<f64>,
        /// Type selection override: sample | top_distinct.
        #[arg(long)]
        type_mode: Option<String>,
    },
    /// Score generated questions against a reference dataset.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        /// Generated-question file.
        #[arg(long)]
        generated: PathBuf,
        /// Reference dataset.
        #[arg(long)]
        references: PathBuf,
        /// Report output path (line-delimited JSON).
        #[arg(long)]
        out: PathBuf,
        /// P/R table path (default: `<out>.table.csv`).
        #[arg(long)]
        table: Option<PathBuf>,
        /// Checkpoint whose embeddings drive METEOR synonym matching.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Type and length histograms of a question file or dataset.
    Stats {
        #[command(flatten)]
        common: CommonArgs,
        /// Generated-question file or dataset.
        #[arg(long)]
        input: PathBuf,
        /// Output path (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn resolve_config(common: &CommonArgs) -> Result<RunConfig> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(workers) = common.workers {
        config.workers = workers;
    }
    Ok(config)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            common,
            n_images,
            out,
        } => {
            let config = resolve_config(&common)?;
            commands::cmd_synth(&config, n_images, &out)
        }
        Command::Train {
            common,
            data,
            out,
            log,
            resume,
            dump_counts,
            epochs,
        } => {
            let mut config = resolve_config(&common)?;
            if let Some(epochs) = epochs {
                config.epochs = epochs;
            }
            commands::cmd_train(
                &config,
                &commands::TrainArgs {
                    data: &data,
                    out: &out,
                    log: log.as_deref(),
                    resume: resume.as_deref(),
                    dump_counts: dump_counts.as_deref(),
                },
            )
        }
        Command::Generate {
            common,
            checkpoint,
            data,
            n_questions,
            out,
            beta,
            type_mode,
        } => {
            let mut config = resolve_config(&common)?;
            if let Some(beta) = beta {
                config.beta = beta;
            }
            if let Some(mode) = type_mode {
                config.set("type_mode", &mode)?;
            }
            let n = n_questions.unwrap_or(config.n_questions);
            commands::cmd_generate(
                &config,
                &commands::GenerateArgs {
                    checkpoint: &checkpoint,
                    data: &data,
                    out: &out,
                    n_questions: n,
                },
            )
        }
        Command::Eval {
            common,
            generated,
            references,
            out,
            table,
            checkpoint,
        } => {
            let config = resolve_config(&common)?;
            commands::cmd_eval(
                &config,
                &commands::EvalArgs {
                    generated: &generated,
                    references: &references,
                    out: &out,
                    table: table.as_deref(),
                    checkpoint: checkpoint.as_deref(),
                },
            )
        }
        Command::Stats { common, input, out } => {
            let config = resolve_config(&common)?;
            commands::cmd_stats(&config, &input, out.as_deref())
        }
    }
}

fn exit_code(error: &Error) -> i32 {
    match error {
        Error::InvalidArgument { .. } | Error::Config { .. } => 1,
        Error::Schema { .. } | Error::Io(_) => 2,
        Error::NonFinite { .. } | Error::ShapeMismatch { .. } => 3,
    }
}

/// Parses `args` (excluding the binary name is fine for clap with
/// `no_binary_name`) and runs the selected command, returning the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
