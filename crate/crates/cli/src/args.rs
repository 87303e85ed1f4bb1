use std::path::PathBuf;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "ictc", version, about = "Integrated-CTC hybrid CTC/attention experiments")]
pub struct Cli {
    /// TOML experiment config; defaults apply to anything left out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides both the task seed and the training seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Threads for per-utterance work.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic corpus: vocab.txt, train/dev manifests, feature CSVs.
    GenData {
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model, writing a checkpoint per epoch and a JSON-lines log.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Total epochs (counting any already in a resumed checkpoint).
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Also write the average of the last N epoch checkpoints.
        #[arg(long)]
        average: Option<usize>,
    },
    /// Decode a split in one or more modes.
    Decode {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "dev")]
        split: String,
        /// attention_decoder, attention_rescore, ctc_greedy or ctc_prefix_beam;
        /// repeatable, all four when omitted.
        #[arg(long = "mode")]
        modes: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        beam_width: Option<usize>,
        #[arg(long)]
        n_best: Option<usize>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Corpus CER of a hypotheses file against a manifest.
    Eval {
        #[arg(long)]
        hyps: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train and decode every (fusion mode, alpha, lambda) cell.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long = "fusion", value_delimiter = ',')]
        fusion_modes: Option<Vec<String>>,
        #[arg(long = "mode", value_delimiter = ',')]
        modes: Option<Vec<String>>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Decode latency and real-time factor per mode.
    Bench {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "dev")]
        split: String,
        #[arg(long = "mode")]
        modes: Vec<String>,
        #[arg(long)]
        repetitions: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Free-text description of the machine, copied into the report.
        #[arg(long)]
        note: Option<String>,
    },
    /// Epochs to the dev CER threshold, fused config against lambda = 0, per seed.
    Converge {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        max_epochs: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
}
