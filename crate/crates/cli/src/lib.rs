//! Command-line driver: data generation, training, decoding, evaluation,
//! sweeps, benchmarks and convergence runs.

mod args;
mod commands;
mod dataset;
mod output;
mod settings;

pub use args::{Cli, Command};
pub use commands::eval::{evaluate, EvalReport};
pub use output::{strip_timing, ResultRow};
pub use settings::load_config;

use ictc_core::Result;

pub fn run(cli: &Cli) -> Result<()> {
    let config = load_config(cli.config.as_deref(), cli.seed)?;
    let workers = cli.workers.max(1);
    match &cli.command {
        Command::GenData { out } => commands::gen_data::run(&config, out),
        Command::Train { data, out, epochs, resume, average } => {
            commands::train::run(&config, workers, data, out, *epochs, resume.as_deref(), *average)
        }
        Command::Decode { checkpoint, data, split, modes, out, beam_width, n_best, beta } => {
            let mut decode = config.decode;
            decode.beam_width = beam_width.unwrap_or(decode.beam_width);
            decode.n_best = n_best.unwrap_or(decode.n_best);
            decode.beta = beta.unwrap_or(decode.beta);
            commands::decode::run(&config, &decode, workers, checkpoint, data, split, modes, out)
        }
        Command::Eval { hyps, manifest, out } => commands::eval::run(hyps, manifest, out.as_deref()),
        Command::Sweep { data, out, lambdas, alphas, fusion_modes, modes, epochs } => {
            let mut exp = config.experiment.clone();
            if let Some(l) = lambdas {
                exp.lambdas = l.clone();
            }
            if let Some(a) = alphas {
                exp.alphas = a.clone();
            }
            if let Some(f) = fusion_modes {
                exp.fusion_modes = f.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            }
            if let Some(m) = modes {
                exp.decode_modes = m.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            }
            exp.sweep_epochs = epochs.unwrap_or(exp.sweep_epochs);
            exp.validate()?;
            commands::sweep::run(&config, &exp, workers, data, out)
        }
        Command::Bench { checkpoint, data, split, modes, repetitions, out, note } => commands::bench::run(
            &config,
            workers,
            checkpoint,
            data,
            split,
            modes,
            repetitions.unwrap_or(config.experiment.bench_repetitions),
            out,
            note.as_deref(),
        ),
        Command::Converge { data, out, max_epochs, threshold } => {
            commands::converge::run(&config, workers, data, out, *max_epochs, *threshold)
        }
    }
}
