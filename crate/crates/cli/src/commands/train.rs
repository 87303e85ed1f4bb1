use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use ictc_core::config::ExperimentConfig;
use ictc_core::model::{
    average_checkpoints, examples, load_checkpoint, save_checkpoint, save_params, train_epochs, ModelConfig,
    TrainSetup, TrainState,
};
use ictc_core::{Error, Result};

use crate::dataset::{create_dir, DataDir};
use crate::output::write_jsonl;

pub const LOG_FILE: &str = "train_log.jsonl";

pub fn checkpoint_path(out: &Path, epoch: usize) -> PathBuf {
    out.join(format!("checkpoint_{epoch:03}.json"))
}

pub fn setup_from(config: &ExperimentConfig, workers: usize) -> TrainSetup {
    TrainSetup { loss: config.loss, fusion: config.fusion, optim: config.optim, workers }
}

pub fn run(
    config: &ExperimentConfig,
    workers: usize,
    data: &Path,
    out: &Path,
    epochs: Option<usize>,
    resume: Option<&Path>,
    average: Option<usize>,
) -> Result<()> {
    let dir = DataDir::open(data)?;
    let (train_utts, dev_utts) = dir.train_dev()?;
    let feature_dim = train_utts[0].features.cols();
    let model_config = ModelConfig::new(dir.vocab.size(), feature_dim, &config.model);
    let epochs = epochs.unwrap_or(config.train.epochs);
    create_dir(out)?;

    let mut state = match resume {
        Some(path) => {
            let state = load_checkpoint::<f64>(path)?;
            if *state.params.config() != model_config {
                return Err(Error::Checkpoint(format!(
                    "{}: model shape differs from the config and data",
                    path.display()
                )));
            }
            state
        }
        None => {
            let state = TrainState::new(model_config, config.train.seed)?;
            save_checkpoint(&checkpoint_path(out, 0), &state)?;
            state
        }
    };
    let log_path = out.join(LOG_FILE);
    write_jsonl(&log_path, &state.history)?;

    let train = examples::<f64>(&train_utts);
    let dev = examples::<f64>(&dev_utts);
    train_epochs(&mut state, &setup_from(config, workers), &train, &dev, epochs, |st, rec| {
        save_checkpoint(&checkpoint_path(out, st.epoch), st)?;
        write_jsonl(&log_path, &st.history)?;
        let cer = rec.dev_cer.map_or("-".to_string(), |c| format!("{c:.4}"));
        println!("epoch {} loss {:.4} dev_cer {cer} ({:.0} ms)", rec.epoch, rec.loss, rec.wall_ms);
        Ok(ControlFlow::Continue(()))
    })?;

    if let Some(n) = average {
        let last = state.epoch;
        if n == 0 || n > last {
            return Err(Error::Usage(format!("cannot average {n} checkpoints after {last} epochs")));
        }
        let paths: Vec<PathBuf> = (last + 1 - n..=last).map(|e| checkpoint_path(out, e)).collect();
        let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
        let avg = average_checkpoints::<f64>(&refs)?;
        save_params(&out.join("averaged.json"), &avg)?;
        println!("averaged epochs {}..={last}", last + 1 - n);
    }
    Ok(())
}
