use std::path::Path;

use ictc_core::config::ExperimentConfig;
use ictc_core::data::{write_manifest, SyntheticTask};
use ictc_core::Result;

use crate::dataset::{create_dir, VOCAB_FILE};

pub fn run(config: &ExperimentConfig, out: &Path) -> Result<()> {
    let task = SyntheticTask::new(config.task.clone())?;
    let (train, dev) = task.generate_split(config.data.train_utterances, config.data.dev_utterances)?;
    create_dir(out)?;
    task.vocab().save(&out.join(VOCAB_FILE))?;
    write_manifest(out, "train", &train, task.vocab())?;
    if !dev.is_empty() {
        write_manifest(out, "dev", &dev, task.vocab())?;
    }
    for (name, utts) in [("train", &train), ("dev", &dev)] {
        let frames: usize = utts.iter().map(|u| u.frames()).sum();
        let tokens: usize = utts.iter().map(|u| u.transcript.len()).sum();
        println!("{name}: {} utterances, {frames} frames, {tokens} tokens", utts.len());
    }
    println!("vocab: {} symbols, feature dim {}", task.vocab().size(), config.task.feature_dim);
    Ok(())
}
