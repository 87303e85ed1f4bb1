use std::path::{Path, PathBuf};

use ictc_core::data::{load_manifest, Utterance, Vocab};
use ictc_core::{Error, Result};

pub const VOCAB_FILE: &str = "vocab.txt";

/// A corpus directory as written by `gen-data`.
pub struct DataDir {
    root: PathBuf,
    pub vocab: Vocab,
}

impl DataDir {
    pub fn open(root: &Path) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::Usage(format!("data directory {} does not exist", root.display())));
        }
        let vocab = Vocab::load(&root.join(VOCAB_FILE))?;
        Ok(DataDir { root: root.to_path_buf(), vocab })
    }

    pub fn manifest_path(&self, split: &str) -> PathBuf {
        self.root.join(format!("{split}.jsonl"))
    }

    pub fn split(&self, split: &str) -> Result<Vec<Utterance>> {
        let path = self.manifest_path(split);
        if !path.is_file() {
            return Err(Error::Usage(format!("no manifest for split {split:?} at {}", path.display())));
        }
        load_manifest(&path, &self.vocab, false)
    }

    /// Loads `train` and, when present, `dev`.
    pub fn train_dev(&self) -> Result<(Vec<Utterance>, Vec<Utterance>)> {
        let train = self.split("train")?;
        let dev = if self.manifest_path("dev").is_file() { self.split("dev")? } else { Vec::new() };
        Ok((train, dev))
    }
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
