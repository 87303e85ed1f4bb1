use std::path::Path;

use ictc_core::config::ExperimentConfig;
use ictc_core::{Error, Result};

/// Reads a TOML config (or the defaults) and applies a seed override.
pub fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut config = match path {
        None => ExperimentConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {}", p.display(), e.message())))?
        }
    };
    if let Some(s) = seed {
        config.task.seed = s;
        config.train.seed = s;
    }
    config.validate()?;
    Ok(config)
}
