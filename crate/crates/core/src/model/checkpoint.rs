//! JSON checkpoints: flat parameters with shape metadata, a hash of the
//! model configuration, optimizer moments and training history.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::optim::AdamState;
use super::train::{EpochRecord, TrainState};
use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::numerics::Scalar;
use crate::params::ParamSet;

pub const CHECKPOINT_FORMAT: &str = "ictc-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct OptimizerSnapshot {
    step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    config_hash: String,
    model_config: ModelConfig,
    tensors: Vec<TensorMeta>,
    params: Vec<f64>,
    optimizer: Option<OptimizerSnapshot>,
    epoch: usize,
    seed: u64,
    history: Vec<EpochRecord>,
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from_f64<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn tensor_meta<T: Scalar>(params: &ModelParams<T>) -> Vec<TensorMeta> {
    params
        .tensors()
        .into_iter()
        .map(|(name, m)| TensorMeta { name: name.to_string(), rows: m.rows(), cols: m.cols() })
        .collect()
}

fn write_file(path: &Path, file: &CheckpointFile) -> Result<()> {
    let text = serde_json::to_string(file).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn save_checkpoint<T: Scalar>(path: &Path, state: &TrainState<T>) -> Result<()> {
    let config = *state.params.config();
    write_file(
        path,
        &CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: config.hash(),
            model_config: config,
            tensors: tensor_meta(&state.params),
            params: to_f64(&state.params.flatten()),
            optimizer: Some(OptimizerSnapshot {
                step: state.optimizer.step,
                m: to_f64(&state.optimizer.m),
                v: to_f64(&state.optimizer.v),
            }),
            epoch: state.epoch,
            seed: state.seed,
            history: state.history.clone(),
        },
    )
}

/// Writes parameters only, e.g. an averaged model.
pub fn save_params<T: Scalar>(path: &Path, params: &ModelParams<T>) -> Result<()> {
    let config = *params.config();
    write_file(
        path,
        &CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config_hash: config.hash(),
            model_config: config,
            tensors: tensor_meta(params),
            params: to_f64(&params.flatten()),
            optimizer: None,
            epoch: 0,
            seed: 0,
            history: Vec::new(),
        },
    )
}

fn read_file(path: &Path) -> Result<CheckpointFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Checkpoint(format!("{}: {msg}", path.display()));
    let file: CheckpointFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT || file.version != CHECKPOINT_VERSION {
        return Err(bad(format!("unsupported format {} v{}", file.format, file.version)));
    }
    let hash = file.model_config.hash();
    if hash != file.config_hash {
        return Err(bad(format!("config hash {} does not match stored {}", hash, file.config_hash)));
    }
    Ok(file)
}

fn params_from<T: Scalar>(path: &Path, file: &CheckpointFile) -> Result<ModelParams<T>> {
    let bad = |msg: String| Error::Checkpoint(format!("{}: {msg}", path.display()));
    let mut params = ModelParams::<T>::zeros(file.model_config)?;
    if tensor_meta(&params) != file.tensors {
        return Err(bad("tensor shapes do not match the model config".into()));
    }
    if file.params.len() != params.num_params() {
        return Err(bad(format!("{} parameters stored, {} expected", file.params.len(), params.num_params())));
    }
    params.assign_flat(&from_f64(&file.params));
    Ok(params)
}

pub fn load_params<T: Scalar>(path: &Path) -> Result<ModelParams<T>> {
    params_from(path, &read_file(path)?)
}

/// Loads a full training state; fails for parameter-only checkpoints.
pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<TrainState<T>> {
    let file = read_file(path)?;
    let params = params_from::<T>(path, &file)?;
    let opt = file
        .optimizer
        .as_ref()
        .ok_or_else(|| Error::Checkpoint(format!("{}: no optimizer state to resume from", path.display())))?;
    if opt.m.len() != params.num_params() || opt.v.len() != params.num_params() {
        return Err(Error::Checkpoint(format!("{}: optimizer state length mismatch", path.display())));
    }
    Ok(TrainState {
        optimizer: AdamState { step: opt.step, m: from_f64(&opt.m), v: from_f64(&opt.v) },
        params,
        epoch: file.epoch,
        seed: file.seed,
        history: file.history,
    })
}

/// Coordinate-wise mean. Each coordinate's values are summed in sorted
/// order, so the result does not depend on the order of `models`.
pub fn average_params<T: Scalar>(models: &[ModelParams<T>]) -> Result<ModelParams<T>> {
    let first = models.first().ok_or_else(|| Error::Usage("averaging needs at least one checkpoint".into()))?;
    if let Some(other) = models.iter().find(|m| m.config() != first.config()) {
        return Err(Error::Shape {
            op: "average_params",
            expected: format!("{:?}", first.config()),
            got: format!("{:?}", other.config()),
        });
    }
    let flats: Vec<Vec<T>> = models.iter().map(|m| m.flatten()).collect();
    let n = T::from_count(models.len());
    let mut column = Vec::with_capacity(models.len());
    let avg: Vec<T> = (0..flats[0].len())
        .map(|i| {
            column.clear();
            column.extend(flats.iter().map(|f| f[i]));
            column.sort_by(|a, b| a.as_f64().total_cmp(&b.as_f64()));
            column.iter().copied().fold(T::zero(), |a, b| a + b) / n
        })
        .collect();
    let mut out = first.clone();
    out.assign_flat(&avg);
    Ok(out)
}

pub fn average_checkpoints<T: Scalar>(paths: &[&Path]) -> Result<ModelParams<T>> {
    let models = paths.iter().map(|p| load_params(p)).collect::<Result<Vec<_>>>()?;
    average_params(&models)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelDims;

    fn cfg() -> ModelConfig {
        ModelConfig::new(5, 2, &ModelDims { d_model: 3, embed_dim: 2, attn_dim: 3, ff_dim: 4, blocks: 1, window: 1 })
    }

    #[test]
    fn round_trip_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        let mut st = TrainState::<f64>::new(cfg(), 3).unwrap();
        st.optimizer.m[0] = 0.1 + 0.2;
        st.epoch = 4;
        st.history.push(EpochRecord { epoch: 4, loss: 1.0 / 3.0, dev_cer: Some(0.25), wall_ms: 1.5 });
        save_checkpoint(&p, &st).unwrap();
        assert_eq!(load_checkpoint::<f64>(&p).unwrap(), st);
    }

    #[test]
    fn tampered_config_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        save_params(&p, &ModelParams::<f64>::init(cfg(), 1).unwrap()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap().replace("\"window\":1", "\"window\":2");
        std::fs::write(&p, text).unwrap();
        assert!(matches!(load_params::<f64>(&p), Err(Error::Checkpoint(_))));
        assert!(matches!(load_checkpoint::<f64>(&dir.path().join("missing")), Err(Error::Io { .. })));
    }

    #[test]
    fn params_only_cannot_resume() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        save_params(&p, &ModelParams::<f64>::init(cfg(), 1).unwrap()).unwrap();
        assert!(load_params::<f64>(&p).is_ok());
        assert!(load_checkpoint::<f64>(&p).is_err());
    }

    #[test]
    fn averaging() {
        let a = ModelParams::<f64>::init(cfg(), 1).unwrap();
        let mut ones = a.zeros_like();
        ones.assign_flat(&vec![1.0; a.num_params()]);
        let mut threes = ones.clone();
        threes.scale(3.0);
        let avg = average_params(&[ones, threes]).unwrap();
        assert!(avg.flatten().iter().all(|&v| v == 2.0));
        assert_eq!(average_params(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(average_params(&[a.clone(), a.clone()]).unwrap(), a);
        assert!(average_params::<f64>(&[]).is_err());
        let mut c2 = cfg();
        c2.d_model = 4;
        let b = ModelParams::<f64>::init(c2, 1).unwrap();
        assert!(matches!(average_params(&[a, b]), Err(Error::Shape { .. })));
    }
}
