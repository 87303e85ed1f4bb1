//! Experiment configuration. Every section has defaults, so an empty file
//! is a valid configuration.

use serde::{Deserialize, Serialize};

use crate::data::SyntheticTaskSpec;
use crate::error::{Error, Result};
use crate::fusion::{FusionConfig, FusionMode};
use crate::model::DecodeMode;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub train_utterances: usize,
    pub dev_utterances: usize,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig { train_utterances: 500, dev_utterances: 100 }
    }
}

/// Layer sizes; vocabulary and feature sizes come from the data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelDims {
    pub d_model: usize,
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub ff_dim: usize,
    pub blocks: usize,
    /// Causal mixing window; 0 disables mixing.
    pub window: usize,
}

impl Default for ModelDims {
    fn default() -> Self {
        ModelDims { d_model: 32, embed_dim: 16, attn_dim: 32, ff_dim: 64, blocks: 1, window: 3 }
    }
}

impl ModelDims {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d_model", self.d_model),
            ("embed_dim", self.embed_dim),
            ("attn_dim", self.attn_dim),
            ("ff_dim", self.ff_dim),
            ("blocks", self.blocks),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("model.{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Weight of the (fused) CTC term; the AED term gets `1 - alpha`.
    pub alpha: f64,
    /// Extra weight on the plain, unfused CTC loss.
    pub unfused_ctc_weight: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig { alpha: 0.5, unfused_ctc_weight: 0.0 }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("loss.alpha {} outside [0, 1]", self.alpha)));
        }
        if !(self.unfused_ctc_weight.is_finite() && self.unfused_ctc_weight >= 0.0) {
            return Err(Error::Config(format!(
                "loss.unfused_ctc_weight {} must be finite and >= 0",
                self.unfused_ctc_weight
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimConfig {
    pub peak_lr: f64,
    pub warmup_steps: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm clip; 0 disables.
    pub clip_norm: f64,
    pub batch_size: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig {
            peak_lr: 1e-3,
            warmup_steps: 100,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-8,
            clip_norm: 5.0,
            batch_size: 8,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr.is_finite() && self.peak_lr > 0.0) {
            return Err(Error::Config(format!("optim.peak_lr {} must be positive", self.peak_lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("optim.{name} {b} outside [0, 1)")));
            }
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::Config("optim.eps must be positive".into()));
        }
        if !(self.clip_norm.is_finite() && self.clip_norm >= 0.0) {
            return Err(Error::Config("optim.clip_norm must be >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("optim.batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 50, seed: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_width: usize,
    pub n_best: usize,
    /// CTC weight in rescoring: `aed + beta * ctc`.
    pub beta: f64,
    /// Token limit for attention-decoder greedy search.
    pub max_len: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig { beam_width: 10, n_best: 10, beta: 0.5, max_len: 64 }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_best == 0 || self.beam_width < self.n_best {
            return Err(Error::Config(format!(
                "decode needs beam_width >= n_best >= 1, got beam_width {}, n_best {}",
                self.beam_width, self.n_best
            )));
        }
        if !self.beta.is_finite() {
            return Err(Error::Config("decode.beta must be finite".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("decode.max_len must be positive".into()));
        }
        Ok(())
    }
}

/// Grids and thresholds for sweeps, convergence runs and benchmarks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub seeds: Vec<u64>,
    pub convergence_threshold: f64,
    pub target_cer: f64,
    pub max_epochs: usize,
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
    pub fusion_modes: Vec<FusionMode>,
    pub decode_modes: Vec<DecodeMode>,
    pub sweep_epochs: usize,
    pub bench_repetitions: usize,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            seeds: vec![1, 2, 3, 4, 5],
            convergence_threshold: 0.15,
            target_cer: 0.10,
            max_epochs: 50,
            lambdas: vec![0.01, 0.03, 0.05, 0.07, 0.09],
            alphas: vec![0.5],
            fusion_modes: vec![FusionMode::Dal, FusionMode::Pmp],
            decode_modes: DecodeMode::ALL.to_vec(),
            sweep_epochs: 5,
            bench_repetitions: 5,
        }
    }
}

impl ExperimentSection {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("experiment.seeds must be nonempty".into()));
        }
        if self.lambdas.is_empty()
            || self.alphas.is_empty()
            || self.fusion_modes.is_empty()
            || self.decode_modes.is_empty()
        {
            return Err(Error::Config("experiment sweep grids must be nonempty".into()));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return Err(Error::Config(format!("experiment.lambdas contains invalid {l}")));
        }
        if let Some(a) = self.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Config(format!("experiment.alphas contains {a} outside [0, 1]")));
        }
        if self.bench_repetitions < 3 {
            return Err(Error::Config(format!(
                "experiment.bench_repetitions must be at least 3, got {}",
                self.bench_repetitions
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub task: SyntheticTaskSpec,
    pub data: DataConfig,
    pub model: ModelDims,
    pub loss: LossConfig,
    pub fusion: FusionConfig,
    pub optim: OptimConfig,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
    pub experiment: ExperimentSection,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.task.validate()?;
        if self.data.train_utterances == 0 {
            return Err(Error::Config("data.train_utterances must be positive".into()));
        }
        self.model.validate()?;
        self.loss.validate()?;
        self.fusion.validate()?;
        self.optim.validate()?;
        self.decode.validate()?;
        self.experiment.validate()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = ExperimentConfig::default();
        c.validate().unwrap();
        assert_eq!(c.loss.alpha, 0.5);
        assert_eq!(c.fusion.lambda, 0.05);
        assert_eq!(c.fusion.mode, FusionMode::Dal);
        assert_eq!((c.decode.beam_width, c.decode.n_best, c.decode.beta), (10, 10, 0.5));
        assert_eq!(c.experiment.lambdas, vec![0.01, 0.03, 0.05, 0.07, 0.09]);
    }

    #[test]
    fn inconsistent_rejected() {
        let mut c = ExperimentConfig::default();
        c.loss.alpha = 1.5;
        assert!(c.validate().is_err());
        let mut c = ExperimentConfig::default();
        c.decode.n_best = 20;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = ExperimentConfig::default();
        c.experiment.bench_repetitions = 2;
        assert!(c.validate().is_err());
    }
}
