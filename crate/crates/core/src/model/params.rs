use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::encoder::{encoder_forward, EncoderCache, EncoderDims, EncoderParams};
use crate::aed::{AedDims, AedParams};
use crate::config::ModelDims;
use crate::ctc::LogPosteriorGrid;
use crate::error::{Error, Result};
use crate::numerics::{Matrix, RandomStream, Scalar};
use crate::params::{scaled_gaussian, ParamSet};

/// Complete shape description of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub feature_dim: usize,
    pub d_model: usize,
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub ff_dim: usize,
    pub blocks: usize,
    pub window: usize,
}

impl ModelConfig {
    pub fn new(vocab_size: usize, feature_dim: usize, dims: &ModelDims) -> Self {
        ModelConfig {
            vocab_size,
            feature_dim,
            d_model: dims.d_model,
            embed_dim: dims.embed_dim,
            attn_dim: dims.attn_dim,
            ff_dim: dims.ff_dim,
            blocks: dims.blocks,
            window: dims.window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 4 {
            return Err(Error::Config(format!("vocab_size {} leaves no content symbols", self.vocab_size)));
        }
        if self.feature_dim == 0 {
            return Err(Error::Config("feature_dim must be positive".into()));
        }
        ModelDims {
            d_model: self.d_model,
            embed_dim: self.embed_dim,
            attn_dim: self.attn_dim,
            ff_dim: self.ff_dim,
            blocks: self.blocks,
            window: self.window,
        }
        .validate()
    }

    pub fn encoder_dims(&self) -> EncoderDims {
        EncoderDims {
            feature_dim: self.feature_dim,
            d_model: self.d_model,
            ff_dim: self.ff_dim,
            blocks: self.blocks,
            window: self.window,
        }
    }

    pub fn aed_dims(&self) -> AedDims {
        AedDims {
            vocab_size: self.vocab_size,
            embed_dim: self.embed_dim,
            attn_dim: self.attn_dim,
            encoder_dim: self.d_model,
        }
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("model config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Shared encoder, attention decoder and CTC projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    config: ModelConfig,
    pub encoder: EncoderParams<T>,
    pub aed: AedParams<T>,
    /// `D x V`.
    pub ctc_w: Matrix<T>,
    /// `1 x V`.
    pub ctc_b: Matrix<T>,
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(ModelParams {
            config,
            encoder: EncoderParams::zeros(config.encoder_dims()),
            aed: AedParams::zeros(config.aed_dims()),
            ctc_w: Matrix::zeros(config.d_model, config.vocab_size),
            ctc_b: Matrix::zeros(1, config.vocab_size),
        })
    }

    /// Random initialization; identical for identical `(config, seed)`.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = RandomStream::derived(seed, 0x1417);
        Ok(ModelParams {
            config,
            encoder: EncoderParams::init(config.encoder_dims(), &mut rng),
            aed: AedParams::init(config.aed_dims(), &mut rng),
            ctc_w: scaled_gaussian(config.d_model, config.vocab_size, config.d_model, &mut rng),
            ctc_b: Matrix::zeros(1, config.vocab_size),
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn encode(&self, features: &Matrix<T>) -> Result<(Matrix<T>, EncoderCache<T>)> {
        encoder_forward(&self.encoder, features)
    }

    pub fn ctc_logits(&self, encoder_out: &Matrix<T>) -> Matrix<T> {
        let mut logits = encoder_out.matmul(&self.ctc_w);
        logits.add_row_broadcast(&self.ctc_b);
        logits
    }

    pub fn ctc_log_posteriors(&self, encoder_out: &Matrix<T>) -> Result<LogPosteriorGrid<T>> {
        Ok(LogPosteriorGrid::from_logits(&self.ctc_logits(encoder_out)))
    }

    /// Converts to another precision (through `f64`).
    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        let mut out = ModelParams::<U>::zeros(self.config).expect("validated config");
        let flat: Vec<U> = self.flatten().into_iter().map(|v| U::lit(v.as_f64())).collect();
        out.assign_flat(&flat);
        out
    }
}

impl<T: Scalar> ParamSet<T> for ModelParams<T> {
    fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)> {
        let mut v = Vec::new();
        self.encoder.tensors_into(&mut v);
        v.extend(self.aed.tensors());
        v.push(("ctc.w", &self.ctc_w));
        v.push(("ctc.b", &self.ctc_b));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut v = Vec::new();
        self.encoder.tensors_mut_into(&mut v);
        v.extend(self.aed.tensors_mut());
        v.push(&mut self.ctc_w);
        v.push(&mut self.ctc_b);
        v
    }
}
