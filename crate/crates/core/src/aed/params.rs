use serde::{Deserialize, Serialize};

use crate::numerics::{Matrix, RandomStream, Scalar};
use crate::params::{scaled_gaussian, ParamSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AedDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub attn_dim: usize,
    pub encoder_dim: usize,
}

/// Parameters of the single-head attention decoder.
#[derive(Clone, Debug, PartialEq)]
pub struct AedParams<T> {
    /// `V x E` token embeddings.
    pub embed: Matrix<T>,
    /// `E x H` query projection of the previous token.
    pub w_query: Matrix<T>,
    /// `H x H` recurrent state transform.
    pub w_state: Matrix<T>,
    /// `1 x H`.
    pub b_query: Matrix<T>,
    /// `D x H`.
    pub w_key: Matrix<T>,
    /// `D x H`.
    pub w_value: Matrix<T>,
    /// `H x V`.
    pub w_out: Matrix<T>,
    /// `1 x V`.
    pub b_out: Matrix<T>,
}

impl<T: Scalar> AedParams<T> {
    pub fn zeros(d: AedDims) -> Self {
        AedParams {
            embed: Matrix::zeros(d.vocab_size, d.embed_dim),
            w_query: Matrix::zeros(d.embed_dim, d.attn_dim),
            w_state: Matrix::zeros(d.attn_dim, d.attn_dim),
            b_query: Matrix::zeros(1, d.attn_dim),
            w_key: Matrix::zeros(d.encoder_dim, d.attn_dim),
            w_value: Matrix::zeros(d.encoder_dim, d.attn_dim),
            w_out: Matrix::zeros(d.attn_dim, d.vocab_size),
            b_out: Matrix::zeros(1, d.vocab_size),
        }
    }

    pub fn init(d: AedDims, rng: &mut RandomStream) -> Self {
        AedParams {
            embed: scaled_gaussian(d.vocab_size, d.embed_dim, 1, rng),
            w_query: scaled_gaussian(d.embed_dim, d.attn_dim, d.embed_dim, rng),
            w_state: scaled_gaussian(d.attn_dim, d.attn_dim, 2 * d.attn_dim, rng),
            b_query: Matrix::zeros(1, d.attn_dim),
            w_key: scaled_gaussian(d.encoder_dim, d.attn_dim, d.encoder_dim, rng),
            w_value: scaled_gaussian(d.encoder_dim, d.attn_dim, d.encoder_dim, rng),
            w_out: scaled_gaussian(d.attn_dim, d.vocab_size, d.attn_dim, rng),
            b_out: Matrix::zeros(1, d.vocab_size),
        }
    }

    pub fn dims(&self) -> AedDims {
        AedDims {
            vocab_size: self.embed.rows(),
            embed_dim: self.embed.cols(),
            attn_dim: self.w_query.cols(),
            encoder_dim: self.w_key.rows(),
        }
    }
}

impl<T: Scalar> ParamSet<T> for AedParams<T> {
    fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)> {
        vec![
            ("aed.embed", &self.embed),
            ("aed.w_query", &self.w_query),
            ("aed.w_state", &self.w_state),
            ("aed.b_query", &self.b_query),
            ("aed.w_key", &self.w_key),
            ("aed.w_value", &self.w_value),
            ("aed.w_out", &self.w_out),
            ("aed.b_out", &self.b_out),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        vec![
            &mut self.embed,
            &mut self.w_query,
            &mut self.w_state,
            &mut self.b_query,
            &mut self.w_key,
            &mut self.w_value,
            &mut self.w_out,
            &mut self.b_out,
        ]
    }
}
