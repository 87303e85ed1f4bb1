//! Residual feed-forward encoder.
//!
//! Each block applies, frame-wise except for the causal mix:
//!
//! ```text
//! x1 = x  + ½·FFN₁(x)
//! x2 = x1 + Σ_{k<w} c_k ⊙ x1[t-k]
//! x3 = x2 + ½·FFN₂(x2)
//! y  = LayerNorm(x3)
//! ```
//!
//! `FFN(x) = swish(x·W₁ + b₁)·W₂ + b₂`. The input projection gets a
//! sinusoidal position encoding added. Frame count is preserved.

use crate::error::{Error, Result};
use crate::numerics::{add_positions, Matrix, RandomStream, Scalar};
use crate::params::scaled_gaussian;

const LN_EPS: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct FeedForward<T> {
    pub w1: Matrix<T>,
    pub b1: Matrix<T>,
    pub w2: Matrix<T>,
    pub b2: Matrix<T>,
}

impl<T: Scalar> FeedForward<T> {
    fn zeros(d: usize, ff: usize) -> Self {
        FeedForward {
            w1: Matrix::zeros(d, ff),
            b1: Matrix::zeros(1, ff),
            w2: Matrix::zeros(ff, d),
            b2: Matrix::zeros(1, d),
        }
    }

    fn init(d: usize, ff: usize, rng: &mut RandomStream) -> Self {
        FeedForward {
            w1: scaled_gaussian(d, ff, d, rng),
            b1: Matrix::zeros(1, ff),
            w2: scaled_gaussian(ff, d, ff, rng),
            b2: Matrix::zeros(1, d),
        }
    }

    fn forward(&self, x: &Matrix<T>) -> (Matrix<T>, FfnCache<T>) {
        let mut pre = x.matmul(&self.w1);
        pre.add_row_broadcast(&self.b1);
        let act = pre.map(swish);
        let mut out = act.matmul(&self.w2);
        out.add_row_broadcast(&self.b2);
        (out, FfnCache { pre, act })
    }

    /// Accumulates parameter gradients; returns `dL/dx`.
    fn backward(&self, x: &Matrix<T>, cache: &FfnCache<T>, d_out: &Matrix<T>, grads: &mut Self) -> Matrix<T> {
        cache.act.tmatmul_acc(d_out, &mut grads.w2);
        d_out.sum_rows_acc(&mut grads.b2);
        let mut d_pre = d_out.matmul_t(&self.w2);
        for (g, &a) in d_pre.as_mut_slice().iter_mut().zip(cache.pre.as_slice()) {
            *g *= swish_grad(a);
        }
        x.tmatmul_acc(&d_pre, &mut grads.w1);
        d_pre.sum_rows_acc(&mut grads.b1);
        d_pre.matmul_t(&self.w1)
    }
}

struct FfnCache<T> {
    pre: Matrix<T>,
    act: Matrix<T>,
}

fn sigmoid<T: Scalar>(a: T) -> T {
    T::one() / (T::one() + (-a).exp())
}

fn swish<T: Scalar>(a: T) -> T {
    a * sigmoid(a)
}

fn swish_grad<T: Scalar>(a: T) -> T {
    let s = sigmoid(a);
    s * (T::one() + a * (T::one() - s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderBlock<T> {
    pub ffn_in: FeedForward<T>,
    /// `w x D` depthwise causal kernel; row `k` weights frame `t - k`.
    pub mix: Matrix<T>,
    pub ffn_out: FeedForward<T>,
    pub ln_gain: Matrix<T>,
    pub ln_bias: Matrix<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderParams<T> {
    /// `F x D` input projection.
    pub w_in: Matrix<T>,
    pub b_in: Matrix<T>,
    pub blocks: Vec<EncoderBlock<T>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderDims {
    pub feature_dim: usize,
    pub d_model: usize,
    pub ff_dim: usize,
    pub blocks: usize,
    pub window: usize,
}

impl<T: Scalar> EncoderParams<T> {
    pub fn zeros(d: EncoderDims) -> Self {
        EncoderParams {
            w_in: Matrix::zeros(d.feature_dim, d.d_model),
            b_in: Matrix::zeros(1, d.d_model),
            blocks: (0..d.blocks)
                .map(|_| EncoderBlock {
                    ffn_in: FeedForward::zeros(d.d_model, d.ff_dim),
                    mix: Matrix::zeros(d.window, d.d_model),
                    ffn_out: FeedForward::zeros(d.d_model, d.ff_dim),
                    ln_gain: Matrix::zeros(1, d.d_model),
                    ln_bias: Matrix::zeros(1, d.d_model),
                })
                .collect(),
        }
    }

    pub fn init(d: EncoderDims, rng: &mut RandomStream) -> Self {
        EncoderParams {
            w_in: scaled_gaussian(d.feature_dim, d.d_model, d.feature_dim, rng),
            b_in: Matrix::zeros(1, d.d_model),
            blocks: (0..d.blocks)
                .map(|_| EncoderBlock {
                    ffn_in: FeedForward::init(d.d_model, d.ff_dim, rng),
                    mix: scaled_gaussian(d.window, d.d_model, 2 * d.window, rng),
                    ffn_out: FeedForward::init(d.d_model, d.ff_dim, rng),
                    ln_gain: Matrix::filled(1, d.d_model, T::one()),
                    ln_bias: Matrix::zeros(1, d.d_model),
                })
                .collect(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.w_in.rows()
    }

    pub fn d_model(&self) -> usize {
        self.w_in.cols()
    }

    pub(crate) fn tensors_into<'a>(&'a self, out: &mut Vec<(&'static str, &'a Matrix<T>)>) {
        out.push(("encoder.w_in", &self.w_in));
        out.push(("encoder.b_in", &self.b_in));
        for b in &self.blocks {
            out.push(("encoder.ffn_in.w1", &b.ffn_in.w1));
            out.push(("encoder.ffn_in.b1", &b.ffn_in.b1));
            out.push(("encoder.ffn_in.w2", &b.ffn_in.w2));
            out.push(("encoder.ffn_in.b2", &b.ffn_in.b2));
            out.push(("encoder.mix", &b.mix));
            out.push(("encoder.ffn_out.w1", &b.ffn_out.w1));
            out.push(("encoder.ffn_out.b1", &b.ffn_out.b1));
            out.push(("encoder.ffn_out.w2", &b.ffn_out.w2));
            out.push(("encoder.ffn_out.b2", &b.ffn_out.b2));
            out.push(("encoder.ln_gain", &b.ln_gain));
            out.push(("encoder.ln_bias", &b.ln_bias));
        }
    }

    pub(crate) fn tensors_mut_into<'a>(&'a mut self, out: &mut Vec<&'a mut Matrix<T>>) {
        out.push(&mut self.w_in);
        out.push(&mut self.b_in);
        for b in &mut self.blocks {
            out.push(&mut b.ffn_in.w1);
            out.push(&mut b.ffn_in.b1);
            out.push(&mut b.ffn_in.w2);
            out.push(&mut b.ffn_in.b2);
            out.push(&mut b.mix);
            out.push(&mut b.ffn_out.w1);
            out.push(&mut b.ffn_out.b1);
            out.push(&mut b.ffn_out.w2);
            out.push(&mut b.ffn_out.b2);
            out.push(&mut b.ln_gain);
            out.push(&mut b.ln_bias);
        }
    }
}

impl<T: Scalar> crate::params::ParamSet<T> for EncoderParams<T> {
    fn tensors(&self) -> Vec<(&'static str, &Matrix<T>)> {
        let mut v = Vec::new();
        self.tensors_into(&mut v);
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut v = Vec::new();
        self.tensors_mut_into(&mut v);
        v
    }
}

struct BlockCache<T> {
    input: Matrix<T>,
    ffn_in: FfnCache<T>,
    x1: Matrix<T>,
    x2: Matrix<T>,
    ffn_out: FfnCache<T>,
    normalized: Matrix<T>,
    inv_std: Vec<T>,
}

/// Activations kept from [`encoder_forward`] for the backward pass.
pub struct EncoderCache<T> {
    features: Matrix<T>,
    blocks: Vec<BlockCache<T>>,
}

fn causal_mix<T: Scalar>(x: &Matrix<T>, kernel: &Matrix<T>) -> Matrix<T> {
    let mut out = Matrix::zeros(x.rows(), x.cols());
    for t in 0..x.rows() {
        for k in 0..kernel.rows().min(t + 1) {
            let src = x.row(t - k);
            let c = kernel.row(k);
            for ((o, &xv), &cv) in out.row_mut(t).iter_mut().zip(src).zip(c) {
                *o += cv * xv;
            }
        }
    }
    out
}

fn layer_norm<T: Scalar>(x: &Matrix<T>, gain: &Matrix<T>, bias: &Matrix<T>) -> (Matrix<T>, Matrix<T>, Vec<T>) {
    let d = T::from_count(x.cols());
    let eps = T::lit(LN_EPS);
    let mut normalized = Matrix::zeros(x.rows(), x.cols());
    let mut out = Matrix::zeros(x.rows(), x.cols());
    let mut inv_std = Vec::with_capacity(x.rows());
    for t in 0..x.rows() {
        let row = x.row(t);
        let mean = row.iter().copied().sum::<T>() / d;
        let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / d;
        let inv = T::one() / (var + eps).sqrt();
        inv_std.push(inv);
        for c in 0..x.cols() {
            let n = (row[c] - mean) * inv;
            normalized[(t, c)] = n;
            out[(t, c)] = gain[(0, c)] * n + bias[(0, c)];
        }
    }
    (out, normalized, inv_std)
}

pub fn encoder_forward<T: Scalar>(
    params: &EncoderParams<T>,
    features: &Matrix<T>,
) -> Result<(Matrix<T>, EncoderCache<T>)> {
    if features.cols() != params.feature_dim() {
        return Err(Error::Shape {
            op: "encoder_forward",
            expected: format!("feature dim {}", params.feature_dim()),
            got: format!("{}", features.cols()),
        });
    }
    let half = T::lit(0.5);
    let mut x = features.matmul(&params.w_in);
    x.add_row_broadcast(&params.b_in);
    add_positions(&mut x);
    let mut caches = Vec::with_capacity(params.blocks.len());
    for block in &params.blocks {
        let input = x;
        let (f1, ffn_in) = block.ffn_in.forward(&input);
        let mut x1 = input.clone();
        x1.add_scaled(&f1, half);
        let mut x2 = x1.clone();
        x2.add_scaled(&causal_mix(&x1, &block.mix), T::one());
        let (f2, ffn_out) = block.ffn_out.forward(&x2);
        let mut x3 = x2.clone();
        x3.add_scaled(&f2, half);
        let (y, normalized, inv_std) = layer_norm(&x3, &block.ln_gain, &block.ln_bias);
        caches.push(BlockCache { input, ffn_in, x1, x2, ffn_out, normalized, inv_std });
        x = y;
    }
    Ok((x, EncoderCache { features: features.clone(), blocks: caches }))
}

/// Accumulates into `grads` the parameter gradients for upstream `d_out`.
pub fn encoder_backward<T: Scalar>(
    params: &EncoderParams<T>,
    cache: &EncoderCache<T>,
    d_out: &Matrix<T>,
    grads: &mut EncoderParams<T>,
) {
    let half = T::lit(0.5);
    let d_model = T::from_count(params.d_model());
    let mut d = d_out.clone();
    for ((block, bc), g) in params.blocks.iter().zip(&cache.blocks).zip(grads.blocks.iter_mut()).rev() {
        // layer norm
        let (rows, cols) = d.shape();
        let mut d_x3 = Matrix::zeros(rows, cols);
        for t in 0..rows {
            let dy = d.row(t);
            let n = bc.normalized.row(t);
            let mut d_n = vec![T::zero(); cols];
            for c in 0..cols {
                g.ln_gain[(0, c)] += dy[c] * n[c];
                g.ln_bias[(0, c)] += dy[c];
                d_n[c] = dy[c] * block.ln_gain[(0, c)];
            }
            let mean_dn = d_n.iter().copied().sum::<T>() / d_model;
            let mean_dn_n = d_n.iter().zip(n).map(|(&a, &b)| a * b).sum::<T>() / d_model;
            for c in 0..cols {
                d_x3[(t, c)] = bc.inv_std[t] * (d_n[c] - mean_dn - n[c] * mean_dn_n);
            }
        }

        // x3 = x2 + ½ FFN₂(x2)
        let mut d_half = d_x3.clone();
        d_half.scale(half);
        let mut d_x2 = block.ffn_out.backward(&bc.x2, &bc.ffn_out, &d_half, &mut g.ffn_out);
        d_x2.add_scaled(&d_x3, T::one());

        // x2 = x1 + mix(x1)
        let mut d_x1 = d_x2.clone();
        for t in 0..rows {
            for k in 0..block.mix.rows().min(t + 1) {
                for c in 0..cols {
                    g.mix[(k, c)] += d_x2[(t, c)] * bc.x1[(t - k, c)];
                    d_x1[(t - k, c)] += block.mix[(k, c)] * d_x2[(t, c)];
                }
            }
        }

        // x1 = x + ½ FFN₁(x)
        let mut d_half = d_x1.clone();
        d_half.scale(half);
        let mut d_x = block.ffn_in.backward(&bc.input, &bc.ffn_in, &d_half, &mut g.ffn_in);
        d_x.add_scaled(&d_x1, T::one());
        d = d_x;
    }
    cache.features.tmatmul_acc(&d, &mut grads.w_in);
    d.sum_rows_acc(&mut grads.b_in);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParamSet;

    fn dims() -> EncoderDims {
        EncoderDims { feature_dim: 3, d_model: 4, ff_dim: 5, blocks: 2, window: 2 }
    }

    #[test]
    fn zero_params_give_zero() {
        let p = EncoderParams::<f64>::zeros(dims());
        let (y, _) = encoder_forward(&p, &Matrix::zeros(6, 3)).unwrap();
        assert!(y.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn preserves_frame_count() {
        let p = EncoderParams::<f64>::init(dims(), &mut RandomStream::new(1));
        for t in [1, 2, 9] {
            let (y, _) = encoder_forward(&p, &Matrix::filled(t, 3, 0.3)).unwrap();
            assert_eq!(y.shape(), (t, 4));
        }
        assert!(encoder_forward(&p, &Matrix::zeros(2, 4)).is_err());
    }

    #[test]
    fn causal() {
        // changing a later frame never changes earlier outputs
        let p = EncoderParams::<f64>::init(dims(), &mut RandomStream::new(2));
        let mut rng = RandomStream::new(3);
        let data: Vec<f64> = (0..15).map(|_| rng.gaussian()).collect();
        let a = Matrix::from_vec(5, 3, data).unwrap();
        let mut b = a.clone();
        b[(4, 1)] += 1.0;
        let (ya, _) = encoder_forward(&p, &a).unwrap();
        let (yb, _) = encoder_forward(&p, &b).unwrap();
        assert_eq!(ya.slice_rows(0, 4), yb.slice_rows(0, 4));
        assert_ne!(ya.row(4), yb.row(4));
    }

    #[test]
    fn param_listing_consistent() {
        let mut p = EncoderParams::<f64>::zeros(dims());
        let n = p.num_params();
        assert_eq!(p.tensors_mut().len(), p.tensors().len());
        assert_eq!(p.flatten().len(), n);
    }
}
