//! Dense matrices, log-space primitives and seeded randomness.

mod logspace;
mod matrix;
mod position;
mod rng;
mod scalar;

pub(crate) use logspace::log_sum_exp_nonempty;
pub use logspace::{
    log_add, log_sum_exp, log_sum_exp_probs, neg_inf, row_log_softmax, row_softmax, softmax_backward, softmax_in_place,
    LogProb,
};
pub use matrix::{argmax, dot, Matrix};
pub use position::{add_positions, positional_encoding};
pub use rng::RandomStream;
pub use scalar::Scalar;
