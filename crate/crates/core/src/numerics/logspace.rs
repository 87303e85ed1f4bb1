//! Log-space probability arithmetic.
//!
//! Probability zero is represented by IEEE negative infinity. Adding a
//! finite log-probability to it yields negative infinity, and the
//! accumulation helpers below never produce NaN from such inputs.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{Matrix, Scalar};
use crate::error::{Error, Result};

/// Log of a probability.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogProb<T>(T);

impl<T: Scalar> LogProb<T> {
    pub fn new(value: T) -> Self {
        LogProb(value)
    }

    /// log 0.
    pub fn zero() -> Self {
        LogProb(neg_inf())
    }

    /// log 1.
    pub fn one() -> Self {
        LogProb(T::zero())
    }

    pub fn from_prob(p: T) -> Self {
        LogProb(p.ln())
    }

    pub fn value(self) -> T {
        self.0
    }

    pub fn prob(self) -> T {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == neg_inf()
    }

    /// Product of probabilities.
    pub fn times(self, other: Self) -> Self {
        LogProb(self.0 + other.0)
    }

    /// Sum of probabilities.
    pub fn plus(self, other: Self) -> Self {
        LogProb(log_add(self.0, other.0))
    }

    /// Total order with NaN sorted last; used for ranking hypotheses.
    pub fn total_cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).unwrap_or_else(|| self.0.is_nan().cmp(&other.0.is_nan()).reverse())
    }
}

pub fn neg_inf<T: Scalar>() -> T {
    T::neg_infinity()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add<T: Scalar>(a: T, b: T) -> T {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == neg_inf() {
        return hi;
    }
    if lo == neg_inf() {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `log Σ exp(vᵢ)` with max-shifting. Fails on an empty slice.
pub fn log_sum_exp<T: Scalar>(values: &[T]) -> Result<T> {
    if values.is_empty() {
        return Err(Error::Usage("log_sum_exp of an empty list".into()));
    }
    Ok(log_sum_exp_nonempty(values))
}

pub(crate) fn log_sum_exp_nonempty<T: Scalar>(values: &[T]) -> T {
    let max = values.iter().copied().fold(neg_inf(), T::max);
    if max == neg_inf() || !max.is_finite() {
        return max;
    }
    let sum: T = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

pub fn log_sum_exp_probs<T: Scalar>(values: &[LogProb<T>]) -> Result<LogProb<T>> {
    let raw: Vec<T> = values.iter().map(|v| v.value()).collect();
    log_sum_exp(&raw).map(LogProb)
}

/// Normalizes every row into a log-probability distribution.
pub fn row_log_softmax<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let mut out = m.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let lse = log_sum_exp_nonempty(row);
        row.iter_mut().for_each(|x| *x -= lse);
    }
    out
}

pub fn row_softmax<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    let mut out = m.clone();
    for r in 0..out.rows() {
        softmax_in_place(out.row_mut(r));
    }
    out
}

pub fn softmax_in_place<T: Scalar>(row: &mut [T]) {
    let max = row.iter().copied().fold(neg_inf(), T::max);
    let mut sum = T::zero();
    for x in row.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    row.iter_mut().for_each(|x| *x /= sum);
}

/// Backward of softmax for one row: given `p = softmax(z)` and `dL/dp`,
/// writes `dL/dz` into `out`.
pub fn softmax_backward<T: Scalar>(p: &[T], d_p: &[T], out: &mut [T]) {
    let inner: T = p.iter().zip(d_p).map(|(&a, &b)| a * b).sum();
    for ((o, &pi), &gi) in out.iter_mut().zip(p).zip(d_p) {
        *o = pi * (gi - inner);
    }
}
