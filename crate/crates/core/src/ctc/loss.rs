//! CTC negative log-likelihood by log-space forward–backward.
//!
//! The extended label sequence interleaves blanks: `b l1 b l2 ... lL b`,
//! giving `S = 2L + 1` states. `alpha[t][s]` includes the emission at
//! frame `t`; `beta[t][s]` covers frames after `t` only, so
//! `alpha + beta - log Z` is the log occupancy of state `s` at `t`.

use crate::data::LabelSequence;
use crate::error::{Error, Result};
use crate::numerics::{log_add, neg_inf, row_log_softmax, Matrix, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct CtcLossResult<T> {
    /// `-log p(labels | logits)`, summed over frames.
    pub loss: T,
    /// Gradient of `loss` w.r.t. the raw logits.
    pub grad_logits: Matrix<T>,
}

/// Frames needed to emit `labels`: one per label plus a separating blank
/// between each pair of equal neighbours.
pub fn min_frames(labels: &[usize]) -> usize {
    labels.len() + labels.windows(2).filter(|w| w[0] == w[1]).count()
}

pub(crate) fn check_labels(labels: &[usize], vocab_size: usize, blank: usize) -> Result<()> {
    if blank >= vocab_size {
        return Err(Error::Usage(format!("blank id {blank} outside vocab of size {vocab_size}")));
    }
    if let Some(&bad) = labels.iter().find(|&&l| l == blank || l >= vocab_size) {
        return Err(Error::Usage(format!("label {bad} is blank or outside vocab of size {vocab_size}")));
    }
    Ok(())
}

fn check_feasible(frames: usize, labels: &[usize]) -> Result<()> {
    let required = min_frames(labels).max(1);
    if frames < required {
        return Err(Error::Infeasible { frames, labels: labels.len(), required });
    }
    Ok(())
}

/// Log-likelihood and per-(frame, token) occupancy posterior of a
/// log-probability grid.
#[derive(Clone, Debug)]
pub struct CtcOccupancy<T> {
    pub log_likelihood: T,
    /// `T x V`; row `t` holds the posterior probability that frame `t`
    /// emits each token.
    pub occupancy: Matrix<T>,
}

/// Forward–backward over a grid of per-frame log-probabilities. Rows are
/// not renormalized.
pub fn ctc_occupancy<T: Scalar>(
    log_probs: &Matrix<T>,
    labels: &LabelSequence,
    blank: usize,
) -> Result<CtcOccupancy<T>> {
    let (frames, vocab) = log_probs.shape();
    let labels = labels.tokens();
    check_labels(labels, vocab, blank)?;
    check_feasible(frames, labels)?;

    let states = 2 * labels.len() + 1;
    let ext = |s: usize| if s.is_multiple_of(2) { blank } else { labels[s / 2] };
    // skip transition s-2 -> s allowed only between distinct labels
    let can_skip = |s: usize| s >= 2 && !s.is_multiple_of(2) && ext(s) != ext(s - 2);
    let ninf = neg_inf::<T>();

    let mut alpha = Matrix::filled(frames, states, ninf);
    alpha[(0, 0)] = log_probs[(0, blank)];
    if states > 1 {
        alpha[(0, 1)] = log_probs[(0, ext(1))];
    }
    for t in 1..frames {
        for s in 0..states {
            let mut acc = alpha[(t - 1, s)];
            if s >= 1 {
                acc = log_add(acc, alpha[(t - 1, s - 1)]);
            }
            if can_skip(s) {
                acc = log_add(acc, alpha[(t - 1, s - 2)]);
            }
            alpha[(t, s)] = acc + log_probs[(t, ext(s))];
        }
    }

    let mut beta = Matrix::filled(frames, states, ninf);
    beta[(frames - 1, states - 1)] = T::zero();
    if states > 1 {
        beta[(frames - 1, states - 2)] = T::zero();
    }
    for t in (0..frames - 1).rev() {
        for s in 0..states {
            let mut acc = beta[(t + 1, s)] + log_probs[(t + 1, ext(s))];
            if s + 1 < states {
                acc = log_add(acc, beta[(t + 1, s + 1)] + log_probs[(t + 1, ext(s + 1))]);
            }
            if s + 2 < states && can_skip(s + 2) {
                acc = log_add(acc, beta[(t + 1, s + 2)] + log_probs[(t + 1, ext(s + 2))]);
            }
            beta[(t, s)] = acc;
        }
    }

    let mut log_z = alpha[(frames - 1, states - 1)];
    if states > 1 {
        log_z = log_add(log_z, alpha[(frames - 1, states - 2)]);
    }

    let mut occupancy = Matrix::zeros(frames, vocab);
    if log_z > ninf {
        for t in 0..frames {
            for s in 0..states {
                let g = alpha[(t, s)] + beta[(t, s)] - log_z;
                if g > ninf {
                    occupancy[(t, ext(s))] += g.exp();
                }
            }
        }
    }
    Ok(CtcOccupancy { log_likelihood: log_z, occupancy })
}

/// CTC loss on raw logits. Rows are log-softmax normalized internally and
/// the gradient is `softmax(logits) - occupancy`.
pub fn ctc_loss<T: Scalar>(logits: &Matrix<T>, labels: &LabelSequence, blank: usize) -> Result<CtcLossResult<T>> {
    let log_probs = row_log_softmax(logits);
    let fb = ctc_occupancy(&log_probs, labels, blank)?;
    let mut grad_logits = log_probs.map(|lp| lp.exp());
    grad_logits.add_scaled(&fb.occupancy, -T::one());
    Ok(CtcLossResult { loss: -fb.log_likelihood, grad_logits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(v: &[usize]) -> LabelSequence {
        LabelSequence::new(v.to_vec())
    }

    #[test]
    fn single_frame_uniform() {
        let logits = Matrix::<f64>::zeros(1, 3);
        let r = ctc_loss(&logits, &seq(&[1]), 0).unwrap();
        assert!((r.loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn two_frames_uniform() {
        // paths a·a, -·a, a·- out of 9: p = 1/3
        let logits = Matrix::<f64>::zeros(2, 3);
        let r = ctc_loss(&logits, &seq(&[1]), 0).unwrap();
        assert!((r.loss - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn empty_labels_all_blank() {
        let logits = Matrix::from_rows(&[vec![0.3f64, -1.0, 2.0], vec![1.5, 0.2, -0.7]]).unwrap();
        let r = ctc_loss(&logits, &seq(&[]), 0).unwrap();
        let lp = row_log_softmax(&logits);
        assert!((r.loss + lp[(0, 0)] + lp[(1, 0)]).abs() < 1e-12);
    }

    #[test]
    fn infeasible_is_error() {
        let logits = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(ctc_loss(&logits, &seq(&[1, 1]), 0), Err(Error::Infeasible { required: 3, .. })));
        assert!(ctc_loss(&Matrix::<f64>::zeros(3, 3), &seq(&[1, 1]), 0).is_ok());
    }

    #[test]
    fn blank_label_rejected() {
        let logits = Matrix::<f64>::zeros(3, 3);
        assert!(matches!(ctc_loss(&logits, &seq(&[0]), 0), Err(Error::Usage(_))));
        assert!(matches!(ctc_loss(&logits, &seq(&[3]), 0), Err(Error::Usage(_))));
    }

    #[test]
    fn grad_rows_sum_to_zero() {
        let logits =
            Matrix::from_rows(&[vec![0.3f64, -1.0, 2.0, 0.1], vec![1.5, 0.2, -0.7, 0.0], vec![-0.4, 0.9, 0.3, 1.1]])
                .unwrap();
        let r = ctc_loss(&logits, &seq(&[1, 2]), 0).unwrap();
        for row in r.grad_logits.row_iter() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn f32_agrees_with_f64() {
        let rows = vec![vec![0.3, -1.0, 2.0], vec![1.5, 0.2, -0.7], vec![-0.4, 0.9, 0.3]];
        let m64 = Matrix::<f64>::from_rows(&rows).unwrap();
        let m32 = Matrix::<f32>::from_f64(&m64);
        let a = ctc_loss(&m64, &seq(&[1, 2]), 0).unwrap().loss;
        let b = ctc_loss(&m32, &seq(&[1, 2]), 0).unwrap().loss;
        assert!((a - b as f64).abs() < 1e-5);
    }
}
