use crate::data::LabelSequence;
use crate::error::{Error, Result};
use crate::numerics::{log_add, neg_inf, row_log_softmax, Matrix, Scalar};

use super::collapse;

/// Largest path count the exhaustive enumerators will visit.
pub const MAX_ENUMERATED_PATHS: u64 = 1_000_000;

/// Calls `visit(path, log_prob)` for every length-`T` path through a
/// log-probability grid.
pub fn for_each_path<T: Scalar>(log_probs: &Matrix<T>, mut visit: impl FnMut(&[usize], T)) -> Result<()> {
    let (frames, vocab) = log_probs.shape();
    let count = (vocab as u64).checked_pow(frames as u32).filter(|&c| c <= MAX_ENUMERATED_PATHS).ok_or_else(|| {
        Error::Usage(format!("{vocab}^{frames} paths exceeds the enumeration guard of {MAX_ENUMERATED_PATHS}"))
    })?;
    let mut path = vec![0usize; frames];
    for _ in 0..count {
        let lp = path.iter().enumerate().fold(T::zero(), |acc, (t, &k)| acc + log_probs[(t, k)]);
        visit(&path, lp);
        // odometer increment, last frame fastest
        for slot in path.iter_mut().rev() {
            *slot += 1;
            if *slot < vocab {
                break;
            }
            *slot = 0;
        }
    }
    Ok(())
}

/// CTC loss by enumerating every frame path. Returns `+inf` when no path
/// collapses to `labels`.
pub fn brute_force_ctc<T: Scalar>(logits: &Matrix<T>, labels: &LabelSequence, blank: usize) -> Result<T> {
    let log_probs = row_log_softmax(logits);
    let mut total = neg_inf::<T>();
    for_each_path(&log_probs, |path, lp| {
        if collapse(path, blank) == *labels {
            total = log_add(total, lp);
        }
    })?;
    Ok(-total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guard_enforced() {
        let logits = Matrix::<f64>::zeros(13, 3);
        assert!(matches!(brute_force_ctc(&logits, &LabelSequence::new(vec![1]), 0), Err(Error::Usage(_))));
    }

    #[test]
    fn infeasible_is_infinite() {
        let logits = Matrix::<f64>::zeros(2, 3);
        let loss = brute_force_ctc(&logits, &LabelSequence::new(vec![1, 1]), 0).unwrap();
        assert!(loss.is_infinite() && loss > 0.0);
    }

    #[test]
    fn certain_path_has_zero_loss() {
        // path a - a
        let big = 50.0;
        let logits = Matrix::from_rows(&[vec![0.0f64, big, 0.0], vec![big, 0.0, 0.0], vec![0.0, big, 0.0]]).unwrap();
        let loss = brute_force_ctc(&logits, &LabelSequence::new(vec![1, 1]), 0).unwrap();
        assert!(loss.abs() < 1e-9);
    }
}
