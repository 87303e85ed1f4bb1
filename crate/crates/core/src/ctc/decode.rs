use crate::data::LabelSequence;
use crate::numerics::{argmax, LogProb, Scalar};

use super::LogPosteriorGrid;

/// Standard CTC collapse: merge consecutive repeats, then drop blanks.
pub fn collapse(path: &[usize], blank: usize) -> LabelSequence {
    let mut out = Vec::new();
    let mut prev = None;
    for &tok in path {
        if prev != Some(tok) && tok != blank {
            out.push(tok);
        }
        prev = Some(tok);
    }
    LabelSequence::new(out)
}

/// Best-path decoding: per-frame argmax (ties to the lowest id), collapsed.
pub fn greedy_decode<T: Scalar>(grid: &LogPosteriorGrid<T>, blank: usize) -> LabelSequence {
    greedy_decode_scored(grid, blank).0
}

/// Greedy decoding plus the log-probability of the chosen frame path.
pub fn greedy_decode_scored<T: Scalar>(grid: &LogPosteriorGrid<T>, blank: usize) -> (LabelSequence, LogProb<T>) {
    let mut path = Vec::with_capacity(grid.frames());
    let mut score = T::zero();
    for t in 0..grid.frames() {
        let row = grid.row(t);
        let k = argmax(row);
        score += row[k];
        path.push(k);
    }
    (collapse(&path, blank), LogProb::new(score))
}
