//! Levenshtein distance and character error rate over token sequences.

use super::LabelSequence;
use crate::error::{Error, Result};

/// Unit-cost edit distance (substitution, insertion, deletion).
pub fn edit_distance<A: PartialEq>(reference: &[A], hypothesis: &[A]) -> usize {
    let mut prev: Vec<usize> = (0..=hypothesis.len()).collect();
    let mut curr = vec![0; hypothesis.len() + 1];
    for (i, r) in reference.iter().enumerate() {
        curr[0] = i + 1;
        for (j, h) in hypothesis.iter().enumerate() {
            let sub = prev[j] + usize::from(r != h);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[hypothesis.len()]
}

pub fn cer(reference: &LabelSequence, hypothesis: &LabelSequence) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Usage("CER of an empty reference".into()));
    }
    Ok(edit_distance(reference.tokens(), hypothesis.tokens()) as f64 / reference.len() as f64)
}

/// Running corpus-level CER: summed distances over summed reference lengths.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CerAccumulator {
    pub errors: usize,
    pub reference_tokens: usize,
}

impl CerAccumulator {
    pub fn add(&mut self, reference: &LabelSequence, hypothesis: &LabelSequence) {
        self.errors += edit_distance(reference.tokens(), hypothesis.tokens());
        self.reference_tokens += reference.len();
    }

    pub fn cer(&self) -> Result<f64> {
        if self.reference_tokens == 0 {
            return Err(Error::Usage("corpus CER with no reference tokens".into()));
        }
        Ok(self.errors as f64 / self.reference_tokens as f64)
    }
}

/// Corpus CER over aligned (reference, hypothesis) pairs.
pub fn corpus_cer<'a>(pairs: impl IntoIterator<Item = (&'a LabelSequence, &'a LabelSequence)>) -> Result<f64> {
    let mut acc = CerAccumulator::default();
    for (r, h) in pairs {
        acc.add(r, h);
    }
    acc.cer()
}
