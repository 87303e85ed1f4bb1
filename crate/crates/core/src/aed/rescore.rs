//! Second-pass rescoring of a CTC N-best list with the attention decoder.

use std::cmp::Ordering;

use super::{score_with_memory, AedParams, AttentionMemory};
use crate::ctc::NBestList;
use crate::data::LabelSequence;
use crate::error::{Error, Result};
use crate::numerics::{LogProb, Matrix, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct RescoredEntry<T> {
    pub labels: LabelSequence,
    pub aed_score: LogProb<T>,
    pub ctc_score: LogProb<T>,
    /// `aed_score + β · ctc_score`.
    pub combined: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rescored<T> {
    pub best: LabelSequence,
    /// Index of the winner in `table`.
    pub best_index: usize,
    /// One row per N-best entry, in N-best order.
    pub table: Vec<RescoredEntry<T>>,
}

/// Winner ordering: higher combined score, then higher CTC score, then the
/// lexicographically smaller sequence.
fn preference<T: Scalar>(a: &RescoredEntry<T>, b: &RescoredEntry<T>) -> Ordering {
    b.combined
        .partial_cmp(&a.combined)
        .unwrap_or(Ordering::Equal)
        .then_with(|| b.ctc_score.total_cmp(&a.ctc_score))
        .then_with(|| a.labels.cmp(&b.labels))
}

/// Combines precomputed AED scores with the list's CTC scores.
pub fn combine_scores<T: Scalar>(nbest: &NBestList<T>, aed_scores: &[LogProb<T>], beta: T) -> Result<Rescored<T>> {
    if nbest.is_empty() {
        return Err(Error::Usage("rescoring an empty N-best list".into()));
    }
    if aed_scores.len() != nbest.len() {
        return Err(Error::Usage(format!("{} AED scores for {} hypotheses", aed_scores.len(), nbest.len())));
    }
    let table: Vec<RescoredEntry<T>> = nbest
        .entries()
        .iter()
        .zip(aed_scores)
        .map(|(e, &aed)| RescoredEntry {
            labels: e.labels.clone(),
            aed_score: aed,
            ctc_score: e.ctc_score,
            combined: aed.value() + beta * e.ctc_score.value(),
        })
        .collect();
    let best_index = (0..table.len()).min_by(|&i, &j| preference(&table[i], &table[j])).expect("nonempty table");
    Ok(Rescored { best: table[best_index].labels.clone(), best_index, table })
}

/// Scores every hypothesis with the decoder and picks the best combined score.
pub fn rescore<T: Scalar>(
    nbest: &NBestList<T>,
    params: &AedParams<T>,
    encoder_out: &Matrix<T>,
    beta: T,
) -> Result<Rescored<T>> {
    if nbest.is_empty() {
        return Err(Error::Usage("rescoring an empty N-best list".into()));
    }
    let memory = AttentionMemory::new(params, encoder_out)?;
    let aed_scores =
        nbest.entries().iter().map(|e| score_with_memory(params, &memory, &e.labels)).collect::<Result<Vec<_>>>()?;
    combine_scores(nbest, &aed_scores, beta)
}
